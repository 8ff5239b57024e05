#![allow(dead_code)]

use nalgebra::{Complex, DMatrix};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use twoport_ss::{Block, Controller, Input, Output};

pub type C64 = Complex<f64>;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

fn fill(rng: &mut StdRng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

/// Random block with entries in [-1, 1] and `A` shifted so its spectrum sits
/// in the left half plane.
pub fn random_block(rng: &mut StdRng, n: usize, q: usize) -> Block {
    let mut a = fill(rng, n, n);
    for i in 0..n {
        a[(i, i)] -= n as f64 + 1.0;
    }
    let controls = (0..q).map(|k| format!("u{k}")).collect();
    let states = (0..n).map(|k| format!("x{k}")).collect();
    Block::new(a, fill(rng, n, 2 + q), fill(rng, 2, n), fill(rng, 2, 2 + q), controls, states).unwrap()
}

/// Source/load pair whose connection denominator satisfies `|1 + D11_L D22_S| >= 0.1`.
pub fn random_pair(rng: &mut StdRng) -> (Block, Block) {
    loop {
        let (ns, qs, nl, ql) =
            (rng.random_range(0..=3), rng.random_range(0..=2), rng.random_range(0..=3), rng.random_range(0..=2));
        let s = random_block(rng, ns, qs);
        let l = random_block(rng, nl, ql);
        if (1.0 + l.d()[(0, 0)] * s.d()[(1, 1)]).abs() >= 0.1 {
            return (s, l);
        }
    }
}

pub fn random_controller(rng: &mut StdRng, m: usize) -> Controller {
    let mut a = fill(rng, m, m);
    for i in 0..m {
        a[(i, i)] -= m as f64 + 1.0;
    }
    Controller::new(a, fill(rng, m, 1), fill(rng, 1, m), 0.0).unwrap()
}

/// Random point off the imaginary axis, away from the shifted spectra used above.
pub fn random_s(rng: &mut StdRng) -> C64 {
    Complex::new(rng.random_range(0.1..3.0), rng.random_range(-10.0..10.0))
}

/// Terminal response of a source/load pair solved directly from the port
/// relations `v_in_L = v_out_S`, `i_out_S = -i_in_L`.
///
/// Columns follow `(v_in, i_out, ctl_S.., ctl_L..)`.
pub fn interconnect(gs: &DMatrix<C64>, gl: &DMatrix<C64>) -> DMatrix<C64> {
    let qs = gs.ncols() - 2;
    let ql = gl.ncols() - 2;
    let p = 2 + qs + ql;
    let one = Complex::new(1.0, 0.0);
    let zero = Complex::new(0.0, 0.0);
    let mut out = DMatrix::from_element(2, p, zero);
    for col in 0..p {
        let mut us = vec![zero; 2 + qs];
        let mut ul = vec![zero; 2 + ql];
        match col {
            0 => us[0] = one,
            1 => ul[1] = one,
            k if k < 2 + qs => us[k] = one,
            k => ul[k - qs] = one,
        }
        // v_mid = gs[1,0] v_in + gs[1,1] i_s + sum gs[1,c] cs,  i_s = -(gl[0,0] v_mid + rest_l)
        let src_free: C64 = (0..2 + qs).filter(|&j| j != 1).map(|j| gs[(1, j)] * us[j]).sum();
        let load_free: C64 = (1..2 + ql).map(|j| gl[(0, j)] * ul[j]).sum();
        let v_mid = (src_free - gs[(1, 1)] * load_free) / (one + gs[(1, 1)] * gl[(0, 0)]);
        let i_s = -(gl[(0, 0)] * v_mid + load_free);
        let i_in: C64 = (0..2 + qs).filter(|&j| j != 1).map(|j| gs[(0, j)] * us[j]).sum::<C64>() + gs[(0, 1)] * i_s;
        let v_out: C64 = gl[(1, 0)] * v_mid + (1..2 + ql).map(|j| gl[(1, j)] * ul[j]).sum::<C64>();
        out[(0, col)] = i_in;
        out[(1, col)] = v_out;
    }
    out
}

/// Largest entrywise deviation scaled by the largest reference magnitude.
pub fn matrix_rel_err(got: &DMatrix<C64>, want: &DMatrix<C64>) -> f64 {
    assert_eq!(got.shape(), want.shape());
    let scale = want.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    got.iter().zip(want.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Open-loop error-to-`v_out` response with `v_in = i_out = 0`.
pub fn control_to_vout(b: &Block, k: usize, s: C64) -> C64 {
    b.eval_response(Input::Control(k), Output::VOut, s).unwrap()
}

/// Averaged nonlinear buck: states `(iL, vC)`, inputs `(v_in, i_out, d)`,
/// returns `(x', y)` with `y = (i_in, v_out)`.
pub fn buck_averaged(l: f64, r_l: f64, c: f64, r_c: f64, x: &[f64; 2], u: &[f64; 3]) -> ([f64; 2], [f64; 2]) {
    let (il, vc) = (x[0], x[1]);
    let (v_in, i_out, d) = (u[0], u[1], u[2]);
    let dil = (d * v_in - (r_l + r_c) * il - vc - r_c * i_out) / l;
    let dvc = (il + i_out) / c;
    ([dil, dvc], [d * il, vc + r_c * (il + i_out)])
}

/// Central-difference Jacobians `(A, B, C, D)` of [`buck_averaged`] at
/// `(x0, u0)` with step `rel_step * max(|v|, 1)` per variable.
pub fn buck_jacobians(
    l: f64,
    r_l: f64,
    c: f64,
    r_c: f64,
    x0: [f64; 2],
    u0: [f64; 3],
    rel_step: f64,
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let mut a = DMatrix::zeros(2, 2);
    let mut b = DMatrix::zeros(2, 3);
    let mut cm = DMatrix::zeros(2, 2);
    let mut d = DMatrix::zeros(2, 3);
    for j in 0..5 {
        let (mut xp, mut xm, mut up, mut um) = (x0, x0, u0, u0);
        let h = if j < 2 {
            let h = rel_step * x0[j].abs().max(1.0);
            xp[j] += h;
            xm[j] -= h;
            h
        } else {
            let h = rel_step * u0[j - 2].abs().max(1.0);
            up[j - 2] += h;
            um[j - 2] -= h;
            h
        };
        let (fp, gp) = buck_averaged(l, r_l, c, r_c, &xp, &up);
        let (fm, gm) = buck_averaged(l, r_l, c, r_c, &xm, &um);
        for i in 0..2 {
            let df = (fp[i] - fm[i]) / (2.0 * h);
            let dg = (gp[i] - gm[i]) / (2.0 * h);
            if j < 2 {
                a[(i, j)] = df;
                cm[(i, j)] = dg;
            } else {
                b[(i, j - 2)] = df;
                d[(i, j - 2)] = dg;
            }
        }
    }
    (a, b, cm, d)
}

/// Worst entrywise relative error. Entries where `want` is exactly zero are
/// measured against the largest magnitude in their row instead.
pub fn entry_rel_err(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..want.nrows() {
        let row_scale = want.row(i).amax();
        for j in 0..want.ncols() {
            let e = (got[(i, j)] - want[(i, j)]).abs();
            let scale = if want[(i, j)] != 0.0 { want[(i, j)].abs() } else { row_scale };
            worst = worst.max(if scale > 0.0 { e / scale } else { e });
        }
    }
    worst
}
