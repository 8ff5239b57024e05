mod common;

use std::f64::consts::PI;

use common::*;
use nalgebra::{Complex, DMatrix, DVector};
use twoport_ss::prelude::*;

fn tc(f: f64) -> f64 {
    1.0 / (2.0 * PI * f)
}

fn j(w: f64) -> C64 {
    Complex::new(0.0, w)
}

fn lead_lag(k_i: f64, zeros: &[f64], poles: &[f64], s: C64) -> C64 {
    let one = Complex::new(1.0, 0.0);
    let num = zeros.iter().fold(Complex::new(k_i, 0.0), |acc, t| acc * (one + s * *t));
    let den = poles.iter().fold(s, |acc, t| acc * (one + s * *t));
    num / den
}

fn controllers() -> Vec<(ControllerParams<f64>, Vec<f64>, Vec<f64>)> {
    vec![
        (ControllerParams::Type1 { k_i: 20000.0 }, vec![], vec![]),
        (ControllerParams::Type2 { k_i: 3000.0, t_z: tc(300.0), t_p: tc(25e3) }, vec![tc(300.0)], vec![tc(25e3)]),
        (
            ControllerParams::Type3 { k_i: 10.0, t_z1: tc(10e3), t_z2: tc(10e3), t_p1: tc(100.0), t_p2: tc(50e3) },
            vec![tc(10e3), tc(10e3)],
            vec![tc(100.0), tc(50e3)],
        ),
        (
            ControllerParams::Type3 { k_i: 7.5, t_z1: 1e-3, t_z2: 2e-5, t_p1: 3e-4, t_p2: 1e-6 },
            vec![1e-3, 2e-5],
            vec![3e-4, 1e-6],
        ),
    ]
}

#[test]
fn controller_realisations_match_rational_form_over_the_audio_to_mhz_grid() {
    let grid = FrequencyGrid::default().frequencies().unwrap();
    assert_eq!(grid.len(), 301);
    for (p, zeros, poles) in controllers() {
        let c = controller(&p).unwrap();
        for f in &grid {
            let s = j(2.0 * PI * f);
            let got = c.eval(s).unwrap();
            let want = lead_lag(p.k_i(), &zeros, &poles, s);
            assert!(rel(got, want) <= 1e-9, "{p:?} at {f} Hz: {got} vs {want}");
        }
    }
}

#[test]
fn type3_identity_at_random_points() {
    let mut r = rng(3);
    let (p, zeros, poles) = controllers().remove(2);
    let c = controller(&p).unwrap();
    for _ in 0..20 {
        let s = random_s(&mut r) * 1e4;
        assert!(rel(c.eval(s).unwrap(), lead_lag(10.0, &zeros, &poles, s)) <= 1e-9);
    }
}

#[test]
fn voltage_loop_time_constants() {
    assert!((tc(300.0) - 5.3052e-4).abs() < 1e-8);
    assert!((tc(25e3) - 6.3662e-6).abs() < 1e-10);
    assert!((time_constant_from_frequency(300.0).unwrap() - tc(300.0)).abs() < 1e-18);
}

#[test]
fn lossless_operating_points() {
    let b = solve_operating_point::<f64>(Topology::Boost, 10.0, 24.0, 1.2).unwrap();
    assert!((b.duty - 7.0 / 12.0).abs() < 1e-15);
    assert!((b.i_l - 2.88).abs() < 1e-12);
    let k = solve_operating_point::<f64>(Topology::Buck, 24.0, 12.0, 2.4).unwrap();
    assert_eq!((k.duty, k.i_l), (0.5, 2.4));
}

#[test]
fn load_resistor_admittance() {
    let r = resistor::<f64>(24.0 / 1.2).unwrap();
    assert!((r.d()[(0, 0)] - 0.05).abs() < 1e-15);
}

#[test]
fn input_filter_state_matrix() {
    let f = lc_filter(&LcParams::<f64>::new(5e-6, 1e-6).with_esr(50e-3, 10e-3)).unwrap();
    let want = DMatrix::from_row_slice(2, 2, &[-12000.0, -200000.0, 1e6, 0.0]);
    assert!(max_abs_diff(f.a(), &want) <= 1e-6);
}

#[test]
fn boost_duty_column() {
    let op = solve_operating_point::<f64>(Topology::Boost, 10.0, 24.0, 1.2).unwrap();
    let b = boost_ccm(&LcParams::new(20e-6, 220e-6), &op).unwrap();
    let col = b.b_col(Input::Control(0));
    assert!((col[0] - 1.2e6).abs() < 1e-6);
    assert!((col[1] + 2.88 / 220e-6).abs() < 1e-8);
}

#[test]
fn boost_characteristic_polynomial() {
    let p = LcParams::new(20e-6, 220e-6).with_esr(30e-3, 15e-3);
    let op = solve_operating_point::<f64>(Topology::Boost, 10.0, 24.0, 1.2).unwrap();
    let b = boost_ccm(&p, &op).unwrap();
    let dp = 1.0 - op.duty;
    let mut r = rng(11);
    for _ in 0..10 {
        let s = random_s(&mut r) * 1e3;
        let m = linalg_shift(b.a(), s);
        let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
        let want = s * s + s * ((p.r_l + dp * p.r_c) / p.l) + dp * dp / (p.l * p.c);
        assert!(rel(det, want) <= 1e-12);
    }
}

fn linalg_shift(a: &DMatrix<f64>, s: C64) -> DMatrix<C64> {
    DMatrix::from_fn(a.nrows(), a.ncols(), |i, k| if i == k { s - a[(i, k)] } else { Complex::new(-a[(i, k)], 0.0) })
}

#[test]
fn boost_control_to_output_at_dc_by_hand_inversion() {
    let op = solve_operating_point::<f64>(Topology::Boost, 10.0, 24.0, 1.2).unwrap();
    let b = boost_ccm(&LcParams::new(20e-6, 220e-6), &op).unwrap();
    let a = b.a();
    let det = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let neg_inv = DMatrix::from_row_slice(2, 2, &[-a[(1, 1)], a[(0, 1)], a[(1, 0)], -a[(0, 0)]]) / det;
    let x = &neg_inv * b.b_col(Input::Control(0));
    let want = (b.c_row(Output::VOut) * x)[0] + b.d_entry(Output::VOut, Input::Control(0));
    let got = dc_gain(&b, TransferQuery::ControlToOutput(0)).unwrap();
    assert!((got.re - want).abs() <= 1e-10 * want.abs());
    assert_eq!(got.im, 0.0);
}

#[test]
fn lc_filter_passes_dc() {
    let f = lc_filter(&LcParams::<f64>::new(5e-6, 1e-6).with_esr(50e-3, 10e-3)).unwrap();
    let g = dc_gain(&f, TransferQuery::ForwardVoltageGain).unwrap();
    assert!((g.re - 1.0).abs() < 1e-12 && g.im.abs() < 1e-12);
}

#[test]
fn loaded_filter_step_settles_to_dc_response() {
    let f = lc_filter(&LcParams::<f64>::new(5e-6, 1e-6).with_esr(50e-3, 10e-3)).unwrap();
    let sys = series_connect(&f, &resistor::<f64>(20.0).unwrap()).unwrap();
    let res = step_study(&sys, Input::VIn, 1.0, 2e-3, 1e-7).unwrap();
    let dc = dc_gain(&sys, TransferQuery::ForwardVoltageGain).unwrap().re;
    let last = *res.channel(V_OUT).unwrap().last().unwrap();
    assert!((last - dc).abs() <= 1e-6 * dc.abs());
}

#[test]
fn buck_matches_finite_difference_linearisation() {
    let (l, r_l, c, r_c) = (100e-6, 10e-3, 100e-6, 10e-3);
    let op = solve_operating_point::<f64>(Topology::Buck, 24.0, 12.0, 2.4).unwrap();
    let blk = buck_ccm(&LcParams::new(l, c).with_esr(r_l, r_c), &op).unwrap();
    let u0 = [op.v_in, -op.i_out, op.duty];
    let il = op.i_l;
    let vc = op.duty * op.v_in - (r_l + r_c) * il - r_c * u0[1];
    let x0 = [il, vc];
    let (f0, _) = buck_averaged(l, r_l, c, r_c, &x0, &u0);
    assert!(f0[0].abs() < 1e-9 && f0[1].abs() < 1e-9);
    let (a, b, cm, d) = buck_jacobians(l, r_l, c, r_c, x0, u0, 1e-6);
    assert!(entry_rel_err(blk.a(), &a) <= 1e-4);
    assert!(entry_rel_err(blk.b(), &b) <= 1e-4);
    assert!(entry_rel_err(blk.c(), &cm) <= 1e-4);
    assert!(entry_rel_err(blk.d(), &d) <= 1e-4);
    assert!((blk.d_entry(Output::IIn, Input::Control(0)) - il).abs() < 1e-12);
}

#[test]
fn zoh_integrator_is_exact() {
    let blk = Block::from_rows(1, 0, &[0.0], &[2.0, 0.0], &[0.0, 1.0], &[0.0, 0.0, 0.0, 0.0], &[], &["x"]).unwrap();
    let dt = 1e-3;
    let u = Series::constant(dt, 1, &[(V_IN, 1.5), (I_OUT, 0.0)]).unwrap();
    let out = blk.simulate(&u, &DVector::from_element(1, 0.25), dt, 1.0).unwrap();
    for (t, v) in out.time().iter().zip(out.channel(V_OUT).unwrap()) {
        assert!((v - (0.25 + 3.0 * t)).abs() <= 1e-12, "t = {t}");
    }
}

#[test]
fn zoh_diagonal_system_is_exact() {
    let lam = [-1.0, -40.0, -2500.0];
    let blk = Block::new(
        DMatrix::from_diagonal(&DVector::from_row_slice(&lam)),
        DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 0.0, -3.0, 0.0]),
        DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
        DMatrix::zeros(2, 2),
        vec![],
        vec!["a".into(), "b".into(), "c".into()],
    )
    .unwrap();
    let dt = 1e-4;
    let res = step_study(&blk, Input::VIn, 1.0, 0.05, dt).unwrap();
    let gains = [1.0, 2.0, -3.0];
    for (k, t) in res.time().iter().enumerate() {
        let want: f64 = lam.iter().zip(gains).map(|(l, g)| g / -l * (1.0 - (l * t).exp())).sum();
        assert!((res.channel(V_OUT).unwrap()[k] - want).abs() <= 1e-12, "step {k}");
    }
}

#[test]
fn current_loop_on_terminated_buck_tracks_reference() {
    let op = solve_operating_point::<f64>(Topology::Buck, 24.0, 12.0, 2.4).unwrap();
    let buck = buck_ccm(&LcParams::new(100e-6, 100e-6), &op).unwrap();
    let plant = series_connect(&buck, &resistor::<f64>(5.0).unwrap()).unwrap();
    let ci = controller(&ControllerParams::Type1 { k_i: 20000.0 }).unwrap().named("ci");
    let il = plant.find_state("S.iL").unwrap();
    let closed = close_loop_with(&plant, &ci, 0, LoopTarget::State(il)).unwrap();
    assert!(closed.is_stable());
    let g = dc_gain(&closed, TransferQuery::RefToState { control: 0, state: il }).unwrap();
    assert!((g.re - 1.0).abs() <= 1e-9);

    let slowest = closed.poles().iter().map(|p| -p.re).fold(f64::INFINITY, f64::min);
    let res = step_study(&closed, Input::Control(0), -0.4, 40.0 / slowest, 1e-6).unwrap();
    let last = *res.channel("S.iL").unwrap().last().unwrap();
    assert!((last + 0.4).abs() <= 1e-6 * 0.4);
}

#[test]
fn single_precision_tracks_double() {
    let op = solve_operating_point::<f32>(Topology::Boost, 10.0, 24.0, 1.2).unwrap();
    let b32 = boost_ccm(&LcParams::new(20e-6f32, 220e-6), &op).unwrap();
    let op = solve_operating_point::<f64>(Topology::Boost, 10.0, 24.0, 1.2).unwrap();
    let b64 = boost_ccm(&LcParams::new(20e-6, 220e-6), &op).unwrap();
    let s = 2.0 * PI * 1e3;
    let g32 = b32.eval_response(Input::Control(0), Output::VOut, Complex::new(0.0, s as f32)).unwrap();
    let g64 = b64.eval_response(Input::Control(0), Output::VOut, j(s)).unwrap();
    let err = ((g32.re as f64 - g64.re).powi(2) + (g32.im as f64 - g64.im).powi(2)).sqrt();
    assert!(err <= 1e-4 * g64.norm());
}
