//! The two connection operations: attaching a controller to a converter's
//! control input (open loop, then closed loop), and the source/load series
//! connection of two two-port blocks.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::model::{ControllerBlock, Input, Output, StateSpaceBlock};
use crate::Scalar;

/// Minimum `|1 + D11_L * D22_S|` for a series connection to be accepted.
pub const WELL_POSED_TOL: f64 = 1e-12;

/// Relative bound on the open-loop `v_out` feedthrough from the closed input.
pub const FEEDTHROUGH_TOL: f64 = 1e-9;

const ERR_SUFFIX: &str = ".err";
const REF_SUFFIX: &str = ".ref";

fn block_diag<T: Scalar>(a: &DMatrix<T>, b: &DMatrix<T>) -> DMatrix<T> {
    let (r1, c1) = a.shape();
    let (r2, c2) = b.shape();
    let mut m = DMatrix::zeros(r1 + r2, c1 + c2);
    m.view_mut((0, 0), (r1, c1)).copy_from(a);
    m.view_mut((r1, c1), (r2, c2)).copy_from(b);
    m
}

/// Wires `ctrl`'s output into control input `ctl_index` of `conv`.
///
/// Controller states are appended after the converter states. The rerouted
/// input now carries the control error and is relabelled `<ctrl>.err`; other
/// control inputs pass through untouched.
pub fn attach_controller_open_loop<T: Scalar>(
    conv: &StateSpaceBlock<T>,
    ctrl: &ControllerBlock<T>,
    ctl_index: usize,
) -> Result<StateSpaceBlock<T>> {
    if conv.q() == 0 {
        return Err(Error::NoControlInput);
    }
    if ctl_index >= conv.q() {
        return Err(Error::BadIndex(format!("control input {ctl_index} of a block with q = {}", conv.q())));
    }
    let n = conv.n();
    let m = ctrl.m();
    let p = conv.inputs();
    let col = Input::Control(ctl_index).column();
    let b3 = conv.b().column(col).into_owned();
    let d_c = ctrl.d();

    let mut a = DMatrix::zeros(n + m, n + m);
    a.view_mut((0, 0), (n, n)).copy_from(conv.a());
    a.view_mut((0, n), (n, m)).copy_from(&(&b3 * ctrl.c()));
    a.view_mut((n, n), (m, m)).copy_from(ctrl.a());

    let mut b = DMatrix::zeros(n + m, p);
    b.view_mut((0, 0), (n, p)).copy_from(conv.b());
    b.view_mut((0, col), (n, 1)).copy_from(&(&b3 * d_c));
    b.view_mut((n, col), (m, 1)).copy_from(ctrl.b());

    let mut c = DMatrix::zeros(2, n + m);
    c.view_mut((0, 0), (2, n)).copy_from(conv.c());

    let mut d = conv.d().clone();
    for r in 0..2 {
        d[(r, col)] *= d_c;
    }

    let mut controls = conv.control_labels().to_vec();
    controls[ctl_index] = format!("{}{ERR_SUFFIX}", ctrl.label());
    let mut states = conv.state_labels().to_vec();
    states.extend((1..=m).map(|i| format!("{}.x{i}", ctrl.label())));
    StateSpaceBlock::new(a, b, c, d, controls, states)
}

/// Variable fed back when a loop is closed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoopTarget {
    /// A state of the open-loop block, e.g. an inductor current.
    State(usize),
    /// The output voltage, taken as `C2 x`.
    OutputVoltage,
}

/// Selector matrix `K` of shape `(2+q) x (n+m)` used in `A_CL = A_OL - B_OL K`.
/// At most one row, a control row, is non-zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackGain<T: Scalar> {
    k: DMatrix<T>,
    ctl_index: Option<usize>,
}

impl<T: Scalar> FeedbackGain<T> {
    /// Checks the single-control-row structure of an explicit `K`.
    pub fn from_matrix(k: DMatrix<T>) -> Result<Self> {
        if k.nrows() < 2 {
            return Err(Error::DimensionMismatch(format!("K has {} rows, expected 2+q", k.nrows())));
        }
        let nonzero: Vec<usize> = (0..k.nrows()).filter(|&r| k.row(r).iter().any(|x| *x != T::zero())).collect();
        match nonzero.as_slice() {
            [] => Ok(Self { k, ctl_index: None }),
            [r] if *r >= 2 => Ok(Self { k, ctl_index: Some(r - 2) }),
            _ => Err(Error::DimensionMismatch(
                "K must have at most one non-zero row, and it must be a control row".into(),
            )),
        }
    }

    /// All-zero gain: closing with it leaves `A` unchanged.
    pub fn zeros(inputs: usize, states: usize) -> Self {
        Self { k: DMatrix::zeros(inputs, states), ctl_index: None }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.k
    }

    /// Control input whose row is populated.
    pub fn ctl_index(&self) -> Option<usize> {
        self.ctl_index
    }
}

/// Builds `K` for closing control input `ctl_index` of `open_loop` on `target`.
///
/// For [`LoopTarget::OutputVoltage`] the fed-back row is the `v_out` row of
/// the open-loop `C`, which requires the open-loop feedthrough from the closed
/// input to `v_out` to vanish: `|D| <= 1e-9 * max(1, ||D||_F)`.
pub fn feedback_gain<T: Scalar>(
    target: LoopTarget,
    open_loop: &StateSpaceBlock<T>,
    ctl_index: usize,
) -> Result<FeedbackGain<T>> {
    let n = open_loop.n();
    if ctl_index >= open_loop.q() {
        return Err(Error::BadIndex(format!("control input {ctl_index} of a block with q = {}", open_loop.q())));
    }
    let row = Input::Control(ctl_index).column();
    let mut k = DMatrix::zeros(open_loop.inputs(), n);
    match target {
        LoopTarget::State(i) => {
            if i >= n {
                return Err(Error::BadIndex(format!("state {i} of a block with n = {n}")));
            }
            k[(row, i)] = T::one();
        }
        LoopTarget::OutputVoltage => {
            let d23 = open_loop.d_entry(Output::VOut, Input::Control(ctl_index));
            let scale = open_loop.d().norm().max(T::one());
            if d23.abs() > T::lit(FEEDTHROUGH_TOL) * scale {
                return Err(Error::FeedthroughNotNegligible(d23.as_f64()));
            }
            k.row_mut(row).copy_from(&open_loop.c_row(Output::VOut));
        }
    }
    Ok(FeedbackGain { k, ctl_index: Some(ctl_index) })
}

/// `A_CL = A_OL - B_OL K`; `B`, `C` and `D` are carried over untouched. The
/// closed input now takes the reference and is relabelled `<ctrl>.ref`.
pub fn close_loop<T: Scalar>(open_loop: &StateSpaceBlock<T>, k: &FeedbackGain<T>) -> Result<StateSpaceBlock<T>> {
    if k.matrix().shape() != (open_loop.inputs(), open_loop.n()) {
        return Err(Error::DimensionMismatch(format!(
            "K is {:?}, expected ({}, {})",
            k.matrix().shape(),
            open_loop.inputs(),
            open_loop.n()
        )));
    }
    let a = open_loop.a() - open_loop.b() * k.matrix();
    let mut controls = open_loop.control_labels().to_vec();
    if let Some(i) = k.ctl_index() {
        let base = controls[i].strip_suffix(ERR_SUFFIX).unwrap_or(&controls[i]).to_string();
        controls[i] = format!("{base}{REF_SUFFIX}");
    }
    let states = open_loop.state_labels().to_vec();
    Ok(open_loop.clone().with_a(a).with_labels(controls, states))
}

/// Attach then close in one step.
pub fn close_loop_with<T: Scalar>(
    conv: &StateSpaceBlock<T>,
    ctrl: &ControllerBlock<T>,
    ctl_index: usize,
    target: LoopTarget,
) -> Result<StateSpaceBlock<T>> {
    let open = attach_controller_open_loop(conv, ctrl, ctl_index)?;
    let k = feedback_gain(target, &open, ctl_index)?;
    close_loop(&open, &k)
}

/// Partition of a block used by both connection formulas.
struct Parts<T: Scalar> {
    a: DMatrix<T>,
    b1: DMatrix<T>,
    b2: DMatrix<T>,
    b3: DMatrix<T>,
    c1: DMatrix<T>,
    c2: DMatrix<T>,
    d11: T,
    d12: T,
    d21: T,
    d22: T,
    d13: DMatrix<T>,
    d23: DMatrix<T>,
}

impl<T: Scalar> Parts<T> {
    fn of(blk: &StateSpaceBlock<T>) -> Self {
        let (n, q) = (blk.n(), blk.q());
        let b = blk.b();
        let c = blk.c();
        let d = blk.d();
        Self {
            a: blk.a().clone(),
            b1: b.columns(0, 1).into_owned(),
            b2: b.columns(1, 1).into_owned(),
            b3: b.columns(2, q).into_owned(),
            c1: c.rows(0, 1).into_owned(),
            c2: c.rows(1, 1).into_owned(),
            d11: d[(0, 0)],
            d12: d[(0, 1)],
            d21: d[(1, 0)],
            d22: d[(1, 1)],
            d13: d.view((0, 2), (1, q)).into_owned(),
            d23: d.view((1, 2), (1, q)).into_owned(),
        }
        .check(n)
    }

    fn check(self, n: usize) -> Self {
        debug_assert_eq!(self.a.nrows(), n);
        self
    }
}

fn check_well_posed<T: Scalar>(s: &Parts<T>, l: &Parts<T>) -> Result<T> {
    let den = T::one() + l.d11 * s.d22;
    if !(den.abs() > T::lit(WELL_POSED_TOL)) {
        return Err(Error::IllPosedConnection(den.as_f64()));
    }
    Ok(den)
}

fn series_labels<T: Scalar>(source: &StateSpaceBlock<T>, load: &StateSpaceBlock<T>) -> (Vec<String>, Vec<String>) {
    let pre = |p: &str, v: &[String]| v.iter().map(|l| format!("{p}.{l}")).collect::<Vec<_>>();
    let mut controls = pre("S", source.control_labels());
    controls.extend(pre("L", load.control_labels()));
    let mut states = pre("S", source.state_labels());
    states.extend(pre("L", load.state_labels()));
    (controls, states)
}

/// Assembles a matrix from a grid of blocks with consistent row heights and
/// column widths.
fn assemble<T: Scalar>(rows: &[&[&DMatrix<T>]]) -> DMatrix<T> {
    let heights: Vec<usize> = rows.iter().map(|r| r[0].nrows()).collect();
    let widths: Vec<usize> = rows[0].iter().map(|m| m.ncols()).collect();
    let mut out = DMatrix::zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (row, h) in rows.iter().zip(&heights) {
        let mut c0 = 0;
        for (m, w) in row.iter().zip(&widths) {
            debug_assert_eq!(m.shape(), (*h, *w));
            out.view_mut((r0, c0), (*h, *w)).copy_from(*m);
            c0 += w;
        }
        r0 += h;
    }
    out
}

/// Series connection: `source` output port drives `load` input port.
///
/// The inner terminals obey `v_in_L = v_out_S` and `i_out_S = -i_in_L`. The
/// result has the source states followed by the load states and inputs
/// `(v_in, i_out, ctl_S.., ctl_L..)`; labels are prefixed `S.` and `L.`.
/// Entries are computed term by term from the eliminated inner variables.
pub fn series_connect<T: Scalar>(source: &StateSpaceBlock<T>, load: &StateSpaceBlock<T>) -> Result<StateSpaceBlock<T>> {
    let s = Parts::of(source);
    let l = Parts::of(load);
    let den = check_well_posed(&s, &l)?;

    let a11 = &s.a - &s.b2 * &s.c2 * (l.d11 / den);
    let a12 = -(&s.b2 * &l.c1) / den;
    let a21 = &l.b1 * &s.c2 / den;
    let a22 = &l.a - &l.b1 * &l.c1 * (s.d22 / den);

    let b11 = &s.b1 - &s.b2 * (l.d11 * s.d21 / den);
    let b12 = -(&s.b2 * (l.d12 / den));
    let b13 = &s.b3 - &s.b2 * &s.d23 * (l.d11 / den);
    let b14 = -(&s.b2 * &l.d13) / den;
    let b21 = &l.b1 * (s.d21 / den);
    let b22 = &l.b2 - &l.b1 * (s.d22 * l.d12 / den);
    let b23 = &l.b1 * &s.d23 / den;
    let b24 = &l.b3 - &l.b1 * &l.d13 * (s.d22 / den);

    let c11 = &s.c1 - &s.c2 * (s.d12 * l.d11 / den);
    let c12 = -(&l.c1 * (s.d12 / den));
    let c21 = &s.c2 * (l.d21 / den);
    let c22 = &l.c2 - &l.c1 * (l.d21 * s.d22 / den);

    let one = |x: T| DMatrix::from_element(1, 1, x);
    let d11 = one(s.d11 - s.d12 * l.d11 * s.d21 / den);
    let d12 = one(-(s.d12 * l.d12) / den);
    let d13 = &s.d13 - &s.d23 * (s.d12 * l.d11 / den);
    let d14 = -(&l.d13 * (s.d12 / den));
    let d21 = one(l.d21 * s.d21 / den);
    let d22 = one(l.d22 - l.d21 * s.d22 * l.d12 / den);
    let d23 = &s.d23 * (l.d21 / den);
    let d24 = &l.d23 - &l.d13 * (l.d21 * s.d22 / den);

    let a = assemble(&[&[&a11, &a12], &[&a21, &a22]]);
    let b = assemble(&[&[&b11, &b12, &b13, &b14], &[&b21, &b22, &b23, &b24]]);
    let c = assemble(&[&[&c11, &c12], &[&c21, &c22]]);
    let d = assemble(&[&[&d11, &d12, &d13, &d14], &[&d21, &d22, &d23, &d24]]);
    let (controls, states) = series_labels(source, load);
    StateSpaceBlock::new(a, b, c, d, controls, states)
}

/// Same connection as [`series_connect`], computed from the block-diagonal
/// compact form with the helper matrices `M1`, `M2`, `M_C`, `M_D` and the
/// inverse of `[[D22_S, -1], [1, D11_L]]`.
pub fn series_connect_compact<T: Scalar>(
    source: &StateSpaceBlock<T>,
    load: &StateSpaceBlock<T>,
) -> Result<StateSpaceBlock<T>> {
    let s = Parts::of(source);
    let l = Parts::of(load);
    let den = check_well_posed(&s, &l)?;
    let h = Matrix2::new(s.d22, -T::one(), T::one(), l.d11);
    let h_inv = h.try_inverse().ok_or(Error::IllPosedConnection(den.as_f64()))?;
    let h_inv = DMatrix::from_iterator(2, 2, h_inv.iter().copied());

    let diag2 = |x: T, y: T| DMatrix::from_row_slice(2, 2, &[x, T::zero(), T::zero(), y]);
    let m1 = block_diag(&s.b2, &l.b1) * &h_inv;
    let m2 = diag2(s.d12, l.d21) * &h_inv;
    let m_c = block_diag(&s.c2, &l.c1);
    let m_d = assemble(&[&[&diag2(s.d21, l.d12), &block_diag(&s.d23, &l.d13)]]);

    let a = block_diag(&s.a, &l.a) - &m1 * &m_c;
    let b = assemble(&[&[&block_diag(&s.b1, &l.b2), &block_diag(&s.b3, &l.b3)]]) - &m1 * &m_d;
    let c = block_diag(&s.c1, &l.c2) - &m2 * &m_c;
    let d = assemble(&[&[&diag2(s.d11, l.d22), &block_diag(&s.d13, &l.d23)]]) - &m2 * &m_d;
    let (controls, states) = series_labels(source, load);
    StateSpaceBlock::new(a, b, c, d, controls, states)
}

/// Left fold of [`series_connect`] over a source-to-load chain.
pub fn cascade<T: Scalar>(chain: &[StateSpaceBlock<T>]) -> Result<StateSpaceBlock<T>> {
    let (first, rest) = chain.split_first().ok_or_else(|| Error::DimensionMismatch("empty cascade".into()))?;
    rest.iter().try_fold(first.clone(), |acc, next| series_connect(&acc, next))
}
