//! The uniform two-port state-space block and the operations every block
//! supports: frequency evaluation, eigenanalysis and exact ZOH simulation.
//!
//! A block maps the inputs `(v_in, i_out, ctl_1 .. ctl_q)` to the outputs
//! `(i_in, v_out)`:
//!
//! ```text
//!   x' = A x + B u
//!   y  = C x + D u
//! ```
//!
//! Both port currents are counted positive flowing *into* the block. Passive
//! blocks are the `q = 0` case of the same type.

use std::fmt;

use nalgebra::{Complex, DMatrix, DVector, RowDVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::Scalar;

/// Label of the voltage input column.
pub const V_IN: &str = "v_in";
/// Label of the output-current input column.
pub const I_OUT: &str = "i_out";
/// Label of the input-current output row.
pub const I_IN: &str = "i_in";
/// Label of the output-voltage output row.
pub const V_OUT: &str = "v_out";

/// Selects a column of `B`/`D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Input {
    VIn,
    IOut,
    /// The k-th control input (zero based).
    Control(usize),
}

impl Input {
    pub fn column(self) -> usize {
        match self {
            Input::VIn => 0,
            Input::IOut => 1,
            Input::Control(k) => 2 + k,
        }
    }

    pub fn from_column(col: usize) -> Self {
        match col {
            0 => Input::VIn,
            1 => Input::IOut,
            k => Input::Control(k - 2),
        }
    }
}

/// Selects a row of `C`/`D`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    IIn,
    VOut,
}

impl Output {
    pub fn row(self) -> usize {
        match self {
            Output::IIn => 0,
            Output::VOut => 1,
        }
    }
}

fn check_finite<T: Scalar>(m: &DMatrix<T>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what.to_string()))
    }
}

fn mismatch(msg: String) -> Error {
    Error::DimensionMismatch(msg)
}

/// `(A, B, C, D, control_labels, state_labels)`, as consumed by
/// [`StateSpaceBlock::new`].
pub type BlockParts<T> = (DMatrix<T>, DMatrix<T>, DMatrix<T>, DMatrix<T>, Vec<String>, Vec<String>);

/// Linear two-port model with `n` states and `q` control inputs.
#[derive(Clone, PartialEq)]
pub struct StateSpaceBlock<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: DMatrix<T>,
    control_labels: Vec<String>,
    state_labels: Vec<String>,
}

impl<T: Scalar> fmt::Debug for StateSpaceBlock<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSpaceBlock")
            .field("n", &self.n())
            .field("q", &self.q())
            .field("states", &self.state_labels)
            .field("controls", &self.control_labels)
            .finish()
    }
}

impl<T: Scalar> StateSpaceBlock<T> {
    /// Validates the matrices and labels and builds a block. `n` is taken from
    /// `A`, `q` from the column count of `B` minus two.
    pub fn new(
        a: DMatrix<T>,
        b: DMatrix<T>,
        c: DMatrix<T>,
        d: DMatrix<T>,
        control_labels: Vec<String>,
        state_labels: Vec<String>,
    ) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(mismatch(format!("A is {}x{}, expected square", n, a.ncols())));
        }
        if d.nrows() != 2 || d.ncols() < 2 {
            return Err(mismatch(format!("D is {}x{}, expected 2x(2+q)", d.nrows(), d.ncols())));
        }
        let inputs = d.ncols();
        if b.nrows() != n || b.ncols() != inputs {
            return Err(mismatch(format!("B is {}x{}, expected {}x{}", b.nrows(), b.ncols(), n, inputs)));
        }
        if c.nrows() != 2 || c.ncols() != n {
            return Err(mismatch(format!("C is {}x{}, expected 2x{}", c.nrows(), c.ncols(), n)));
        }
        if control_labels.len() != inputs - 2 {
            return Err(mismatch(format!("{} control labels for {} control inputs", control_labels.len(), inputs - 2)));
        }
        if state_labels.len() != n {
            return Err(mismatch(format!("{} state labels for {} states", state_labels.len(), n)));
        }
        check_finite(&a, "A")?;
        check_finite(&b, "B")?;
        check_finite(&c, "C")?;
        check_finite(&d, "D")?;
        Ok(Self { a, b, c, d, control_labels, state_labels })
    }

    /// Builds from row-major slices. Convenient for literal models.
    #[allow(clippy::too_many_arguments)]
    pub fn from_rows(
        n: usize,
        q: usize,
        a: &[T],
        b: &[T],
        c: &[T],
        d: &[T],
        control_labels: &[&str],
        state_labels: &[&str],
    ) -> Result<Self> {
        let p = 2 + q;
        let sized = |m: usize, k: usize, data: &[T], what: &str| -> Result<DMatrix<T>> {
            if data.len() != m * k {
                return Err(mismatch(format!("{what} has {} entries, expected {}", data.len(), m * k)));
            }
            Ok(DMatrix::from_row_slice(m, k, data))
        };
        Self::new(
            sized(n, n, a, "A")?,
            sized(n, p, b, "B")?,
            sized(2, n, c, "C")?,
            sized(2, p, d, "D")?,
            control_labels.iter().map(|s| s.to_string()).collect(),
            state_labels.iter().map(|s| s.to_string()).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn q(&self) -> usize {
        self.b.ncols() - 2
    }

    pub fn inputs(&self) -> usize {
        self.b.ncols()
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<T> {
        &self.d
    }

    /// Column of `B` multiplying the given input (`B1`, `B2`, `B3`...).
    pub fn b_col(&self, input: Input) -> DVector<T> {
        self.b.column(input.column()).into_owned()
    }

    /// Row of `C` producing the given output (`C1`, `C2`).
    pub fn c_row(&self, output: Output) -> RowDVector<T> {
        self.c.row(output.row()).into_owned()
    }

    /// Feedthrough entry `D_{out,in}`.
    pub fn d_entry(&self, output: Output, input: Input) -> T {
        self.d[(output.row(), input.column())]
    }

    pub fn control_labels(&self) -> &[String] {
        &self.control_labels
    }

    pub fn state_labels(&self) -> &[String] {
        &self.state_labels
    }

    /// `v_in`, `i_out`, then the control labels.
    pub fn input_labels(&self) -> Vec<String> {
        let mut v = vec![V_IN.to_string(), I_OUT.to_string()];
        v.extend(self.control_labels.iter().cloned());
        v
    }

    pub fn find_input(&self, label: &str) -> Option<Input> {
        self.input_labels().iter().position(|l| l == label).map(Input::from_column)
    }

    pub fn find_control(&self, label: &str) -> Option<usize> {
        self.control_labels.iter().position(|l| l == label)
    }

    pub fn find_state(&self, label: &str) -> Option<usize> {
        self.state_labels.iter().position(|l| l == label)
    }

    pub fn into_parts(self) -> BlockParts<T> {
        (self.a, self.b, self.c, self.d, self.control_labels, self.state_labels)
    }

    pub(crate) fn with_labels(mut self, control_labels: Vec<String>, state_labels: Vec<String>) -> Self {
        debug_assert_eq!(control_labels.len(), self.q());
        debug_assert_eq!(state_labels.len(), self.n());
        self.control_labels = control_labels;
        self.state_labels = state_labels;
        self
    }

    pub(crate) fn with_a(mut self, a: DMatrix<T>) -> Self {
        debug_assert_eq!(a.shape(), self.a.shape());
        self.a = a;
        self
    }

    fn check_input(&self, input: Input) -> Result<()> {
        if input.column() >= self.inputs() {
            return Err(Error::BadIndex(format!("input {:?} of a block with q = {}", input, self.q())));
        }
        Ok(())
    }

    /// `(sI - A)^-1`, or `SingularAtS` when `s` sits on (or numerically next
    /// to) an eigenvalue.
    pub(crate) fn resolvent(&self, s: Complex<T>) -> Result<DMatrix<Complex<T>>> {
        linalg::checked_inverse(&linalg::shifted(&self.a, s))
            .ok_or(Error::SingularAtS { re: s.re.as_f64(), im: s.im.as_f64() })
    }

    /// Response of an arbitrary state-to-output row `row` (length `n`) plus
    /// feedthrough `d` to a single input.
    pub(crate) fn eval_row(&self, row: &RowDVector<T>, d: T, input: Input, s: Complex<T>) -> Result<Complex<T>> {
        self.check_input(input)?;
        let zero = Complex::new(T::zero(), T::zero());
        if self.n() == 0 {
            return Ok(Complex::new(d, T::zero()));
        }
        let res = self.resolvent(s)?;
        let bcol = linalg::complexify(&self.b.column(input.column()).into_owned());
        let x = res * bcol;
        let acc = row.iter().zip(x.iter()).fold(zero, |acc, (r, xi)| acc + *xi * *r);
        Ok(acc + Complex::new(d, T::zero()))
    }

    /// `C_row (sI - A)^-1 B_col + D_{row,col}` for one input/output channel.
    pub fn eval_response(&self, input: Input, output: Output, s: Complex<T>) -> Result<Complex<T>> {
        self.check_input(input)?;
        self.eval_row(&self.c_row(output), self.d_entry(output, input), input, s)
    }

    /// Response from an input to a single state, `e_i (sI - A)^-1 B_col`.
    pub fn eval_state_response(&self, state: usize, input: Input, s: Complex<T>) -> Result<Complex<T>> {
        if state >= self.n() {
            return Err(Error::BadIndex(format!("state {state} of a block with n = {}", self.n())));
        }
        let mut row = RowDVector::zeros(self.n());
        row[state] = T::one();
        self.eval_row(&row, T::zero(), input, s)
    }

    /// Full `2 x (2+q)` response matrix at `s`.
    pub fn response_matrix(&self, s: Complex<T>) -> Result<DMatrix<Complex<T>>> {
        let mut g = self.d.map(|x| Complex::new(x, T::zero()));
        if self.n() > 0 {
            let res = self.resolvent(s)?;
            let c = self.c.map(|x| Complex::new(x, T::zero()));
            let b = self.b.map(|x| Complex::new(x, T::zero()));
            g += c * res * b;
        }
        Ok(g)
    }

    /// Eigenvalues of `A` with multiplicity; empty for a stateless block.
    pub fn poles(&self) -> Vec<Complex<T>> {
        linalg::eigenvalues(&self.a)
    }

    /// True when every pole has a strictly negative real part.
    pub fn is_stable(&self) -> bool {
        self.poles().iter().all(|p| p.re < T::zero())
    }

    /// Integrates the block exactly under a zero-order hold on the inputs.
    ///
    /// `inputs` must carry one channel per input label (see
    /// [`input_labels`](Self::input_labels)); each sample is held until the
    /// next one. A single-sample series is held for the whole run. The
    /// returned series has `round(duration / dt) + 1` samples and channels
    /// `i_in`, `v_out`, followed by every state.
    pub fn simulate(&self, inputs: &TimeSeries<T>, x0: &DVector<T>, dt: T, duration: T) -> Result<TimeSeries<T>> {
        if !(dt > T::zero()) || !dt.is_finite() {
            return Err(Error::BadGrid(format!("dt must be positive, got {}", dt.as_f64())));
        }
        if !(duration >= T::zero()) || !duration.is_finite() {
            return Err(Error::BadGrid(format!("duration must be non-negative, got {}", duration.as_f64())));
        }
        if x0.len() != self.n() {
            return Err(mismatch(format!("x0 has {} entries, block has {} states", x0.len(), self.n())));
        }
        let labels = self.input_labels();
        let columns: Vec<&[T]> = labels
            .iter()
            .map(|l| inputs.channel(l).ok_or_else(|| Error::BadGrid(format!("input series lacks channel '{l}'"))))
            .collect::<Result<_>>()?;
        let t_in = inputs.time();
        let t0 = t_in[0];
        let dt_in = if t_in.len() > 1 { t_in[1] - t_in[0] } else { T::one() };

        let steps = (duration / dt).round().to_usize().ok_or_else(|| Error::BadGrid("step count overflow".into()))?;
        let (phi, gamma) = linalg::zoh_discretize(&self.a, &self.b, dt);

        let n = self.n();
        let mut x = x0.clone();
        let mut out: Vec<Vec<T>> = vec![Vec::with_capacity(steps + 1); 2 + n];
        let mut t = Vec::with_capacity(steps + 1);
        let mut u = DVector::zeros(self.inputs());
        let slack = T::lit(1e-9);
        for k in 0..=steps {
            let tk = T::from_usize(k).unwrap() * dt;
            let idx = if t_in.len() == 1 || tk < t0 {
                0
            } else {
                let i = ((tk - t0) / dt_in + slack).floor().to_usize().unwrap_or(usize::MAX);
                i.min(t_in.len() - 1)
            };
            for (j, col) in columns.iter().enumerate() {
                u[j] = col[idx];
            }
            let y = &self.c * &x + &self.d * &u;
            out[0].push(y[0]);
            out[1].push(y[1]);
            for i in 0..n {
                out[2 + i].push(x[i]);
            }
            t.push(tk);
            if k < steps {
                x = &phi * &x + &gamma * &u;
            }
        }
        let mut names = vec![I_IN.to_string(), V_OUT.to_string()];
        names.extend(self.state_labels.iter().cloned());
        TimeSeries::new(t, names.into_iter().zip(out).collect())
    }
}

/// Single-input single-output controller `x_C' = A_C x_C + B_C e`,
/// `u = C_C x_C + D_C e`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerBlock<T: Scalar> {
    a: DMatrix<T>,
    b: DMatrix<T>,
    c: DMatrix<T>,
    d: T,
    label: String,
}

impl<T: Scalar> ControllerBlock<T> {
    pub fn new(a: DMatrix<T>, b: DMatrix<T>, c: DMatrix<T>, d: T) -> Result<Self> {
        let m = a.nrows();
        if a.ncols() != m {
            return Err(mismatch(format!("A_C is {}x{}, expected square", m, a.ncols())));
        }
        if b.shape() != (m, 1) {
            return Err(mismatch(format!("B_C is {:?}, expected ({m}, 1)", b.shape())));
        }
        if c.shape() != (1, m) {
            return Err(mismatch(format!("C_C is {:?}, expected (1, {m})", c.shape())));
        }
        check_finite(&a, "A_C")?;
        check_finite(&b, "B_C")?;
        check_finite(&c, "C_C")?;
        if !d.is_finite() {
            return Err(Error::NonFinite("D_C".into()));
        }
        Ok(Self { a, b, c, d, label: "ctrl".into() })
    }

    /// Static gain `u = k e`.
    pub fn gain(k: T) -> Result<Self> {
        Self::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, 1), DMatrix::zeros(1, 0), k)
    }

    /// Sets the name used to label this controller's states and the loop's
    /// error/reference input once attached.
    pub fn named(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<T> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<T> {
        &self.c
    }

    pub fn d(&self) -> T {
        self.d
    }

    /// `C_C (sI - A_C)^-1 B_C + D_C`.
    pub fn eval(&self, s: Complex<T>) -> Result<Complex<T>> {
        let mut g = Complex::new(self.d, T::zero());
        if self.m() > 0 {
            let res = linalg::checked_inverse(&linalg::shifted(&self.a, s))
                .ok_or(Error::SingularAtS { re: s.re.as_f64(), im: s.im.as_f64() })?;
            let c = self.c.map(|x| Complex::new(x, T::zero()));
            let b = self.b.map(|x| Complex::new(x, T::zero()));
            g += (c * res * b)[(0, 0)];
        }
        Ok(g)
    }

    pub fn poles(&self) -> Vec<Complex<T>> {
        linalg::eigenvalues(&self.a)
    }
}

/// Named sample vectors on a shared, uniformly spaced time axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T: Scalar> {
    t: Vec<T>,
    channels: Vec<(String, Vec<T>)>,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(t: Vec<T>, channels: Vec<(String, Vec<T>)>) -> Result<Self> {
        if t.is_empty() {
            return Err(Error::BadGrid("empty time axis".into()));
        }
        if t.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadGrid("non-finite time sample".into()));
        }
        if t.len() > 1 {
            let step = t[1] - t[0];
            if !(step > T::zero()) {
                return Err(Error::BadGrid("time axis not strictly increasing".into()));
            }
            let tol = step * T::lit(1e-6);
            for w in t.windows(2) {
                if ((w[1] - w[0]) - step).abs() > tol {
                    return Err(Error::BadGrid("time axis is not uniformly spaced".into()));
                }
            }
        }
        for (name, v) in &channels {
            if v.len() != t.len() {
                return Err(Error::BadGrid(format!(
                    "channel '{name}' has {} samples, time axis has {}",
                    v.len(),
                    t.len()
                )));
            }
        }
        Ok(Self { t, channels })
    }

    /// Uniform axis `0, dt, .., (len-1) dt` with constant channels.
    pub fn constant(dt: T, len: usize, values: &[(&str, T)]) -> Result<Self> {
        let t: Vec<T> = (0..len).map(|k| T::from_usize(k).unwrap() * dt).collect();
        let channels = values.iter().map(|(n, v)| (n.to_string(), vec![*v; len])).collect();
        Self::new(t, channels)
    }

    pub fn time(&self) -> &[T] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Sample spacing, `None` for a single sample.
    pub fn dt(&self) -> Option<T> {
        (self.t.len() > 1).then(|| self.t[1] - self.t[0])
    }

    pub fn channel(&self, name: &str) -> Option<&[T]> {
        self.channels.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn channels(&self) -> &[(String, Vec<T>)] {
        &self.channels
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.channels.iter().map(|(n, _)| n.as_str())
    }
}
