//! Named transfer functions, frequency sweeps and step studies over a block
//! at any stage of composition.

use nalgebra::{Complex, ComplexField, DVector};

use crate::error::{Error, Result};
use crate::model::{Input, Output, StateSpaceBlock, TimeSeries};
use crate::Scalar;

/// Channel of a block, by what it means physically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TransferQuery {
    /// `v_out / ctl_k`
    ControlToOutput(usize),
    /// `v_out / i_out`
    OutputImpedance,
    /// `i_in / v_in`
    InputAdmittance,
    /// `v_in / i_in`, the reciprocal of the input admittance.
    InputImpedance,
    /// `v_out / v_in`
    ForwardVoltageGain,
    /// `i_in / i_out`
    ReverseCurrentGain,
    /// `x_state / ctl_control`, e.g. reference to inductor current.
    RefToState { control: usize, state: usize },
}

impl TransferQuery {
    /// `(input, output)` of the query, `None` for the derived channels.
    pub fn channel(self) -> Option<(Input, Output)> {
        match self {
            TransferQuery::ControlToOutput(k) => Some((Input::Control(k), Output::VOut)),
            TransferQuery::OutputImpedance => Some((Input::IOut, Output::VOut)),
            TransferQuery::InputAdmittance => Some((Input::VIn, Output::IIn)),
            TransferQuery::ForwardVoltageGain => Some((Input::VIn, Output::VOut)),
            TransferQuery::ReverseCurrentGain => Some((Input::IOut, Output::IIn)),
            TransferQuery::InputImpedance | TransferQuery::RefToState { .. } => None,
        }
    }

    /// Input driven by the query.
    pub fn input(self) -> Input {
        match self {
            TransferQuery::RefToState { control, .. } => Input::Control(control),
            TransferQuery::InputImpedance => Input::VIn,
            q => q.channel().expect("direct channel").0,
        }
    }

    fn validate<T: Scalar>(self, block: &StateSpaceBlock<T>) -> Result<()> {
        let check_k = |k: usize| {
            if k < block.q() {
                Ok(())
            } else {
                Err(Error::BadIndex(format!("control input {k} of a block with q = {}", block.q())))
            }
        };
        match self {
            TransferQuery::ControlToOutput(k) => check_k(k),
            TransferQuery::RefToState { control, state } => {
                check_k(control)?;
                if state < block.n() {
                    Ok(())
                } else {
                    Err(Error::BadIndex(format!("state {state} of a block with n = {}", block.n())))
                }
            }
            _ => Ok(()),
        }
    }
}

/// Frequency response of `query` at complex frequency `s` [rad/s].
pub fn named_transfer<T: Scalar>(
    block: &StateSpaceBlock<T>,
    query: TransferQuery,
    s: Complex<T>,
) -> Result<Complex<T>> {
    query.validate(block)?;
    match query {
        TransferQuery::InputImpedance => {
            let y = block.eval_response(Input::VIn, Output::IIn, s)?;
            if y.re == T::zero() && y.im == T::zero() {
                return Err(Error::ZeroAdmittance { re: s.re.as_f64(), im: s.im.as_f64() });
            }
            Ok(Complex::new(T::one(), T::zero()) / y)
        }
        TransferQuery::RefToState { control, state } => block.eval_state_response(state, Input::Control(control), s),
        q => {
            let (i, o) = q.channel().expect("direct channel");
            block.eval_response(i, o, s)
        }
    }
}

/// Response at `s = 0`.
pub fn dc_gain<T: Scalar>(block: &StateSpaceBlock<T>, query: TransferQuery) -> Result<Complex<T>> {
    named_transfer(block, query, Complex::new(T::zero(), T::zero()))
}

/// Log-spaced frequency axis in hertz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid<T> {
    pub f_start: T,
    pub f_stop: T,
    pub points_per_decade: usize,
}

impl Default for FrequencyGrid<f64> {
    fn default() -> Self {
        Self { f_start: 1.0, f_stop: 1e6, points_per_decade: 50 }
    }
}

impl<T: Scalar> FrequencyGrid<T> {
    pub fn new(f_start: T, f_stop: T, points_per_decade: usize) -> Result<Self> {
        let g = Self { f_start, f_stop, points_per_decade };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start > T::zero()) || !(self.f_stop > self.f_start) || !self.f_stop.is_finite() {
            return Err(Error::BadGrid(format!(
                "need 0 < f_start < f_stop, got {} .. {}",
                self.f_start.as_f64(),
                self.f_stop.as_f64()
            )));
        }
        if self.points_per_decade == 0 {
            return Err(Error::BadGrid("points_per_decade must be positive".into()));
        }
        Ok(())
    }

    /// `f_start * 10^(k/ppd)` up to `f_stop`; `f_stop` is appended when it
    /// does not fall on the lattice.
    pub fn frequencies(&self) -> Result<Vec<T>> {
        self.validate()?;
        let ppd = T::from_usize(self.points_per_decade).unwrap();
        let decades = (self.f_stop / self.f_start).log10();
        let count = (decades * ppd + T::lit(1e-9)).floor().to_usize().unwrap_or(0);
        let ten = T::lit(10.0);
        let mut f: Vec<T> = (0..=count).map(|k| self.f_start * ten.powf(T::from_usize(k).unwrap() / ppd)).collect();
        let last = *f.last().unwrap();
        if last < self.f_stop * (T::one() - T::lit(1e-9)) {
            f.push(self.f_stop);
        }
        Ok(f)
    }
}

/// One row of a Bode table. `singular` rows carry NaN magnitude and phase.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodePoint<T> {
    pub freq_hz: T,
    pub magnitude_db: T,
    pub phase_deg: T,
    pub singular: bool,
}

/// Shifts each phase by multiples of 360 degrees so that consecutive valid
/// samples differ by at most 180 degrees. The first sample stays in
/// `(-180, 180]`. NaN entries are skipped.
pub fn unwrap_phase_deg<T: Scalar>(phase: &mut [T]) {
    let full = T::lit(360.0);
    let half = T::lit(180.0);
    let mut prev: Option<T> = None;
    for p in phase.iter_mut() {
        if !p.is_finite() {
            continue;
        }
        if let Some(q) = prev {
            let mut v = *p;
            while v - q > half {
                v -= full;
            }
            while v - q < -half {
                v += full;
            }
            *p = v;
        } else if *p <= -half {
            *p += full;
        }
        prev = Some(*p);
    }
}

/// Magnitude (dB) and unwrapped phase (degrees) of `query` at `s = j 2 pi f`
/// over the grid. Points where the block is singular are flagged and skipped.
pub fn bode_sweep<T: Scalar>(
    block: &StateSpaceBlock<T>,
    query: TransferQuery,
    grid: &FrequencyGrid<T>,
) -> Result<Vec<BodePoint<T>>> {
    query.validate(block)?;
    let twenty = T::lit(20.0);
    let mut rows = Vec::new();
    for f in grid.frequencies()? {
        let s = Complex::new(T::zero(), T::two_pi() * f);
        let row = match named_transfer(block, query, s) {
            Ok(g) => BodePoint {
                freq_hz: f,
                magnitude_db: twenty * g.modulus().log10(),
                phase_deg: g.im.atan2(g.re) * T::lit(180.0) / T::pi(),
                singular: false,
            },
            Err(Error::SingularAtS { .. } | Error::ZeroAdmittance { .. }) => {
                BodePoint { freq_hz: f, magnitude_db: T::lit(f64::NAN), phase_deg: T::lit(f64::NAN), singular: true }
            }
            Err(e) => return Err(e),
        };
        rows.push(row);
    }
    let mut phase: Vec<T> = rows.iter().map(|r| r.phase_deg).collect();
    unwrap_phase_deg(&mut phase);
    for (r, p) in rows.iter_mut().zip(phase) {
        r.phase_deg = p;
    }
    Ok(rows)
}

/// Small-signal step response: `amplitude` applied at `t = 0` on `input`,
/// every other input held at zero, zero initial state. Returns the outputs
/// and all states as deviations from the operating point.
pub fn step_study<T: Scalar>(
    block: &StateSpaceBlock<T>,
    input: Input,
    amplitude: T,
    duration: T,
    dt: T,
) -> Result<TimeSeries<T>> {
    if !(dt > T::zero()) || !dt.is_finite() {
        return Err(Error::BadGrid(format!("dt must be positive, got {}", dt.as_f64())));
    }
    if !(duration >= T::zero()) || !duration.is_finite() {
        return Err(Error::BadGrid(format!("duration must be non-negative, got {}", duration.as_f64())));
    }
    if input.column() >= block.inputs() {
        return Err(Error::BadIndex(format!("input {:?} of a block with q = {}", input, block.q())));
    }
    let poles = block.poles();
    if let Some(worst) = poles.iter().map(|p| p.re).fold(None, |m: Option<T>, r| Some(m.map_or(r, |m| m.max(r)))) {
        if !(worst < T::zero()) {
            return Err(Error::UnstableBlock(worst.as_f64()));
        }
    }
    let labels = block.input_labels();
    let values: Vec<(&str, T)> = labels
        .iter()
        .enumerate()
        .map(|(j, l)| (l.as_str(), if j == input.column() { amplitude } else { T::zero() }))
        .collect();
    let u = TimeSeries::constant(dt, 1, &values)?;
    block.simulate(&u, &DVector::zeros(block.n()), dt, duration)
}
