//! Constructors for the concrete building blocks: resistive load, LC filter,
//! boost and buck converters in CCM, and Type 1/2/3 controllers.
//!
//! All parameters are SI (H, F, Ω, V, A, s).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{ControllerBlock, StateSpaceBlock};
use crate::Scalar;

/// ESR applied to inductors and capacitors when none is given.
pub const DEFAULT_ESR: f64 = 10e-3;

/// Label of the duty-ratio control input on converter blocks.
pub const DUTY: &str = "duty";

const LC_STATES: [&str; 2] = ["iL", "vC"];

/// Resistive load `R`: `i_in = v_in / R - i_out`, `v_out = v_in`.
pub fn resistor<T: Scalar>(r: T) -> Result<StateSpaceBlock<T>> {
    if !(r > T::zero()) || !r.is_finite() {
        return Err(Error::NonPositiveR(r.as_f64()));
    }
    let (z, one) = (T::zero(), T::one());
    StateSpaceBlock::from_rows(0, 0, &[], &[], &[], &[one / r, -one, one, z], &[], &[])
}

/// Inductor/capacitor values with their series resistances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcParams<T> {
    pub l: T,
    pub r_l: T,
    pub c: T,
    pub r_c: T,
}

impl<T: Scalar> LcParams<T> {
    /// `L` and `C` with the default ESR on both.
    pub fn new(l: T, c: T) -> Self {
        let esr = T::lit(DEFAULT_ESR);
        Self { l, r_l: esr, c, r_c: esr }
    }

    pub fn with_esr(mut self, r_l: T, r_c: T) -> Self {
        self.r_l = r_l;
        self.r_c = r_c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: T| x.is_finite();
        if !(self.l > T::zero()) || !ok(self.l) {
            return Err(Error::InvalidParams(format!("L must be positive, got {}", self.l.as_f64())));
        }
        if !(self.c > T::zero()) || !ok(self.c) {
            return Err(Error::InvalidParams(format!("C must be positive, got {}", self.c.as_f64())));
        }
        if !(self.r_l >= T::zero()) || !ok(self.r_l) || !(self.r_c >= T::zero()) || !ok(self.r_c) {
            return Err(Error::InvalidParams("ESR values must be non-negative".into()));
        }
        Ok(())
    }
}

/// LC filter with inductor and capacitor ESR. States `iL`, `vC`.
pub fn lc_filter<T: Scalar>(p: &LcParams<T>) -> Result<StateSpaceBlock<T>> {
    p.validate()?;
    let LcParams { l, r_l, c, r_c } = *p;
    let (z, one) = (T::zero(), T::one());
    StateSpaceBlock::from_rows(
        2,
        0,
        &[-(r_l + r_c) / l, -one / l, one / c, z],
        &[one / l, -r_c / l, z, one / c],
        &[one, z, r_c, one],
        &[z, z, z, r_c],
        &[],
        &LC_STATES,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Topology {
    Buck,
    Boost,
}

/// Large-signal point the converter models are linearised around.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint<T> {
    pub v_in: T,
    pub v_out: T,
    pub i_out: T,
    /// Duty ratio of the active switch.
    pub duty: T,
    /// Average inductor current.
    pub i_l: T,
}

impl<T: Scalar> OperatingPoint<T> {
    fn validate(&self, topology: Topology) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidOperatingPoint(msg));
        let all_finite = [self.v_in, self.v_out, self.i_out, self.duty, self.i_l].iter().all(|x| x.is_finite());
        if !all_finite {
            return bad("non-finite operating point".into());
        }
        if !(self.v_in > T::zero()) || !(self.v_out > T::zero()) {
            return bad("voltages must be positive".into());
        }
        if !(self.duty > T::zero() && self.duty < T::one()) {
            return bad(format!("duty ratio {} outside (0, 1)", self.duty.as_f64()));
        }
        match topology {
            Topology::Boost if !(self.v_out > self.v_in) => bad("boost requires V_out > V_in".into()),
            Topology::Buck if !(self.v_out < self.v_in) => bad("buck requires V_out < V_in".into()),
            _ => Ok(()),
        }
    }
}

/// Lossless steady state of an ideal converter.
///
/// Boost: `D = 1 - V_in/V_out`, `I_L = I_out/(1-D)`. Buck: `D = V_out/V_in`,
/// `I_L = I_out`. ESR-induced shifts of the DC point are ignored.
pub fn solve_operating_point<T: Scalar>(topology: Topology, v_in: T, v_out: T, i_out: T) -> Result<OperatingPoint<T>> {
    if !v_in.is_finite() || !v_out.is_finite() || !i_out.is_finite() {
        return Err(Error::InfeasiblePoint("non-finite input".into()));
    }
    if !(v_in > T::zero()) || !(v_out > T::zero()) {
        return Err(Error::InfeasiblePoint("voltages must be positive".into()));
    }
    let one = T::one();
    match topology {
        Topology::Boost => {
            if !(v_out > v_in) {
                return Err(Error::InfeasiblePoint(format!(
                    "boost cannot reach {} V from {} V",
                    v_out.as_f64(),
                    v_in.as_f64()
                )));
            }
            let duty = one - v_in / v_out;
            Ok(OperatingPoint { v_in, v_out, i_out, duty, i_l: i_out / (one - duty) })
        }
        Topology::Buck => {
            if !(v_out < v_in) {
                return Err(Error::InfeasiblePoint(format!(
                    "buck cannot reach {} V from {} V",
                    v_out.as_f64(),
                    v_in.as_f64()
                )));
            }
            Ok(OperatingPoint { v_in, v_out, i_out, duty: v_out / v_in, i_l: i_out })
        }
    }
}

/// Unterminated boost converter in CCM, linearised at `op`.
/// States `iL`, `vC`; one control input `duty`.
pub fn boost_ccm<T: Scalar>(p: &LcParams<T>, op: &OperatingPoint<T>) -> Result<StateSpaceBlock<T>> {
    p.validate()?;
    op.validate(Topology::Boost)?;
    let LcParams { l, r_l, c, r_c } = *p;
    let (z, one) = (T::zero(), T::one());
    let dp = one - op.duty;
    StateSpaceBlock::from_rows(
        2,
        1,
        &[-(dp * r_c + r_l) / l, -dp / l, dp / c, z],
        &[one / l, -dp * r_c / l, op.v_out / l, z, one / c, -op.i_l / c],
        &[one, z, dp * r_c, one],
        &[z, z, z, z, r_c, -r_c * op.i_l],
        &[DUTY],
        &LC_STATES,
    )
}

/// Unterminated buck converter in CCM, linearised at `op` by state-space
/// averaging. States `iL`, `vC`; one control input `duty`.
///
/// Averaged equations (currents into both ports):
///
/// ```text
///   L iL' = d v_in - (r_L + r_C) iL - vC - r_C i_out
///   C vC' = iL + i_out
///   i_in  = d iL
///   v_out = vC + r_C (iL + i_out)
/// ```
pub fn buck_ccm<T: Scalar>(p: &LcParams<T>, op: &OperatingPoint<T>) -> Result<StateSpaceBlock<T>> {
    p.validate()?;
    op.validate(Topology::Buck)?;
    let LcParams { l, r_l, c, r_c } = *p;
    let (z, one) = (T::zero(), T::one());
    let d = op.duty;
    StateSpaceBlock::from_rows(
        2,
        1,
        &[-(r_l + r_c) / l, -one / l, one / c, z],
        &[d / l, -r_c / l, op.v_in / l, z, one / c, z],
        &[d, z, r_c, one],
        &[z, z, op.i_l, z, r_c, z],
        &[DUTY],
        &LC_STATES,
    )
}

/// Integral controllers with zero, one or two lead-lag sections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ControllerParams<T> {
    /// `K_i / s`
    Type1 { k_i: T },
    /// `K_i/s * (1 + T_z s) / (1 + T_p s)`
    Type2 { k_i: T, t_z: T, t_p: T },
    /// `K_i/s * (1 + T_z1 s)(1 + T_z2 s) / ((1 + T_p1 s)(1 + T_p2 s))`
    Type3 { k_i: T, t_z1: T, t_z2: T, t_p1: T, t_p2: T },
}

impl<T: Scalar> ControllerParams<T> {
    pub fn k_i(&self) -> T {
        match *self {
            ControllerParams::Type1 { k_i }
            | ControllerParams::Type2 { k_i, .. }
            | ControllerParams::Type3 { k_i, .. } => k_i,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |x: T, name: &str| -> Result<()> {
            if x > T::zero() && x.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParams(format!("{name} must be positive, got {}", x.as_f64())))
            }
        };
        pos(self.k_i(), "K_i")?;
        match *self {
            ControllerParams::Type1 { .. } => Ok(()),
            ControllerParams::Type2 { t_z, t_p, .. } => {
                pos(t_z, "T_z")?;
                pos(t_p, "T_p")
            }
            ControllerParams::Type3 { t_z1, t_z2, t_p1, t_p2, .. } => {
                pos(t_z1, "T_z1")?;
                pos(t_z2, "T_z2")?;
                pos(t_p1, "T_p1")?;
                pos(t_p2, "T_p2")
            }
        }
    }
}

/// Observer-companion realisation of a Type 1/2/3 controller; `D_C = 0` in
/// every case.
pub fn controller<T: Scalar>(p: &ControllerParams<T>) -> Result<ControllerBlock<T>> {
    p.validate()?;
    let (z, one) = (T::zero(), T::one());
    match *p {
        ControllerParams::Type1 { k_i } => ControllerBlock::new(
            DMatrix::from_element(1, 1, z),
            DMatrix::from_element(1, 1, k_i),
            DMatrix::from_element(1, 1, one),
            z,
        ),
        ControllerParams::Type2 { k_i, t_z, t_p } => ControllerBlock::new(
            DMatrix::from_row_slice(2, 2, &[z, z, one, -one / t_p]),
            DMatrix::from_row_slice(2, 1, &[k_i / t_p, k_i * t_z / t_p]),
            DMatrix::from_row_slice(1, 2, &[z, one]),
            z,
        ),
        ControllerParams::Type3 { k_i, t_z1, t_z2, t_p1, t_p2 } => {
            let tp = t_p1 * t_p2;
            ControllerBlock::new(
                DMatrix::from_row_slice(3, 3, &[z, z, z, one, z, -one / tp, z, one, -(t_p1 + t_p2) / tp]),
                DMatrix::from_row_slice(3, 1, &[k_i / tp, k_i * (t_z1 + t_z2) / tp, k_i * t_z1 * t_z2 / tp]),
                DMatrix::from_row_slice(1, 3, &[z, z, one]),
                z,
            )
        }
    }
}

/// `1 / (2 pi f)`: the time constant of a corner at `f` hertz.
pub fn time_constant_from_frequency<T: Scalar>(f: T) -> Result<T> {
    if !(f > T::zero()) || !f.is_finite() {
        return Err(Error::NonPositiveFrequency(f.as_f64()));
    }
    Ok(T::one() / (T::two_pi() * f))
}
