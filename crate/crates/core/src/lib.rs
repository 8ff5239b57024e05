//! Two-port state-space modelling of DC-DC converter systems.
//!
//! Blocks (filters, loads, converters) share one state-space form with
//! inputs `(v_in, i_out, ctl..)` and outputs `(i_in, v_out)`. Controllers are
//! attached to a control input and closed with a selector gain; blocks are
//! chained source to load with [`series_connect`]. Transfer functions, poles
//! and step responses can be taken from the model at any stage.
//!
//! ```
//! use twoport_ss::prelude::*;
//!
//! let op = solve_operating_point(Topology::Boost, 10.0, 24.0, 1.2).unwrap();
//! let boost = boost_ccm(&LcParams::new(20e-6, 220e-6), &op).unwrap();
//! let loaded = series_connect(&boost, &resistor(20.0).unwrap()).unwrap();
//! assert_eq!((loaded.n(), loaded.q()), (2, 1));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod blocks;
pub mod compose;
pub mod error;
mod linalg;
pub mod model;
mod scalar;

pub use analysis::{bode_sweep, dc_gain, named_transfer, step_study, BodePoint, FrequencyGrid, TransferQuery};
pub use blocks::{
    boost_ccm, buck_ccm, controller, lc_filter, resistor, solve_operating_point, time_constant_from_frequency,
    ControllerParams, LcParams, OperatingPoint, Topology,
};
pub use compose::{
    attach_controller_open_loop, cascade, close_loop, close_loop_with, feedback_gain, series_connect,
    series_connect_compact, FeedbackGain, LoopTarget,
};
pub use error::{Error, Result};
pub use model::{ControllerBlock, Input, Output, StateSpaceBlock, TimeSeries};
pub use nalgebra;
pub use nalgebra::Complex;
pub use scalar::Scalar;

/// Double-precision block, the common case.
pub type Block = StateSpaceBlock<f64>;
/// Single-precision block.
pub type Block32 = StateSpaceBlock<f32>;
/// Double-precision controller.
pub type Controller = ControllerBlock<f64>;
pub type Series = TimeSeries<f64>;

pub mod prelude {
    pub use crate::analysis::*;
    pub use crate::blocks::*;
    pub use crate::compose::*;
    pub use crate::model::*;
    pub use crate::{Block, Complex, Controller, Error, Scalar, Series};
}
