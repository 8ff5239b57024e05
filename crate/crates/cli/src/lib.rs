//! Netlist front end for `twoport-ss`: parse a JSON document describing
//! blocks, feedback loops and a cascade, build the composed model and run
//! an analysis on it.

pub mod commands;
pub mod error;
pub mod netlist;
pub mod pipeline;
pub mod table;

pub use commands::{run_command, Command, ModelReport, QueryName, QuerySpec, Report};
pub use error::CliError;
pub use netlist::{parse_netlist, NetlistDoc};
pub use pipeline::build_model;
pub use table::{Format, ResultTable};
