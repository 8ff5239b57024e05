//! Netlist documents: the JSON schema, strict parsing and reference checks.
//!
//! ```json
//! {
//!   "blocks": {
//!     "boost": { "kind": "boost_ccm", "params": { "L": 2e-5, "C": 2.2e-4 },
//!                "operating_point": { "v_in": 10, "v_out": 24, "i_out": 1.2 } },
//!     "cv":    { "kind": "controller_type1", "params": { "K_i": 50 } },
//!     "load":  { "kind": "resistor", "params": { "R": 20 } }
//!   },
//!   "loops": [ { "converter": "boost", "controller": "cv", "target": "v_out", "ctl": "duty" } ],
//!   "cascade": ["boost", "load"]
//! }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetlistDoc {
    pub blocks: BTreeMap<String, BlockSpec>,
    #[serde(default)]
    pub loops: Vec<LoopSpec>,
    pub cascade: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Order>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub kind: Kind,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operating_point: Option<OperatingPointSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Resistor,
    LcFilter,
    BoostCcm,
    BuckCcm,
    ControllerType1,
    ControllerType2,
    ControllerType3,
}

impl Kind {
    pub fn is_controller(self) -> bool {
        matches!(self, Kind::ControllerType1 | Kind::ControllerType2 | Kind::ControllerType3)
    }

    pub fn is_converter(self) -> bool {
        matches!(self, Kind::BoostCcm | Kind::BuckCcm)
    }

    /// `(required, optional)` parameter names. `f_switch` is kept with the
    /// document but does not enter the averaged models.
    pub fn params(self) -> (&'static [&'static str], &'static [&'static str]) {
        match self {
            Kind::Resistor => (&["R"], &[]),
            Kind::LcFilter => (&["L", "C"], &["r_L", "r_C"]),
            Kind::BoostCcm | Kind::BuckCcm => (&["L", "C"], &["r_L", "r_C", "f_switch"]),
            Kind::ControllerType1 => (&["K_i"], &[]),
            Kind::ControllerType2 => (&["K_i", "T_z", "T_p"], &[]),
            Kind::ControllerType3 => (&["K_i", "T_z1", "T_z2", "T_p1", "T_p2"], &[]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatingPointSpec {
    pub v_in: f64,
    pub v_out: f64,
    pub i_out: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopSpec {
    pub converter: String,
    pub controller: String,
    pub target: String,
    pub ctl: String,
}

/// Where feedback is closed: on each converter before the cascade is built
/// (`loops_first`, the default) or on the assembled cascade.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    #[default]
    LoopsFirst,
    CascadeFirst,
}

/// Parsed form of [`LoopSpec::target`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    State(String),
    OutputVoltage,
}

impl LoopSpec {
    pub fn parsed_target(&self) -> Result<Target, CliError> {
        if self.target == "v_out" {
            return Ok(Target::OutputVoltage);
        }
        match self.target.strip_prefix("state:") {
            Some(label) if !label.is_empty() => Ok(Target::State(label.to_string())),
            _ => Err(CliError::Schema(format!(
                "loop target '{}' is neither \"v_out\" nor \"state:<label>\"",
                self.target
            ))),
        }
    }
}

impl NetlistDoc {
    pub fn order(&self) -> Order {
        self.order.unwrap_or_default()
    }

    /// Checks references and per-kind parameter sets.
    pub fn validate(&self) -> Result<(), CliError> {
        for (name, spec) in &self.blocks {
            spec.validate(name)?;
        }
        if self.cascade.is_empty() {
            return Err(CliError::Schema("cascade must list at least one block".into()));
        }
        for (i, name) in self.cascade.iter().enumerate() {
            if self.cascade[..i].contains(name) {
                return Err(CliError::Schema(format!("block '{name}' appears more than once in the cascade")));
            }
            let spec = self.lookup(name, "cascade")?;
            if spec.kind.is_controller() {
                return Err(CliError::Schema(format!("controller '{name}' cannot appear in the cascade")));
            }
        }
        for (i, lp) in self.loops.iter().enumerate() {
            let at = format!("loops[{i}]");
            if !self.lookup(&lp.converter, &at)?.kind.is_converter() {
                return Err(CliError::Schema(format!("{at}: '{}' is not a converter", lp.converter)));
            }
            if !self.lookup(&lp.controller, &at)?.kind.is_controller() {
                return Err(CliError::Schema(format!("{at}: '{}' is not a controller", lp.controller)));
            }
            lp.parsed_target()?;
            if self.order() == Order::CascadeFirst && !self.cascade.contains(&lp.converter) {
                return Err(CliError::UnresolvedRef(format!(
                    "{at}: converter '{}' is not part of the cascade",
                    lp.converter
                )));
            }
        }
        Ok(())
    }

    fn lookup(&self, name: &str, context: &str) -> Result<&BlockSpec, CliError> {
        self.blocks.get(name).ok_or_else(|| CliError::UnresolvedRef(format!("{context}: no block named '{name}'")))
    }

    /// Pretty-printed JSON; parsing it again yields an equal document.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("netlist documents always serialise")
    }
}

impl BlockSpec {
    fn validate(&self, name: &str) -> Result<(), CliError> {
        let (required, optional) = self.kind.params();
        for key in self.params.keys() {
            if !required.contains(&key.as_str()) && !optional.contains(&key.as_str()) {
                return Err(CliError::Schema(format!("block '{name}': unknown parameter '{key}'")));
            }
        }
        for key in required {
            if !self.params.contains_key(*key) {
                return Err(CliError::Schema(format!("block '{name}': missing parameter '{key}'")));
            }
        }
        if let Some(f) = self.param("f_switch") {
            if f.is_nan() || f <= 0.0 {
                return Err(CliError::Schema(format!("block '{name}': f_switch must be positive, got {f}")));
            }
        }
        match (self.kind.is_converter(), self.operating_point.is_some()) {
            (true, false) => Err(CliError::Schema(format!("block '{name}': converters need an operating_point"))),
            (false, true) => {
                Err(CliError::Schema(format!("block '{name}': operating_point only applies to converters")))
            }
            _ => Ok(()),
        }
    }

    pub fn param(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }
}

/// Parses and validates a document.
pub fn parse_netlist(text: &str) -> Result<NetlistDoc, CliError> {
    let doc: NetlistDoc = serde_json::from_str(text).map_err(|e| {
        let kind = match e.classify() {
            serde_json::error::Category::Data => "schema",
            _ => "syntax",
        };
        CliError::Parse { line: e.line(), column: e.column(), kind, message: e.to_string() }
    })?;
    doc.validate()?;
    Ok(doc)
}
