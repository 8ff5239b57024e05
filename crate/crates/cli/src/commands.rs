//! Command execution over a built model.

use std::f64::consts::PI;
use std::io::Write;

use serde::Serialize;
use twoport_ss::nalgebra::DMatrix;
use twoport_ss::prelude::*;

use crate::error::CliError;
use crate::netlist::NetlistDoc;
use crate::pipeline::{build_model, operating_offsets};
use crate::table::{format_number, Format, ResultTable};

/// Transfer function names accepted by `tf` and `bode`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum QueryName {
    ControlToOutput,
    OutputImpedance,
    InputAdmittance,
    InputImpedance,
    ForwardVoltageGain,
    ReverseCurrentGain,
    RefToState,
}

/// A query as given on the command line; `k` selects the control input and
/// `state` the state label for `ref-to-state`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub name: QueryName,
    pub k: Option<usize>,
    pub state: Option<String>,
}

impl QuerySpec {
    fn resolve(&self, model: &Block) -> Result<TransferQuery, CliError> {
        let k = self.k.unwrap_or(0);
        Ok(match self.name {
            QueryName::ControlToOutput => TransferQuery::ControlToOutput(k),
            QueryName::OutputImpedance => TransferQuery::OutputImpedance,
            QueryName::InputAdmittance => TransferQuery::InputAdmittance,
            QueryName::InputImpedance => TransferQuery::InputImpedance,
            QueryName::ForwardVoltageGain => TransferQuery::ForwardVoltageGain,
            QueryName::ReverseCurrentGain => TransferQuery::ReverseCurrentGain,
            QueryName::RefToState => {
                let label = self
                    .state
                    .as_deref()
                    .ok_or_else(|| CliError::Option("ref-to-state needs --state <label>".into()))?;
                let state =
                    model.find_state(label).ok_or_else(|| CliError::Option(format!("no state labelled '{label}'")))?;
                TransferQuery::RefToState { control: k, state }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Build,
    Tf { query: QuerySpec, freqs: Vec<f64> },
    Bode { query: QuerySpec, f_start: f64, f_stop: f64, ppd: usize },
    Step { input: String, amplitude: f64, duration: f64, dt: f64 },
    Poles,
}

/// Summary and matrices of the composed model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelReport {
    pub n: usize,
    pub q: usize,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub states: Vec<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    #[serde(rename = "D")]
    pub d: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Report {
    Model(ModelReport),
    Table(ResultTable),
}

fn analysis<T>(r: twoport_ss::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::Analysis)
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ModelReport {
    pub fn of(model: &Block) -> Self {
        Self {
            n: model.n(),
            q: model.q(),
            inputs: model.input_labels(),
            outputs: vec![I_IN.to_string(), V_OUT.to_string()],
            states: model.state_labels().to_vec(),
            a: rows_of(model.a()),
            b: rows_of(model.b()),
            c: rows_of(model.c()),
            d: rows_of(model.d()),
        }
    }

    /// Long format: one `matrix,row,col,row_label,col_label,value` record
    /// per entry.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["matrix", "row", "col", "row_label", "col_label", "value"])?;
        let parts = [
            ("A", &self.a, &self.states, &self.states),
            ("B", &self.b, &self.states, &self.inputs),
            ("C", &self.c, &self.outputs, &self.states),
            ("D", &self.d, &self.outputs, &self.inputs),
        ];
        for (name, m, rows, cols) in parts {
            for (i, row) in m.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    let (i_s, j_s) = (i.to_string(), j.to_string());
                    w.write_record([name, &i_s, &j_s, &rows[i], &cols[j], &format_number(*v)])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

impl Report {
    pub fn write<W: Write>(&self, format: Format, mut out: W) -> Result<(), CliError> {
        match (self, format) {
            (Report::Model(m), Format::Csv) => m.write_csv(out),
            (Report::Table(t), Format::Csv) => t.write_csv(out),
            (Report::Model(m), Format::Json) => write_json(m, &mut out),
            (Report::Table(t), Format::Json) => write_json(t, &mut out),
        }
    }
}

fn write_json<S: Serialize, W: Write>(value: &S, out: &mut W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(std::io::Error::other)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn cols(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Builds the model and runs `command` on it.
pub fn run_command(doc: &NetlistDoc, command: &Command) -> Result<Report, CliError> {
    let model = build_model(doc)?;
    match command {
        Command::Build => Ok(Report::Model(ModelReport::of(&model))),
        Command::Tf { query, freqs } => {
            let q = query.resolve(&model)?;
            let mut t = ResultTable::new(cols(&["freq_hz", "re", "im", "magnitude_db", "phase_deg"]));
            for &f in freqs {
                if !f.is_finite() || f < 0.0 {
                    return Err(CliError::Option(format!("frequency must be finite and non-negative, got {f}")));
                }
                let g = analysis(named_transfer(&model, q, Complex::new(0.0, 2.0 * PI * f)))?;
                t.push(vec![f, g.re, g.im, 20.0 * g.norm().log10(), g.arg().to_degrees()]);
            }
            Ok(Report::Table(t))
        }
        Command::Bode { query, f_start, f_stop, ppd } => {
            let q = query.resolve(&model)?;
            let grid = analysis(FrequencyGrid::new(*f_start, *f_stop, *ppd))?;
            let mut t = ResultTable::new(cols(&["freq_hz", "magnitude_db", "phase_deg", "singular"]));
            for p in analysis(bode_sweep(&model, q, &grid))? {
                t.push(vec![p.freq_hz, p.magnitude_db, p.phase_deg, if p.singular { 1.0 } else { 0.0 }]);
            }
            Ok(Report::Table(t))
        }
        Command::Step { input, amplitude, duration, dt } => {
            let inp = model.find_input(input).ok_or_else(|| {
                CliError::Option(format!("no input labelled '{input}'; inputs are {:?}", model.input_labels()))
            })?;
            let series = analysis(step_study(&model, inp, *amplitude, *duration, *dt))?;
            let offsets = operating_offsets(doc)?;
            let shifted: Vec<(usize, f64)> =
                series.names().enumerate().filter_map(|(j, name)| offsets.get(name).map(|o| (j, *o))).collect();
            let mut columns = vec!["t".to_string()];
            columns.extend(series.names().map(str::to_string));
            columns.extend(shifted.iter().map(|(j, _)| format!("{}.abs", series.channels()[*j].0)));
            let mut t = ResultTable::new(columns);
            for (k, time) in series.time().iter().enumerate() {
                let mut row = vec![*time];
                row.extend(series.channels().iter().map(|(_, v)| v[k]));
                row.extend(shifted.iter().map(|(j, o)| series.channels()[*j].1[k] + o));
                t.push(row);
            }
            Ok(Report::Table(t))
        }
        Command::Poles => {
            let poles = model.poles();
            let mut t = ResultTable::new(cols(&["re", "im", "left_half_plane"]));
            for p in &poles {
                t.push(vec![p.re, p.im, if p.re < 0.0 { 1.0 } else { 0.0 }]);
            }
            t.stable = Some(model.is_stable());
            Ok(Report::Table(t))
        }
    }
}
