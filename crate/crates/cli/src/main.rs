use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use twoport_cli::{parse_netlist, run_command, CliError, Command, Format, QueryName, QuerySpec};

/// Build and analyse two-port converter models described by a JSON netlist.
///
/// Exit status: 0 success, 1 document or usage error, 2 model construction
/// error, 3 analysis error.
#[derive(Parser, Debug)]
#[command(name = "twoport", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Netlist document (JSON).
    doc: PathBuf,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct Query {
    #[arg(long, value_enum)]
    query: QueryName,
    /// Control input index for control-to-output and ref-to-state.
    #[arg(long)]
    k: Option<usize>,
    /// State label for ref-to-state.
    #[arg(long)]
    state: Option<String>,
}

impl Query {
    fn spec(self) -> QuerySpec {
        QuerySpec { name: self.query, k: self.k, state: self.state }
    }
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Dimensions, labels and matrices of the composed model.
    Build {
        #[command(flatten)]
        common: Common,
    },
    /// Transfer function at the listed frequencies.
    Tf {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        query: Query,
        /// Comma-separated frequencies in Hz.
        #[arg(long, value_delimiter = ',', required = true)]
        freq: Vec<f64>,
    },
    /// Magnitude and phase over a log-spaced grid.
    Bode {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        query: Query,
        #[arg(long)]
        fstart: f64,
        #[arg(long)]
        fstop: f64,
        /// Points per decade.
        #[arg(long)]
        ppd: usize,
    },
    /// Step response from zero initial state, as deviations; `.abs` columns add the operating point.
    #[command(allow_negative_numbers = true)]
    Step {
        #[command(flatten)]
        common: Common,
        /// Input label as reported by `build`.
        #[arg(long)]
        input: String,
        #[arg(long)]
        amp: f64,
        #[arg(long)]
        dur: f64,
        #[arg(long)]
        dt: f64,
    },
    /// Eigenvalues and stability verdict.
    Poles {
        #[command(flatten)]
        common: Common,
    },
}

fn split(cmd: Cmd) -> (Common, Command) {
    match cmd {
        Cmd::Build { common } => (common, Command::Build),
        Cmd::Tf { common, query, freq } => (common, Command::Tf { query: query.spec(), freqs: freq }),
        Cmd::Bode { common, query, fstart, fstop, ppd } => {
            (common, Command::Bode { query: query.spec(), f_start: fstart, f_stop: fstop, ppd })
        }
        Cmd::Step { common, input, amp, dur, dt } => {
            (common, Command::Step { input, amplitude: amp, duration: dur, dt })
        }
        Cmd::Poles { common } => (common, Command::Poles),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, command) = split(cli.command);
    let text = fs::read_to_string(&common.doc)
        .map_err(|source| CliError::Read { path: common.doc.display().to_string(), source })?;
    let doc = parse_netlist(&text)?;
    let report = run_command(&doc, &command)?;
    let mut buf = Vec::new();
    report.write(common.format, &mut buf)?;
    match &common.out {
        Some(path) => fs::write(path, &buf)?,
        None => io::stdout().lock().write_all(&buf)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
