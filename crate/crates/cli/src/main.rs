//! `eup`: runs EUP scenarios and writes CSV or JSON tables.
//!
//! Exit codes: 0 when every contract check passed, 1 on usage or validation errors,
//! 2 when the output contains a failed contract check.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use eup_core::experiments::{run_scenario, Scenario, ScenarioKind};

#[derive(Parser, Debug)]
#[command(
    name = "eup",
    version,
    about = "EUP-deformed quantum mechanics and CHSH experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact symbolic check of the deformed position/momentum algebra.
    VerifyAlgebra(CommonArgs),
    /// Deformed uncertainty relation over a family of Gaussian packets.
    UncertaintySweep(CommonArgs),
    /// CHSH values with positional factors, optionally swept over separation.
    Chsh(CommonArgs),
    /// Separation at which the deformed Tsirelson bound drops to 2.
    Threshold(CommonArgs),
    /// Optimal measurement settings against the Horodecki value.
    Optimize(CommonArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct CommonArgs {
    /// JSON scenario file; built-in defaults are used when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; defaults to the scenario's output path, then stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Overrides the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Suppress the summary on stderr.
    #[arg(long)]
    quiet: bool,
}

impl Command {
    fn split(&self) -> (ScenarioKind, &CommonArgs) {
        match self {
            Command::VerifyAlgebra(a) => (ScenarioKind::VerifyAlgebra, a),
            Command::UncertaintySweep(a) => (ScenarioKind::UncertaintySweep, a),
            Command::Chsh(a) => (ScenarioKind::Chsh, a),
            Command::Threshold(a) => (ScenarioKind::Threshold, a),
            Command::Optimize(a) => (ScenarioKind::Optimize, a),
        }
    }
}

fn load_scenario(kind: ScenarioKind, args: &CommonArgs) -> Result<Scenario> {
    let mut scenario = match &args.config {
        Some(path) => Scenario::load(path)?,
        None => Scenario::default_for(kind),
    };
    match scenario.kind {
        Some(k) if k != kind => bail!("scenario kind {k} does not match subcommand {kind}"),
        _ => scenario.kind = Some(kind),
    }
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }
    Ok(scenario)
}

/// Returns the number of failed contract checks.
fn run(kind: ScenarioKind, args: &CommonArgs) -> Result<usize> {
    let scenario = load_scenario(kind, args)?;
    let table = run_scenario(&scenario)?;
    let text = match args.format {
        Format::Csv => table.to_csv()?,
        Format::Json => table.to_json()?,
    };
    match args.out.as_ref().or(scenario.output.as_ref()) {
        Some(path) => {
            fs::write(path, &text).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("cannot write to stdout")?,
    }
    let failures = table.contract_failures();
    if !args.quiet {
        eprintln!(
            "[{kind}] seed {}: {} rows, {} failed contract checks",
            table.seed,
            table.rows.len(),
            failures
        );
        if let Some(report) = &table.algebra_report {
            eprint!("{report}");
        }
    }
    Ok(failures)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let (kind, args) = cli.command.split();
    match run(kind, args) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
