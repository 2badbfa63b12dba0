//! `gpme`: run, refine and validate porous-medium simulations.

mod config;
mod output;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gpme_core::convergence::refinement_series;
use gpme_core::validation::run_all;
use gpme_core::{run, CflMode, Error, Stepper};

use crate::config::{ProblemKind, RunConfig, Validated};

#[derive(Parser)]
#[command(
    name = "gpme",
    version,
    about = "Front-tracking solver for 1-D porous medium equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CFL mode: strict or relaxed.
    #[arg(long)]
    cfl: Option<CflMode>,
    /// Time stepper: explicit or implicit.
    #[arg(long)]
    stepper: Option<Stepper>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write interfaces, snapshots and run.json.
    Run(Common),
    /// Run a refinement series and write errors.csv and rates.json.
    Convergence {
        #[command(flatten)]
        common: Common,
        /// Comma-separated, strictly decreasing mesh widths.
        #[arg(long)]
        dx_list: Option<String>,
    },
    /// Run the acceptance checks.
    Validate,
}

enum CliError {
    Usage(String),
    Failure(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Failure(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failure(m) => write!(f, "run failed: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let root = match &e {
            Error::SeriesRun { source, .. } => source.as_ref(),
            other => other,
        };
        match root {
            Error::InvalidParameter(_)
            | Error::SupportTooNarrow { .. }
            | Error::EmptySupport { .. }
            | Error::OverlappingSupports { .. }
            | Error::MissingOracle => CliError::Usage(e.to_string()),
            _ => CliError::Failure(e.to_string()),
        }
    }
}

fn load(common: &Common) -> Result<(Validated, PathBuf), CliError> {
    let text = fs::read_to_string(&common.config)
        .map_err(|e| CliError::Io(format!("{}: {e}", common.config.display())))?;
    let mut validated = RunConfig::parse(&text)
        .and_then(|c| c.validate())
        .map_err(CliError::Usage)?;
    if let Some(mode) = common.cfl {
        validated.settings.cfl_mode = mode;
    }
    if let Some(stepper) = common.stepper {
        validated.settings.stepper = stepper;
    }
    let out = common
        .out
        .clone()
        .or_else(|| validated.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("gpme-out"));
    Ok((validated, out))
}

fn io_error(dir: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io(format!("{}: {e}", dir.display()))
}

fn cmd_run(common: &Common) -> Result<(), CliError> {
    let (cfg, dir) = load(common)?;
    let out = run(&cfg.problem, &cfg.settings)?;
    output::write_run(&dir, &out, cfg.kind == ProblemKind::TwoPatch).map_err(io_error(&dir))?;
    match (out.t_star_h(), out.x_star_h()) {
        (Some(t), Some(x)) => println!("filling at t = {t}, x = {x}"),
        _ => println!("no filling before t = {}", cfg.settings.horizon),
    }
    if !out.diagnostics.all_passed() {
        println!("non-fatal diagnostic failures recorded in run.json");
    }
    println!("{} steps written to {}", out.steps, dir.display());
    Ok(())
}

fn parse_dx_list(text: &str) -> Result<Vec<f64>, CliError> {
    let list = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad dx value {s:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if list.is_empty() {
        return Err(CliError::Usage("--dx-list is empty".into()));
    }
    Ok(list)
}

fn cmd_convergence(common: &Common, dx_list: Option<&str>) -> Result<(), CliError> {
    let (cfg, dir) = load(common)?;
    let dx = cfg.settings.dx;
    let list = match dx_list {
        Some(text) => parse_dx_list(text)?,
        None => vec![dx, dx / 2.0, dx / 4.0],
    };
    let series = refinement_series(&cfg.problem, &cfg.settings, &list)?;
    output::write_series(&dir, &series).map_err(io_error(&dir))?;
    for fit in &series.fits {
        println!("{}: alpha = {:.4}", fit.metric.name(), fit.alpha);
    }
    Ok(())
}

fn cmd_validate() -> Result<(), CliError> {
    let outcomes = run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::Failure(format!(
            "{failed} of {} checks failed",
            outcomes.len()
        )))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Run(common) => cmd_run(common),
        Command::Convergence { common, dx_list } => cmd_convergence(common, dx_list.as_deref()),
        Command::Validate => cmd_validate(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gpme: {e}");
            ExitCode::from(e.code())
        }
    }
}
