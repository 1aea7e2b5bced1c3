//! Command-line front end: scenario configuration, runners and writers.

pub mod config;
pub mod error;
pub mod output;
pub mod scenario;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use squeezesim::invariants::quick_suite;
use squeezesim::model::{check_rwa_conditions, DEFAULT_RWA_MARGIN};

use config::{parse_overrides, ScenarioConfig, ScenarioId};
pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "squeezesim", version, about = "Mechanical squeezing in a two-cavity optomechanical system")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the scenario described by a configuration file.
    Run {
        config: PathBuf,
        /// `--dotted.key value` or `--dotted.key=value` settings applied
        /// after the file.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Regenerate the data behind one figure.
    Figure {
        id: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
    /// Report the RWA margins and run the fast invariant suite.
    Check { config: Option<PathBuf> },
    /// Sweep one parameter of the custom scenario.
    Sweep {
        #[arg(long)]
        param: String,
        /// Comma-separated values.
        #[arg(long)]
        values: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        overrides: Vec<String>,
    },
}

fn run_config(cfg: &ScenarioConfig) -> CliResult<()> {
    let pool = scenario::worker_pool()?;
    let manifest = scenario::run(cfg, &pool)?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn load(config: Option<&PathBuf>, overrides: Vec<(String, String)>, default: ScenarioId) -> CliResult<ScenarioConfig> {
    match config {
        Some(path) => ScenarioConfig::from_file(path, &overrides, Some(default)),
        None => ScenarioConfig::from_pairs(&overrides, Some(default)),
    }
}

fn check(config: Option<&PathBuf>) -> CliResult<()> {
    let cfg = load(config, Vec::new(), ScenarioId::Custom)?;
    let rwa = check_rwa_conditions(&cfg.params.system(), DEFAULT_RWA_MARGIN);
    for c in &rwa.margins {
        let mark = if c.ratio >= rwa.margin { "ok" } else { "low" };
        println!("rwa {mark:<4} {}: {:.6} / {:.6} = {:.3}", c.label, c.lhs, c.rhs, c.ratio);
    }
    println!("rwa margin {}: {}", rwa.margin, if rwa.passed { "satisfied" } else { "violated" });
    let report = quick_suite();
    for o in &report.outcomes {
        println!("check {:<4} {}: {}", if o.passed { "ok" } else { "FAIL" }, o.name, o.detail);
    }
    let failed = report.outcomes.iter().filter(|o| !o.passed).count();
    println!("suite: {} checks, {failed} failed, {:.1} s", report.outcomes.len(), report.seconds);
    if failed > 0 {
        let names: Vec<_> = report.outcomes.iter().filter(|o| !o.passed).map(|o| o.name).collect();
        return Err(CliError::CheckFailed(format!("failed checks: {}", names.join(", "))));
    }
    Ok(())
}

/// Executes a parsed command line.
pub fn execute(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Run { config, overrides } => {
            let cfg = ScenarioConfig::from_file(&config, &parse_overrides(&overrides)?, None)?;
            run_config(&cfg)
        }
        Command::Figure { id, out, overrides } => {
            let id: ScenarioId = id.parse()?;
            if id == ScenarioId::Custom {
                return Err(CliError::Usage("'custom' is not a figure; use 'run' with a configuration".into()));
            }
            let mut pairs = parse_overrides(&overrides)?;
            if let Some(out) = out {
                pairs.push(("output".into(), out.display().to_string()));
            }
            run_config(&ScenarioConfig::from_pairs(&pairs, Some(id))?)
        }
        Command::Check { config } => check(config.as_ref()),
        Command::Sweep { param, values, config, out, overrides } => {
            let mut pairs = parse_overrides(&overrides)?;
            pairs.push((format!("sweep.{param}"), values));
            if let Some(out) = out {
                pairs.push(("output".into(), out.display().to_string()));
            }
            let cfg = load(config.as_ref(), pairs, ScenarioId::Custom)?;
            if cfg.scenario != ScenarioId::Custom {
                return Err(CliError::Usage(format!(
                    "sweep needs scenario = custom, the config sets {}",
                    cfg.scenario
                )));
            }
            run_config(&cfg)
        }
    }
}

/// Parses `args` and runs them; returns the process exit code.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return 0;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let err = CliError::Usage(first.trim_start_matches("error: ").to_string());
            eprintln!("{}", err.line());
            return err.exit_code();
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.line());
            e.exit_code()
        }
    }
}
