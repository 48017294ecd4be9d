//! Thin command-line front end: parse arguments, load the TOML config,
//! dispatch to the library's command layer, and map errors onto the
//! documented exit codes.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use conewave::experiment::commands::{
    cmd_analyze, cmd_check_metric, cmd_run_planar, cmd_run_radial, cmd_sweep,
};
use conewave::experiment::config::ExperimentConfig;
use conewave::experiment::{CmdError, CommandOutput};

#[derive(Parser)]
#[command(
    name = "conewave",
    version,
    about = "Wave propagation outside an obstacle: structural checks on the \
             coefficient field, radial and planar solvers, and local-energy \
             decay classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Directory for artifacts (traces, plots, records, snapshots).
    #[arg(long, value_name = "DIR", default_value = "runs")]
    out: PathBuf,
    /// Worker threads for parallel sections; default is every core.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Seed for randomized sampling (the curvature-identity check).
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural assumptions of the configured coefficient field.
    CheckMetric(CommonArgs),
    /// Solve the spherically symmetric reduction and classify local decay.
    RunRadial(CommonArgs),
    /// Solve the planar annulus problem and classify local decay.
    RunPlanar(CommonArgs),
    /// Refit decay laws from a saved trace.
    Analyze {
        /// A trace CSV produced by run-radial or run-planar.
        trace: PathBuf,
        /// Optional config supplying the classification policy and window.
        #[arg(long, value_name = "PATH")]
        config: Option<PathBuf>,
        /// Directory for artifacts.
        #[arg(long, value_name = "DIR", default_value = "runs")]
        out: PathBuf,
        /// Worker threads for parallel sections; default is every core.
        #[arg(long, value_name = "N")]
        workers: Option<usize>,
        /// Accepted for uniformity; analysis is deterministic.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// One run per configured cone power, aggregated into one table.
    Sweep(CommonArgs),
}

fn load_config(path: &Path) -> Result<ExperimentConfig, CmdError> {
    let text = fs::read_to_string(path)?;
    Ok(ExperimentConfig::from_toml(&text)?)
}

fn init_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        // A second initialization in the same process is harmless; the
        // first pool wins.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn dispatch(cli: Cli) -> Result<CommandOutput, CmdError> {
    match cli.command {
        Command::CheckMetric(a) => {
            init_workers(a.workers);
            let cfg = load_config(&a.config)?;
            cmd_check_metric(&cfg, &a.out, a.seed)
        }
        Command::RunRadial(a) => {
            init_workers(a.workers);
            let cfg = load_config(&a.config)?;
            cmd_run_radial(&cfg, &a.out, a.seed)
        }
        Command::RunPlanar(a) => {
            init_workers(a.workers);
            let cfg = load_config(&a.config)?;
            cmd_run_planar(&cfg, &a.out, a.seed)
        }
        Command::Analyze {
            trace,
            config,
            out,
            workers,
            seed: _,
        } => {
            init_workers(workers);
            let cfg = match &config {
                Some(path) => Some(load_config(path)?),
                None => None,
            };
            cmd_analyze(&trace, cfg.as_ref(), &out)
        }
        Command::Sweep(a) => {
            init_workers(a.workers);
            let cfg = load_config(&a.config)?;
            cmd_sweep(&cfg, &a.out, a.seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(output) => {
            print!("{}", output.text);
            ExitCode::from(output.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
