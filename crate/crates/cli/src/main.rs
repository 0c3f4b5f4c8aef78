//! `bcd`: run experiment plans, evaluate bounds and run the verification suites.

mod commands;
mod plan;

use anyhow::{bail, Context, Result};
use bcd_core::problems::load_problem_spec;
use bcd_core::suite::SuiteName;
use clap::{Parser, Subcommand};
use plan::{ExperimentPlan, DEFAULT_SEED};
use std::path::PathBuf;
use std::process::ExitCode;

const DEFAULT_OUT: &str = "bcd-out";
const DEFAULT_RMAX: usize = 100;

#[derive(Parser)]
#[command(name = "bcd", version, about = "Block coordinate descent experiments and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every solver configuration in a plan and write trajectories, bounds and a summary.
    Run {
        #[arg(long)]
        plan: PathBuf,
        /// Overrides the plan seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the plan output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a verification suite over the built-in instances.
    Verify {
        #[arg(long, default_value = "all")]
        suite: SuiteName,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compute problem constants and every bound curve for a plan's problem or a problem file.
    Bounds {
        #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
        plan: Option<PathBuf>,
        #[arg(long)]
        problem: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_RMAX)]
        rmax: usize,
        #[arg(long, default_value = DEFAULT_OUT)]
        out: PathBuf,
    },
    /// Same as `verify --suite tightness`.
    Tightness {
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    Ok(match cli.command {
        Command::Run { plan, seed, out } => {
            let p = ExperimentPlan::load(&plan, seed)?;
            let out = out.or_else(|| p.out.clone()).unwrap_or_else(|| DEFAULT_OUT.into());
            status(commands::cmd_run(&p, &out)?)
        }
        Command::Verify { suite, seed, out } => status(commands::cmd_verify(suite, seed, out.as_ref())?),
        Command::Tightness { seed, out } => status(commands::cmd_verify(SuiteName::Tightness, seed, out.as_ref())?),
        Command::Bounds { plan, problem, rmax, out } => {
            if rmax == 0 {
                bail!("--rmax must be at least 1");
            }
            let spec = match (plan, problem) {
                (Some(path), _) => ExperimentPlan::load(&path, None)?.problem,
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(&path).with_context(|| format!("cannot read {}", path.display()))?;
                    load_problem_spec(&text).with_context(|| format!("invalid problem {}", path.display()))?
                }
                (None, None) => unreachable!("clap requires one of --plan and --problem"),
            };
            commands::cmd_bounds(&spec, rmax, &out)?;
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
