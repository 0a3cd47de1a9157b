//! chronoframe: verify multi-clock scenarios, extract process matrices, and
//! render clock-staggering schedules from structured configs.
//!
//! Exit codes: 0 all checks pass, 1 verification failure, 2 usage or parse
//! error.

mod config;
mod dump;
mod report;
mod schedule;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use chronoframe_core::process::{extract_process, unitary_channel_choi};

use crate::config::{LoadedScenario, Overrides};
use crate::dump::DumpMeta;

#[derive(Parser)]
#[command(name = "chronoframe", version, about = "Multi-clock history-state verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Tolerance override for residual verdicts.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Seed override for sampled checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Sample-count override for sampled checks.
    #[arg(long, global = true)]
    samples: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the verification suite for a scenario config.
    Verify {
        /// Scenario config file.
        config: PathBuf,
        /// Also write the report to this path.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Dump the constructed history state to this path.
        #[arg(long)]
        dump_history: Option<PathBuf>,
    },
    /// Extract the process matrix and its Choi matrix from a scenario config.
    Extract {
        /// Scenario config file.
        config: PathBuf,
        /// Output path for the process dump.
        #[arg(long)]
        out: PathBuf,
        /// Also dump the constructed history state to this path.
        #[arg(long)]
        history: Option<PathBuf>,
    },
    /// Render the clock-staggering schedule as a text tick diagram.
    Schedule {
        /// Number of agents.
        #[arg(long)]
        agents: usize,
        /// Comma-separated agent ordering, e.g. 2,0,1 (default: identity).
        #[arg(long)]
        perm: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let overrides = Overrides { seed: cli.seed, samples: cli.samples, tol: cli.tol };
    match cli.command {
        Command::Verify { config, report, dump_history } => {
            let loaded = config::load_config(&config, &overrides)?;
            let meta = DumpMeta {
                config_sha256: loaded.config_sha256.clone(),
                seed: loaded.seed,
                scenario: loaded.kind.clone(),
            };
            let result = report::verify(&loaded)?;
            let text = result.render(&meta);
            print!("{text}");
            if let Some(path) = report {
                dump::write_atomic(&path, &text)?;
            }
            if let Some(path) = dump_history {
                let hs = report::build_history(&loaded)?;
                dump::write_atomic(&path, &dump::render_history(&hs, &meta))?;
            }
            Ok(result.all_passed())
        }
        Command::Extract { config, out, history } => {
            let loaded = config::load_config(&config, &overrides)?;
            let LoadedScenario::Builder(builder) = &loaded.scenario else {
                bail!("extract needs a builder scenario (twin, switch, combs, lugano)");
            };
            let meta = DumpMeta {
                config_sha256: loaded.config_sha256.clone(),
                seed: loaded.seed,
                scenario: loaded.kind.clone(),
            };
            let process = extract_process(builder.as_ref());
            let g = process.eval(&loaded.ops).context("evaluating the process")?;
            let choi = unitary_channel_choi(&g).context("building the Choi matrix")?;
            dump::write_atomic(&out, &dump::render_process(&g, &choi, process.slot_dims(), &meta))?;
            println!("wrote {}", out.display());
            if let Some(path) = history {
                let hs = report::build_history(&loaded)?;
                dump::write_atomic(&path, &dump::render_history(&hs, &meta))?;
                println!("wrote {}", path.display());
            }
            Ok(true)
        }
        Command::Schedule { agents, perm } => {
            let order: Vec<usize> = match perm {
                Some(text) => text
                    .split(',')
                    .map(|t| t.trim().parse().with_context(|| format!("ordering entry {t:?}")))
                    .collect::<Result<_>>()?,
                None => (0..agents).collect(),
            };
            let text = schedule::render_schedule(agents, &order)
                .context("building the schedule")?;
            print!("{text}");
            Ok(true)
        }
    }
}
