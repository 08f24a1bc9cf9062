use std::fs::File;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use modsim_cli::{emit_outputs, run_sweep, RunOptions, ScenarioConfig, JOBS_ENV};
use modsim_core::demand::generate_demand;
use modsim_core::io::{read_demand, write_demand};

#[derive(Parser)]
#[command(name = "modsim", version, about = "Mobility-on-Demand simulator with consolidated stops")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every cell of a configuration and write metrics.csv into OUT.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Seeds per cell (overrides `seeds_per_cell`).
        #[arg(long)]
        seeds: Option<u32>,
        /// Also write one event log per run into OUT/events.
        #[arg(long)]
        emit_events: bool,
        /// Worker threads; 0 uses all cores.
        #[arg(long, env = JOBS_ENV, default_value_t = 0)]
        jobs: usize,
        /// Replay demand from a CSV file instead of generating it.
        #[arg(long)]
        demand: Option<PathBuf>,
        #[arg(long)]
        quiet: bool,
    },
    /// Check a configuration and print it with all defaults filled in.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Generate the demand of one seed and write it as CSV.
    Demand {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Defaults to the configuration seed.
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Validate { config } => {
            let cfg = ScenarioConfig::load(&config)?;
            print!("{}", cfg.resolved().to_toml());
            Ok(ExitCode::SUCCESS)
        }
        Command::Demand { config, out, seed } => {
            let cfg = ScenarioConfig::load(&config)?;
            let cell = cfg.cells()[0];
            let scenario = cfg.scenario(cell, seed.unwrap_or(cfg.seed));
            let requests = generate_demand(&scenario.demand, &scenario.world)?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            write_demand(file, &requests).with_context(|| format!("writing {}", out.display()))?;
            eprintln!("{} requests written to {}", requests.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            config,
            out,
            seeds,
            emit_events,
            jobs,
            demand,
            quiet,
        } => {
            let mut cfg = ScenarioConfig::load(&config)?;
            if let Some(n) = seeds {
                cfg.seeds_per_cell = n;
                cfg.validate()?;
            }
            let demand = match demand {
                Some(path) => {
                    let file =
                        File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    Some(read_demand(file).with_context(|| format!("reading {}", path.display()))?)
                }
                None => None,
            };
            std::fs::create_dir_all(&out)
                .with_context(|| format!("creating {}", out.display()))?;
            let events_dir = if emit_events {
                let dir = out.join("events");
                std::fs::create_dir_all(&dir)
                    .with_context(|| format!("creating {}", dir.display()))?;
                Some(dir)
            } else {
                None
            };
            let opts = RunOptions {
                jobs,
                events_dir,
                demand,
                quiet,
            };
            let (results, failures) = run_sweep(&cfg, &opts)?;
            emit_outputs(&cfg, &results, &out)
                .with_context(|| format!("writing results into {}", out.display()))?;
            for f in &failures {
                eprintln!("error: {f}");
            }
            if failures.is_empty() {
                Ok(ExitCode::SUCCESS)
            } else {
                eprintln!("{} of {} runs failed", failures.len(), failures.len() + results.len());
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
