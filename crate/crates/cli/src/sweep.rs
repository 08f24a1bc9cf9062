//! Runs every (cell, seed) of a configuration on a worker pool and writes the
//! result files.

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use modsim_core::demand::TripRequest;
use modsim_core::engine::{run_simulation, run_with_demand, SimulationOutput};
use modsim_core::io::{write_events, write_metrics};
use modsim_core::metrics::{metrics_row, MetricsRow};
use rayon::prelude::*;

use crate::config::{Cell, ScenarioConfig};

pub const JOBS_ENV: &str = "MODSIM_JOBS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 picks the number of available cores.
    pub jobs: usize,
    /// Write one event log per run into this directory.
    pub events_dir: Option<PathBuf>,
    /// Replay this demand in every run instead of generating it.
    pub demand: Option<Vec<TripRequest>>,
    pub quiet: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub cell: Cell,
    pub seed: u64,
    pub row: MetricsRow,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunFailure {
    pub cell: Cell,
    pub seed: u64,
    pub message: String,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "cell spacing={} fleet={} rate={} seed={}: {}",
            self.cell.spacing, self.cell.fleet, self.cell.rate, self.seed, self.message
        )
    }
}

fn run_key(cell: &Cell, seed: u64) -> (f64, u32, f64, u64) {
    (cell.spacing, cell.fleet, cell.rate, seed)
}

fn key_order(a: (f64, u32, f64, u64), b: (f64, u32, f64, u64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0)
        .then(a.1.cmp(&b.1))
        .then(a.2.total_cmp(&b.2))
        .then(a.3.cmp(&b.3))
}

pub fn events_file_name(cell: &Cell, seed: u64) -> String {
    format!(
        "events_D{}_F{}_r{}_s{}.csv",
        cell.spacing, cell.fleet, cell.rate, seed
    )
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn run_one(
    cfg: &ScenarioConfig,
    cell: Cell,
    seed: u64,
    opts: &RunOptions,
) -> Result<MetricsRow, String> {
    let scenario = cfg.scenario(cell, seed);
    let output: SimulationOutput = match &opts.demand {
        Some(d) => run_with_demand(&scenario, d),
        None => run_simulation(&scenario),
    }
    .map_err(|e| e.to_string())?;
    if let Some(dir) = &opts.events_dir {
        let path = dir.join(events_file_name(&cell, seed));
        write_atomic(&path, |w| {
            write_events(w, &output.events).map_err(std::io::Error::other)
        })
        .map_err(|e| format!("writing {}: {e}", path.display()))?;
    }
    Ok(metrics_row(&output, cfg.snapshot_s, cfg.tortuosity_horizon))
}

/// Runs every cell of `cfg` with `seeds_per_cell` consecutive seeds. Results
/// and failures come back sorted by (spacing, fleet, rate, seed) whatever the
/// execution order.
pub fn run_sweep(
    cfg: &ScenarioConfig,
    opts: &RunOptions,
) -> Result<(Vec<RunResult>, Vec<RunFailure>), rayon::ThreadPoolBuildError> {
    let mut tasks: Vec<(Cell, u64)> = Vec::new();
    for cell in cfg.cells() {
        for k in 0..u64::from(cfg.seeds_per_cell) {
            tasks.push((cell, cfg.seed + k));
        }
    }
    tasks.sort_by(|a, b| key_order(run_key(&a.0, a.1), run_key(&b.0, b.1)));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()?;
    let outcomes: Vec<_> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(cell, seed)| {
                let started = Instant::now();
                let res = run_one(cfg, cell, seed, opts);
                if !opts.quiet {
                    eprintln!(
                        "spacing={} fleet={} rate={} seed={} {} in {:.1}s",
                        cell.spacing,
                        cell.fleet,
                        cell.rate,
                        seed,
                        if res.is_ok() { "done" } else { "FAILED" },
                        started.elapsed().as_secs_f64()
                    );
                }
                (cell, seed, res)
            })
            .collect()
    });
    let mut results = Vec::new();
    let mut failures = Vec::new();
    for (cell, seed, res) in outcomes {
        match res {
            Ok(row) => results.push(RunResult { cell, seed, row }),
            Err(message) => failures.push(RunFailure {
                cell,
                seed,
                message,
            }),
        }
    }
    Ok((results, failures))
}

/// Writes `metrics.csv` and `resolved_config.toml` into `out`.
pub fn emit_outputs(
    cfg: &ScenarioConfig,
    results: &[RunResult],
    out: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let rows: Vec<_> = results.iter().map(|r| r.row.clone()).collect();
    write_atomic(&out.join("metrics.csv"), |w| {
        write_metrics(w, &rows).map_err(std::io::Error::other)
    })?;
    let echo = cfg.resolved().to_toml();
    write_atomic(&out.join("resolved_config.toml"), |w| w.write_all(echo.as_bytes()))
}
