//! Browser bindings for a small interactive demo: lattice and walking
//! distances, a short simulation, and route tortuosity.
//!
//! Every export takes and returns JSON strings so the page needs no glue
//! beyond the generated module.

use modsim_core::demand::DemandConfig;
use modsim_core::engine::{run_simulation, Scenario};
use modsim_core::geometry::{build_stop_lattice, rect_distance, GridWorld, Point};
use modsim_core::metrics::{
    analytic_ingress, metrics_row, sharing_histogram, tortuosity_at, vehicle_tortuosity,
    MetricsRow,
};
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// Largest demand (expected arrivals) a browser call may simulate.
pub const MAX_ARRIVALS: f64 = 20_000.0;

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct LatticeQuery {
    pub width: f64,
    pub height: f64,
    pub spacing: f64,
    pub walk_speed: f64,
    /// Points whose nearest stop is reported.
    pub probes: Vec<Point>,
}

impl Default for LatticeQuery {
    fn default() -> Self {
        Self {
            width: 2000.0,
            height: 2000.0,
            spacing: 200.0,
            walk_speed: 1.0,
            probes: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Probe {
    pub point: Point,
    pub stop: Point,
    pub walk_m: f64,
    pub walk_s: f64,
}

#[derive(Debug, Serialize)]
pub struct LatticeReport {
    pub stops: Vec<Point>,
    pub mean_walk_m: f64,
    pub mean_walk_s: f64,
    pub max_walk_s: f64,
    pub probes: Vec<Probe>,
}

pub fn lattice_report(query: &str) -> Result<String, String> {
    let q: LatticeQuery = serde_json::from_str(query).map_err(|e| e.to_string())?;
    let world = GridWorld {
        area_width: q.width,
        area_height: q.height,
        walk_speed: q.walk_speed,
        ..GridWorld::default()
    };
    world.validate().map_err(|e| e.to_string())?;
    let lattice = build_stop_lattice(&world, q.spacing).map_err(|e| e.to_string())?;
    let (mean_walk_m, mean_walk_s, max_walk_s) = analytic_ingress(q.spacing, q.walk_speed);
    let probes = q
        .probes
        .iter()
        .filter(|p| world.contains(**p))
        .map(|&p| {
            let stop = lattice.point(lattice.nearest_stop(p));
            Probe {
                point: p,
                stop,
                walk_m: rect_distance(p, stop),
                walk_s: world.walk_time(p, stop),
            }
        })
        .collect();
    let report = LatticeReport {
        stops: lattice.stops().to_vec(),
        mean_walk_m,
        mean_walk_s,
        max_walk_s,
        probes,
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct SimulationQuery {
    pub width: f64,
    pub height: f64,
    pub spacing: f64,
    pub fleet: u32,
    /// Requests per hour per km².
    pub rate: f64,
    pub duration_s: f64,
    pub seed: u64,
    /// Vehicles whose stop sequence is returned for drawing.
    pub traces: usize,
}

impl Default for SimulationQuery {
    fn default() -> Self {
        Self {
            width: 3000.0,
            height: 6000.0,
            spacing: 200.0,
            fleet: 30,
            rate: 60.0,
            duration_s: 3600.0,
            seed: 1,
            traces: 5,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SimulationReport {
    pub metrics: MetricsRow,
    /// Time fractions for occupancy −1 (idle), 0, 1, ...
    pub sharing: Vec<f64>,
    pub traces: Vec<Vec<Point>>,
}

pub fn simulation_report(query: &str) -> Result<String, String> {
    let q: SimulationQuery = serde_json::from_str(query).map_err(|e| e.to_string())?;
    let world = GridWorld {
        area_width: q.width,
        area_height: q.height,
        ..GridWorld::default()
    };
    let scenario = Scenario {
        world,
        demand: DemandConfig {
            rate: q.rate,
            duration: q.duration_s,
            seed: q.seed,
            ..DemandConfig::default()
        },
        fleet_size: q.fleet,
        stop_spacing: q.spacing,
        ..Scenario::default()
    };
    scenario.validate().map_err(|e| e.to_string())?;
    let expected = scenario.demand.intensity(&scenario.world) * q.duration_s;
    if expected > MAX_ARRIVALS {
        return Err(format!(
            "about {expected:.0} arrivals requested; the demo allows {MAX_ARRIVALS:.0}"
        ));
    }
    let out = run_simulation(&scenario).map_err(|e| e.to_string())?;
    let snapshot = q.duration_s * 0.75;
    let report = SimulationReport {
        metrics: metrics_row(&out, snapshot, 4),
        sharing: sharing_histogram(&out.vehicles, out.horizon).fractions,
        traces: out
            .vehicles
            .iter()
            .take(q.traces)
            .map(|v| v.path.clone())
            .collect(),
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[derive(Debug, Deserialize)]
pub struct TortuosityQuery {
    pub points: Vec<Point>,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
}

fn default_horizon() -> usize {
    4
}

#[derive(Debug, Serialize)]
pub struct TortuosityReport {
    pub windows: Vec<f64>,
    pub mean: Option<f64>,
}

pub fn tortuosity_report(query: &str) -> Result<String, String> {
    let q: TortuosityQuery = serde_json::from_str(query).map_err(|e| e.to_string())?;
    if q.horizon == 0 || q.horizon > 8 {
        return Err("horizon must be between 1 and 8".into());
    }
    let n = q.points.len().saturating_sub(q.horizon);
    let windows = (0..n)
        .map(|i| tortuosity_at(&q.points, i, q.horizon).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    let report = TortuosityReport {
        windows,
        mean: vehicle_tortuosity(&q.points, q.horizon),
    };
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn lattice(query: &str) -> Result<String, JsError> {
    lattice_report(query).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn simulate(query: &str) -> Result<String, JsError> {
    simulation_report(query).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn tortuosity(query: &str) -> Result<String, JsError> {
    tortuosity_report(query).map_err(|e| JsError::new(&e))
}
