//! TOML scenario files. Every key is optional; omitted keys take the default
//! scenario values, and sweep axes default to the single scalar value.

use std::path::Path;

use modsim_core::demand::DemandConfig;
use modsim_core::engine::Scenario;
use modsim_core::geometry::GridWorld;
use modsim_core::metrics::{DEFAULT_SNAPSHOT, DEFAULT_TORTUOSITY_HORIZON};
use modsim_core::scheduling::KinematicsConfig;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepAxes {
    pub spacings: Option<Vec<f64>>,
    pub fleets: Option<Vec<u32>>,
    pub rates: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub area_width: f64,
    pub area_height: f64,
    pub ew_road_spacing: f64,
    pub ns_road_spacing: f64,
    pub walk_speed: f64,
    pub cruise_speed: f64,

    pub rate: f64,
    pub walk_threshold: f64,
    pub duration: f64,
    pub max_extra_time: f64,

    pub boarding_time: f64,
    pub alighting_time: f64,
    pub stop_loss: f64,
    pub capacity: u32,

    pub fleet_size: u32,
    pub stop_spacing: f64,
    pub drain_limit: f64,

    /// Seed of the first run in every cell; further runs use seed+1, seed+2, ...
    pub seed: u64,
    pub seeds_per_cell: u32,
    pub snapshot_s: f64,
    pub tortuosity_horizon: usize,

    pub sweep: SweepAxes,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let s = Scenario::default();
        Self {
            area_width: s.world.area_width,
            area_height: s.world.area_height,
            ew_road_spacing: s.world.ew_road_spacing,
            ns_road_spacing: s.world.ns_road_spacing,
            walk_speed: s.world.walk_speed,
            cruise_speed: s.world.cruise_speed,
            rate: s.demand.rate,
            walk_threshold: s.demand.walk_threshold,
            duration: s.demand.duration,
            max_extra_time: s.demand.max_extra_time,
            boarding_time: s.kinematics.boarding_time,
            alighting_time: s.kinematics.alighting_time,
            stop_loss: s.kinematics.stop_loss,
            capacity: s.kinematics.capacity,
            fleet_size: s.fleet_size,
            stop_spacing: s.stop_spacing,
            drain_limit: s.drain_limit,
            seed: s.demand.seed,
            seeds_per_cell: 5,
            snapshot_s: DEFAULT_SNAPSHOT,
            tortuosity_horizon: DEFAULT_TORTUOSITY_HORIZON,
            sweep: SweepAxes::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub spacing: f64,
    pub fleet: u32,
    pub rate: f64,
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_owned(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn spacings(&self) -> Vec<f64> {
        self.sweep.spacings.clone().unwrap_or(vec![self.stop_spacing])
    }

    pub fn fleets(&self) -> Vec<u32> {
        self.sweep.fleets.clone().unwrap_or(vec![self.fleet_size])
    }

    pub fn rates(&self) -> Vec<f64> {
        self.sweep.rates.clone().unwrap_or(vec![self.rate])
    }

    /// Same configuration with every sweep axis spelled out.
    pub fn resolved(&self) -> Self {
        let mut out = self.clone();
        out.sweep = SweepAxes {
            spacings: Some(self.spacings()),
            fleets: Some(self.fleets()),
            rates: Some(self.rates()),
        };
        out
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable")
    }

    pub fn cells(&self) -> Vec<Cell> {
        let mut cells = Vec::new();
        for &spacing in &self.spacings() {
            for &fleet in &self.fleets() {
                for &rate in &self.rates() {
                    cells.push(Cell {
                        spacing,
                        fleet,
                        rate,
                    });
                }
            }
        }
        cells
    }

    pub fn scenario(&self, cell: Cell, seed: u64) -> Scenario {
        Scenario {
            world: GridWorld {
                area_width: self.area_width,
                area_height: self.area_height,
                ew_road_spacing: self.ew_road_spacing,
                ns_road_spacing: self.ns_road_spacing,
                walk_speed: self.walk_speed,
                cruise_speed: self.cruise_speed,
            },
            demand: DemandConfig {
                rate: cell.rate,
                walk_threshold: self.walk_threshold,
                duration: self.duration,
                max_extra_time: self.max_extra_time,
                seed,
            },
            kinematics: KinematicsConfig {
                boarding_time: self.boarding_time,
                alighting_time: self.alighting_time,
                stop_loss: self.stop_loss,
                capacity: self.capacity,
            },
            fleet_size: cell.fleet,
            stop_spacing: cell.spacing,
            drain_limit: self.drain_limit,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("ew_road_spacing", self.ew_road_spacing),
            ("ns_road_spacing", self.ns_road_spacing),
            ("walk_speed", self.walk_speed),
            ("cruise_speed", self.cruise_speed),
            ("duration", self.duration),
            ("max_extra_time", self.max_extra_time),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("walk_threshold", self.walk_threshold),
            ("boarding_time", self.boarding_time),
            ("alighting_time", self.alighting_time),
            ("stop_loss", self.stop_loss),
            ("drain_limit", self.drain_limit),
            ("snapshot_s", self.snapshot_s),
        ];
        for (field, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(field, format!("must be non-negative, got {v}")));
            }
        }
        if self.capacity == 0 {
            return Err(invalid("capacity", "must be at least 1"));
        }
        if self.seeds_per_cell == 0 {
            return Err(invalid("seeds_per_cell", "must be at least 1"));
        }
        if self.tortuosity_horizon == 0 {
            return Err(invalid("tortuosity_horizon", "must be at least 1"));
        }
        let axis = |swept: bool, list: &'static str, scalar: &'static str| {
            if swept {
                list
            } else {
                scalar
            }
        };
        let field_s = axis(self.sweep.spacings.is_some(), "sweep.spacings", "stop_spacing");
        let field_f = axis(self.sweep.fleets.is_some(), "sweep.fleets", "fleet_size");
        let field_r = axis(self.sweep.rates.is_some(), "sweep.rates", "rate");
        let max_spacing = self.area_width.min(self.area_height);
        let spacings = self.spacings();
        if spacings.is_empty() {
            return Err(invalid(field_s, "must not be empty"));
        }
        for d in spacings {
            if !(d > 0.0 && d <= max_spacing) {
                return Err(invalid(
                    field_s,
                    format!("spacing {d} must be in (0, {max_spacing}]"),
                ));
            }
        }
        let fleets = self.fleets();
        if fleets.is_empty() || fleets.contains(&0) {
            return Err(invalid(field_f, "fleet sizes must be at least 1 and not empty"));
        }
        let rates = self.rates();
        if rates.is_empty() {
            return Err(invalid(field_r, "must not be empty"));
        }
        if let Some(r) = rates.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
            return Err(invalid(field_r, format!("rates must be positive, got {r}")));
        }
        Ok(())
    }
}
