//! Stochastic trip demand and its translation into pick-up/drop-off stop
//! points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{rect_distance, GridWorld, Point, StopId, StopLattice};

pub type RequestId = u64;

#[derive(Debug, Error, PartialEq)]
pub enum DemandError {
    #[error("{field} must be strictly positive and finite (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("walk_threshold must be non-negative (got {0})")]
    NegativeThreshold(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandConfig {
    /// Requests per hour per km², before the short-trip filter.
    pub rate: f64,
    /// Trips whose L1 origin-destination distance does not exceed this are
    /// walked and never reach the system.
    pub walk_threshold: f64,
    /// Demand horizon in seconds.
    pub duration: f64,
    /// Maximum extra time Δt granted to every stop point.
    pub max_extra_time: f64,
    pub seed: u64,
}

impl Default for DemandConfig {
    fn default() -> Self {
        Self {
            rate: 320.0,
            walk_threshold: 1600.0,
            duration: 4.0 * 3600.0,
            max_extra_time: 1200.0,
            seed: 1,
        }
    }
}

impl DemandConfig {
    pub fn validate(&self) -> Result<(), DemandError> {
        for (field, value) in [
            ("rate", self.rate),
            ("duration", self.duration),
            ("max_extra_time", self.max_extra_time),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DemandError::NonPositive { field, value });
            }
        }
        if !(self.walk_threshold >= 0.0) {
            return Err(DemandError::NegativeThreshold(self.walk_threshold));
        }
        Ok(())
    }

    /// Arrivals per second over the whole area.
    pub fn intensity(&self, world: &GridWorld) -> f64 {
        self.rate * world.area_km2() / 3600.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripRequest {
    pub id: RequestId,
    pub origin: Point,
    pub destination: Point,
    /// Time the user appears at the origin and starts walking.
    pub appear_time: f64,
    pub max_extra_time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    Pickup,
    Dropoff,
}

impl Action {
    /// Change in on-board passengers when the stop point is served.
    pub fn load_delta(self) -> i32 {
        match self {
            Action::Pickup => 1,
            Action::Dropoff => -1,
        }
    }
}

/// One pick-up or drop-off demand: serve at `stop` within
/// `[preferred_time, preferred_time + max_extra_time)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopPoint {
    pub stop: StopId,
    /// Coordinates of `stop`, cached so schedule arithmetic never needs the
    /// lattice.
    pub location: Point,
    pub preferred_time: f64,
    pub max_extra_time: f64,
    pub action: Action,
    pub request_id: RequestId,
}

impl StopPoint {
    pub fn deadline(&self) -> f64 {
        self.preferred_time + self.max_extra_time
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripStops {
    pub pickup: StopPoint,
    pub dropoff: StopPoint,
    pub ingress_time: f64,
    pub egress_time: f64,
}

/// Raw Poisson arrivals with their uniformly drawn origin and destination.
struct ArrivalStream<'a> {
    rng: ChaCha8Rng,
    gaps: Exp<f64>,
    world: &'a GridWorld,
    duration: f64,
    clock: f64,
}

impl<'a> ArrivalStream<'a> {
    fn new(config: &DemandConfig, world: &'a GridWorld) -> Result<Self, DemandError> {
        config.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            gaps: Exp::new(config.intensity(world)).expect("intensity is positive"),
            world,
            duration: config.duration,
            clock: 0.0,
        })
    }
}

impl Iterator for ArrivalStream<'_> {
    type Item = (f64, Point, Point);

    fn next(&mut self) -> Option<Self::Item> {
        self.clock += self.gaps.sample(&mut self.rng);
        if self.clock > self.duration {
            return None;
        }
        let (w, h) = (self.world.area_width, self.world.area_height);
        let origin = Point::new(self.rng.random::<f64>() * w, self.rng.random::<f64>() * h);
        let destination = Point::new(self.rng.random::<f64>() * w, self.rng.random::<f64>() * h);
        Some((self.clock, origin, destination))
    }
}

/// Draws the demand for one run: a homogeneous Poisson stream over the
/// rectangle, thinned by the walk threshold.
///
/// Discarded arrivals consume the same randomness as kept ones, so the output
/// is a deterministic thinning of one stream.
pub fn generate_demand(
    config: &DemandConfig,
    world: &GridWorld,
) -> Result<Vec<TripRequest>, DemandError> {
    let requests = ArrivalStream::new(config, world)?
        .filter(|(_, o, d)| rect_distance(*o, *d) > config.walk_threshold)
        .enumerate()
        .map(|(k, (t, origin, destination))| TripRequest {
            id: k as RequestId,
            origin,
            destination,
            appear_time: t,
            max_extra_time: config.max_extra_time,
        })
        .collect();
    Ok(requests)
}

/// Pre-filter arrival times of the same stream [`generate_demand`] thins.
pub fn arrival_times(config: &DemandConfig, world: &GridWorld) -> Result<Vec<f64>, DemandError> {
    Ok(ArrivalStream::new(config, world)?.map(|(t, _, _)| t).collect())
}

/// Converts a trip into its stop-point pair.
///
/// The pick-up becomes known at `t1 = t + τ_w(o, φ(o))`; the drop-off's
/// preferred time is the earliest possible car arrival
/// `t2 = t1 + τ_v(φ(o), φ(d))`.
pub fn to_stop_points(request: &TripRequest, lattice: &StopLattice, world: &GridWorld) -> TripStops {
    let pick = lattice.nearest_stop(request.origin);
    let drop = lattice.nearest_stop(request.destination);
    let pick_at = lattice.point(pick);
    let drop_at = lattice.point(drop);
    let ingress_time = world.walk_time(request.origin, pick_at);
    let egress_time = world.walk_time(drop_at, request.destination);
    let t1 = request.appear_time + ingress_time;
    let t2 = t1 + world.drive_time(pick_at, drop_at);
    TripStops {
        pickup: StopPoint {
            stop: pick,
            location: pick_at,
            preferred_time: t1,
            max_extra_time: request.max_extra_time,
            action: Action::Pickup,
            request_id: request.id,
        },
        dropoff: StopPoint {
            stop: drop,
            location: drop_at,
            preferred_time: t2,
            max_extra_time: request.max_extra_time,
            action: Action::Dropoff,
            request_id: request.id,
        },
        ingress_time,
        egress_time,
    }
}
