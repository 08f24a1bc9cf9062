//! Vehicle schedules and the arithmetic the dispatcher relies on: service
//! times, feasibility and cost.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{Action, StopPoint};
use crate::geometry::{GridWorld, Point};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error("insertion position {position} out of range 1..={max}")]
    PositionOutOfRange { position: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KinematicsConfig {
    /// Seconds to board one passenger at a pick-up.
    pub boarding_time: f64,
    /// Seconds to alight one passenger at a drop-off.
    pub alighting_time: f64,
    /// Seconds lost decelerating into and accelerating out of a stop, charged
    /// once per leg that actually moves the vehicle.
    pub stop_loss: f64,
    pub capacity: u32,
}

impl Default for KinematicsConfig {
    fn default() -> Self {
        Self {
            boarding_time: 5.0,
            alighting_time: 10.0,
            stop_loss: 11.5,
            capacity: 45,
        }
    }
}

impl KinematicsConfig {
    #[inline]
    pub fn service_time(&self, action: Action) -> f64 {
        match action {
            Action::Pickup => self.boarding_time,
            Action::Dropoff => self.alighting_time,
        }
    }

    /// Time on a leg from `from` to `to`: driving plus the stop loss, or
    /// nothing when the two stop points share a location.
    #[inline]
    pub fn leg_time(&self, world: &GridWorld, from: Point, to: Point) -> f64 {
        if from == to {
            0.0
        } else {
            world.drive_time(from, to) + self.stop_loss
        }
    }
}

/// Time lost braking to a halt and accelerating back to cruise speed under a
/// constant acceleration magnitude: `2·v/a`. At 35 km/h and 1.676 m/s² this
/// is about 11.6 s; the configured default uses the rounded 11.5 s.
pub fn stop_loss_from_acceleration(cruise_speed: f64, acceleration: f64) -> f64 {
    2.0 * cruise_speed / acceleration
}

/// Ordered stop points a vehicle plans to serve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule(Vec<StopPoint>);

impl Schedule {
    pub fn new(stops: Vec<StopPoint>) -> Self {
        Self(stops)
    }

    pub fn stops(&self) -> &[StopPoint] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<StopPoint> {
        self.0
    }

    /// Copy of the schedule with `sp` at 1-based `position` (`n + 1`
    /// appends).
    pub fn insert(&self, position: usize, sp: StopPoint) -> Result<Schedule, ScheduleError> {
        let max = self.0.len() + 1;
        if position == 0 || position > max {
            return Err(ScheduleError::PositionOutOfRange { position, max });
        }
        let mut stops = Vec::with_capacity(max);
        stops.extend_from_slice(&self.0[..position - 1]);
        stops.push(sp);
        stops.extend_from_slice(&self.0[position - 1..]);
        Ok(Schedule(stops))
    }

    /// True when no request has its pick-up after its drop-off.
    pub fn pickups_precede_dropoffs(&self) -> bool {
        let mut dropped = HashSet::new();
        self.0.iter().all(|sp| match sp.action {
            Action::Dropoff => {
                dropped.insert(sp.request_id);
                true
            }
            Action::Pickup => !dropped.contains(&sp.request_id),
        })
    }
}

impl From<Vec<StopPoint>> for Schedule {
    fn from(stops: Vec<StopPoint>) -> Self {
        Self(stops)
    }
}

/// Where and when a vehicle can start executing its schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    pub vehicle_id: u32,
    /// q₀: a stop location or a point along the current leg.
    pub location: Point,
    /// t₀
    pub clock: f64,
    /// n₀
    pub onboard: u32,
    pub schedule: Schedule,
}

/// Completion time of every stop point (boarding/alighting included) when the
/// vehicle executes `stops` starting from its location and clock.
pub fn service_times(
    state: &VehicleState,
    stops: &[StopPoint],
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> Vec<f64> {
    let mut t = state.clock;
    let mut at = state.location;
    stops
        .iter()
        .map(|sp| {
            t += kin.leg_time(world, at, sp.location) + kin.service_time(sp.action);
            at = sp.location;
            t
        })
        .collect()
}

/// Time windows `t ≤ t̂ < t + Δt` on every stop point and occupancy
/// `0 ≤ n < C` after every stop point.
pub fn is_feasible(
    state: &VehicleState,
    stops: &[StopPoint],
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> bool {
    let mut load = i64::from(state.onboard);
    let cap = i64::from(kin.capacity);
    service_times(state, stops, kin, world)
        .into_iter()
        .zip(stops)
        .all(|(served, sp)| {
            load += i64::from(sp.action.load_delta());
            sp.preferred_time <= served && served < sp.deadline() && (0..cap).contains(&load)
        })
}

/// Total time to execute `stops` from the vehicle's current location.
pub fn schedule_cost(
    state: &VehicleState,
    stops: &[StopPoint],
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> f64 {
    let mut at = state.location;
    let mut cost = 0.0;
    for sp in stops {
        cost += kin.leg_time(world, at, sp.location) + kin.service_time(sp.action);
        at = sp.location;
    }
    cost
}

impl VehicleState {
    pub fn idle(vehicle_id: u32, location: Point, clock: f64) -> Self {
        Self {
            vehicle_id,
            location,
            clock,
            onboard: 0,
            schedule: Schedule::default(),
        }
    }

    pub fn service_times(&self, kin: &KinematicsConfig, world: &GridWorld) -> Vec<f64> {
        service_times(self, self.schedule.stops(), kin, world)
    }

    pub fn is_feasible(&self, kin: &KinematicsConfig, world: &GridWorld) -> bool {
        is_feasible(self, self.schedule.stops(), kin, world)
    }

    pub fn cost(&self, kin: &KinematicsConfig, world: &GridWorld) -> f64 {
        schedule_cost(self, self.schedule.stops(), kin, world)
    }
}
