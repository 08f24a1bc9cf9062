//! Deterministic discrete-event loop: requests surface at their ingress stop,
//! are dispatched immediately, and vehicles execute their schedules.
//!
//! A vehicle always drives its current leg along the L1 path, x first and
//! then y. When the dispatcher looks at a vehicle in the middle of a leg, the
//! vehicle's position on that path becomes its current location; once the
//! vehicle has reached the next stop (decelerating or serving it), that stop
//! is committed and the vehicle becomes available from the stop's completion
//! time.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::demand::{
    generate_demand, to_stop_points, Action, DemandConfig, DemandError, RequestId, StopPoint,
    TripRequest,
};
use crate::dispatch::{assign_request_with_costs, DispatchOutcome};
use crate::geometry::{
    build_stop_lattice, rect_distance, GeometryError, GridWorld, Point, StopLattice,
};
use crate::scheduling::{service_times, KinematicsConfig, Schedule, VehicleState};

#[derive(Debug, Error, PartialEq)]
pub enum SimulationError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Demand(#[from] DemandError),
    #[error("fleet_size must be at least 1")]
    EmptyFleet,
    #[error("{field} must be non-negative (got {value})")]
    Negative { field: &'static str, value: f64 },
    #[error("request {0} lies outside the simulated area")]
    OutsideArea(RequestId),
}

/// Everything one simulation run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub world: GridWorld,
    pub demand: DemandConfig,
    pub kinematics: KinematicsConfig,
    pub fleet_size: u32,
    /// Admitted-stop spacing D in meters.
    pub stop_spacing: f64,
    /// Seconds after the demand horizon during which schedules may still
    /// drain.
    pub drain_limit: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            world: GridWorld::default(),
            demand: DemandConfig::default(),
            kinematics: KinematicsConfig::default(),
            fleet_size: 1000,
            stop_spacing: 80.0,
            drain_limit: 2.0 * 3600.0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<StopLattice, SimulationError> {
        self.demand.validate()?;
        if self.fleet_size == 0 {
            return Err(SimulationError::EmptyFleet);
        }
        let k = &self.kinematics;
        for (field, value) in [
            ("boarding_time", k.boarding_time),
            ("alighting_time", k.alighting_time),
            ("stop_loss", k.stop_loss),
            ("drain_limit", self.drain_limit),
        ] {
            if !(value >= 0.0) {
                return Err(SimulationError::Negative { field, value });
            }
        }
        Ok(build_stop_lattice(&self.world, self.stop_spacing)?)
    }

    pub fn end_time(&self) -> f64 {
        self.demand.duration + self.drain_limit
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogKind {
    Request,
    Assign,
    Reject,
    Pickup,
    Dropoff,
}

impl LogKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LogKind::Request => "request",
            LogKind::Assign => "assign",
            LogKind::Reject => "reject",
            LogKind::Pickup => "pickup",
            LogKind::Dropoff => "dropoff",
        }
    }
}

/// One line of the event log. `stop` is the pick-up stop for request,
/// assign and reject entries.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEvent {
    pub time: f64,
    pub kind: LogKind,
    pub request_id: RequestId,
    pub vehicle_id: Option<u32>,
    pub stop: Point,
    pub occupancy_after: Option<u32>,
}

/// Life of one request through the system.
#[derive(Debug, Clone, PartialEq)]
pub struct RequestRecord {
    pub id: RequestId,
    pub appear_time: f64,
    /// t₁: arrival at the ingress stop, when the request is submitted.
    pub request_time: f64,
    /// t₂: preferred drop-off time.
    pub dropoff_preferred: f64,
    pub max_extra_time: f64,
    pub ingress_time: f64,
    pub egress_time: f64,
    pub vehicle: Option<u32>,
    pub pickup_time: Option<f64>,
    pub dropoff_time: Option<f64>,
}

impl RequestRecord {
    pub fn assigned(&self) -> bool {
        self.vehicle.is_some()
    }

    pub fn served(&self) -> bool {
        self.dropoff_time.is_some()
    }
}

/// A change of a vehicle's occupancy level at `time`; `-1` is idle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupancyChange {
    pub time: f64,
    pub level: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleTrace {
    pub vehicle_id: u32,
    /// Served stop locations in service order.
    pub trajectory: Vec<Point>,
    /// Every point where the vehicle changed course: start, diversions and
    /// served stops. Consecutive L1 distances sum to `distance`.
    pub path: Vec<Point>,
    pub distance: f64,
    pub occupancy: Vec<OccupancyChange>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutput {
    pub stop_spacing: f64,
    pub fleet_size: u32,
    pub rate: f64,
    pub capacity: u32,
    /// End of the demand horizon.
    pub horizon: f64,
    pub events: Vec<LogEvent>,
    pub vehicles: Vec<VehicleTrace>,
    pub requests: Vec<RequestRecord>,
    /// Stop points still scheduled when the run stopped.
    pub unfinished_stops: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    RequestArrival { request: usize },
    StopServed { vehicle: u32, version: u64 },
    End,
}

impl EventKind {
    fn rank(&self) -> (u8, u64) {
        match *self {
            EventKind::RequestArrival { request } => (0, request as u64),
            EventKind::StopServed { vehicle, .. } => (1, u64::from(vehicle)),
            EventKind::End => (2, 0),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then_with(|| self.kind.rank().cmp(&other.kind.rank()))
    }
}

/// Point at L1 path length `dist` from `from` towards `to`, x leg first.
fn along_leg(from: Point, to: Point, dist: f64) -> Point {
    let dx = to.x - from.x;
    if dist <= dx.abs() {
        return Point::new(from.x + dist.copysign(dx), from.y);
    }
    let dy = to.y - from.y;
    let rest = (dist - dx.abs()).min(dy.abs());
    Point::new(to.x, from.y + rest.copysign(dy))
}

struct Vehicle {
    /// Start of the leg being driven (or idle position).
    origin: Point,
    /// When that leg started.
    depart: f64,
    /// Passengers physically on board.
    onboard: u32,
    /// Head stop point already reached and being served, with its completion
    /// time. Not modifiable by the dispatcher.
    committed: Option<(StopPoint, f64)>,
    /// Completion times of `view.schedule`.
    planned: Vec<f64>,
    version: u64,
    trace: VehicleTrace,
}

impl Vehicle {
    fn level(&self, scheduled: bool) -> i32 {
        if !scheduled && self.onboard == 0 {
            -1
        } else {
            self.onboard as i32
        }
    }

    fn record_level(&mut self, time: f64, level: i32) {
        match self.trace.occupancy.last_mut() {
            Some(last) if last.level == level => {}
            Some(last) if last.time == time => last.level = level,
            _ => self.trace.occupancy.push(OccupancyChange { time, level }),
        }
    }
}

/// Brings a vehicle's dispatch view (location, clock, load, modifiable
/// schedule) up to `now`.
fn refresh(v: &mut Vehicle, view: &mut VehicleState, now: f64, world: &GridWorld) {
    if let Some((sp, done)) = v.committed {
        view.location = sp.location;
        view.clock = done;
        view.onboard = (v.onboard as i32 + sp.action.load_delta()) as u32;
        return;
    }
    let Some(head) = view.schedule.stops().first().copied() else {
        view.location = v.origin;
        view.clock = now.max(v.depart);
        view.onboard = v.onboard;
        return;
    };
    let arrive = v.depart + world.drive_time(v.origin, head.location);
    if v.origin == head.location || now >= arrive {
        let mut rest = std::mem::take(&mut view.schedule).into_inner();
        rest.remove(0);
        view.schedule = Schedule::new(rest);
        let done = v.planned.remove(0);
        v.committed = Some((head, done));
        view.location = head.location;
        view.clock = done;
        view.onboard = (v.onboard as i32 + head.action.load_delta()) as u32;
    } else {
        view.location = along_leg(v.origin, head.location, (now - v.depart) * world.cruise_speed);
        view.clock = now;
        view.onboard = v.onboard;
    }
}

/// Runs one scenario with demand generated from its own seed.
pub fn run_simulation(scenario: &Scenario) -> Result<SimulationOutput, SimulationError> {
    scenario.validate()?;
    let requests = generate_demand(&scenario.demand, &scenario.world)?;
    run_with_demand(scenario, &requests)
}

/// Runs one scenario against a given request sequence (e.g. replayed from a
/// file). The fleet is placed uniformly at random over the admitted stops
/// using the scenario seed.
pub fn run_with_demand(
    scenario: &Scenario,
    demand: &[TripRequest],
) -> Result<SimulationOutput, SimulationError> {
    let lattice = scenario.validate()?;
    let world = &scenario.world;
    let kin = &scenario.kinematics;
    if let Some(r) = demand
        .iter()
        .find(|r| !world.contains(r.origin) || !world.contains(r.destination))
    {
        return Err(SimulationError::OutsideArea(r.id));
    }

    let mut placement = ChaCha8Rng::seed_from_u64(scenario.demand.seed);
    placement.set_stream(1);
    let mut vehicles = Vec::with_capacity(scenario.fleet_size as usize);
    let mut views = Vec::with_capacity(scenario.fleet_size as usize);
    for id in 0..scenario.fleet_size {
        let start = lattice.stops()[placement.random_range(0..lattice.len())];
        vehicles.push(Vehicle {
            origin: start,
            depart: 0.0,
            onboard: 0,
            committed: None,
            planned: Vec::new(),
            version: 0,
            trace: VehicleTrace {
                vehicle_id: id,
                trajectory: Vec::new(),
                path: vec![start],
                distance: 0.0,
                occupancy: vec![OccupancyChange { time: 0.0, level: -1 }],
            },
        });
        views.push(VehicleState::idle(id, start, 0.0));
    }

    let trips: Vec<_> = demand
        .iter()
        .map(|r| to_stop_points(r, &lattice, world))
        .collect();
    let mut records: Vec<RequestRecord> = demand
        .iter()
        .zip(&trips)
        .map(|(r, t)| RequestRecord {
            id: r.id,
            appear_time: r.appear_time,
            request_time: t.pickup.preferred_time,
            dropoff_preferred: t.dropoff.preferred_time,
            max_extra_time: r.max_extra_time,
            ingress_time: t.ingress_time,
            egress_time: t.egress_time,
            vehicle: None,
            pickup_time: None,
            dropoff_time: None,
        })
        .collect();
    let index_of: std::collections::HashMap<RequestId, usize> =
        demand.iter().enumerate().map(|(k, r)| (r.id, k)).collect();

    let end = scenario.end_time();
    let mut queue: BinaryHeap<Reverse<Event>> = trips
        .iter()
        .enumerate()
        .map(|(k, t)| {
            Reverse(Event {
                time: t.pickup.preferred_time,
                kind: EventKind::RequestArrival { request: k },
            })
        })
        .collect();
    queue.push(Reverse(Event {
        time: end,
        kind: EventKind::End,
    }));

    let mut log = Vec::with_capacity(demand.len() * 4);
    let mut costs = vec![0.0; vehicles.len()];

    while let Some(Reverse(ev)) = queue.pop() {
        let now = ev.time;
        match ev.kind {
            EventKind::End => break,
            EventKind::RequestArrival { request } => {
                let trip = &trips[request];
                let rid = demand[request].id;
                log.push(LogEvent {
                    time: now,
                    kind: LogKind::Request,
                    request_id: rid,
                    vehicle_id: None,
                    stop: trip.pickup.location,
                    occupancy_after: None,
                });
                for ((v, view), cost) in vehicles.iter_mut().zip(views.iter_mut()).zip(&mut costs) {
                    refresh(v, view, now, world);
                    *cost = v.planned.last().map_or(0.0, |&t| t - view.clock);
                }
                let outcome =
                    assign_request_with_costs(&views, &costs, &trip.pickup, &trip.dropoff, kin, world)
                        .expect("trip stop points form a valid pair");
                match outcome {
                    DispatchOutcome::Rejected(_) => log.push(LogEvent {
                        time: now,
                        kind: LogKind::Reject,
                        request_id: rid,
                        vehicle_id: None,
                        stop: trip.pickup.location,
                        occupancy_after: None,
                    }),
                    DispatchOutcome::Assigned(asg) => {
                        let k = asg.vehicle_id as usize;
                        let (v, view) = (&mut vehicles[k], &mut views[k]);
                        let old_head = view.schedule.stops().first().copied();
                        let was_scheduled = v.committed.is_some() || old_head.is_some();
                        let times = service_times(view, asg.new_schedule.stops(), kin, world);
                        let new_head = asg.new_schedule.stops()[0];
                        if v.committed.is_none() && old_head != Some(new_head) {
                            // the vehicle turns towards a different stop from here
                            if view.location != v.origin {
                                v.trace.distance += rect_distance(v.origin, view.location);
                                v.trace.path.push(view.location);
                                v.origin = view.location;
                            }
                            v.depart = now;
                        }
                        view.schedule = asg.new_schedule;
                        v.planned = times;
                        v.version += 1;
                        if !was_scheduled {
                            let level = v.level(true);
                            v.record_level(now, level);
                        }
                        let next = v.committed.map(|c| c.1).unwrap_or(v.planned[0]);
                        queue.push(Reverse(Event {
                            time: next,
                            kind: EventKind::StopServed {
                                vehicle: asg.vehicle_id,
                                version: v.version,
                            },
                        }));
                        records[request].vehicle = Some(asg.vehicle_id);
                        log.push(LogEvent {
                            time: now,
                            kind: LogKind::Assign,
                            request_id: rid,
                            vehicle_id: Some(asg.vehicle_id),
                            stop: trip.pickup.location,
                            occupancy_after: None,
                        });
                    }
                }
            }
            EventKind::StopServed { vehicle, version } => {
                let k = vehicle as usize;
                let (v, view) = (&mut vehicles[k], &mut views[k]);
                if v.version != version {
                    continue;
                }
                let sp = match v.committed.take() {
                    Some((sp, _)) => sp,
                    None => {
                        let mut rest = std::mem::take(&mut view.schedule).into_inner();
                        let sp = rest.remove(0);
                        view.schedule = Schedule::new(rest);
                        v.planned.remove(0);
                        sp
                    }
                };
                v.onboard = (v.onboard as i32 + sp.action.load_delta()) as u32;
                v.trace.distance += rect_distance(v.origin, sp.location);
                if v.trace.path.last() != Some(&sp.location) {
                    v.trace.path.push(sp.location);
                }
                v.trace.trajectory.push(sp.location);
                v.origin = sp.location;
                v.depart = now;
                view.location = sp.location;
                view.clock = now;
                view.onboard = v.onboard;
                let scheduled = !view.schedule.is_empty();
                let level = v.level(scheduled);
                v.record_level(now, level);

                let rec = &mut records[index_of[&sp.request_id]];
                let kind = match sp.action {
                    Action::Pickup => {
                        rec.pickup_time = Some(now);
                        LogKind::Pickup
                    }
                    Action::Dropoff => {
                        rec.dropoff_time = Some(now);
                        LogKind::Dropoff
                    }
                };
                log.push(LogEvent {
                    time: now,
                    kind,
                    request_id: sp.request_id,
                    vehicle_id: Some(vehicle),
                    stop: sp.location,
                    occupancy_after: Some(v.onboard),
                });
                if scheduled {
                    v.version += 1;
                    queue.push(Reverse(Event {
                        time: v.planned[0],
                        kind: EventKind::StopServed {
                            vehicle,
                            version: v.version,
                        },
                    }));
                }
            }
        }
    }

    let unfinished_stops = vehicles
        .iter()
        .zip(&views)
        .map(|(v, view)| view.schedule.len() + usize::from(v.committed.is_some()))
        .sum();
    Ok(SimulationOutput {
        stop_spacing: scenario.stop_spacing,
        fleet_size: scenario.fleet_size,
        rate: scenario.demand.rate,
        capacity: kin.capacity,
        horizon: scenario.demand.duration,
        events: log,
        vehicles: vehicles.into_iter().map(|v| v.trace).collect(),
        requests: records,
        unfinished_stops,
    })
}

/// Cumulative event counts up to and including time `at`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub submitted: usize,
    pub assigned: usize,
    pub picked_up: usize,
    pub dropped_off: usize,
    pub rejected: usize,
}

pub fn snapshot_counts(output: &SimulationOutput, at: f64) -> Counts {
    let mut c = Counts::default();
    for e in output.events.iter().take_while(|e| e.time <= at) {
        match e.kind {
            LogKind::Request => c.submitted += 1,
            LogKind::Assign => c.assigned += 1,
            LogKind::Reject => c.rejected += 1,
            LogKind::Pickup => c.picked_up += 1,
            LogKind::Dropoff => c.dropped_off += 1,
        }
    }
    c
}
