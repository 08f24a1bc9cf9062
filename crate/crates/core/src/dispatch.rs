//! Online dispatch: greedy two-phase best insertion of a request's pick-up and
//! drop-off into every vehicle's schedule, then the cheapest vehicle wins.
//!
//! For one vehicle, the pick-up is first placed at the position giving the
//! cheapest feasible tentative schedule; with that position fixed, the
//! drop-off is placed at the cheapest feasible later position. The vehicle's
//! cost is the full cost of the resulting schedule, and the request goes to
//! the vehicle with the lowest cost. Costs within [`COST_TIE_EPS`] of each
//! other are ties, resolved by the smallest position and then the smallest
//! vehicle id.

use std::cmp::Ordering;

use thiserror::Error;

use crate::demand::{Action, RequestId, StopPoint};
use crate::geometry::{GridWorld, Point};
use crate::scheduling::{
    is_feasible, schedule_cost, KinematicsConfig, Schedule, VehicleState,
};

/// Costs closer than this (seconds) are considered equal.
pub const COST_TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum DispatchError {
    #[error("stop points do not form a pick-up/drop-off pair of one request ({pickup:?} {pickup_req} / {dropoff:?} {dropoff_req})")]
    MalformedPair {
        pickup: Action,
        pickup_req: RequestId,
        dropoff: Action,
        dropoff_req: RequestId,
    },
    #[error("cannot dispatch to an empty fleet")]
    EmptyFleet,
}

/// Best placement of one request in one vehicle. Positions are 1-based in
/// the schedule that contains both new stop points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Insertion {
    pub pickup_position: usize,
    pub dropoff_position: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub vehicle_id: u32,
    pub pickup_position: usize,
    pub dropoff_position: usize,
    pub cost: f64,
    pub new_schedule: Schedule,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    AllVehiclesInfeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection {
    pub request_id: RequestId,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DispatchOutcome {
    Assigned(Assignment),
    Rejected(Rejection),
}

impl DispatchOutcome {
    pub fn assignment(&self) -> Option<&Assignment> {
        match self {
            DispatchOutcome::Assigned(a) => Some(a),
            DispatchOutcome::Rejected(_) => None,
        }
    }
}

fn check_pair(pickup: &StopPoint, dropoff: &StopPoint) -> Result<(), DispatchError> {
    if pickup.action == Action::Pickup
        && dropoff.action == Action::Dropoff
        && pickup.request_id == dropoff.request_id
    {
        Ok(())
    } else {
        Err(DispatchError::MalformedPair {
            pickup: pickup.action,
            pickup_req: pickup.request_id,
            dropoff: dropoff.action,
            dropoff_req: dropoff.request_id,
        })
    }
}

#[inline]
fn improves(candidate: f64, best: Option<f64>) -> bool {
    best.is_none_or(|b| candidate < b - COST_TIE_EPS)
}

/// Per-stop quantities of a schedule that make a single insertion checkable
/// in constant time.
///
/// Inserting a stop point delays every later stop by the same amount `δ ≥ 0`
/// and shifts every later occupancy by the same `ρ`, so the suffix extremes
/// below decide feasibility of the whole suffix at once.
#[derive(Debug, Default)]
struct Profile {
    /// completion time of each stop
    times: Vec<f64>,
    /// occupancy after each stop
    load: Vec<i64>,
    /// leg time into each stop
    legs: Vec<f64>,
    /// `prefix_ok[k]`: the first `k` stops satisfy windows and capacity
    prefix_ok: Vec<bool>,
    /// suffix max of `preferred_time - time`
    early: Vec<f64>,
    /// suffix min of `deadline - time`
    slack: Vec<f64>,
    load_min: Vec<i64>,
    load_max: Vec<i64>,
}

impl Profile {
    fn build(
        &mut self,
        state: &VehicleState,
        stops: &[StopPoint],
        kin: &KinematicsConfig,
        world: &GridWorld,
    ) {
        let n = stops.len();
        let cap = i64::from(kin.capacity);
        self.times.clear();
        self.load.clear();
        self.legs.clear();
        self.prefix_ok.clear();
        self.prefix_ok.push(true);
        let (mut t, mut at, mut load, mut ok) =
            (state.clock, state.location, i64::from(state.onboard), true);
        for sp in stops {
            let leg = kin.leg_time(world, at, sp.location);
            t += leg + kin.service_time(sp.action);
            load += i64::from(sp.action.load_delta());
            ok = ok
                && sp.preferred_time <= t
                && t < sp.deadline()
                && (0..cap).contains(&load);
            self.legs.push(leg);
            self.times.push(t);
            self.load.push(load);
            self.prefix_ok.push(ok);
            at = sp.location;
        }
        self.early.clear();
        self.early.resize(n + 1, f64::NEG_INFINITY);
        self.slack.clear();
        self.slack.resize(n + 1, f64::INFINITY);
        self.load_min.clear();
        self.load_min.resize(n + 1, i64::MAX);
        self.load_max.clear();
        self.load_max.resize(n + 1, i64::MIN);
        for k in (0..n).rev() {
            self.early[k] = self.early[k + 1].max(stops[k].preferred_time - self.times[k]);
            self.slack[k] = self.slack[k + 1].min(stops[k].deadline() - self.times[k]);
            self.load_min[k] = self.load_min[k + 1].min(self.load[k]);
            self.load_max[k] = self.load_max[k + 1].max(self.load[k]);
        }
    }

    /// Cheapest feasible 1-based position in `positions` for `sp`, with the
    /// cost of the resulting schedule.
    fn best_position(
        &self,
        state: &VehicleState,
        stops: &[StopPoint],
        sp: &StopPoint,
        positions: std::ops::RangeInclusive<usize>,
        kin: &KinematicsConfig,
        world: &GridWorld,
    ) -> Option<(usize, f64)> {
        let n = stops.len();
        let cap = i64::from(kin.capacity);
        let rho = i64::from(sp.action.load_delta());
        let service = kin.service_time(sp.action);
        let mut best: Option<(usize, f64)> = None;
        for position in positions {
            let gap = position - 1;
            if !self.prefix_ok[gap] {
                // every later position keeps this infeasible prefix
                break;
            }
            let (prev_at, prev_t, prev_load): (Point, f64, i64) = if gap == 0 {
                (state.location, state.clock, i64::from(state.onboard))
            } else {
                (stops[gap - 1].location, self.times[gap - 1], self.load[gap - 1])
            };
            let leg_in = kin.leg_time(world, prev_at, sp.location);
            let served = prev_t + leg_in + service;
            let load = prev_load + rho;
            if !(sp.preferred_time <= served && served < sp.deadline() && (0..cap).contains(&load))
            {
                continue;
            }
            let end = if gap < n {
                let delta = leg_in + service + kin.leg_time(world, sp.location, stops[gap].location)
                    - self.legs[gap];
                let fits = self.early[gap] <= delta
                    && delta < self.slack[gap]
                    && self.load_min[gap] + rho >= 0
                    && self.load_max[gap] + rho < cap;
                if !fits {
                    continue;
                }
                self.times[n - 1] + delta
            } else {
                served
            };
            let cost = end - state.clock;
            if improves(cost, best.map(|b| b.1)) {
                best = Some((position, cost));
            }
        }
        best
    }
}

/// Reusable buffers for [`insertion_cost_with`].
#[derive(Debug, Default)]
pub struct InsertionScratch {
    profile: Profile,
    tentative: Vec<StopPoint>,
}

/// Two-phase best insertion of a request into one vehicle. `None` when the
/// vehicle cannot serve it.
pub fn insertion_cost(
    state: &VehicleState,
    pickup: &StopPoint,
    dropoff: &StopPoint,
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> Result<Option<Insertion>, DispatchError> {
    check_pair(pickup, dropoff)?;
    Ok(insertion_cost_with(
        &mut InsertionScratch::default(),
        state,
        pickup,
        dropoff,
        kin,
        world,
    ))
}

/// [`insertion_cost`] without the pair check, reusing `scratch` buffers.
pub fn insertion_cost_with(
    scratch: &mut InsertionScratch,
    state: &VehicleState,
    pickup: &StopPoint,
    dropoff: &StopPoint,
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> Option<Insertion> {
    let stops = state.schedule.stops();
    let n = stops.len();
    scratch.profile.build(state, stops, kin, world);
    let (i_star, _) = scratch
        .profile
        .best_position(state, stops, pickup, 1..=n + 1, kin, world)?;

    scratch.tentative.clear();
    scratch.tentative.extend_from_slice(&stops[..i_star - 1]);
    scratch.tentative.push(*pickup);
    scratch.tentative.extend_from_slice(&stops[i_star - 1..]);
    let tentative = std::mem::take(&mut scratch.tentative);
    scratch.profile.build(state, &tentative, kin, world);
    let found = scratch
        .profile
        .best_position(state, &tentative, dropoff, i_star + 1..=n + 2, kin, world);
    scratch.tentative = tentative;
    let (j_star, cost) = found?;
    Some(Insertion {
        pickup_position: i_star,
        dropoff_position: j_star,
        cost,
    })
}

/// Same result as [`insertion_cost`], computed literally: build every
/// tentative schedule and test it with [`is_feasible`] and
/// [`schedule_cost`]. Quadratic in the schedule length.
pub fn insertion_cost_reference(
    state: &VehicleState,
    pickup: &StopPoint,
    dropoff: &StopPoint,
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> Result<Option<Insertion>, DispatchError> {
    check_pair(pickup, dropoff)?;
    let n = state.schedule.len();
    let mut best_i: Option<(usize, f64)> = None;
    for i in 1..=n + 1 {
        let s = state.schedule.insert(i, *pickup).expect("position in range");
        if is_feasible(state, s.stops(), kin, world) {
            let c = schedule_cost(state, s.stops(), kin, world);
            if improves(c, best_i.map(|b| b.1)) {
                best_i = Some((i, c));
            }
        }
    }
    let Some((i_star, _)) = best_i else {
        return Ok(None);
    };
    let with_pickup = state.schedule.insert(i_star, *pickup).expect("position in range");
    let mut best_j: Option<(usize, f64)> = None;
    for j in i_star + 1..=n + 2 {
        let s = with_pickup.insert(j, *dropoff).expect("position in range");
        if is_feasible(state, s.stops(), kin, world) {
            let c = schedule_cost(state, s.stops(), kin, world);
            if improves(c, best_j.map(|b| b.1)) {
                best_j = Some((j, c));
            }
        }
    }
    Ok(best_j.map(|(j_star, cost)| Insertion {
        pickup_position: i_star,
        dropoff_position: j_star,
        cost,
    }))
}

fn apply(state: &VehicleState, pickup: &StopPoint, dropoff: &StopPoint, ins: Insertion) -> Assignment {
    let new_schedule = state
        .schedule
        .insert(ins.pickup_position, *pickup)
        .and_then(|s| s.insert(ins.dropoff_position, *dropoff))
        .expect("insertion positions come from a valid search");
    Assignment {
        vehicle_id: state.vehicle_id,
        pickup_position: ins.pickup_position,
        dropoff_position: ins.dropoff_position,
        cost: ins.cost,
        new_schedule,
    }
}

/// Lowest cost wins; ties (within [`COST_TIE_EPS`]) go to the lower vehicle id.
fn better(cost: f64, id: u32, best: Option<(f64, u32)>) -> bool {
    match best {
        None => true,
        Some((bc, bid)) => cost < bc - COST_TIE_EPS || (cost <= bc + COST_TIE_EPS && id < bid),
    }
}

/// Assigns the request to the vehicle of minimum insertion cost.
///
/// Vehicles are examined in increasing order of a lower bound on their cost
/// and the scan stops once the bound exceeds the best cost found, which gives
/// the same answer as [`assign_request_exhaustive`]. The bound uses two
/// facts: inserting stop points never shortens a schedule (L1 triangle
/// inequality, and a moving leg split in two keeps at least one moving leg),
/// and any schedule serving the request drives from the vehicle to the
/// pick-up stop and then on to the drop-off stop.
pub fn assign_request(
    fleet: &[VehicleState],
    pickup: &StopPoint,
    dropoff: &StopPoint,
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> Result<DispatchOutcome, DispatchError> {
    let costs: Vec<f64> = fleet.iter().map(|v| v.cost(kin, world)).collect();
    assign_request_with_costs(fleet, &costs, pickup, dropoff, kin, world)
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    bound: f64,
    vehicle_id: u32,
    index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    // reversed: BinaryHeap pops the smallest bound first
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.vehicle_id.cmp(&self.vehicle_id))
    }
}

/// [`assign_request`] with each vehicle's current schedule cost supplied by
/// the caller (`current_costs[k]` belongs to `fleet[k]`).
pub fn assign_request_with_costs(
    fleet: &[VehicleState],
    current_costs: &[f64],
    pickup: &StopPoint,
    dropoff: &StopPoint,
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> Result<DispatchOutcome, DispatchError> {
    check_pair(pickup, dropoff)?;
    if fleet.is_empty() {
        return Err(DispatchError::EmptyFleet);
    }
    assert_eq!(fleet.len(), current_costs.len(), "one cost per vehicle");
    let services = kin.boarding_time + kin.alighting_time;
    let ride = kin.leg_time(world, pickup.location, dropoff.location);
    let candidates: Vec<Candidate> = fleet
        .iter()
        .zip(current_costs)
        .enumerate()
        .filter_map(|(index, (v, &current))| {
            let reach = kin.leg_time(world, v.location, pickup.location);
            // the pick-up can never be completed earlier than this
            if v.clock + reach + kin.boarding_time >= pickup.deadline() {
                return None;
            }
            Some(Candidate {
                bound: current.max(reach + ride) + services,
                vehicle_id: v.vehicle_id,
                index,
            })
        })
        .collect();
    let mut queue = std::collections::BinaryHeap::from(candidates);

    let mut scratch = InsertionScratch::default();
    let mut best: Option<(f64, u32, usize, Insertion)> = None;
    while let Some(c) = queue.pop() {
        if best.is_some_and(|(bc, ..)| c.bound > bc + COST_TIE_EPS) {
            break;
        }
        let v = &fleet[c.index];
        if let Some(ins) = insertion_cost_with(&mut scratch, v, pickup, dropoff, kin, world) {
            if better(ins.cost, v.vehicle_id, best.map(|b| (b.0, b.1))) {
                best = Some((ins.cost, v.vehicle_id, c.index, ins));
            }
        }
    }
    Ok(match best {
        Some((_, _, k, ins)) => DispatchOutcome::Assigned(apply(&fleet[k], pickup, dropoff, ins)),
        None => DispatchOutcome::Rejected(Rejection {
            request_id: pickup.request_id,
            reason: RejectReason::AllVehiclesInfeasible,
        }),
    })
}

/// Evaluates every vehicle, in vehicle-id order.
pub fn assign_request_exhaustive(
    fleet: &[VehicleState],
    pickup: &StopPoint,
    dropoff: &StopPoint,
    kin: &KinematicsConfig,
    world: &GridWorld,
) -> Result<DispatchOutcome, DispatchError> {
    check_pair(pickup, dropoff)?;
    if fleet.is_empty() {
        return Err(DispatchError::EmptyFleet);
    }
    let mut scratch = InsertionScratch::default();
    let mut best: Option<(f64, u32, usize, Insertion)> = None;
    for (k, v) in fleet.iter().enumerate() {
        if let Some(ins) = insertion_cost_with(&mut scratch, v, pickup, dropoff, kin, world) {
            if better(ins.cost, v.vehicle_id, best.map(|b| (b.0, b.1))) {
                best = Some((ins.cost, v.vehicle_id, k, ins));
            }
        }
    }
    Ok(match best {
        Some((_, _, k, ins)) => DispatchOutcome::Assigned(apply(&fleet[k], pickup, dropoff, ins)),
        None => DispatchOutcome::Rejected(Rejection {
            request_id: pickup.request_id,
            reason: RejectReason::AllVehiclesInfeasible,
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheduling::tests::sp;
    use proptest::prelude::*;

    fn kin() -> KinematicsConfig {
        KinematicsConfig::default()
    }

    #[test]
    fn empty_schedule_colocated_vehicle() {
        // 5 s boarding at the current location, then 3500 m (360 s) + 11.5 s + 10 s
        let world = GridWorld::default();
        let v = VehicleState::idle(0, Point::new(100.0, 100.0), 0.0);
        let a = sp(100.0, 100.0, 0.0, 1200.0, Action::Pickup, 1);
        let b = sp(100.0, 3600.0, 360.0, 1200.0, Action::Dropoff, 1);
        let ins = insertion_cost(&v, &a, &b, &kin(), &world).unwrap().unwrap();
        assert_eq!((ins.pickup_position, ins.dropoff_position), (1, 2));
        assert!((ins.cost - 386.5).abs() < 1e-9, "{}", ins.cost);
    }

    #[test]
    fn expired_pickup_window_is_infeasible() {
        let world = GridWorld::default();
        let v = VehicleState::idle(0, Point::new(0.0, 0.0), 2000.0);
        let a = sp(100.0, 100.0, 0.0, 1200.0, Action::Pickup, 1);
        let b = sp(100.0, 3600.0, 360.0, 1200.0, Action::Dropoff, 1);
        assert_eq!(insertion_cost(&v, &a, &b, &kin(), &world).unwrap(), None);
        let out = assign_request(&[v], &a, &b, &kin(), &world).unwrap();
        assert_eq!(
            out,
            DispatchOutcome::Rejected(Rejection {
                request_id: 1,
                reason: RejectReason::AllVehiclesInfeasible
            })
        );
    }

    #[test]
    fn malformed_pair_is_an_error() {
        let world = GridWorld::default();
        let v = VehicleState::idle(0, Point::new(0.0, 0.0), 0.0);
        let a = sp(100.0, 100.0, 0.0, 1200.0, Action::Pickup, 1);
        let b = sp(100.0, 3600.0, 360.0, 1200.0, Action::Dropoff, 2);
        assert!(insertion_cost(&v, &a, &b, &kin(), &world).is_err());
        assert!(insertion_cost(&v, &a, &a, &kin(), &world).is_err());
        assert_eq!(
            assign_request(&[], &a, &sp(1.0, 1.0, 0.0, 1.0, Action::Dropoff, 1), &kin(), &world),
            Err(DispatchError::EmptyFleet)
        );
    }

    #[test]
    fn single_vehicle_fleet() {
        let world = GridWorld::default();
        let v = VehicleState::idle(7, Point::new(0.0, 0.0), 0.0);
        let a = sp(100.0, 100.0, 0.0, 1200.0, Action::Pickup, 1);
        let b = sp(100.0, 3600.0, 0.0, 1200.0, Action::Dropoff, 1);
        let out = assign_request(&[v], &a, &b, &kin(), &world).unwrap();
        let asg = out.assignment().unwrap();
        assert_eq!(asg.vehicle_id, 7);
        assert_eq!(asg.new_schedule.stops(), &[a, b]);
    }

    #[test]
    fn colocated_vehicle_beats_distant_one() {
        let world = GridWorld::default();
        let far = VehicleState::idle(0, Point::new(100.0, 5100.0), 0.0);
        let near = VehicleState::idle(1, Point::new(100.0, 100.0), 0.0);
        let a = sp(100.0, 100.0, 0.0, 1200.0, Action::Pickup, 1);
        let b = sp(2100.0, 100.0, 0.0, 1200.0, Action::Dropoff, 1);
        let out = assign_request(&[far, near], &a, &b, &kin(), &world).unwrap();
        assert_eq!(out.assignment().unwrap().vehicle_id, 1);
    }

    #[test]
    fn equal_costs_go_to_lowest_id() {
        let world = GridWorld::default();
        let v3 = VehicleState::idle(3, Point::new(0.0, 0.0), 0.0);
        let v2 = VehicleState::idle(2, Point::new(0.0, 0.0), 0.0);
        let a = sp(100.0, 100.0, 0.0, 1200.0, Action::Pickup, 1);
        let b = sp(2100.0, 100.0, 0.0, 1200.0, Action::Dropoff, 1);
        let out = assign_request(&[v3.clone(), v2.clone()], &a, &b, &kin(), &world).unwrap();
        assert_eq!(out.assignment().unwrap().vehicle_id, 2);
        let out = assign_request_exhaustive(&[v3, v2], &a, &b, &kin(), &world).unwrap();
        assert_eq!(out.assignment().unwrap().vehicle_id, 2);
    }

    #[test]
    fn dropoff_search_follows_greedy_pickup() {
        // The pick-up goes wherever its own tentative schedule is cheapest,
        // even if a different pick-up slot would have allowed a cheaper pair.
        let world = GridWorld::default();
        let existing = sp(3000.0, 0.0, 0.0, 1e5, Action::Dropoff, 9);
        let v = VehicleState {
            onboard: 1,
            schedule: Schedule::new(vec![existing]),
            ..VehicleState::idle(0, Point::new(0.0, 0.0), 0.0)
        };
        let a = sp(3000.0, 0.0, 0.0, 1e5, Action::Pickup, 1);
        let b = sp(0.0, 0.0, 0.0, 1e5, Action::Dropoff, 1);
        let fast = insertion_cost(&v, &a, &b, &kin(), &world).unwrap().unwrap();
        let slow = insertion_cost_reference(&v, &a, &b, &kin(), &world).unwrap().unwrap();
        assert_eq!(fast.pickup_position, slow.pickup_position);
        assert_eq!(fast.dropoff_position, slow.dropoff_position);
        // co-located with the existing stop: both slots 1 and 2 cost the same,
        // the smaller one wins
        assert_eq!(fast.pickup_position, 1);
    }

    fn arb_stop(req: u64, action: Action) -> impl Strategy<Value = StopPoint> {
        (0u8..5, 0u8..5, 0.0..900.0f64, 100.0..1800.0f64).prop_map(move |(gx, gy, t, dt)| {
            sp(f64::from(gx) * 250.0, f64::from(gy) * 250.0, t, dt, action, req)
        })
    }

    fn arb_vehicle(id: u32) -> impl Strategy<Value = VehicleState> {
        (
            prop::collection::vec((0u64..4, any::<bool>()), 0..7),
            prop::collection::vec(arb_stop(0, Action::Pickup), 7),
            0u8..5,
            0u8..5,
            0u32..3,
            0.0..200.0f64,
        )
            .prop_map(move |(shape, pool, gx, gy, onboard, clock)| {
                let stops = shape
                    .iter()
                    .zip(pool)
                    .map(|((req, pick), s)| StopPoint {
                        request_id: *req + 10,
                        action: if *pick { Action::Pickup } else { Action::Dropoff },
                        ..s
                    })
                    .collect();
                VehicleState {
                    vehicle_id: id,
                    location: Point::new(f64::from(gx) * 250.0, f64::from(gy) * 250.0),
                    clock,
                    onboard,
                    schedule: Schedule::new(stops),
                }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(3000))]

        #[test]
        fn fast_insertion_matches_reference(
            v in arb_vehicle(0),
            a in arb_stop(1, Action::Pickup),
            b in arb_stop(1, Action::Dropoff),
            cap in 1u32..5,
        ) {
            let world = GridWorld::default();
            let kin = KinematicsConfig { capacity: cap, ..kin() };
            let fast = insertion_cost(&v, &a, &b, &kin, &world).unwrap();
            let slow = insertion_cost_reference(&v, &a, &b, &kin, &world).unwrap();
            match (fast, slow) {
                (None, None) => {}
                (Some(f), Some(s)) => {
                    prop_assert_eq!((f.pickup_position, f.dropoff_position), (s.pickup_position, s.dropoff_position));
                    prop_assert!((f.cost - s.cost).abs() < 1e-9);
                }
                other => prop_assert!(false, "mismatch {:?}", other),
            }
        }

        #[test]
        fn pruned_scan_matches_exhaustive_and_result_is_feasible(
            fleet in prop::collection::vec(arb_vehicle(0), 1..6),
            a in arb_stop(1, Action::Pickup),
            b in arb_stop(1, Action::Dropoff),
        ) {
            let world = GridWorld::default();
            let fleet: Vec<_> = fleet
                .into_iter()
                .enumerate()
                .map(|(k, v)| VehicleState { vehicle_id: k as u32, ..v })
                .collect();
            let pruned = assign_request(&fleet, &a, &b, &kin(), &world).unwrap();
            let full = assign_request_exhaustive(&fleet, &a, &b, &kin(), &world).unwrap();
            prop_assert_eq!(&pruned, &full);
            if let Some(asg) = pruned.assignment() {
                let v = &fleet[asg.vehicle_id as usize];
                prop_assert!(asg.pickup_position < asg.dropoff_position);
                prop_assert!(is_feasible(v, asg.new_schedule.stops(), &kin(), &world));
                let mut stops = asg.new_schedule.stops().to_vec();
                stops.remove(asg.dropoff_position - 1);
                stops.remove(asg.pickup_position - 1);
                prop_assert_eq!(stops.as_slice(), v.schedule.stops());
                // winner's cost is the minimum of the per-vehicle costs
                let min = fleet
                    .iter()
                    .filter_map(|v| insertion_cost_reference(v, &a, &b, &kin(), &world).unwrap())
                    .map(|i| i.cost)
                    .fold(f64::INFINITY, f64::min);
                prop_assert!((asg.cost - min).abs() < 1e-9);
            } else {
                prop_assert!(fleet.iter().all(|v| insertion_cost_reference(v, &a, &b, &kin(), &world).unwrap().is_none()));
            }
        }

        #[test]
        fn adding_a_vehicle_never_raises_the_winning_cost(
            fleet in prop::collection::vec(arb_vehicle(0), 2..6),
            a in arb_stop(1, Action::Pickup),
            b in arb_stop(1, Action::Dropoff),
        ) {
            let world = GridWorld::default();
            let fleet: Vec<_> = fleet
                .into_iter()
                .enumerate()
                .map(|(k, v)| VehicleState { vehicle_id: k as u32, ..v })
                .collect();
            let cost = |f: &[VehicleState]| match assign_request(f, &a, &b, &kin(), &world).unwrap() {
                DispatchOutcome::Assigned(x) => x.cost,
                DispatchOutcome::Rejected(_) => f64::INFINITY,
            };
            prop_assert!(cost(&fleet) <= cost(&fleet[..fleet.len() - 1]));
        }
    }
}
