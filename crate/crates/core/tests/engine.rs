use std::collections::HashMap;

use modsim_core::demand::{DemandConfig, TripRequest};
use modsim_core::engine::{run_with_demand, LogKind, Scenario, SimulationOutput};
use modsim_core::geometry::{rect_distance, GridWorld, Point};
use modsim_core::metrics::{qos_summary, sharing_histogram, vehicle_sharing};
use modsim_core::run_simulation;
use modsim_core::snapshot_counts;
use proptest::prelude::*;

fn small_scenario(rate: f64, fleet: u32, spacing: f64, seed: u64) -> Scenario {
    Scenario {
        world: GridWorld {
            area_width: 2000.0,
            area_height: 3000.0,
            ..GridWorld::default()
        },
        demand: DemandConfig {
            rate,
            duration: 1800.0,
            seed,
            ..DemandConfig::default()
        },
        fleet_size: fleet,
        stop_spacing: spacing,
        ..Scenario::default()
    }
}

/// Rechecks time windows, occupancy and event ordering from the log alone.
fn check_log(scenario: &Scenario, out: &SimulationOutput) -> Result<(), String> {
    let records: HashMap<_, _> = out.requests.iter().map(|r| (r.id, r)).collect();
    let mut load: HashMap<u32, u32> = HashMap::new();
    let mut state: HashMap<u64, u8> = HashMap::new();
    let cap = scenario.kinematics.capacity;
    let mut last_time = 0.0;
    for e in &out.events {
        if e.time < last_time {
            return Err(format!("log goes back in time at {e:?}"));
        }
        last_time = e.time;
        let r = records[&e.request_id];
        let s = state.entry(e.request_id).or_default();
        match e.kind {
            LogKind::Request => {
                if *s != 0 || e.time != r.request_time {
                    return Err(format!("bad request event {e:?}"));
                }
                *s = 1;
            }
            LogKind::Assign | LogKind::Reject => {
                if *s != 1 {
                    return Err(format!("decision before request {e:?}"));
                }
                *s = if e.kind == LogKind::Assign { 2 } else { 9 };
            }
            LogKind::Pickup | LogKind::Dropoff => {
                let v = e.vehicle_id.ok_or("service without vehicle")?;
                let n = load.entry(v).or_default();
                let (pref, expect) = if e.kind == LogKind::Pickup {
                    *n += 1;
                    (r.request_time, 2)
                } else {
                    *n = n.checked_sub(1).ok_or("negative occupancy")?;
                    (r.dropoff_preferred, 3)
                };
                if *s != expect || r.vehicle != Some(v) {
                    return Err(format!("out of order service {e:?}"));
                }
                *s += 1;
                if !(pref <= e.time && e.time < pref + r.max_extra_time) {
                    return Err(format!("window violated {e:?} pref {pref}"));
                }
                if *n >= cap || e.occupancy_after != Some(*n) {
                    return Err(format!("occupancy {n} at {e:?}"));
                }
            }
        }
    }
    Ok(())
}

/// Seed whose single vehicle starts at the lowest stop of a one-column world.
fn seed_starting_at_bottom(mut s: Scenario) -> Scenario {
    for seed in 0.. {
        s.demand.seed = seed;
        let out = run_with_demand(&s, &[]).unwrap();
        if out.vehicles[0].path[0] == Point::new(500.0, 500.0) {
            return s;
        }
    }
    unreachable!()
}

#[test]
fn zero_requests_leave_the_fleet_idle() {
    let s = small_scenario(1.0, 7, 200.0, 3);
    let out = run_with_demand(&s, &[]).unwrap();
    assert!(out.events.is_empty());
    for v in &out.vehicles {
        assert_eq!(v.distance, 0.0);
        assert!(v.trajectory.is_empty());
        assert_eq!(vehicle_sharing(&v.occupancy, out.horizon).idle(), 1.0);
    }
    assert_eq!(sharing_histogram(&out.vehicles, out.horizon).fractions, vec![1.0]);
}

#[test]
fn one_request_with_a_co_located_vehicle() {
    // one stop per 1000 m cell; the single vehicle starts at the only stop
    // of the lower cell
    let s = seed_starting_at_bottom(Scenario {
        world: GridWorld {
            area_width: 1000.0,
            area_height: 4000.0,
            ..GridWorld::default()
        },
        demand: DemandConfig {
            duration: 3600.0,
            ..DemandConfig::default()
        },
        fleet_size: 1,
        stop_spacing: 1000.0,
        ..Scenario::default()
    });
    let req = TripRequest {
        id: 0,
        origin: Point::new(500.0, 400.0),
        destination: Point::new(500.0, 3600.0),
        appear_time: 100.0,
        max_extra_time: 1200.0,
    };
    let out = run_with_demand(&s, &[req]).unwrap();
    let start = out.vehicles[0].path[0];

    let r = &out.requests[0];
    assert_eq!(r.ingress_time, 100.0);
    assert_eq!(r.request_time, 200.0);
    let drive = 3000.0 / (35.0 / 3.6);
    assert_eq!(r.pickup_time, Some(205.0));
    let onboard = drive + 11.5 + 10.0;
    assert!((r.dropoff_time.unwrap() - (205.0 + onboard)).abs() < 1e-9);

    let q = qos_summary(&out);
    assert_eq!(q.wait, Some(5.0));
    assert!((q.onboard.unwrap() - onboard).abs() < 1e-9);
    assert_eq!(q.egress, Some(100.0));
    assert_eq!(q.rejection_fraction, 0.0);

    let kinds: Vec<_> = out.events.iter().map(|e| e.kind).collect();
    assert_eq!(
        kinds,
        [LogKind::Request, LogKind::Assign, LogKind::Pickup, LogKind::Dropoff]
    );
    assert_eq!(out.vehicles[0].distance, 3000.0);
    assert_eq!(out.vehicles[0].trajectory, [start, Point::new(500.0, 3500.0)]);

    // idle until the request, carrying one passenger until drop-off, idle after
    let h = vehicle_sharing(&out.vehicles[0].occupancy, 3600.0);
    let busy = 5.0 + onboard;
    assert!((h.fraction(1) - (onboard / 3600.0)).abs() < 1e-12);
    assert!((h.fraction(0) - 5.0 / 3600.0).abs() < 1e-12);
    assert!((h.idle() - (3600.0 - busy) / 3600.0).abs() < 1e-12);
}

#[test]
fn diverted_vehicle_keeps_its_path_consistent() {
    // a vehicle heading north is diverted mid-leg by a second request
    let s = seed_starting_at_bottom(Scenario {
        world: GridWorld {
            area_width: 1000.0,
            area_height: 6000.0,
            ..GridWorld::default()
        },
        demand: DemandConfig {
            duration: 3600.0,
            ..DemandConfig::default()
        },
        fleet_size: 1,
        stop_spacing: 1000.0,
        ..Scenario::default()
    });
    let reqs = [
        TripRequest {
            id: 0,
            origin: Point::new(500.0, 500.0),
            destination: Point::new(500.0, 5500.0),
            appear_time: 0.0,
            max_extra_time: 1200.0,
        },
        TripRequest {
            id: 1,
            origin: Point::new(500.0, 2500.0),
            destination: Point::new(500.0, 4500.0),
            appear_time: 100.0,
            max_extra_time: 1200.0,
        },
    ];
    let out = run_with_demand(&s, &reqs).unwrap();
    check_log(&s, &out).unwrap();
    assert!(out.requests.iter().all(|r| r.served()));
    let v = &out.vehicles[0];
    let along: f64 = v.path.windows(2).map(|w| rect_distance(w[0], w[1])).sum();
    assert_eq!(along, v.distance);
    assert_eq!(v.distance, 5000.0);
}

#[test]
fn same_seed_same_output() {
    let s = small_scenario(200.0, 20, 200.0, 11);
    let a = run_simulation(&s).unwrap();
    let b = run_simulation(&s).unwrap();
    assert_eq!(a, b);
    let c = run_simulation(&small_scenario(200.0, 20, 200.0, 12)).unwrap();
    assert_ne!(a.events, c.events);
}

#[test]
fn snapshot_counts_are_cumulative_and_conserved() {
    let s = small_scenario(300.0, 15, 200.0, 5);
    let out = run_simulation(&s).unwrap();
    let zero = snapshot_counts(&out, 0.0);
    assert_eq!(zero.assigned + zero.picked_up + zero.dropped_off, 0);
    let mut prev = zero;
    for k in 1..=40 {
        let c = snapshot_counts(&out, 60.0 * k as f64);
        assert!(c.submitted >= prev.submitted && c.assigned >= prev.assigned);
        assert!(c.picked_up >= prev.picked_up && c.dropped_off >= prev.dropped_off);
        assert!(c.submitted >= c.assigned + c.rejected);
        assert!(c.assigned >= c.picked_up && c.picked_up >= c.dropped_off);
        prev = c;
    }
    let end = snapshot_counts(&out, f64::INFINITY);
    assert_eq!(end.submitted, end.assigned + end.rejected);
    assert_eq!(out.unfinished_stops, 0);
    assert_eq!(end.assigned, end.dropped_off);
}

#[test]
fn capacity_binds_in_small_vehicles() {
    let mut s = small_scenario(600.0, 3, 200.0, 9);
    s.kinematics.capacity = 2;
    let out = run_simulation(&s).unwrap();
    check_log(&s, &out).unwrap();
    let hist = sharing_histogram(&out.vehicles, out.horizon);
    assert!(hist.max_level().unwrap() < 2);
    assert!(qos_summary(&out).rejected > 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn runs_respect_windows_capacity_and_distance(seed in 0u64..1000,
                                                  fleet in 1u32..12,
                                                  spacing in prop::sample::select(vec![80.0, 200.0, 430.0, 860.0]),
                                                  cap in 2u32..6,
                                                  rate in 20.0f64..400.0) {
        let mut s = small_scenario(rate, fleet, spacing, seed);
        s.kinematics.capacity = cap;
        let out = run_simulation(&s).unwrap();
        prop_assert_eq!(check_log(&s, &out), Ok(()));
        for v in &out.vehicles {
            let along: f64 = v.path.windows(2).map(|w| rect_distance(w[0], w[1])).sum();
            prop_assert!((along - v.distance).abs() < 1e-6);
            let served: f64 = v.trajectory.windows(2).map(|w| rect_distance(w[0], w[1])).sum();
            prop_assert!(v.distance + 1e-6 >= served);
        }
        let q = qos_summary(&out);
        for r in out.requests.iter().filter(|r| r.served()) {
            let wait = r.pickup_time.unwrap() - r.request_time;
            prop_assert!(wait >= s.kinematics.boarding_time - 1e-9);
            prop_assert!(wait < s.demand.max_extra_time + s.kinematics.boarding_time);
        }
        if let (Some(i), Some(w), Some(o), Some(e), Some(t)) = (q.ingress, q.wait, q.onboard, q.egress, q.total) {
            prop_assert!((i + w + o + e - t).abs() < 1e-6);
        }
    }
}
