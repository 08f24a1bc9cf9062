//! Post-processing of a simulation run: load, distance, tortuosity, sharing
//! degree and quality of service.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{snapshot_counts, OccupancyChange, SimulationOutput, VehicleTrace};
use crate::geometry::{rect_distance, Point};

pub const DEFAULT_TORTUOSITY_HORIZON: usize = 4;
/// Snapshot time for load figures: three hours, the usual length of a peak.
pub const DEFAULT_SNAPSHOT: f64 = 3.0 * 3600.0;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("min_visit_length needs at least one point to visit")]
    NothingToVisit,
    #[error("window {start}..={end} exceeds trajectory of length {len}")]
    WindowOutOfRange { start: usize, end: usize, len: usize },
}

fn best_open_path(at: Point, rest: &mut [Point], so_far: f64, best: &mut f64) {
    if so_far >= *best {
        return;
    }
    if rest.is_empty() {
        *best = so_far;
        return;
    }
    for k in 0..rest.len() {
        rest.swap(0, k);
        let next = rest[0];
        best_open_path(next, &mut rest[1..], so_far + rect_distance(at, next), best);
        rest.swap(0, k);
    }
}

/// Shortest open path from `start` through every point of `others`, by
/// enumerating visiting orders.
pub fn min_visit_length(start: Point, others: &[Point]) -> Result<f64, MetricsError> {
    if others.is_empty() {
        return Err(MetricsError::NothingToVisit);
    }
    let mut rest = others.to_vec();
    let mut best = f64::INFINITY;
    best_open_path(start, &mut rest, 0.0, &mut best);
    Ok(best)
}

/// Realized length of `trajectory[i..=i+h]` over the shortest order visiting
/// the same points from `trajectory[i]`. `i` is 0-based. A window whose
/// points all coincide has tortuosity 1.
pub fn tortuosity_at(trajectory: &[Point], i: usize, h: usize) -> Result<f64, MetricsError> {
    let end = i + h;
    if h == 0 || end >= trajectory.len() {
        return Err(MetricsError::WindowOutOfRange {
            start: i,
            end,
            len: trajectory.len(),
        });
    }
    let window = &trajectory[i..=end];
    let realized: f64 = window.windows(2).map(|w| rect_distance(w[0], w[1])).sum();
    let shortest = min_visit_length(window[0], &window[1..])?;
    if shortest == 0.0 {
        // every point of the window coincides with the start
        return Ok(1.0);
    }
    Ok(realized / shortest)
}

/// Mean of `tortuosity_at` over all n−H windows; `None` when the trajectory
/// has at most H points.
pub fn vehicle_tortuosity(trajectory: &[Point], h: usize) -> Option<f64> {
    if h == 0 || trajectory.len() <= h {
        return None;
    }
    let n = trajectory.len() - h;
    let sum: f64 = (0..n)
        .map(|i| tortuosity_at(trajectory, i, h).expect("window in range"))
        .sum();
    Some(sum / n as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TortuosityReport {
    pub horizon: usize,
    pub per_vehicle: Vec<Option<f64>>,
    /// Mean over vehicles with a defined value.
    pub fleet_mean: Option<f64>,
}

pub fn tortuosity_report(vehicles: &[VehicleTrace], h: usize) -> TortuosityReport {
    let per_vehicle: Vec<_> = vehicles
        .iter()
        .map(|v| vehicle_tortuosity(&v.trajectory, h))
        .collect();
    let defined: Vec<f64> = per_vehicle.iter().flatten().copied().collect();
    TortuosityReport {
        horizon: h,
        fleet_mean: mean(&defined),
        per_vehicle,
    }
}

/// Fraction of time at each occupancy level. Index 0 is the idle level −1,
/// index k+1 is k passengers on board.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SharingHistogram {
    pub fractions: Vec<f64>,
}

impl SharingHistogram {
    pub fn fraction(&self, level: i32) -> f64 {
        usize::try_from(level + 1)
            .ok()
            .and_then(|k| self.fractions.get(k))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn idle(&self) -> f64 {
        self.fraction(-1)
    }

    /// Fraction of time with at least `k` passengers on board.
    pub fn at_least(&self, k: u32) -> f64 {
        self.fractions.iter().skip(k as usize + 1).fold(0.0, |a, f| a + f)
    }

    /// Largest level with nonzero time.
    pub fn max_level(&self) -> Option<i32> {
        self.fractions
            .iter()
            .rposition(|&f| f > 0.0)
            .map(|k| k as i32 - 1)
    }

    fn add(&mut self, level: i32, amount: f64) {
        let k = (level + 1) as usize;
        if self.fractions.len() <= k {
            self.fractions.resize(k + 1, 0.0);
        }
        self.fractions[k] += amount;
    }
}

/// Time-weighted occupancy of one vehicle over `[0, horizon]`.
pub fn vehicle_sharing(timeline: &[OccupancyChange], horizon: f64) -> SharingHistogram {
    let mut hist = SharingHistogram::default();
    if horizon <= 0.0 {
        return hist;
    }
    let mut level = -1;
    let mut since = 0.0;
    for change in timeline {
        let t = change.time.min(horizon);
        if t > since {
            hist.add(level, (t - since) / horizon);
        }
        since = since.max(t);
        level = change.level;
    }
    if horizon > since {
        hist.add(level, (horizon - since) / horizon);
    }
    hist
}

/// Fleet average of [`vehicle_sharing`].
pub fn sharing_histogram(vehicles: &[VehicleTrace], horizon: f64) -> SharingHistogram {
    let mut total = SharingHistogram::default();
    if vehicles.is_empty() {
        return total;
    }
    for v in vehicles {
        for (k, f) in vehicle_sharing(&v.occupancy, horizon).fractions.iter().enumerate() {
            total.add(k as i32 - 1, *f);
        }
    }
    for f in &mut total.fractions {
        *f /= vehicles.len() as f64;
    }
    total
}

/// Means in seconds over served requests.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QoSSummary {
    pub submitted: usize,
    pub served: usize,
    pub rejected: usize,
    pub rejection_fraction: f64,
    pub ingress: Option<f64>,
    pub wait: Option<f64>,
    pub onboard: Option<f64>,
    pub egress: Option<f64>,
    pub total: Option<f64>,
}

pub fn qos_summary(output: &SimulationOutput) -> QoSSummary {
    let mut parts: [Vec<f64>; 5] = Default::default();
    for r in &output.requests {
        let (Some(up), Some(down)) = (r.pickup_time, r.dropoff_time) else {
            continue;
        };
        let wait = up - r.request_time;
        let onboard = down - up;
        let values = [
            r.ingress_time,
            wait,
            onboard,
            r.egress_time,
            r.ingress_time + wait + onboard + r.egress_time,
        ];
        for (acc, v) in parts.iter_mut().zip(values) {
            acc.push(v);
        }
    }
    let submitted = output.requests.len();
    let rejected = output.requests.iter().filter(|r| !r.assigned()).count();
    QoSSummary {
        submitted,
        served: parts[0].len(),
        rejected,
        rejection_fraction: if submitted == 0 {
            0.0
        } else {
            rejected as f64 / submitted as f64
        },
        ingress: mean(&parts[0]),
        wait: mean(&parts[1]),
        onboard: mean(&parts[2]),
        egress: mean(&parts[3]),
        total: mean(&parts[4]),
    }
}

/// Mean walked distance, mean walk time and maximum walk time to the nearest
/// stop of a square lattice of pitch `spacing`.
pub fn analytic_ingress(spacing: f64, walk_speed: f64) -> (f64, f64, f64) {
    let mean_dist = spacing / 2.0;
    (mean_dist, mean_dist / walk_speed, spacing / walk_speed)
}

pub fn km_per_vehicle(vehicles: &[VehicleTrace]) -> f64 {
    if vehicles.is_empty() {
        return 0.0;
    }
    vehicles.iter().map(|v| v.distance).sum::<f64>() / 1000.0 / vehicles.len() as f64
}

fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// One line of the metrics file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub spacing_m: f64,
    pub fleet: u32,
    pub rate: f64,
    pub submitted: usize,
    pub assigned_3h: usize,
    pub picked_3h: usize,
    pub dropped_3h: usize,
    pub rejected: usize,
    pub km_per_vehicle: f64,
    pub tortuosity: Option<f64>,
    pub ingress_s: Option<f64>,
    pub wait_s: Option<f64>,
    pub onboard_s: Option<f64>,
    pub egress_s: Option<f64>,
    pub total_s: Option<f64>,
    pub idle_frac: f64,
}

pub const METRICS_COLUMNS: [&str; 16] = [
    "spacing_m",
    "fleet",
    "rate",
    "submitted",
    "assigned_3h",
    "picked_3h",
    "dropped_3h",
    "rejected",
    "km_per_vehicle",
    "tortuosity",
    "ingress_s",
    "wait_s",
    "onboard_s",
    "egress_s",
    "total_s",
    "idle_frac",
];

pub fn metrics_row(output: &SimulationOutput, snapshot_at: f64, h: usize) -> MetricsRow {
    let snap = snapshot_counts(output, snapshot_at);
    let qos = qos_summary(output);
    MetricsRow {
        spacing_m: output.stop_spacing,
        fleet: output.fleet_size,
        rate: output.rate,
        submitted: qos.submitted,
        assigned_3h: snap.assigned,
        picked_3h: snap.picked_up,
        dropped_3h: snap.dropped_off,
        rejected: qos.rejected,
        km_per_vehicle: km_per_vehicle(&output.vehicles),
        tortuosity: tortuosity_report(&output.vehicles, h).fleet_mean,
        ingress_s: qos.ingress,
        wait_s: qos.wait,
        onboard_s: qos.onboard,
        egress_s: qos.egress,
        total_s: qos.total,
        idle_frac: sharing_histogram(&output.vehicles, output.horizon).idle(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use itertools::Itertools;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    fn permutation_oracle(start: Point, others: &[Point]) -> f64 {
        others
            .iter()
            .permutations(others.len())
            .map(|order| {
                let mut at = start;
                let mut len = 0.0;
                for q in order {
                    len += (at.x - q.x).abs() + (at.y - q.y).abs();
                    at = *q;
                }
                len
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn single_point_visit_is_the_distance() {
        assert_eq!(min_visit_length(p(0.0, 0.0), &[p(30.0, 40.0)]), Ok(70.0));
        assert_eq!(
            min_visit_length(p(0.0, 0.0), &[]),
            Err(MetricsError::NothingToVisit)
        );
    }

    #[test]
    fn visits_co_located_point_first() {
        let m = min_visit_length(p(0.0, 0.0), &[p(1000.0, 0.0), p(0.0, 0.0)]).unwrap();
        assert_eq!(m, 1000.0);
    }

    #[test]
    fn back_and_forth_window_has_tortuosity_two() {
        let traj = [p(0.0, 0.0), p(1000.0, 0.0), p(0.0, 0.0)];
        assert_eq!(tortuosity_at(&traj, 0, 2), Ok(2.0));
        let repeated: Vec<_> = traj.iter().cycle().take(3).copied().collect();
        assert_eq!(vehicle_tortuosity(&repeated, 2), Some(2.0));
    }

    #[test]
    fn repeated_back_and_forth_averages_to_two() {
        // every window of 0,1000,0,1000,... is a zig-zag; each realized
        // length is 2000 for H=2 against an optimum of 1000
        let traj: Vec<_> = (0..10).map(|k| p(1000.0 * (k % 2) as f64, 0.0)).collect();
        assert_eq!(vehicle_tortuosity(&traj, 2), Some(2.0));
    }

    #[test]
    fn straight_and_degenerate_windows_are_one() {
        let line: Vec<_> = (0..8).map(|k| p(100.0 * k as f64, 0.0)).collect();
        assert_eq!(vehicle_tortuosity(&line, 4), Some(1.0));
        let same = [p(5.0, 5.0); 5];
        assert_eq!(tortuosity_at(&same, 0, 4), Ok(1.0));
    }

    #[test]
    fn short_trajectories_have_no_tortuosity() {
        let traj = [p(0.0, 0.0), p(1.0, 0.0), p(2.0, 0.0), p(3.0, 0.0)];
        assert_eq!(vehicle_tortuosity(&traj, 4), None);
        assert!(tortuosity_at(&traj, 0, 4).is_err());
        let five = [p(0.0, 0.0), p(300.0, 0.0), p(0.0, 0.0), p(0.0, 10.0), p(0.0, 20.0)];
        assert_eq!(vehicle_tortuosity(&five, 4), tortuosity_at(&five, 0, 4).ok());
    }

    #[test]
    fn idle_vehicle_is_idle_all_the_time() {
        let h = vehicle_sharing(&[OccupancyChange { time: 0.0, level: -1 }], 100.0);
        assert_eq!(h.fractions, vec![1.0]);
        assert_eq!(h.idle(), 1.0);
        assert_eq!(h.max_level(), Some(-1));
    }

    #[test]
    fn sharing_splits_time_between_levels() {
        let timeline = [
            OccupancyChange { time: 0.0, level: -1 },
            OccupancyChange { time: 10.0, level: 0 },
            OccupancyChange { time: 30.0, level: 1 },
            OccupancyChange { time: 60.0, level: -1 },
            OccupancyChange { time: 150.0, level: 2 },
        ];
        let h = vehicle_sharing(&timeline, 100.0);
        assert_eq!(h.fractions, vec![0.5, 0.2, 0.3]);
        assert_eq!(h.at_least(1), 0.3);
        assert!(h.at_least(4).is_sign_positive());
    }

    #[test]
    fn analytic_ingress_at_860() {
        let (d, t, max) = analytic_ingress(860.0, 1.0);
        assert_eq!((d, t, max), (430.0, 430.0, 860.0));
        assert!((t / 60.0 - 7.17).abs() < 0.01);
        assert!((max / 60.0 - 14.33).abs() < 0.01);
        assert_eq!(analytic_ingress(0.0, 1.0), (0.0, 0.0, 0.0));
    }

    #[test]
    fn column_list_matches_row_fields() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.serialize(MetricsRow {
            spacing_m: 80.0,
            fleet: 1,
            rate: 1.0,
            submitted: 0,
            assigned_3h: 0,
            picked_3h: 0,
            dropped_3h: 0,
            rejected: 0,
            km_per_vehicle: 0.0,
            tortuosity: None,
            ingress_s: None,
            wait_s: None,
            onboard_s: None,
            egress_s: None,
            total_s: None,
            idle_frac: 1.0,
        })
        .unwrap();
        let text = String::from_utf8(w.into_inner().unwrap()).unwrap();
        assert_eq!(text.lines().next().unwrap(), METRICS_COLUMNS.join(","));
    }

    fn arb_point() -> impl Strategy<Value = Point> {
        (0u32..50, 0u32..50).prop_map(|(x, y)| p(x as f64 * 20.0, y as f64 * 20.0))
    }

    proptest! {
        #[test]
        fn min_visit_matches_permutations(start in arb_point(),
                                          others in prop::collection::vec(arb_point(), 1..=5)) {
            prop_assert_eq!(min_visit_length(start, &others).unwrap(),
                            permutation_oracle(start, &others));
        }

        #[test]
        fn min_visit_ignores_order_and_translation(start in arb_point(),
                                                   mut others in prop::collection::vec(arb_point(), 1..=4),
                                                   dx in 0u32..100, dy in 0u32..100) {
            let base = min_visit_length(start, &others).unwrap();
            others.reverse();
            prop_assert_eq!(min_visit_length(start, &others).unwrap(), base);
            let shift = |q: Point| p(q.x + dx as f64, q.y + dy as f64);
            let moved: Vec<_> = others.iter().map(|&q| shift(q)).collect();
            prop_assert_eq!(min_visit_length(shift(start), &moved).unwrap(), base);
        }

        #[test]
        fn tortuosity_never_below_one(traj in prop::collection::vec(arb_point(), 5..12)) {
            for i in 0..traj.len() - 4 {
                prop_assert!(tortuosity_at(&traj, i, 4).unwrap() >= 1.0);
            }
        }

        #[test]
        fn sharing_fractions_sum_to_one(steps in prop::collection::vec((0.0f64..50.0, -1i32..6), 0..20),
                                        horizon in 1.0f64..2000.0) {
            let mut t = 0.0;
            let timeline: Vec<_> = steps.iter().map(|&(dt, level)| {
                t += dt;
                OccupancyChange { time: t, level }
            }).collect();
            let h = vehicle_sharing(&timeline, horizon);
            prop_assert!((h.fractions.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
