//! Deterministic discrete-event simulator for Mobility-on-Demand fleets whose
//! pick-ups and drop-offs are restricted to a square lattice of admitted
//! stops of configurable spacing.
//!
//! Requests are dispatched online with a two-phase greedy insertion: first the
//! cheapest feasible position for the pick-up, then, with that fixed, the
//! cheapest feasible position for the drop-off. The fleet member whose
//! resulting schedule is cheapest wins.

pub mod demand;
pub mod dispatch;
pub mod engine;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod scheduling;

pub use demand::{generate_demand, to_stop_points, Action, DemandConfig, StopPoint, TripRequest};
pub use dispatch::{assign_request, insertion_cost, Assignment, DispatchOutcome, Rejection};
pub use engine::{run_simulation, run_with_demand, snapshot_counts, Scenario, SimulationOutput};
pub use geometry::{build_stop_lattice, rect_distance, GridWorld, Point, StopLattice};
pub use metrics::{metrics_row, qos_summary, MetricsRow};
pub use scheduling::{KinematicsConfig, Schedule, VehicleState};
