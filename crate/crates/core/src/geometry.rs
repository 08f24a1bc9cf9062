//! Rectilinear grid world: admitted-stop lattice, nearest-stop mapping and
//! walk/drive travel times.
//!
//! The road network is a full rectilinear grid traversed at constant speed,
//! so the shortest-path length between two points is their L1 distance and
//! no explicit graph search is needed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("{field} must be strictly positive and finite (got {value})")]
    NonPositive { field: &'static str, value: f64 },
    #[error("stop spacing {spacing} m must be in (0, {max}] for a {width} m x {height} m area")]
    BadSpacing {
        spacing: f64,
        max: f64,
        width: f64,
        height: f64,
    },
}

/// A location in meters, `x` east and `y` north of the south-west corner.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Rectilinear (L1) distance in meters.
#[inline]
pub fn rect_distance(a: Point, b: Point) -> f64 {
    (a.x - b.x).abs() + (a.y - b.y).abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TravelMode {
    Walk,
    Drive,
}

/// 35 km/h expressed in m/s.
pub const DEFAULT_CRUISE_SPEED: f64 = 35.0 / 3.6;
/// 3.6 km/h expressed in m/s.
pub const DEFAULT_WALK_SPEED: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub area_width: f64,
    pub area_height: f64,
    /// Pitch between east-west oriented roads.
    pub ew_road_spacing: f64,
    /// Pitch between north-south oriented roads.
    pub ns_road_spacing: f64,
    pub walk_speed: f64,
    pub cruise_speed: f64,
}

impl Default for GridWorld {
    /// 4 km x 15 km (60 km²) with an 80 m / 200 m road grid.
    fn default() -> Self {
        Self {
            area_width: 4000.0,
            area_height: 15000.0,
            ew_road_spacing: 80.0,
            ns_road_spacing: 200.0,
            walk_speed: DEFAULT_WALK_SPEED,
            cruise_speed: DEFAULT_CRUISE_SPEED,
        }
    }
}

impl GridWorld {
    pub fn validate(&self) -> Result<(), GeometryError> {
        for (field, value) in [
            ("area_width", self.area_width),
            ("area_height", self.area_height),
            ("ew_road_spacing", self.ew_road_spacing),
            ("ns_road_spacing", self.ns_road_spacing),
            ("walk_speed", self.walk_speed),
            ("cruise_speed", self.cruise_speed),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(GeometryError::NonPositive { field, value });
            }
        }
        Ok(())
    }

    pub fn area_km2(&self) -> f64 {
        self.area_width * self.area_height / 1e6
    }

    pub fn contains(&self, p: Point) -> bool {
        (0.0..=self.area_width).contains(&p.x) && (0.0..=self.area_height).contains(&p.y)
    }

    pub fn speed(&self, mode: TravelMode) -> f64 {
        match mode {
            TravelMode::Walk => self.walk_speed,
            TravelMode::Drive => self.cruise_speed,
        }
    }

    /// Shortest-path travel time in seconds. Boarding and acceleration losses
    /// are not included.
    #[inline]
    pub fn travel_time(&self, a: Point, b: Point, mode: TravelMode) -> f64 {
        rect_distance(a, b) / self.speed(mode)
    }

    #[inline]
    pub fn drive_time(&self, a: Point, b: Point) -> f64 {
        rect_distance(a, b) / self.cruise_speed
    }

    #[inline]
    pub fn walk_time(&self, a: Point, b: Point) -> f64 {
        rect_distance(a, b) / self.walk_speed
    }
}

/// Index of an admitted stop inside its [`StopLattice`] (row-major).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StopId(pub u32);

impl StopId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Square lattice of admitted stop locations with pitch `spacing`.
///
/// Stop coordinates along each axis are `D/2 + i·D`. When the area is not a
/// multiple of `D`, one extra row/column is added and clamped onto the far
/// boundary, so that no point of the area is more than `D/2` away from a stop
/// along either axis.
#[derive(Debug, Clone, PartialEq)]
pub struct StopLattice {
    spacing: f64,
    xs: Vec<f64>,
    ys: Vec<f64>,
    stops: Vec<Point>,
}

fn axis_positions(extent: f64, spacing: f64) -> Vec<f64> {
    let half = spacing / 2.0;
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let c = half + f64::from(i) * spacing;
        if c <= extent {
            out.push(c);
            // cell [c - D/2, c + D/2] reaches the boundary
            if c + half >= extent {
                break;
            }
        } else {
            out.push(extent);
            break;
        }
        i += 1;
    }
    out
}

pub fn build_stop_lattice(world: &GridWorld, spacing: f64) -> Result<StopLattice, GeometryError> {
    world.validate()?;
    let max = world.area_width.min(world.area_height);
    if !(spacing.is_finite() && spacing > 0.0 && spacing <= max) {
        return Err(GeometryError::BadSpacing {
            spacing,
            max,
            width: world.area_width,
            height: world.area_height,
        });
    }
    let xs = axis_positions(world.area_width, spacing);
    let ys = axis_positions(world.area_height, spacing);
    let stops = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| Point::new(x, y)))
        .collect();
    Ok(StopLattice {
        spacing,
        xs,
        ys,
        stops,
    })
}

/// Index of the coordinate nearest to `v`; the lowest index wins ties.
fn nearest_on_axis(coords: &[f64], spacing: f64, v: f64) -> usize {
    let guess = ((v - spacing / 2.0) / spacing).round();
    let guess = guess.clamp(0.0, (coords.len() - 1) as f64) as usize;
    let lo = guess.saturating_sub(1);
    let hi = (guess + 1).min(coords.len() - 1);
    let mut best = lo;
    let mut best_d = (coords[lo] - v).abs();
    for (k, c) in coords.iter().enumerate().take(hi + 1).skip(lo + 1) {
        let d = (c - v).abs();
        if d < best_d {
            best = k;
            best_d = d;
        }
    }
    best
}

impl StopLattice {
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.stops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stops.is_empty()
    }

    pub fn columns(&self) -> usize {
        self.xs.len()
    }

    pub fn rows(&self) -> usize {
        self.ys.len()
    }

    pub fn stops(&self) -> &[Point] {
        &self.stops
    }

    pub fn point(&self, id: StopId) -> Point {
        self.stops[id.index()]
    }

    /// The stop minimizing L1 distance to `z` (the map φ). Ties go to the
    /// lowest stop index.
    ///
    /// L1 distance is separable, so the nearest stop is the product of the
    /// nearest column and the nearest row; the lowest row and column among
    /// tied candidates give the lowest row-major index.
    pub fn nearest_stop(&self, z: Point) -> StopId {
        let col = nearest_on_axis(&self.xs, self.spacing, z.x);
        let row = nearest_on_axis(&self.ys, self.spacing, z.y);
        StopId((row * self.xs.len() + col) as u32)
    }
}
