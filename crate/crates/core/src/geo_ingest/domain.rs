use super::{BuildingSet, Crs, GeoError};
use crate::geometry::{dot, Point};
use serde::{Deserialize, Serialize};

/// A side of the domain rectangle, named in the domain frame where the
/// wind blows along `+y`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Bottom,
    Right,
    Top,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn width(&self) -> f64 {
        self.max[0] - self.min[0]
    }

    pub fn height(&self) -> f64 {
        self.max[1] - self.min[1]
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains_strictly(&self, p: Point) -> bool {
        p[0] > self.min[0] && p[0] < self.max[0] && p[1] > self.min[1] && p[1] < self.max[1]
    }

    /// Corners counter-clockwise starting at `min`.
    pub fn corners(&self) -> [Point; 4] {
        [self.min, [self.max[0], self.min[1]], self.max, [self.min[0], self.max[1]]]
    }

    /// Endpoints of a side, ordered counter-clockwise.
    pub fn side(&self, side: Side) -> [Point; 2] {
        let [a, b, c, d] = self.corners();
        match side {
            Side::Bottom => [a, b],
            Side::Right => [b, c],
            Side::Top => [c, d],
            Side::Left => [d, a],
        }
    }
}

/// The simulation rectangle and its boundary decomposition.
///
/// `bounds` is axis aligned in the *domain frame*: the local metric frame
/// rotated so that `wind_direction` points along `+y`. Inflow is therefore
/// always the bottom side, outflow the top and the lateral sides are
/// no-slip walls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub bounds: Rect,
    /// Unit vector in the local (east, north) frame the wind blows towards.
    pub wind_direction: Point,
    pub inflow: Side,
    pub outflow: Side,
    pub noslip: [Side; 2],
    /// Characteristic length entering the Reynolds number, meters.
    pub characteristic_length: f64,
}

impl DomainSpec {
    /// Builds a spec around explicit frame bounds; the characteristic length
    /// is the crosswind width.
    pub fn new(bounds: Rect, wind_direction: Point) -> Result<Self, GeoError> {
        let wind_direction = normalize_wind(wind_direction)?;
        Ok(Self {
            bounds,
            wind_direction,
            inflow: Side::Bottom,
            outflow: Side::Top,
            noslip: [Side::Left, Side::Right],
            characteristic_length: bounds.width(),
        })
    }

    fn crosswind_axis(&self) -> Point {
        [self.wind_direction[1], -self.wind_direction[0]]
    }

    /// Local metric coordinates to domain-frame coordinates.
    pub fn to_frame(&self, p: Point) -> Point {
        [dot(p, self.crosswind_axis()), dot(p, self.wind_direction)]
    }

    /// Domain-frame coordinates back to local metric coordinates.
    pub fn from_frame(&self, q: Point) -> Point {
        let c = self.crosswind_axis();
        let d = self.wind_direction;
        [q[0] * c[0] + q[1] * d[0], q[0] * c[1] + q[1] * d[1]]
    }

    /// Open counter-clockwise building rings in frame coordinates.
    pub fn frame_rings(&self, buildings: &BuildingSet) -> Vec<Vec<Point>> {
        buildings
            .polygons
            .iter()
            .map(|p| p.corners().iter().map(|&q| self.to_frame(q)).collect())
            .collect()
    }

    /// Errors if any building corner touches or leaves the rectangle.
    pub fn check_contains(&self, buildings: &BuildingSet) -> Result<(), GeoError> {
        for p in &buildings.polygons {
            if !p.corners().iter().all(|&q| self.bounds.contains_strictly(self.to_frame(q))) {
                return Err(GeoError::BuildingOutsideDomain { id: p.id.clone() });
            }
        }
        Ok(())
    }

    /// Errors unless the blockage ratio is strictly below `br_max`.
    pub fn check_blockage(&self, buildings: &BuildingSet, br_max: f64) -> Result<f64, GeoError> {
        let ratio = blockage_ratio(buildings, self);
        if ratio < br_max {
            Ok(ratio)
        } else {
            Err(GeoError::BlockageExceeded { ratio, limit: br_max })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DomainOptions {
    /// Upper bound on the blockage ratio (exclusive).
    pub br_max: f64,
    /// Minimum lateral clearance in meters. Defaults to a quarter of the
    /// larger cluster extent.
    pub min_clearance: Option<f64>,
}

impl Default for DomainOptions {
    fn default() -> Self {
        Self {
            br_max: 0.17,
            min_clearance: None,
        }
    }
}

fn normalize_wind(d: Point) -> Result<Point, GeoError> {
    let norm = d[0].hypot(d[1]);
    if !norm.is_finite() || (norm - 1.0).abs() > 1e-6 {
        return Err(GeoError::NonUnitWind(d[0], d[1]));
    }
    Ok([d[0] / norm, d[1] / norm])
}

/// Total length covered by a set of closed intervals, overlaps counted once.
pub fn interval_union_length(intervals: &[(f64, f64)]) -> f64 {
    let mut sorted: Vec<(f64, f64)> = intervals.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    let mut current: Option<(f64, f64)> = None;
    for (a, b) in sorted {
        current = match current {
            Some((lo, hi)) if a <= hi => Some((lo, hi.max(b))),
            Some((lo, hi)) => {
                total += hi - lo;
                Some((a, b))
            }
            None => Some((a, b)),
        };
    }
    if let Some((lo, hi)) = current {
        total += hi - lo;
    }
    total
}

fn crosswind_intervals(buildings: &BuildingSet, domain: &DomainSpec) -> Vec<(f64, f64)> {
    domain
        .frame_rings(buildings)
        .iter()
        .map(|ring| {
            ring.iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), q| (lo.min(q[0]), hi.max(q[0])))
        })
        .collect()
}

/// Fraction of the inflow side covered by the union of the building
/// projections onto it.
pub fn blockage_ratio(buildings: &BuildingSet, domain: &DomainSpec) -> f64 {
    if buildings.is_empty() {
        return 0.0;
    }
    let covered = interval_union_length(&crosswind_intervals(buildings, domain));
    (covered / domain.bounds.width()).clamp(0.0, 1.0)
}

/// Sizes a wind-aligned rectangle around the buildings such that the
/// blockage ratio stays strictly below `options.br_max`.
///
/// The lateral clearance is what remains after widening the rectangle to
/// `max(P / br_max, E + 2 c_min)` (projection length `P`, crosswind extent
/// `E`); the upstream and downstream clearances equal it.
pub fn compute_domain_bounds(
    buildings: &BuildingSet,
    wind_direction: Point,
    options: DomainOptions,
) -> Result<DomainSpec, GeoError> {
    if buildings.is_empty() {
        return Err(GeoError::EmptyBuildingSet);
    }
    if buildings.crs == Crs::Geographic {
        return Err(GeoError::NotProjected);
    }
    if !(options.br_max > 0.0 && options.br_max < 1.0) {
        return Err(GeoError::InvalidBlockageLimit(options.br_max));
    }
    let placeholder = Rect { min: [0.0; 2], max: [1.0; 2] };
    let mut spec = DomainSpec::new(placeholder, wind_direction)?;

    let rings = spec.frame_rings(buildings);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for q in rings.iter().flatten() {
        lo = [lo[0].min(q[0]), lo[1].min(q[1])];
        hi = [hi[0].max(q[0]), hi[1].max(q[1])];
    }
    let crosswind_extent = hi[0] - lo[0];
    let streamwise_extent = hi[1] - lo[1];
    let projected = interval_union_length(&crosswind_intervals(buildings, &spec));
    let min_clearance = options
        .min_clearance
        .unwrap_or(0.25 * crosswind_extent.max(streamwise_extent))
        .max(f64::EPSILON * crosswind_extent.max(1.0));

    let width = (projected / options.br_max * (1.0 + 1e-6)).max(crosswind_extent + 2.0 * min_clearance);
    let clearance = 0.5 * (width - crosswind_extent);
    spec.bounds = Rect {
        min: [lo[0] - clearance, lo[1] - clearance],
        max: [hi[0] + clearance, hi[1] + clearance],
    };
    spec.characteristic_length = spec.bounds.width();
    Ok(spec)
}
