//! Building footprint ingestion: GeoJSON parsing, footprint cleaning,
//! projection to a local metric frame and sizing of the rectangular
//! simulation domain.

mod domain;
mod geojson;
mod projection;

pub use domain::{blockage_ratio, compute_domain_bounds, interval_union_length, DomainOptions, DomainSpec, Rect, Side};
pub use geojson::{parse_building_file, to_geojson, ParsedBuildings, RejectedFeature};
pub use projection::{project_to_local, LatLon, LocalProjection, EARTH_RADIUS_M, MAX_EXTENT_DEG};

use crate::geometry::Point;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeoError {
    #[error("input is not valid UTF-8 (byte offset {offset})")]
    Utf8 { offset: usize },
    #[error("malformed JSON at byte offset {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("not a GeoJSON FeatureCollection: {0}")]
    NotFeatureCollection(String),
    #[error("coordinate out of range: lon {lon}, lat {lat}")]
    CoordinateOutOfRange { lon: f64, lat: f64 },
    #[error("bounding box spans {extent_deg:.4} degrees; at most {max_deg} allowed for the local projection")]
    DomainTooLarge { extent_deg: f64, max_deg: f64 },
    #[error("building set is empty")]
    EmptyBuildingSet,
    #[error("buildings are in geographic coordinates; project them to the local frame first")]
    NotProjected,
    #[error("wind direction ({0}, {1}) is not a unit vector")]
    NonUnitWind(f64, f64),
    #[error("blockage ratio limit {0} outside (0, 1)")]
    InvalidBlockageLimit(f64),
    #[error("blockage ratio {ratio:.4} is not below the limit {limit}")]
    BlockageExceeded { ratio: f64, limit: f64 },
    #[error("building {id} is not strictly inside the domain bounds")]
    BuildingOutsideDomain { id: String },
}

/// Coordinate system of a [`BuildingSet`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crs {
    /// Points are `[lon, lat]` in degrees.
    Geographic,
    /// Points are `[x, y]` in meters about `origin` (east, north).
    Local { origin: LatLon },
}

/// A cleaned building footprint: closed, counter-clockwise outer ring.
#[derive(Debug, Clone, PartialEq)]
pub struct GeoPolygon {
    pub id: String,
    /// Closed ring: the first point is repeated at the end.
    pub ring: Vec<Point>,
}

impl GeoPolygon {
    /// The distinct corners (ring without the closing point).
    pub fn corners(&self) -> &[Point] {
        &self.ring[..self.ring.len().saturating_sub(1)]
    }

    pub fn signed_area(&self) -> f64 {
        crate::geometry::signed_area(self.corners())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildingSet {
    pub polygons: Vec<GeoPolygon>,
    pub crs: Crs,
}

impl BuildingSet {
    pub fn is_empty(&self) -> bool {
        self.polygons.is_empty()
    }

    pub fn len(&self) -> usize {
        self.polygons.len()
    }

    pub fn total_area(&self) -> f64 {
        self.polygons.iter().map(GeoPolygon::signed_area).sum()
    }

    /// Axis-aligned bounding box `(min, max)` over all corners.
    pub fn bounding_box(&self) -> Option<(Point, Point)> {
        let mut it = self.polygons.iter().flat_map(|p| p.corners().iter().copied());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), p| {
            ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])])
        }))
    }

    pub fn origin(&self) -> Option<LatLon> {
        match self.crs {
            Crs::Local { origin } => Some(origin),
            Crs::Geographic => None,
        }
    }
}
