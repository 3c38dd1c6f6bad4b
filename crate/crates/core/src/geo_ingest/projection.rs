use super::{BuildingSet, Crs, GeoError, GeoPolygon};
use crate::geometry::Point;
use serde::{Deserialize, Serialize};

/// Mean Earth radius used by the local projection.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Largest bounding-box extent (either axis) accepted by [`project_to_local`].
pub const MAX_EXTENT_DEG: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLon {
    pub lat: f64,
    pub lon: f64,
}

/// Equirectangular projection about a fixed origin:
/// `x = R Δlon cos(lat0)`, `y = R Δlat` (angles in radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalProjection {
    pub origin: LatLon,
}

impl LocalProjection {
    pub fn new(origin: LatLon) -> Self {
        Self { origin }
    }

    /// `[lon, lat]` in degrees to `[x, y]` in meters.
    pub fn forward(&self, lonlat: Point) -> Point {
        let cos0 = self.origin.lat.to_radians().cos();
        [
            EARTH_RADIUS_M * (lonlat[0] - self.origin.lon).to_radians() * cos0,
            EARTH_RADIUS_M * (lonlat[1] - self.origin.lat).to_radians(),
        ]
    }

    /// `[x, y]` in meters back to `[lon, lat]` in degrees.
    pub fn inverse(&self, xy: Point) -> Point {
        let cos0 = self.origin.lat.to_radians().cos();
        [
            self.origin.lon + (xy[0] / (EARTH_RADIUS_M * cos0)).to_degrees(),
            self.origin.lat + (xy[1] / EARTH_RADIUS_M).to_degrees(),
        ]
    }
}

/// Projects a geographic building set into meters about the center of its
/// bounding box. Sets already in a local frame are returned unchanged.
pub fn project_to_local(buildings: &BuildingSet) -> Result<BuildingSet, GeoError> {
    if let Crs::Local { .. } = buildings.crs {
        return Ok(buildings.clone());
    }
    let Some((lo, hi)) = buildings.bounding_box() else {
        return Err(GeoError::EmptyBuildingSet);
    };
    for p in buildings.polygons.iter().flat_map(|p| p.ring.iter()) {
        if !(p[0] > -180.0 && p[0] < 180.0 && p[1] > -90.0 && p[1] < 90.0) {
            return Err(GeoError::CoordinateOutOfRange { lon: p[0], lat: p[1] });
        }
    }
    let extent_deg = (hi[0] - lo[0]).max(hi[1] - lo[1]);
    if extent_deg >= MAX_EXTENT_DEG {
        return Err(GeoError::DomainTooLarge {
            extent_deg,
            max_deg: MAX_EXTENT_DEG,
        });
    }
    let origin = LatLon {
        lon: 0.5 * (lo[0] + hi[0]),
        lat: 0.5 * (lo[1] + hi[1]),
    };
    let proj = LocalProjection::new(origin);
    let polygons = buildings
        .polygons
        .iter()
        .map(|p| GeoPolygon {
            id: p.id.clone(),
            ring: p.ring.iter().map(|&q| proj.forward(q)).collect(),
        })
        .collect();
    Ok(BuildingSet {
        polygons,
        crs: Crs::Local { origin },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn origin_maps_to_zero() {
        let proj = LocalProjection::new(LatLon { lat: 48.08, lon: 11.64 });
        assert_eq!(proj.forward([11.64, 48.08]), [0.0, 0.0]);
    }

    #[test]
    fn millidegree_north_at_equator() {
        let proj = LocalProjection::new(LatLon { lat: 0.0, lon: 0.0 });
        let [x, y] = proj.forward([0.0, 0.001]);
        // R * 0.001 * pi / 180
        let expected = 6_371_000.0 * 0.001 * std::f64::consts::PI / 180.0;
        assert_eq!(x, 0.0);
        assert!((y - expected).abs() < 1e-9);
        assert!((y - 111.19).abs() < 0.01);
    }

    #[test]
    fn wide_sets_are_refused() {
        let set = BuildingSet {
            polygons: vec![GeoPolygon {
                id: "a".into(),
                ring: vec![[10.0, 50.0], [11.5, 50.0], [11.5, 50.1], [10.0, 50.0]],
            }],
            crs: Crs::Geographic,
        };
        assert!(matches!(project_to_local(&set), Err(GeoError::DomainTooLarge { .. })));
    }

    #[test]
    fn projected_set_is_centered() {
        let set = BuildingSet {
            polygons: vec![GeoPolygon {
                id: "a".into(),
                ring: vec![[6.0, 51.0], [6.002, 51.0], [6.002, 51.001], [6.0, 51.001], [6.0, 51.0]],
            }],
            crs: Crs::Geographic,
        };
        let local = project_to_local(&set).unwrap();
        let (lo, hi) = local.bounding_box().unwrap();
        assert!((lo[0] + hi[0]).abs() < 1e-9 && (lo[1] + hi[1]).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn round_trip_recovers_degrees(
            lat0 in -80.0f64..80.0, lon0 in -170.0f64..170.0,
            dlat in -0.5f64..0.5, dlon in -0.5f64..0.5,
        ) {
            let proj = LocalProjection::new(LatLon { lat: lat0, lon: lon0 });
            let p = [lon0 + dlon, lat0 + dlat];
            let q = proj.inverse(proj.forward(p));
            prop_assert!((q[0] - p[0]).abs() < 1e-9);
            prop_assert!((q[1] - p[1]).abs() < 1e-9);
        }
    }
}
