//! Filled contour regions of a linear scalar field by marching triangles.

use serde_json::{json, Value};
use urbanflow::geometry::Point;
use urbanflow::meshgen::TriMesh;

/// The part of one triangle where the linear interpolant is at least
/// `level`, as a counter-clockwise polygon (possibly empty).
pub fn clip_triangle(p: [Point; 3], v: [f64; 3], level: f64) -> Vec<Point> {
    let mut out = Vec::with_capacity(4);
    for i in 0..3 {
        let j = (i + 1) % 3;
        let (a, b) = (v[i] - level, v[j] - level);
        if a >= 0.0 {
            out.push(p[i]);
        }
        if (a >= 0.0) != (b >= 0.0) {
            let t = a / (a - b);
            out.push([p[i][0] + t * (p[j][0] - p[i][0]), p[i][1] + t * (p[j][1] - p[i][1])]);
        }
    }
    out.dedup();
    if out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Superlevel-set pieces `{c >= level}`, one polygon per cut triangle.
pub fn superlevel_polygons(mesh: &TriMesh, values: &[f64], level: f64) -> Vec<Vec<Point>> {
    mesh.triangles
        .iter()
        .filter_map(|t| {
            let poly = clip_triangle(
                [mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]],
                [values[t[0]], values[t[1]], values[t[2]]],
                level,
            );
            (poly.len() >= 3).then_some(poly)
        })
        .collect()
}

fn polygon_area(poly: &[Point]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum::<f64>()
}

/// Total area above `level`.
pub fn superlevel_area(mesh: &TriMesh, values: &[f64], level: f64) -> f64 {
    superlevel_polygons(mesh, values, level).iter().map(|p| polygon_area(p)).sum()
}

/// A FeatureCollection with one MultiPolygon feature per level. `to_lonlat`
/// maps mesh coordinates to `[lon, lat]`.
pub fn contour_geojson(
    mesh: &TriMesh,
    values: &[f64],
    levels: &[f64],
    time: f64,
    to_lonlat: impl Fn(Point) -> Point,
) -> Value {
    let features: Vec<Value> = levels
        .iter()
        .map(|&level| {
            let polys: Vec<Value> = superlevel_polygons(mesh, values, level)
                .into_iter()
                .map(|poly| {
                    let mut ring: Vec<Value> = poly
                        .iter()
                        .map(|&p| {
                            let q = to_lonlat(p);
                            json!([q[0], q[1]])
                        })
                        .collect();
                    ring.push(ring[0].clone());
                    json!([ring])
                })
                .collect();
            json!({
                "type": "Feature",
                "properties": { "level_ppm": level, "time_s": time },
                "geometry": { "type": "MultiPolygon", "coordinates": polys },
            })
        })
        .collect();
    json!({ "type": "FeatureCollection", "features": features })
}
