use super::{BuildingSet, Crs, GeoError, GeoPolygon};
use crate::geometry::{ring_self_intersects, signed_area, Point};
use geo::{BooleanOps, Intersects};
use serde_json::{json, Value};
use std::fmt::Write as _;

/// A feature that could not be turned into a building footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectedFeature {
    /// Position of the feature in the collection.
    pub index: usize,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct ParsedBuildings {
    pub buildings: BuildingSet,
    pub rejected: Vec<RejectedFeature>,
}

impl ParsedBuildings {
    /// One line per rejected feature, tab separated: `index id reason`.
    pub fn report(&self) -> String {
        let mut out = String::from("index\tid\treason\n");
        for r in &self.rejected {
            let _ = writeln!(out, "{}\t{}\t{}", r.index, r.id, r.reason);
        }
        out
    }
}

/// Parses a GeoJSON FeatureCollection of building footprints.
///
/// Each `Polygon` feature contributes its outer ring (holes are dropped).
/// Rings are closed, consecutive duplicates removed and the orientation
/// made counter-clockwise; overlapping or touching footprints are merged.
/// Features that cannot be cleaned are reported in
/// [`ParsedBuildings::rejected`] instead of failing the whole file.
pub fn parse_building_file(content: &[u8]) -> Result<ParsedBuildings, GeoError> {
    let text = std::str::from_utf8(content).map_err(|e| GeoError::Utf8 { offset: e.valid_up_to() })?;
    let root: Value = serde_json::from_str(text).map_err(|e| json_error(text, &e))?;

    let features = match root.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => root
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| GeoError::NotFeatureCollection("missing `features` array".into()))?,
        Some(other) => return Err(GeoError::NotFeatureCollection(format!("type is `{other}`"))),
        None => return Err(GeoError::NotFeatureCollection("missing `type`".into())),
    };

    let mut polygons = Vec::new();
    let mut rejected = Vec::new();
    for (index, feature) in features.iter().enumerate() {
        let id = feature_id(feature, index);
        match feature_ring(feature).and_then(clean_ring) {
            Ok(ring) => {
                if let Some(&[lon, lat]) = ring.iter().find(|[lon, lat]| !(-180.0 < *lon && *lon < 180.0 && -90.0 < *lat && *lat < 90.0)) {
                    return Err(GeoError::CoordinateOutOfRange { lon, lat });
                }
                polygons.push(GeoPolygon { id, ring: close(ring) });
            }
            Err(reason) => rejected.push(RejectedFeature { index, id, reason }),
        }
    }

    let polygons = merge_overlapping(polygons, &mut rejected);
    Ok(ParsedBuildings {
        buildings: BuildingSet {
            polygons,
            crs: Crs::Geographic,
        },
        rejected,
    })
}

/// Serializes a building set back to a GeoJSON FeatureCollection.
pub fn to_geojson(buildings: &BuildingSet) -> String {
    let features: Vec<Value> = buildings
        .polygons
        .iter()
        .map(|p| {
            json!({
                "type": "Feature",
                "id": p.id,
                "properties": { "building": "yes" },
                "geometry": {
                    "type": "Polygon",
                    "coordinates": [p.ring.iter().map(|q| vec![q[0], q[1]]).collect::<Vec<_>>()],
                }
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({ "type": "FeatureCollection", "features": features }))
        .expect("serializing a JSON value cannot fail")
}

fn json_error(text: &str, e: &serde_json::Error) -> GeoError {
    let (line, column) = (e.line(), e.column());
    let offset = text
        .split_inclusive('\n')
        .take(line.saturating_sub(1))
        .map(str::len)
        .sum::<usize>()
        + column.saturating_sub(1);
    GeoError::Json {
        offset: offset.min(text.len()),
        line,
        column,
        message: e.to_string(),
    }
}

fn feature_id(feature: &Value, index: usize) -> String {
    let pick = |v: &Value| match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    };
    feature
        .get("id")
        .and_then(pick)
        .or_else(|| feature.get("properties").and_then(|p| p.get("id")).and_then(pick))
        .unwrap_or_else(|| format!("feature-{index}"))
}

fn feature_ring(feature: &Value) -> Result<Vec<Point>, String> {
    let geometry = feature.get("geometry").ok_or("feature has no geometry")?;
    let kind = geometry.get("type").and_then(Value::as_str).unwrap_or("<none>");
    if kind != "Polygon" {
        return Err(format!("geometry type `{kind}` is not Polygon"));
    }
    let outer = geometry
        .get("coordinates")
        .and_then(Value::as_array)
        .and_then(|rings| rings.first())
        .and_then(Value::as_array)
        .ok_or("polygon has no outer ring")?;
    outer
        .iter()
        .map(|pos| {
            let pos = pos.as_array().ok_or("position is not an array")?;
            match (pos.first().and_then(Value::as_f64), pos.get(1).and_then(Value::as_f64)) {
                (Some(x), Some(y)) if x.is_finite() && y.is_finite() => Ok([x, y]),
                _ => Err("position is not a pair of finite numbers".to_string()),
            }
        })
        .collect()
}

/// Returns the open, counter-clockwise ring without repeated points.
fn clean_ring(mut ring: Vec<Point>) -> Result<Vec<Point>, String> {
    ring.dedup();
    while ring.len() > 1 && ring.first() == ring.last() {
        ring.pop();
    }
    let mut distinct = ring.clone();
    distinct.sort_by(|a, b| a.partial_cmp(b).unwrap());
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(format!("ring has {} distinct vertices, at least 3 required", distinct.len()));
    }
    if ring_self_intersects(&ring) {
        return Err("ring is self-intersecting".into());
    }
    let area = signed_area(&ring);
    if area == 0.0 {
        return Err("ring has zero area".into());
    }
    if area < 0.0 {
        ring.reverse();
    }
    Ok(ring)
}

fn close(mut ring: Vec<Point>) -> Vec<Point> {
    ring.push(ring[0]);
    ring
}

fn to_geo(p: &GeoPolygon) -> geo::Polygon<f64> {
    geo::Polygon::new(p.ring.iter().map(|q| (q[0], q[1])).collect::<Vec<_>>().into(), vec![])
}

/// Merges footprints that overlap or touch into single outlines.
fn merge_overlapping(polygons: Vec<GeoPolygon>, rejected: &mut Vec<RejectedFeature>) -> Vec<GeoPolygon> {
    let n = polygons.len();
    let shapes: Vec<_> = polygons.iter().map(to_geo).collect();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if shapes[i].intersects(&shapes[j]) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[r]].push(i);
    }

    let mut out = Vec::with_capacity(groups.len());
    for group in groups {
        if let [single] = group[..] {
            out.push(polygons[single].clone());
            continue;
        }
        let id = group.iter().map(|&i| polygons[i].id.as_str()).collect::<Vec<_>>().join("+");
        let mut merged = geo::MultiPolygon::new(vec![shapes[group[0]].clone()]);
        for &i in &group[1..] {
            merged = merged.union(&shapes[i]);
        }
        let parts = merged.0.len();
        for (k, part) in merged.0.iter().enumerate() {
            let part_id = if parts == 1 { id.clone() } else { format!("{id}#{k}") };
            let ring: Vec<Point> = part.exterior().coords().map(|c| [c.x, c.y]).collect();
            match clean_ring(ring) {
                Ok(ring) => out.push(GeoPolygon { id: part_id, ring: close(ring) }),
                Err(reason) => rejected.push(RejectedFeature {
                    index: group[0],
                    id: part_id,
                    reason: format!("merged outline invalid: {reason}"),
                }),
            }
        }
    }
    out
}
