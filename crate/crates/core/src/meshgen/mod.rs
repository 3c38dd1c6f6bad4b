//! Boundary-conforming triangular meshes of the domain rectangle minus the
//! building footprints, refined by a three-tier size field.

mod cdt;
mod size_field;

pub use size_field::{SizeField, SizeFunction};

use crate::geo_ingest::{BuildingSet, DomainSpec, Rect, Side};
use crate::geometry::{
    circumcircle, dist, min_angle_deg, point_segment_distance, segments_intersect, orient, dot, sub, triangle_area,
    Point,
};
use cdt::{Cdt, RefineParams};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid size field: need 0 < lc_building <= lc_gap <= lc_far")]
    InvalidSizeField,
    #[error("input segments intersect: {first} and {second}")]
    ConstraintConflict { first: String, second: String },
    #[error("refinement exceeded the budget of {limit} triangles")]
    BudgetExceeded { limit: usize },
    #[error("building {0} is not strictly inside the domain")]
    BuildingOutsideDomain(String),
    #[error("boundary edge {0:?} lies on neither the domain border nor a building wall")]
    Topology([usize; 2]),
    #[error("mesh is not conforming: {0}")]
    NonConforming(String),
    #[error("internal meshing failure: {0}")]
    Internal(String),
}

/// Physical tag of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    Inflow,
    Outflow,
    NoSlipWall,
    BuildingWall,
}

impl BoundaryTag {
    pub const ALL: [BoundaryTag; 4] = [Self::Inflow, Self::Outflow, Self::NoSlipWall, Self::BuildingWall];

    /// Integer id used in exported cell data.
    pub fn code(self) -> u8 {
        match self {
            Self::Inflow => 1,
            Self::Outflow => 2,
            Self::NoSlipWall => 3,
            Self::BuildingWall => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// A conforming triangle mesh with tagged boundary edges. Coordinates are
/// in the domain frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

/// Unique edges of a mesh and the per-triangle edge table. Local edge `k`
/// of a triangle joins local vertices `k` and `(k + 1) % 3`.
#[derive(Debug, Clone)]
pub struct EdgeTopology {
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
    /// Number of triangles adjacent to each edge.
    pub valence: Vec<u8>,
}

impl TriMesh {
    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len())
            .map(|t| {
                let [a, b, c] = self.triangle_points(t);
                triangle_area(a, b, c)
            })
            .sum()
    }

    pub fn edge_topology(&self) -> EdgeTopology {
        let mut index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut valence: Vec<u8> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(self.triangles.len());
        for tri in &self.triangles {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                let e = *index.entry([a.min(b), a.max(b)]).or_insert_with(|| {
                    edges.push([a.min(b), a.max(b)]);
                    valence.push(0);
                    edges.len() - 1
                });
                valence[e] = valence[e].saturating_add(1);
                te[k] = e;
            }
            triangle_edges.push(te);
        }
        EdgeTopology {
            edges,
            triangle_edges,
            valence,
        }
    }

    /// Checks orientation, edge sharing and that the tagged edges are
    /// exactly the edges with a single adjacent triangle.
    pub fn check_conformity(&self) -> Result<(), MeshError> {
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= self.vertices.len()) {
                return Err(MeshError::NonConforming(format!("triangle {t} references a missing vertex")));
            }
            let [a, b, c] = self.triangle_points(t);
            if orient(a, b, c) <= 0.0 {
                return Err(MeshError::NonConforming(format!("triangle {t} is not positively oriented")));
            }
        }
        let topo = self.edge_topology();
        if let Some(e) = topo.valence.iter().position(|&n| n > 2) {
            return Err(MeshError::NonConforming(format!("edge {:?} shared by more than two triangles", topo.edges[e])));
        }
        let mut boundary: Vec<[usize; 2]> = topo
            .edges
            .iter()
            .zip(&topo.valence)
            .filter(|(_, &n)| n == 1)
            .map(|(e, _)| *e)
            .collect();
        let mut tagged: Vec<[usize; 2]> = self
            .boundary_edges
            .iter()
            .map(|b| [b.vertices[0].min(b.vertices[1]), b.vertices[0].max(b.vertices[1])])
            .collect();
        boundary.sort_unstable();
        tagged.sort_unstable();
        if tagged.windows(2).any(|w| w[0] == w[1]) {
            return Err(MeshError::NonConforming("boundary edge tagged twice".into()));
        }
        if boundary != tagged {
            return Err(MeshError::NonConforming(format!(
                "{} boundary edges but {} tagged edges",
                boundary.len(),
                tagged.len()
            )));
        }
        Ok(())
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |b| b.tag == tag)
    }

    pub fn tagged_length(&self, tag: BoundaryTag) -> f64 {
        self.edges_with_tag(tag)
            .map(|b| dist(self.vertices[b.vertices[0]], self.vertices[b.vertices[1]]))
            .sum()
    }

    /// SHA-256 over vertices, triangles and tagged edges in little-endian.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.vertices.len() as u64).to_le_bytes());
        for p in &self.vertices {
            h.update(p[0].to_le_bytes());
            h.update(p[1].to_le_bytes());
        }
        h.update((self.triangles.len() as u64).to_le_bytes());
        for t in &self.triangles {
            for v in t {
                h.update((*v as u64).to_le_bytes());
            }
        }
        h.update((self.boundary_edges.len() as u64).to_le_bytes());
        for b in &self.boundary_edges {
            h.update((b.vertices[0] as u64).to_le_bytes());
            h.update((b.vertices[1] as u64).to_le_bytes());
            h.update([b.tag.code()]);
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Structured `nx` x `ny` grid of the rectangle, each cell cut along
    /// its lower-left to upper-right diagonal, tagged for `domain`.
    pub fn structured(domain: &DomainSpec, nx: usize, ny: usize) -> Self {
        let r = domain.bounds;
        let (dx, dy) = (r.width() / nx as f64, r.height() / ny as f64);
        let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                let x = if i == nx { r.max[0] } else { r.min[0] + i as f64 * dx };
                let y = if j == ny { r.max[1] } else { r.min[1] + j as f64 * dy };
                vertices.push([x, y]);
            }
        }
        let id = |i: usize, j: usize| j * (nx + 1) + i;
        let mut triangles = Vec::with_capacity(2 * nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
        let mesh = TriMesh {
            vertices,
            triangles,
            boundary_edges: Vec::new(),
        };
        tag_boundaries(mesh, domain, &[]).expect("structured mesh boundary lies on the rectangle")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub min_angle_deg: f64,
    pub max_triangles: usize,
}

impl Default for MeshOptions {
    fn default() -> Self {
        Self {
            min_angle_deg: 20.0,
            max_triangles: 2_000_000,
        }
    }
}

/// Meshes `domain` minus `buildings` (local metric frame) with default
/// options.
pub fn triangulate(domain: &DomainSpec, buildings: &BuildingSet, size: &SizeField) -> Result<TriMesh, MeshError> {
    triangulate_with(domain, buildings, size, &MeshOptions::default())
}

pub fn triangulate_with(
    domain: &DomainSpec,
    buildings: &BuildingSet,
    size: &SizeField,
    options: &MeshOptions,
) -> Result<TriMesh, MeshError> {
    let rings = domain.frame_rings(buildings);
    for (ring, poly) in rings.iter().zip(&buildings.polygons) {
        if !ring.iter().all(|&q| domain.bounds.contains_strictly(q)) {
            return Err(MeshError::BuildingOutsideDomain(poly.id.clone()));
        }
    }
    let names: Vec<&str> = buildings.polygons.iter().map(|p| p.id.as_str()).collect();
    let mesh = triangulate_rings(&domain.bounds, &rings, &names, size, options)?;
    tag_boundaries(mesh, domain, &rings)
}

/// Meshes a frame-aligned rectangle minus counter-clockwise rings. The
/// result carries no boundary tags yet.
pub fn triangulate_rings(
    rect: &Rect,
    rings: &[Vec<Point>],
    names: &[&str],
    size: &SizeField,
    options: &MeshOptions,
) -> Result<TriMesh, MeshError> {
    if !size.is_valid() {
        return Err(MeshError::InvalidSizeField);
    }
    check_segment_conflicts(rings, names)?;

    let mut cdt = Cdt::new(rect.corners());
    let mut input_segments = vec![(0, 1), (1, 2), (2, 3), (3, 0)];
    for ring in rings {
        let ids = ring
            .iter()
            .map(|&q| cdt.insert_input_vertex(q))
            .collect::<Result<Vec<_>, _>>()?;
        for i in 0..ids.len() {
            input_segments.push((ids[i], ids[(i + 1) % ids.len()]));
        }
    }
    cdt.recover_segments(&input_segments, options.max_triangles)?;
    cdt.classify_regions();
    let size_fn = SizeFunction::new(*size, rings);
    cdt.refine(
        &size_fn,
        RefineParams {
            min_angle_rad: options.min_angle_deg.to_radians(),
            max_triangles: options.max_triangles,
        },
    )?;

    // Compact: keep vertices referenced by outside triangles, in id order.
    let triangles: Vec<[usize; 3]> = cdt.outside_triangles().collect();
    let mut remap = vec![usize::MAX; cdt.vertices().len()];
    for t in &triangles {
        for &v in t {
            remap[v] = 0;
        }
    }
    let mut vertices = Vec::new();
    for (v, slot) in remap.iter_mut().enumerate() {
        if *slot == 0 {
            *slot = vertices.len();
            vertices.push(cdt.vertices()[v]);
        }
    }
    let triangles = triangles.into_iter().map(|t| t.map(|v| remap[v])).collect();
    log::debug!("meshed {} vertices, {} live cdt triangles", vertices.len(), cdt.live_triangle_count());
    Ok(TriMesh {
        vertices,
        triangles,
        boundary_edges: Vec::new(),
    })
}

fn check_segment_conflicts(rings: &[Vec<Point>], names: &[&str]) -> Result<(), MeshError> {
    struct Seg {
        a: Point,
        b: Point,
        label: String,
    }
    let mut segs = Vec::new();
    for (r, ring) in rings.iter().enumerate() {
        let name = names.get(r).copied().unwrap_or("?");
        for i in 0..ring.len() {
            segs.push(Seg {
                a: ring[i],
                b: ring[(i + 1) % ring.len()],
                label: format!("building {name} edge {i}"),
            });
        }
    }
    let bbox = |s: &Seg| {
        (
            s.a[0].min(s.b[0]),
            s.a[0].max(s.b[0]),
            s.a[1].min(s.b[1]),
            s.a[1].max(s.b[1]),
        )
    };
    for i in 0..segs.len() {
        let bi = bbox(&segs[i]);
        for j in (i + 1)..segs.len() {
            let bj = bbox(&segs[j]);
            if bi.1 < bj.0 || bj.1 < bi.0 || bi.3 < bj.2 || bj.3 < bi.2 {
                continue;
            }
            let (s, t) = (&segs[i], &segs[j]);
            let shared = [s.a, s.b].iter().filter(|p| **p == t.a || **p == t.b).count();
            let conflict = match shared {
                0 => segments_intersect(s.a, s.b, t.a, t.b),
                1 => {
                    // Touching at a common endpoint; conflict only if collinear and overlapping.
                    let common = if s.a == t.a || s.a == t.b { s.a } else { s.b };
                    let so = if common == s.a { s.b } else { s.a };
                    let to = if common == t.a { t.b } else { t.a };
                    orient(so, common, to) == 0.0 && dot(sub(so, common), sub(to, common)) > 0.0
                }
                _ => true,
            };
            if conflict {
                return Err(MeshError::ConstraintConflict {
                    first: s.label.clone(),
                    second: t.label.clone(),
                });
            }
        }
    }
    Ok(())
}

/// Tags every boundary edge: rectangle sides by the domain's side roles,
/// edges on a building ring as building walls.
pub fn tag_boundaries(mut mesh: TriMesh, domain: &DomainSpec, rings: &[Vec<Point>]) -> Result<TriMesh, MeshError> {
    let r = &domain.bounds;
    let scale = r.width().max(r.height());
    let tol = 1e-9 * scale;
    let side_tag = |side: Side| {
        if side == domain.inflow {
            BoundaryTag::Inflow
        } else if side == domain.outflow {
            BoundaryTag::Outflow
        } else {
            BoundaryTag::NoSlipWall
        }
    };
    let on_side = |p: Point, side: Side| match side {
        Side::Bottom => (p[1] - r.min[1]).abs() <= tol,
        Side::Top => (p[1] - r.max[1]).abs() <= tol,
        Side::Left => (p[0] - r.min[0]).abs() <= tol,
        Side::Right => (p[0] - r.max[0]).abs() <= tol,
    };
    let on_wall = |p: Point| {
        rings.iter().any(|ring| {
            (0..ring.len()).any(|i| point_segment_distance(p, ring[i], ring[(i + 1) % ring.len()]) <= tol)
        })
    };

    let topo = mesh.edge_topology();
    let mut tagged = Vec::new();
    for (e, &n) in topo.edges.iter().zip(&topo.valence) {
        if n != 1 {
            continue;
        }
        let (p, q) = (mesh.vertices[e[0]], mesh.vertices[e[1]]);
        let mid = [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let side = [Side::Bottom, Side::Right, Side::Top, Side::Left]
            .into_iter()
            .find(|&s| on_side(p, s) && on_side(q, s));
        let tag = match side {
            Some(s) => side_tag(s),
            None if on_wall(p) && on_wall(q) && on_wall(mid) => BoundaryTag::BuildingWall,
            None => return Err(MeshError::Topology(*e)),
        };
        tagged.push(BoundaryEdge { vertices: *e, tag });
    }
    mesh.boundary_edges = tagged;
    Ok(mesh)
}

/// Aggregate quality statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    /// Largest circumradius to shortest-edge ratio.
    pub max_circumradius_ratio: f64,
    pub triangle_count: usize,
    pub vertex_count: usize,
}

pub fn mesh_quality(mesh: &TriMesh) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut max_ratio: f64 = 0.0;
    for t in 0..mesh.triangles.len() {
        let [a, b, c] = mesh.triangle_points(t);
        min_angle = min_angle.min(min_angle_deg(a, b, c));
        let (_, r) = circumcircle(a, b, c);
        let shortest = dist(a, b).min(dist(b, c)).min(dist(c, a));
        max_ratio = max_ratio.max(r / shortest);
    }
    QualityReport {
        min_angle_deg: if mesh.triangles.is_empty() { 0.0 } else { min_angle },
        max_circumradius_ratio: max_ratio,
        triangle_count: mesh.triangles.len(),
        vertex_count: mesh.vertices.len(),
    }
}
