use super::FemError;
use crate::geometry::{midpoint, Point};
use crate::meshgen::{BoundaryTag, TriMesh};
use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SpaceKind {
    VelocityP2Vector,
    PressureP1,
    ScalarP1,
}

impl SpaceKind {
    pub fn is_quadratic(self) -> bool {
        self == Self::VelocityP2Vector
    }

    pub fn components(self) -> usize {
        match self {
            Self::VelocityP2Vector => 2,
            _ => 1,
        }
    }

    pub fn nodes_per_cell(self) -> usize {
        if self.is_quadratic() {
            6
        } else {
            3
        }
    }
}

/// Degrees of freedom of a Lagrange space on a mesh.
///
/// Nodes are the mesh vertices followed (quadratic spaces) by one node per
/// edge. Vector dofs are interleaved: component `c` of node `n` is dof
/// `2 n + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    pub kind: SpaceKind,
    pub n_nodes: usize,
    pub node_coords: Vec<Point>,
    cell_nodes: Vec<usize>,
    boundary: BTreeMap<BoundaryTag, Vec<usize>>,
    edge_node: HashMap<[usize; 2], usize>,
    mesh_fingerprint: u64,
}

pub fn mesh_fingerprint(mesh: &TriMesh) -> u64 {
    let mut h = DefaultHasher::new();
    mesh.vertices.len().hash(&mut h);
    for p in &mesh.vertices {
        p[0].to_bits().hash(&mut h);
        p[1].to_bits().hash(&mut h);
    }
    mesh.triangles.hash(&mut h);
    h.finish()
}

pub fn build_space(mesh: &TriMesh, kind: SpaceKind) -> Result<DofMap, FemError> {
    mesh.check_conformity().map_err(|e| FemError::Mesh(e.to_string()))?;
    let nv = mesh.vertices.len();
    let mut node_coords = mesh.vertices.clone();
    let npc = kind.nodes_per_cell();
    let mut cell_nodes = Vec::with_capacity(npc * mesh.triangles.len());
    let mut edge_node = HashMap::new();
    if kind.is_quadratic() {
        let topo = mesh.edge_topology();
        for e in &topo.edges {
            node_coords.push(midpoint(mesh.vertices[e[0]], mesh.vertices[e[1]]));
        }
        for (t, tri) in mesh.triangles.iter().enumerate() {
            cell_nodes.extend_from_slice(tri);
            for e in topo.triangle_edges[t] {
                cell_nodes.push(nv + e);
            }
        }
        for (i, e) in topo.edges.iter().enumerate() {
            edge_node.insert(*e, nv + i);
        }
    } else {
        for tri in &mesh.triangles {
            cell_nodes.extend_from_slice(tri);
        }
    }
    let comps = kind.components();
    let mut boundary: BTreeMap<BoundaryTag, Vec<usize>> = BTreeMap::new();
    for b in &mesh.boundary_edges {
        let [a, c] = b.vertices;
        let mut nodes = vec![a, c];
        if kind.is_quadratic() {
            nodes.push(edge_node[&[a.min(c), a.max(c)]]);
        }
        let set = boundary.entry(b.tag).or_default();
        for n in nodes {
            for k in 0..comps {
                set.push(comps * n + k);
            }
        }
    }
    for set in boundary.values_mut() {
        set.sort_unstable();
        set.dedup();
    }
    Ok(DofMap {
        kind,
        n_nodes: node_coords.len(),
        node_coords,
        cell_nodes,
        boundary,
        edge_node,
        mesh_fingerprint: mesh_fingerprint(mesh),
    })
}

impl DofMap {
    pub fn n_dofs(&self) -> usize {
        self.n_nodes * self.kind.components()
    }

    pub fn n_cells(&self) -> usize {
        self.cell_nodes.len() / self.kind.nodes_per_cell()
    }

    pub fn cell_nodes(&self, t: usize) -> &[usize] {
        let n = self.kind.nodes_per_cell();
        &self.cell_nodes[n * t..n * (t + 1)]
    }

    /// Global dofs of a cell in local order (node-major, components
    /// interleaved).
    pub fn cell_dofs(&self, t: usize) -> Vec<usize> {
        let c = self.kind.components();
        self.cell_nodes(t)
            .iter()
            .flat_map(|&n| (0..c).map(move |k| c * n + k))
            .collect()
    }

    /// Sorted dofs on edges carrying `tag`; empty if none.
    pub fn boundary_dofs(&self, tag: BoundaryTag) -> &[usize] {
        self.boundary.get(&tag).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Coordinates of the node owning `dof`.
    pub fn dof_coord(&self, dof: usize) -> Point {
        self.node_coords[dof / self.kind.components()]
    }

    /// Node sitting on the edge between two vertices (quadratic spaces).
    pub fn edge_node(&self, a: usize, b: usize) -> Option<usize> {
        self.edge_node.get(&[a.min(b), a.max(b)]).copied()
    }

    pub fn belongs_to(&self, mesh: &TriMesh) -> bool {
        self.n_cells() == mesh.triangles.len() && self.mesh_fingerprint == mesh_fingerprint(mesh)
    }

    pub fn check_mesh(&self, mesh: &TriMesh) -> Result<(), FemError> {
        if self.belongs_to(mesh) {
            Ok(())
        } else {
            Err(FemError::MeshMismatch)
        }
    }

    pub fn same_mesh(&self, other: &DofMap) -> bool {
        self.mesh_fingerprint == other.mesh_fingerprint && self.n_cells() == other.n_cells()
    }
}
