//! Legacy ASCII VTK unstructured-grid writer.

use crate::error::CliError;
use std::fmt::Write as _;
use std::path::Path;
use urbanflow::fem::{DofMap, Field, SpaceKind};
use urbanflow::geometry::Point;
use urbanflow::meshgen::TriMesh;

/// Triangles to export, either the mesh itself or its quadratic refinement.
#[derive(Debug, Clone, PartialEq)]
pub struct VtkGrid {
    pub points: Vec<Point>,
    pub cells: Vec<[usize; 3]>,
}

impl VtkGrid {
    pub fn from_mesh(mesh: &TriMesh) -> Self {
        Self {
            points: mesh.vertices.clone(),
            cells: mesh.triangles.clone(),
        }
    }

    /// All quadratic nodes, each triangle split into four through its edge
    /// midpoints.
    pub fn quadratic(space: &DofMap) -> Self {
        let cells = (0..space.n_cells())
            .flat_map(|t| {
                let n = space.cell_nodes(t);
                [[n[0], n[3], n[5]], [n[3], n[1], n[4]], [n[5], n[4], n[2]], [n[3], n[4], n[5]]]
            })
            .collect();
        Self {
            points: space.node_coords.clone(),
            cells,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum PointData<'a> {
    Scalars(&'a str, &'a [f64]),
    Vectors(&'a str, &'a [Point]),
}

impl PointData<'_> {
    fn len(&self) -> usize {
        match self {
            PointData::Scalars(_, v) => v.len(),
            PointData::Vectors(_, v) => v.len(),
        }
    }
}

/// Node values of a field restricted to the first `n` nodes.
pub fn node_vectors(field: &Field, n: usize) -> Vec<Point> {
    let v = &field.values;
    (0..n).map(|i| [v[2 * i], v[2 * i + 1]]).collect()
}

/// Velocity samples matching the points of `grid`: vertices only, or all
/// quadratic nodes.
pub fn velocity_points(field: &Field, grid: &VtkGrid) -> Vec<Point> {
    debug_assert_eq!(field.space.kind, SpaceKind::VelocityP2Vector);
    node_vectors(field, grid.points.len())
}

pub fn render_vtk(title: &str, grid: &VtkGrid, point_data: &[PointData], cell_data: &[(&str, &[f64])]) -> Result<String, CliError> {
    let np = grid.points.len();
    let nc = grid.cells.len();
    if let Some(d) = point_data.iter().find(|d| d.len() != np) {
        return Err(CliError::Internal(format!("point data has {} values for {np} points", d.len())));
    }
    if let Some((name, _)) = cell_data.iter().find(|(_, v)| v.len() != nc) {
        return Err(CliError::Internal(format!("cell data `{name}` has the wrong length")));
    }
    let mut s = String::with_capacity(64 * (np + nc));
    let title: String = title.chars().filter(|c| *c != '\n').take(255).collect();
    let _ = writeln!(s, "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {np} double");
    for p in &grid.points {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let _ = writeln!(s, "CELLS {nc} {}", 4 * nc);
    for c in &grid.cells {
        let _ = writeln!(s, "3 {} {} {}", c[0], c[1], c[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nc}");
    for _ in 0..nc {
        s.push_str("5\n");
    }
    if !point_data.is_empty() {
        let _ = writeln!(s, "POINT_DATA {np}");
        for d in point_data {
            match d {
                PointData::Scalars(name, v) => {
                    let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
                    v.iter().for_each(|x| {
                        let _ = writeln!(s, "{x}");
                    });
                }
                PointData::Vectors(name, v) => {
                    let _ = writeln!(s, "VECTORS {name} double");
                    v.iter().for_each(|x| {
                        let _ = writeln!(s, "{} {} 0", x[0], x[1]);
                    });
                }
            }
        }
    }
    if !cell_data.is_empty() {
        let _ = writeln!(s, "CELL_DATA {nc}");
        for (name, v) in cell_data {
            let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            v.iter().for_each(|x| {
                let _ = writeln!(s, "{x}");
            });
        }
    }
    Ok(s)
}

pub fn write_vtk(
    path: &Path,
    title: &str,
    grid: &VtkGrid,
    point_data: &[PointData],
    cell_data: &[(&str, &[f64])],
) -> Result<(), CliError> {
    let text = render_vtk(title, grid, point_data, cell_data)?;
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}
