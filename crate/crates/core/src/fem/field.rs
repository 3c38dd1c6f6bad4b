use super::basis::{p2_grads, p2_values, ElementGeom};
use super::quadrature;
use super::{DofMap, FemError, SpaceKind};
use crate::geometry::Point;
use crate::meshgen::TriMesh;
use std::sync::Arc;

/// Coefficients of a finite-element function on a [`DofMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub space: Arc<DofMap>,
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(space: Arc<DofMap>, values: Vec<f64>) -> Result<Self, FemError> {
        if values.len() != space.n_dofs() {
            return Err(FemError::Dimension(format!(
                "field has {} values for {} dofs",
                values.len(),
                space.n_dofs()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FemError::NonFinite(i));
        }
        Ok(Self { space, values })
    }

    pub fn zeros(space: Arc<DofMap>) -> Self {
        let n = space.n_dofs();
        Self {
            space,
            values: vec![0.0; n],
        }
    }

    /// Nodal interpolation of a scalar function.
    pub fn interpolate_scalar(space: Arc<DofMap>, f: impl Fn(Point) -> f64) -> Self {
        assert_eq!(space.kind.components(), 1, "scalar interpolation on a vector space");
        let values = space.node_coords.iter().map(|&p| f(p)).collect();
        Self { space, values }
    }

    /// Nodal interpolation of a vector function.
    pub fn interpolate_vector(space: Arc<DofMap>, f: impl Fn(Point) -> [f64; 2]) -> Self {
        assert_eq!(space.kind.components(), 2, "vector interpolation on a scalar space");
        let values = space.node_coords.iter().flat_map(|&p| f(p)).collect();
        Self { space, values }
    }

    pub fn check_finite(&self) -> Result<(), FemError> {
        match self.values.iter().position(|v| !v.is_finite()) {
            Some(i) => Err(FemError::NonFinite(i)),
            None => Ok(()),
        }
    }

    pub fn local_values(&self, t: usize) -> Vec<f64> {
        self.space.cell_dofs(t).iter().map(|&d| self.values[d]).collect()
    }

    /// Value of a linear scalar field at barycentric point `l` of cell `t`.
    pub fn eval_scalar(&self, t: usize, l: [f64; 3]) -> f64 {
        debug_assert!(!self.space.kind.is_quadratic());
        let n = self.space.cell_nodes(t);
        l[0] * self.values[n[0]] + l[1] * self.values[n[1]] + l[2] * self.values[n[2]]
    }

    /// Value of a quadratic vector field at barycentric point `l` of cell `t`.
    pub fn eval_vector(&self, t: usize, l: [f64; 3]) -> Point {
        debug_assert_eq!(self.space.kind, SpaceKind::VelocityP2Vector);
        let phi = p2_values(l);
        let mut u = [0.0; 2];
        for (i, &n) in self.space.cell_nodes(t).iter().enumerate() {
            u[0] += phi[i] * self.values[2 * n];
            u[1] += phi[i] * self.values[2 * n + 1];
        }
        u
    }

    /// Gradient `g[c][d] = d u_c / d x_d` of a quadratic vector field.
    pub fn grad_vector(&self, t: usize, geom: &ElementGeom, l: [f64; 3]) -> [[f64; 2]; 2] {
        let dphi = p2_grads(l, &geom.grad_l);
        let mut g = [[0.0; 2]; 2];
        for (i, &n) in self.space.cell_nodes(t).iter().enumerate() {
            for (c, row) in g.iter_mut().enumerate() {
                let v = self.values[2 * n + c];
                row[0] += v * dphi[i][0];
                row[1] += v * dphi[i][1];
            }
        }
        g
    }

    /// Largest nodal vector magnitude.
    pub fn max_magnitude(&self) -> f64 {
        let c = self.space.kind.components();
        self.values
            .chunks(c)
            .map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}

/// `||u_h - u||_{L2}` for a linear scalar field.
pub fn l2_error_scalar(field: &Field, mesh: &TriMesh, exact: impl Fn(Point) -> f64) -> f64 {
    let rule = quadrature::degree6();
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let geom = ElementGeom::of(mesh, t);
        for (l, w) in rule.iter() {
            let e = field.eval_scalar(t, l) - exact(geom.map(l));
            acc += w * geom.area * e * e;
        }
    }
    acc.sqrt()
}

/// `||u_h - u||_{L2}` for a quadratic vector field.
pub fn l2_error_vector(field: &Field, mesh: &TriMesh, exact: impl Fn(Point) -> [f64; 2]) -> f64 {
    let rule = quadrature::degree6();
    let mut acc = 0.0;
    for t in 0..mesh.triangles.len() {
        let geom = ElementGeom::of(mesh, t);
        for (l, w) in rule.iter() {
            let uh = field.eval_vector(t, l);
            let u = exact(geom.map(l));
            acc += w * geom.area * ((uh[0] - u[0]).powi(2) + (uh[1] - u[1]).powi(2));
        }
    }
    acc.sqrt()
}
