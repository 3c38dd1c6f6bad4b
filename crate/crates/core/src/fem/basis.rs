//! Element geometry and Lagrange shape functions on triangles.
//!
//! Quadratic local nodes are ordered `[v0, v1, v2, m01, m12, m20]`.

use crate::geometry::{circumcircle, Point};
use crate::meshgen::TriMesh;

#[derive(Debug, Clone, Copy)]
pub struct ElementGeom {
    pub p: [Point; 3],
    pub area: f64,
    /// Constant gradients of the barycentric coordinates.
    pub grad_l: [Point; 3],
}

impl ElementGeom {
    pub fn new(p: [Point; 3]) -> Self {
        let det = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
        let mut grad_l = [[0.0; 2]; 3];
        for (i, g) in grad_l.iter_mut().enumerate() {
            let a = p[(i + 1) % 3];
            let b = p[(i + 2) % 3];
            *g = [-(b[1] - a[1]) / det, (b[0] - a[0]) / det];
        }
        Self {
            p,
            area: 0.5 * det,
            grad_l,
        }
    }

    pub fn of(mesh: &TriMesh, t: usize) -> Self {
        Self::new(mesh.triangle_points(t))
    }

    pub fn map(&self, l: [f64; 3]) -> Point {
        [
            l[0] * self.p[0][0] + l[1] * self.p[1][0] + l[2] * self.p[2][0],
            l[0] * self.p[0][1] + l[1] * self.p[1][1] + l[2] * self.p[2][1],
        ]
    }

    /// Extent of the element along the unit direction `d`.
    pub fn diameter_along(&self, d: Point) -> f64 {
        let s: f64 = self.grad_l.iter().map(|g| (g[0] * d[0] + g[1] * d[1]).abs()).sum();
        2.0 / s
    }

    pub fn circumdiameter(&self) -> f64 {
        2.0 * circumcircle(self.p[0], self.p[1], self.p[2]).1
    }
}

pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

pub fn p2_grads(l: [f64; 3], g: &[Point; 3]) -> [Point; 6] {
    let vert = |i: usize| {
        let s = 4.0 * l[i] - 1.0;
        [s * g[i][0], s * g[i][1]]
    };
    let edge = |i: usize, j: usize| {
        [
            4.0 * (l[i] * g[j][0] + l[j] * g[i][0]),
            4.0 * (l[i] * g[j][1] + l[j] * g[i][1]),
        ]
    };
    [vert(0), vert(1), vert(2), edge(0, 1), edge(1, 2), edge(2, 0)]
}

/// Barycentric coordinates of the six quadratic nodes.
pub const P2_NODES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.5, 0.5, 0.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p2_is_nodal() {
        for (i, l) in P2_NODES.iter().enumerate() {
            let v = p2_values(*l);
            for (j, x) in v.iter().enumerate() {
                assert!((x - if i == j { 1.0 } else { 0.0 }).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let geom = ElementGeom::new([[0.3, 0.1], [1.4, 0.5], [0.2, 1.2]]);
        let l = [0.2, 0.5, 0.3];
        let x = geom.map(l);
        let grads = p2_grads(l, &geom.grad_l);
        let h = 1e-6;
        // Barycentric coordinates of a physical point via the constant gradients.
        let bary = |q: Point| {
            let mut m = [0.0; 3];
            for i in 0..3 {
                let a = geom.p[(i + 1) % 3];
                m[i] = geom.grad_l[i][0] * (q[0] - a[0]) + geom.grad_l[i][1] * (q[1] - a[1]);
            }
            m
        };
        for (d, e) in [[1.0, 0.0], [0.0, 1.0]].iter().enumerate() {
            let fp = p2_values(bary([x[0] + h * e[0], x[1] + h * e[1]]));
            let fm = p2_values(bary([x[0] - h * e[0], x[1] - h * e[1]]));
            for k in 0..6 {
                let fd = (fp[k] - fm[k]) / (2.0 * h);
                assert!((fd - grads[k][d]).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn diameter_along_axes() {
        let geom = ElementGeom::new([[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]);
        assert!((geom.diameter_along([1.0, 0.0]) - 2.0).abs() < 1e-14);
        assert!((geom.diameter_along([0.0, 1.0]) - 1.0).abs() < 1e-14);
        assert!((geom.area - 1.0).abs() < 1e-15);
    }
}
