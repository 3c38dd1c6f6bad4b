use super::basis::{p2_grads, p2_values, ElementGeom};
use super::quadrature::{self, QuadratureRule};
use super::{DofMap, FemError, Field, SpaceKind, SparseMatrix, TripletBuilder};
use crate::geometry::{dot, Point};
use crate::meshgen::{BoundaryTag, TriMesh};

/// How the streamline-diffusion parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule {
    /// See [`supg_tau`].
    Standard,
    /// A fixed value everywhere; `Fixed(0.0)` gives plain Galerkin.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdCoefficients {
    /// Diffusion coefficient, m^2/s.
    pub k: f64,
    /// Time step, s.
    pub dt: f64,
    pub tau: TauRule,
}

/// Bilinear forms known to [`assemble`]. Rows are test functions, columns
/// trial functions.
#[derive(Debug, Clone, Copy)]
pub enum Form<'a> {
    Mass,
    /// `k (grad c, grad w)` on linear scalars.
    Stiffness(f64),
    /// `nu (grad u, grad v)` on quadratic vectors.
    Viscous(f64),
    /// `(q, div u)`; trial velocity, test pressure.
    Divergence,
    /// `((w . grad) u, v)`.
    Convection(&'a Field),
    /// `((u . grad) w, v)`, the second half of the convection Jacobian.
    ConvectionDerivative(&'a Field),
    /// Implicit Euler SUPG left-hand side for transport in the wind `u`.
    AdLhs(&'a Field, AdCoefficients),
    /// Operator applied to the previous concentration on the right.
    AdRhsOp(&'a Field, AdCoefficients),
}

/// Stabilization parameter
/// `[(2/dt)^2 + (2|u|/h)^2 + (4k/h^2)^2]^(-1/2)` with `h` the element
/// extent along `u` (circumdiameter for vanishing `u`).
pub fn supg_tau(geom: &ElementGeom, u: Point, k: f64, dt: f64) -> f64 {
    let speed = dot(u, u).sqrt();
    let h = if speed < 1e-12 {
        geom.circumdiameter()
    } else {
        geom.diameter_along([u[0] / speed, u[1] / speed])
    };
    let a = 2.0 / dt;
    let b = 2.0 * speed / h;
    let c = 4.0 * k / (h * h);
    1.0 / (a * a + b * b + c * c).sqrt()
}

fn require(space: &DofMap, kind: SpaceKind, what: &str) -> Result<(), FemError> {
    if space.kind == kind {
        Ok(())
    } else {
        Err(FemError::SpaceKind(format!("{what} needs {kind:?}, got {:?}", space.kind)))
    }
}

fn check_coefficient(f: &Field, mesh: &TriMesh) -> Result<(), FemError> {
    require(&f.space, SpaceKind::VelocityP2Vector, "velocity coefficient")?;
    f.space.check_mesh(mesh)?;
    f.check_finite()
}

/// Loops over cells, asks `kernel` for the dense local matrix (test rows,
/// trial columns) and scatters it in cell order.
fn assemble_cells(
    mesh: &TriMesh,
    trial: &DofMap,
    test: &DofMap,
    mut kernel: impl FnMut(usize, &ElementGeom, &mut [f64]),
) -> SparseMatrix {
    let n_trial = trial.kind.nodes_per_cell() * trial.kind.components();
    let n_test = test.kind.nodes_per_cell() * test.kind.components();
    let mut b = TripletBuilder::with_capacity(test.n_dofs(), trial.n_dofs(), mesh.triangles.len() * n_trial * n_test);
    let mut local = vec![0.0; n_trial * n_test];
    for t in 0..mesh.triangles.len() {
        let geom = ElementGeom::of(mesh, t);
        local.iter_mut().for_each(|v| *v = 0.0);
        kernel(t, &geom, &mut local);
        let rows = test.cell_dofs(t);
        let cols = trial.cell_dofs(t);
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                let v = local[i * n_trial + j];
                if v != 0.0 {
                    b.push(r, c, v);
                }
            }
        }
    }
    b.build()
}

/// Values and gradients of the scalar shape functions of a space at one
/// barycentric point.
fn shape(kind: SpaceKind, geom: &ElementGeom, l: [f64; 3]) -> (Vec<f64>, Vec<Point>) {
    if kind.is_quadratic() {
        (p2_values(l).to_vec(), p2_grads(l, &geom.grad_l).to_vec())
    } else {
        (l.to_vec(), geom.grad_l.to_vec())
    }
}

pub fn assemble(form: &Form<'_>, trial: &DofMap, test: &DofMap, mesh: &TriMesh) -> Result<SparseMatrix, FemError> {
    trial.check_mesh(mesh)?;
    test.check_mesh(mesh)?;
    match *form {
        Form::Mass => {
            if trial.kind != test.kind {
                return Err(FemError::SpaceKind("mass needs equal trial and test spaces".into()));
            }
            Ok(mass(mesh, trial))
        }
        Form::Stiffness(k) => {
            require(trial, SpaceKind::ScalarP1, "stiffness")?;
            require(test, SpaceKind::ScalarP1, "stiffness")?;
            Ok(assemble_cells(mesh, trial, test, |_, g, m| {
                for i in 0..3 {
                    for j in 0..3 {
                        m[i * 3 + j] = k * g.area * dot(g.grad_l[i], g.grad_l[j]);
                    }
                }
            }))
        }
        Form::Viscous(nu) => {
            require(trial, SpaceKind::VelocityP2Vector, "viscous form")?;
            require(test, SpaceKind::VelocityP2Vector, "viscous form")?;
            Ok(viscous(mesh, trial, nu))
        }
        Form::Divergence => {
            require(trial, SpaceKind::VelocityP2Vector, "divergence trial")?;
            require(test, SpaceKind::PressureP1, "divergence test")?;
            Ok(divergence(mesh, trial, test))
        }
        Form::Convection(w) => {
            require(trial, SpaceKind::VelocityP2Vector, "convection")?;
            require(test, SpaceKind::VelocityP2Vector, "convection")?;
            check_coefficient(w, mesh)?;
            Ok(convection(mesh, trial, w, false))
        }
        Form::ConvectionDerivative(w) => {
            require(trial, SpaceKind::VelocityP2Vector, "convection")?;
            require(test, SpaceKind::VelocityP2Vector, "convection")?;
            check_coefficient(w, mesh)?;
            Ok(convection(mesh, trial, w, true))
        }
        Form::AdLhs(u, c) | Form::AdRhsOp(u, c) => {
            require(trial, SpaceKind::ScalarP1, "transport")?;
            require(test, SpaceKind::ScalarP1, "transport")?;
            check_coefficient(u, mesh)?;
            if !(c.k >= 0.0 && c.dt > 0.0) {
                return Err(FemError::Coefficient("transport needs k >= 0 and dt > 0".into()));
            }
            Ok(transport(mesh, trial, u, c, matches!(form, Form::AdLhs(..))))
        }
    }
}

fn mass(mesh: &TriMesh, space: &DofMap) -> SparseMatrix {
    let rule = quadrature::degree4();
    let kind = space.kind;
    let comps = kind.components();
    let nloc = kind.nodes_per_cell();
    let n = nloc * comps;
    assemble_cells(mesh, space, space, |_, g, m| {
        for (l, w) in rule.iter() {
            let (phi, _) = shape(kind, g, l);
            let wa = w * g.area;
            for i in 0..nloc {
                for j in 0..nloc {
                    let v = wa * phi[i] * phi[j];
                    for c in 0..comps {
                        m[(i * comps + c) * n + j * comps + c] += v;
                    }
                }
            }
        }
    })
}

fn viscous(mesh: &TriMesh, space: &DofMap, nu: f64) -> SparseMatrix {
    let rule = quadrature::degree4();
    assemble_cells(mesh, space, space, |_, g, m| {
        for (l, w) in rule.iter() {
            let dphi = p2_grads(l, &g.grad_l);
            let wa = nu * w * g.area;
            for i in 0..6 {
                for j in 0..6 {
                    let v = wa * dot(dphi[i], dphi[j]);
                    m[(2 * i) * 12 + 2 * j] += v;
                    m[(2 * i + 1) * 12 + 2 * j + 1] += v;
                }
            }
        }
    })
}

fn divergence(mesh: &TriMesh, trial: &DofMap, test: &DofMap) -> SparseMatrix {
    let rule = quadrature::degree4();
    assemble_cells(mesh, trial, test, |_, g, m| {
        for (l, w) in rule.iter() {
            let dphi = p2_grads(l, &g.grad_l);
            let wa = w * g.area;
            for q in 0..3 {
                for j in 0..6 {
                    m[q * 12 + 2 * j] += wa * l[q] * dphi[j][0];
                    m[q * 12 + 2 * j + 1] += wa * l[q] * dphi[j][1];
                }
            }
        }
    })
}

fn convection(mesh: &TriMesh, space: &DofMap, w_field: &Field, derivative: bool) -> SparseMatrix {
    let rule = quadrature::degree6();
    assemble_cells(mesh, space, space, |t, g, m| {
        for (l, w) in rule.iter() {
            let phi = p2_values(l);
            let dphi = p2_grads(l, &g.grad_l);
            let wa = w * g.area;
            if derivative {
                let gw = w_field.grad_vector(t, g, l);
                for i in 0..6 {
                    for j in 0..6 {
                        let v = wa * phi[i] * phi[j];
                        for c in 0..2 {
                            for d in 0..2 {
                                m[(2 * i + c) * 12 + 2 * j + d] += v * gw[c][d];
                            }
                        }
                    }
                }
            } else {
                let wv = w_field.eval_vector(t, l);
                for i in 0..6 {
                    for j in 0..6 {
                        let v = wa * phi[i] * dot(wv, dphi[j]);
                        m[(2 * i) * 12 + 2 * j] += v;
                        m[(2 * i + 1) * 12 + 2 * j + 1] += v;
                    }
                }
            }
        }
    })
}

fn transport(mesh: &TriMesh, space: &DofMap, u: &Field, c: AdCoefficients, lhs: bool) -> SparseMatrix {
    let rule = quadrature::degree4();
    assemble_cells(mesh, space, space, |t, g, m| {
        for (l, w) in rule.iter() {
            let uq = u.eval_vector(t, l);
            let tau = match c.tau {
                TauRule::Standard => supg_tau(g, uq, c.k, c.dt),
                TauRule::Fixed(v) => v,
            };
            let wa = w * g.area;
            let adv: [f64; 3] = std::array::from_fn(|i| dot(uq, g.grad_l[i]));
            for i in 0..3 {
                for j in 0..3 {
                    let mut v = l[i] * l[j] + tau * adv[i] * l[j];
                    if lhs {
                        v += c.dt * (l[i] * adv[j] + c.k * dot(g.grad_l[i], g.grad_l[j]) + tau * adv[i] * adv[j]);
                    }
                    m[i * 3 + j] += wa * v;
                }
            }
        }
    })
}

/// The convection term `((u . grad) u, v)` as a vector over velocity dofs.
pub fn convection_vector(mesh: &TriMesh, u: &Field) -> Result<Vec<f64>, FemError> {
    check_coefficient(u, mesh)?;
    let rule = quadrature::degree6();
    let mut out = vec![0.0; u.space.n_dofs()];
    for t in 0..mesh.triangles.len() {
        let g = ElementGeom::of(mesh, t);
        let nodes = u.space.cell_nodes(t);
        for (l, w) in rule.iter() {
            let phi = p2_values(l);
            let uv = u.eval_vector(t, l);
            let gu = u.grad_vector(t, &g, l);
            let conv = [uv[0] * gu[0][0] + uv[1] * gu[0][1], uv[0] * gu[1][0] + uv[1] * gu[1][1]];
            let wa = w * g.area;
            for (i, &n) in nodes.iter().enumerate() {
                out[2 * n] += wa * phi[i] * conv[0];
                out[2 * n + 1] += wa * phi[i] * conv[1];
            }
        }
    }
    Ok(out)
}

/// `(f, v)` for a body force on a quadratic vector space.
pub fn load_vector(mesh: &TriMesh, space: &DofMap, f: impl Fn(Point) -> [f64; 2]) -> Result<Vec<f64>, FemError> {
    require(space, SpaceKind::VelocityP2Vector, "load vector")?;
    space.check_mesh(mesh)?;
    let rule: QuadratureRule = quadrature::degree6();
    let mut out = vec![0.0; space.n_dofs()];
    for t in 0..mesh.triangles.len() {
        let g = ElementGeom::of(mesh, t);
        let nodes = space.cell_nodes(t);
        for (l, w) in rule.iter() {
            let phi = p2_values(l);
            let fx = f(g.map(l));
            let wa = w * g.area;
            for (i, &n) in nodes.iter().enumerate() {
                out[2 * n] += wa * phi[i] * fx[0];
                out[2 * n + 1] += wa * phi[i] * fx[1];
            }
        }
    }
    Ok(out)
}

/// `(h, v)` over the edges tagged `tag`; `h` receives the point and the
/// outward unit normal.
pub fn boundary_load(
    mesh: &TriMesh,
    space: &DofMap,
    tag: BoundaryTag,
    h: impl Fn(Point, Point) -> [f64; 2],
) -> Result<Vec<f64>, FemError> {
    require(space, SpaceKind::VelocityP2Vector, "boundary load")?;
    space.check_mesh(mesh)?;
    // Third vertex opposite each boundary edge, for the outward direction.
    let mut opposite = std::collections::HashMap::new();
    for tri in &mesh.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            opposite.insert([a.min(b), a.max(b)], tri[(k + 2) % 3]);
        }
    }
    // 3-point Gauss-Legendre on [0, 1].
    let s5 = (0.6f64).sqrt();
    let gauss = [(0.5 * (1.0 - s5), 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 * (1.0 + s5), 5.0 / 18.0)];
    let mut out = vec![0.0; space.n_dofs()];
    for e in mesh.edges_with_tag(tag) {
        let [a, b] = e.vertices;
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let len = crate::geometry::dist(pa, pb);
        let mut n = [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len];
        let opp = mesh.vertices[opposite[&[a.min(b), a.max(b)]]];
        if dot(n, [opp[0] - pa[0], opp[1] - pa[1]]) > 0.0 {
            n = [-n[0], -n[1]];
        }
        let m = space.edge_node(a, b).ok_or(FemError::MeshMismatch)?;
        for (s, w) in gauss {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let hv = h(x, n);
            let phi = [(1.0 - s) * (1.0 - 2.0 * s), s * (2.0 * s - 1.0), 4.0 * s * (1.0 - s)];
            for (node, p) in [a, b, m].into_iter().zip(phi) {
                out[2 * node] += w * len * p * hv[0];
                out[2 * node + 1] += w * len * p * hv[1];
            }
        }
    }
    Ok(out)
}
