use super::*;
use crate::geo_ingest::{DomainSpec, Rect};
use crate::meshgen::{BoundaryEdge, BoundaryTag, TriMesh};
use proptest::prelude::*;
use std::sync::Arc;

fn unit_right_triangle() -> TriMesh {
    TriMesh {
        vertices: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
        triangles: vec![[0, 1, 2]],
        boundary_edges: vec![
            BoundaryEdge { vertices: [0, 1], tag: BoundaryTag::Inflow },
            BoundaryEdge { vertices: [1, 2], tag: BoundaryTag::Outflow },
            BoundaryEdge { vertices: [0, 2], tag: BoundaryTag::NoSlipWall },
        ],
    }
}

fn grid(w: f64, h: f64, nx: usize, ny: usize) -> TriMesh {
    let d = DomainSpec::new(Rect { min: [0.0, 0.0], max: [w, h] }, [0.0, 1.0]).unwrap();
    TriMesh::structured(&d, nx, ny)
}

/// A slightly distorted grid so that no symmetry hides mistakes.
fn skewed(nx: usize, ny: usize) -> TriMesh {
    let mut m = grid(2.0, 1.0, nx, ny);
    for p in m.vertices.iter_mut() {
        let (x, y) = (p[0], p[1]);
        p[0] = x + 0.05 * (3.0 * y).sin() * x * (2.0 - x);
        p[1] = y + 0.04 * (2.0 * x).sin() * y * (1.0 - y);
    }
    m
}

fn space(m: &TriMesh, kind: SpaceKind) -> Arc<DofMap> {
    Arc::new(build_space(m, kind).unwrap())
}

#[test]
fn p1_mass_on_right_triangle() {
    let m = unit_right_triangle();
    let s = space(&m, SpaceKind::ScalarP1);
    let mm = assemble(&Form::Mass, &s, &s, &m).unwrap().to_dense();
    let area: f64 = 0.5;
    for i in 0..3 {
        for j in 0..3 {
            let e = area / 12.0 * if i == j { 2.0 } else { 1.0 };
            assert!((mm[i][j] - e).abs() < 1e-15);
        }
    }
}

#[test]
fn zero_coefficients_give_zero_matrices() {
    let m = skewed(3, 2);
    let v = space(&m, SpaceKind::VelocityP2Vector);
    assert_eq!(assemble(&Form::Viscous(0.0), &v, &v, &m).unwrap().nnz(), 0);
    let w = Field::zeros(v.clone());
    assert_eq!(assemble(&Form::Convection(&w), &v, &v, &m).unwrap().nnz(), 0);
    assert_eq!(assemble(&Form::ConvectionDerivative(&w), &v, &v, &m).unwrap().nnz(), 0);
}

#[test]
fn p1_mass_sums_to_area() {
    let m = skewed(5, 4);
    let s = space(&m, SpaceKind::ScalarP1);
    let mm = assemble(&Form::Mass, &s, &s, &m).unwrap();
    let total: f64 = mm.values.iter().sum();
    assert!((total - m.area()).abs() < 1e-12);
    assert!(mm.is_symmetric(1e-15));
}

#[test]
fn stiffness_annihilates_constants_and_integrates_gradients() {
    let m = skewed(4, 3);
    let s = space(&m, SpaceKind::ScalarP1);
    let k = assemble(&Form::Stiffness(1.0), &s, &s, &m).unwrap();
    let ones = vec![1.0; s.n_dofs()];
    assert!(k.mul_vec(&ones).iter().all(|v| v.abs() < 1e-12));
    // f = x + 2y: (grad f, grad f) = 5 |Omega|.
    let f = Field::interpolate_scalar(s.clone(), |p| p[0] + 2.0 * p[1]);
    assert!((k.bilinear(&f.values, &f.values) - 5.0 * m.area()).abs() < 1e-10);
}

#[test]
fn viscous_energy_of_a_quadratic_field() {
    // u = (x^2, xy): |grad u|^2 = 4x^2 + y^2 + x^2 = 5x^2 + y^2.
    let m = grid(1.0, 1.0, 3, 3);
    let v = space(&m, SpaceKind::VelocityP2Vector);
    let a = assemble(&Form::Viscous(2.0), &v, &v, &m).unwrap();
    let u = Field::interpolate_vector(v.clone(), |p| [p[0] * p[0], p[0] * p[1]]);
    let exact = 2.0 * (5.0 / 3.0 + 1.0 / 3.0);
    assert!((a.bilinear(&u.values, &u.values) - exact).abs() < 1e-12);
}

#[test]
fn convection_matches_residual_vector() {
    let m = skewed(3, 3);
    let v = space(&m, SpaceKind::VelocityP2Vector);
    let u = Field::interpolate_vector(v.clone(), |p| [p[1].sin() + 0.5, p[0] * p[1] - 0.2]);
    let c = assemble(&Form::Convection(&u), &v, &v, &m).unwrap();
    let direct = convection_vector(&m, &u).unwrap();
    let via = c.mul_vec(&u.values);
    for (a, b) in direct.iter().zip(&via) {
        assert!((a - b).abs() < 1e-13);
    }
}

#[test]
fn convection_jacobian_matches_finite_differences() {
    let m = skewed(2, 2);
    let v = space(&m, SpaceKind::VelocityP2Vector);
    let u = Field::interpolate_vector(v.clone(), |p| [p[1] * p[1] + 0.3, (p[0] + p[1]).cos()]);
    let jac = assemble(&Form::Convection(&u), &v, &v, &m)
        .unwrap()
        .lin_comb(1.0, &assemble(&Form::ConvectionDerivative(&u), &v, &v, &m).unwrap(), 1.0);
    let dir: Vec<f64> = (0..v.n_dofs()).map(|i| ((i * 7919) % 13) as f64 / 13.0 - 0.5).collect();
    let eps = 1e-6;
    let shifted = |s: f64| {
        let vals = u.values.iter().zip(&dir).map(|(a, b)| a + s * b).collect();
        convection_vector(&m, &Field::new(v.clone(), vals).unwrap()).unwrap()
    };
    let (fp, fm) = (shifted(eps), shifted(-eps));
    let jd = jac.mul_vec(&dir);
    for i in 0..v.n_dofs() {
        assert!(((fp[i] - fm[i]) / (2.0 * eps) - jd[i]).abs() < 1e-8);
    }
}

#[test]
fn assembly_is_deterministic() {
    let m = skewed(4, 4);
    let v = space(&m, SpaceKind::VelocityP2Vector);
    let u = Field::interpolate_vector(v.clone(), |p| [p[0], -p[1]]);
    let a = assemble(&Form::Convection(&u), &v, &v, &m).unwrap();
    let b = assemble(&Form::Convection(&u), &v, &v, &m).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
}

#[test]
fn mismatched_spaces_are_rejected() {
    let m = grid(1.0, 1.0, 2, 2);
    let other = grid(1.0, 1.0, 3, 2);
    let s = space(&m, SpaceKind::ScalarP1);
    assert!(matches!(assemble(&Form::Mass, &s, &s, &other), Err(FemError::MeshMismatch)));
    let v = space(&other, SpaceKind::VelocityP2Vector);
    let w = Field::zeros(v.clone());
    let v2 = space(&m, SpaceKind::VelocityP2Vector);
    assert!(assemble(&Form::Convection(&w), &v2, &v2, &m).is_err());
    let mut bad = Field::zeros(v2.clone());
    bad.values[3] = f64::NAN;
    assert!(matches!(assemble(&Form::Convection(&bad), &v2, &v2, &m), Err(FemError::NonFinite(3))));
}

#[test]
fn p2_reproduces_quadratics() {
    let m = skewed(3, 2);
    let v = space(&m, SpaceKind::VelocityP2Vector);
    let f = |p: [f64; 2]| [1.0 + p[0] - 2.0 * p[1] * p[1] + 0.5 * p[0] * p[1], p[0] * p[0] - 3.0 * p[1]];
    let u = Field::interpolate_vector(v.clone(), f);
    assert!(l2_error_vector(&u, &m, f) < 1e-12);
}

#[test]
fn boundary_normals_point_outward() {
    let m = grid(2.0, 1.0, 4, 2);
    let v = space(&m, SpaceKind::VelocityP2Vector);
    // Constant traction n on the bottom side integrates to (0, -2).
    let b = boundary_load(&m, &v, BoundaryTag::Inflow, |_, n| n).unwrap();
    let sx: f64 = b.iter().step_by(2).sum();
    let sy: f64 = b.iter().skip(1).step_by(2).sum();
    assert!(sx.abs() < 1e-14 && (sy + 2.0).abs() < 1e-13);
}

#[test]
fn tau_limits() {
    let g = basis::ElementGeom::new([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
    assert!((supg_tau(&g, [0.0, 0.0], 0.0, 0.4) - 0.2).abs() < 1e-15);
    let h = g.diameter_along([1.0, 0.0]);
    let tau = supg_tau(&g, [1e6, 0.0], 0.0, 1.0);
    assert!((tau / (h / 2e6) - 1.0).abs() < 1e-6);
    let hd = g.circumdiameter();
    let tau = supg_tau(&g, [0.0, 0.0], 0.3, 1e300);
    assert!((tau - hd * hd / 1.2).abs() < 1e-12);
}

// Simpson's rule on each boundary edge: exact for the quadratic trace.
fn boundary_flux(m: &TriMesh, u: &Field) -> f64 {
    let mut opposite = std::collections::HashMap::new();
    for tri in &m.triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            opposite.insert((a.min(b), a.max(b)), tri[(k + 2) % 3]);
        }
    }
    let mut flux = 0.0;
    for e in &m.boundary_edges {
        let [a, b] = e.vertices;
        let (pa, pb) = (m.vertices[a], m.vertices[b]);
        let t = [pb[0] - pa[0], pb[1] - pa[1]];
        let len = t[0].hypot(t[1]);
        let mut n = [t[1] / len, -t[0] / len];
        let o = m.vertices[opposite[&(a.min(b), a.max(b))]];
        if n[0] * (o[0] - pa[0]) + n[1] * (o[1] - pa[1]) > 0.0 {
            n = [-n[0], -n[1]];
        }
        let mid = u.space.edge_node(a, b).unwrap();
        let un = |node: usize| u.values[2 * node] * n[0] + u.values[2 * node + 1] * n[1];
        flux += len / 6.0 * (un(a) + 4.0 * un(mid) + un(b));
    }
    flux
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mass_is_positive_definite(seed in proptest::collection::vec(-1.0f64..1.0, 1..4)) {
        let m = skewed(3, 2);
        let v = space(&m, SpaceKind::VelocityP2Vector);
        let mm = assemble(&Form::Mass, &v, &v, &m).unwrap();
        let x: Vec<f64> = (0..v.n_dofs()).map(|i| seed[i % seed.len()] * ((i as f64) * 0.37).cos() + 1e-3).collect();
        prop_assert!(mm.bilinear(&x, &x) > 0.0);
        prop_assert!(mm.is_symmetric(1e-14));
    }

    #[test]
    fn divergence_theorem(coeffs in proptest::collection::vec(-1.0f64..1.0, 36)) {
        let m = skewed(3, 3);
        let v = space(&m, SpaceKind::VelocityP2Vector);
        let p = space(&m, SpaceKind::PressureP1);
        let d = assemble(&Form::Divergence, &v, &p, &m).unwrap();
        let u = Field::new(v.clone(), (0..v.n_dofs()).map(|i| coeffs[i % 36] * (1.0 + (i / 36) as f64 * 0.1)).collect()).unwrap();
        let total: f64 = d.mul_vec(&u.values).iter().sum();
        prop_assert!((total - boundary_flux(&m, &u)).abs() < 1e-11);
    }
}
