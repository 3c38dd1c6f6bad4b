//! Transient advection-diffusion of a contaminant in a steady wind, SUPG
//! stabilized and stepped with implicit Euler.

use crate::fem::basis::ElementGeom;
use crate::fem::{
    apply_dirichlet, assemble, quadrature, AdCoefficients, Constraints, DofMap, FemError, Field, Form, SpaceKind,
    SparseLu, SparseMatrix, TauRule,
};
use crate::geometry::{orient, Point};
use crate::meshgen::{BoundaryTag, TriMesh};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

pub use crate::fem::supg_tau;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdError {
    #[error("invalid transport parameters: {0}")]
    InvalidParams(String),
    #[error("point {0:?} is not inside the fluid domain")]
    Placement(Point),
    #[error("non-finite concentration after step {step}")]
    Instability { step: usize },
    #[error(transparent)]
    Fem(#[from] FemError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdParams {
    /// Diffusion coefficient, m^2/s.
    pub k: f64,
    /// Time step, s.
    pub dt: f64,
    /// End of the simulated window, s.
    pub t_final: f64,
    /// Concentration imposed on the inflow side, ppm. `None` leaves every
    /// boundary with zero diffusive flux.
    pub inflow_value: Option<f64>,
}

impl AdParams {
    pub fn validate(&self) -> Result<(), AdError> {
        if !(self.k >= 0.0 && self.k.is_finite()) {
            return Err(AdError::InvalidParams(format!("k must be non-negative, got {}", self.k)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(AdError::InvalidParams(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= self.dt) {
            return Err(AdError::InvalidParams(format!("t_final {} is shorter than dt {}", self.t_final, self.dt)));
        }
        Ok(())
    }

    /// Number of implicit Euler steps covering `[0, t_final]`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil() as usize
    }

    fn coefficients(&self, tau: TauRule) -> AdCoefficients {
        AdCoefficients {
            k: self.k,
            dt: self.dt,
            tau,
        }
    }
}

/// Truncated Gaussian bell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialPlume {
    pub center: Point,
    /// Peak concentration, ppm.
    pub amplitude: f64,
    /// Truncation radius, m.
    pub radius: f64,
    /// Standard deviation, m.
    pub width: f64,
}

impl InitialPlume {
    pub fn validate(&self) -> Result<(), AdError> {
        if !(self.amplitude > 0.0 && self.width > 0.0 && self.radius >= self.width) {
            return Err(AdError::InvalidParams(
                "plume needs amplitude > 0 and radius >= width > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn value(&self, x: Point) -> f64 {
        let r2 = (x[0] - self.center[0]).powi(2) + (x[1] - self.center[1]).powi(2);
        if r2 <= self.radius * self.radius {
            self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
        } else {
            0.0
        }
    }
}

/// A concentration snapshot in ppm.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationField {
    pub field: Field,
    /// Seconds since the release.
    pub time: f64,
}

/// Triangle containing `x` and its barycentric coordinates.
pub fn locate(mesh: &TriMesh, x: Point) -> Option<(usize, [f64; 3])> {
    mesh.triangles.iter().enumerate().find_map(|(t, tri)| {
        let [a, b, c] = tri.map(|v| mesh.vertices[v]);
        let area = orient(a, b, c);
        let l = [orient(x, b, c) / area, orient(a, x, c) / area, orient(a, b, x) / area];
        l.iter().all(|&v| v >= 0.0).then_some((t, l))
    })
}

pub fn gaussian_initial(
    mesh: &TriMesh,
    space: Arc<DofMap>,
    plume: &InitialPlume,
) -> Result<ConcentrationField, AdError> {
    plume.validate()?;
    if space.kind != SpaceKind::ScalarP1 {
        return Err(FemError::SpaceKind("concentration lives on linear scalars".into()).into());
    }
    space.check_mesh(mesh)?;
    if locate(mesh, plume.center).is_none() {
        return Err(AdError::Placement(plume.center));
    }
    Ok(ConcentrationField {
        field: Field::interpolate_scalar(space, |x| plume.value(x)),
        time: 0.0,
    })
}

/// Left-hand matrix and right-hand operator of one implicit Euler step.
pub fn assemble_ad_system(
    mesh: &TriMesh,
    space: &DofMap,
    wind: &Field,
    params: &AdParams,
) -> Result<(SparseMatrix, SparseMatrix), AdError> {
    assemble_ad_system_with(mesh, space, wind, params, TauRule::Standard)
}

pub fn assemble_ad_system_with(
    mesh: &TriMesh,
    space: &DofMap,
    wind: &Field,
    params: &AdParams,
    tau: TauRule,
) -> Result<(SparseMatrix, SparseMatrix), AdError> {
    params.validate()?;
    if !wind.space.same_mesh(space) {
        return Err(FemError::MeshMismatch.into());
    }
    let c = params.coefficients(tau);
    let lhs = assemble(&Form::AdLhs(wind, c), space, space, mesh)?;
    let rhs = assemble(&Form::AdRhsOp(wind, c), space, space, mesh)?;
    Ok((lhs, rhs))
}

/// A factored time-stepping system.
#[derive(Debug)]
pub struct AdSystem {
    pub space: Arc<DofMap>,
    pub rhs_op: SparseMatrix,
    pub constraints: Constraints,
    pub dt: f64,
    lu: SparseLu,
    /// Right-hand side contribution of the constrained values.
    offset: Vec<f64>,
    fixed: Vec<bool>,
}

impl AdSystem {
    pub fn new(
        space: Arc<DofMap>,
        lhs: &SparseMatrix,
        rhs_op: SparseMatrix,
        constraints: Constraints,
        dt: f64,
    ) -> Result<Self, AdError> {
        let n = space.n_dofs();
        let (a, offset) = apply_dirichlet(lhs, &vec![0.0; n], &constraints)?;
        Ok(Self {
            lu: SparseLu::factor(&a)?,
            fixed: constraints.mask(n),
            space,
            rhs_op,
            constraints,
            dt,
            offset,
        })
    }

    /// Assembles and factors the system for a wind field.
    pub fn build(mesh: &TriMesh, space: Arc<DofMap>, wind: &Field, params: &AdParams) -> Result<Self, AdError> {
        let (lhs, rhs) = assemble_ad_system(mesh, &space, wind, params)?;
        let mut c = Constraints::new();
        if let Some(g) = params.inflow_value {
            for &d in space.boundary_dofs(BoundaryTag::Inflow) {
                c.insert(d, g)?;
            }
        }
        Self::new(space, &lhs, rhs, c, params.dt)
    }
}

/// Advances one implicit Euler step.
pub fn step(c_n: &ConcentrationField, system: &AdSystem) -> Result<ConcentrationField, AdError> {
    if !c_n.field.space.same_mesh(&system.space) || c_n.field.values.len() != system.space.n_dofs() {
        return Err(FemError::MeshMismatch.into());
    }
    let mut b = system.rhs_op.mul_vec(&c_n.field.values);
    for (i, bi) in b.iter_mut().enumerate() {
        *bi = if system.fixed[i] { system.offset[i] } else { *bi + system.offset[i] };
    }
    let x = system.lu.solve(&b)?;
    Ok(ConcentrationField {
        field: Field {
            space: system.space.clone(),
            values: x,
        },
        time: c_n.time + system.dt,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepStats {
    pub step: usize,
    pub time: f64,
    pub min: f64,
    pub max: f64,
    /// Integral of the concentration over the domain, ppm m^2.
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeSample {
    pub time: f64,
    pub probe_id: usize,
    pub x: f64,
    pub y: f64,
    pub concentration: f64,
}

#[derive(Debug, Clone)]
pub struct TransientResult {
    /// Fields at `t = 0` and every `save_interval` steps (and the last step).
    pub saved: Vec<ConcentrationField>,
    pub initial: StepStats,
    /// One record per executed step.
    pub stats: Vec<StepStats>,
    pub probes: Vec<ProbeSample>,
    /// Most negative concentration seen, or zero.
    pub max_undershoot: f64,
}

impl TransientResult {
    pub fn final_field(&self) -> &ConcentrationField {
        self.saved.last().expect("the initial field is always saved")
    }
}

/// Row sums of the linear mass matrix, so that `mass = weights . c`.
pub fn mass_weights(mesh: &TriMesh, space: &DofMap) -> Result<Vec<f64>, AdError> {
    let m = assemble(&Form::Mass, space, space, mesh)?;
    Ok((0..m.nrows).map(|i| m.row(i).map(|(_, v)| v).sum()).collect())
}

fn stats(step: usize, c: &ConcentrationField, weights: &[f64]) -> StepStats {
    let v = &c.field.values;
    StepStats {
        step,
        time: c.time,
        min: v.iter().copied().fold(f64::INFINITY, f64::min),
        max: v.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mass: v.iter().zip(weights).map(|(a, b)| a * b).sum(),
    }
}

pub fn run_transient(
    mesh: &TriMesh,
    initial: &ConcentrationField,
    system: &AdSystem,
    params: &AdParams,
    probes: &[Point],
    save_interval: usize,
) -> Result<TransientResult, AdError> {
    params.validate()?;
    let located = probes
        .iter()
        .map(|&p| locate(mesh, p).ok_or(AdError::Placement(p)))
        .collect::<Result<Vec<_>, _>>()?;
    let weights = mass_weights(mesh, &system.space)?;
    let save_interval = save_interval.max(1);
    let n = params.n_steps();
    let mut out = TransientResult {
        saved: vec![initial.clone()],
        initial: stats(0, initial, &weights),
        stats: Vec::with_capacity(n),
        probes: Vec::new(),
        max_undershoot: 0.0,
    };
    let record_probes = |c: &ConcentrationField, out: &mut Vec<ProbeSample>| {
        for (id, (&p, &(t, l))) in probes.iter().zip(&located).enumerate() {
            out.push(ProbeSample {
                time: c.time,
                probe_id: id,
                x: p[0],
                y: p[1],
                concentration: c.field.eval_scalar(t, l),
            });
        }
    };
    record_probes(initial, &mut out.probes);
    let mut c = initial.clone();
    for k in 1..=n {
        c = step(&c, system)?;
        if c.field.values.iter().any(|v| !v.is_finite()) {
            return Err(AdError::Instability { step: k });
        }
        let s = stats(k, &c, &weights);
        out.max_undershoot = out.max_undershoot.max(-s.min);
        out.stats.push(s);
        record_probes(&c, &mut out.probes);
        if k % save_interval == 0 || k == n {
            out.saved.push(c.clone());
        }
    }
    Ok(out)
}

/// Largest stable-looking step: element Courant number `|u| dt / h` at
/// most `courant` everywhere.
pub fn courant_dt(mesh: &TriMesh, wind: &Field, courant: f64) -> f64 {
    let rule = quadrature::degree4();
    let mut rate: f64 = 0.0;
    for t in 0..mesh.triangles.len() {
        let g = ElementGeom::of(mesh, t);
        for (l, _) in rule.iter() {
            let u = wind.eval_vector(t, l);
            let s = u[0].hypot(u[1]);
            if s > 1e-12 {
                rate = rate.max(s / g.diameter_along([u[0] / s, u[1] / s]));
            }
        }
    }
    if rate == 0.0 {
        f64::INFINITY
    } else {
        courant / rate
    }
}

/// Mass, centroid and per-axis variance of a linear scalar field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mass: f64,
    pub mean: Point,
    pub variance: Point,
}

pub fn moments(c: &Field, mesh: &TriMesh) -> Moments {
    let rule = quadrature::degree4();
    let (mut m0, mut m1, mut m2) = (0.0, [0.0; 2], [0.0; 2]);
    for t in 0..mesh.triangles.len() {
        let g = ElementGeom::of(mesh, t);
        for (l, w) in rule.iter() {
            let x = g.map(l);
            let v = w * g.area * c.eval_scalar(t, l);
            m0 += v;
            for d in 0..2 {
                m1[d] += v * x[d];
                m2[d] += v * x[d] * x[d];
            }
        }
    }
    let mean = [m1[0] / m0, m1[1] / m0];
    Moments {
        mass: m0,
        mean,
        variance: [m2[0] / m0 - mean[0] * mean[0], m2[1] / m0 - mean[1] * mean[1]],
    }
}

/// Nodes where the air is nearly still and the concentration stays high.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StagnationReport {
    pub flagged_nodes: Vec<usize>,
    pub stagnating: bool,
}

pub fn stagnation_zones(
    c: &ConcentrationField,
    wind: &Field,
    speed_threshold: f64,
    concentration_threshold: f64,
) -> StagnationReport {
    let flagged_nodes: Vec<usize> = (0..c.field.values.len())
        .filter(|&n| {
            let s = wind.values[2 * n].hypot(wind.values[2 * n + 1]);
            s < speed_threshold && c.field.values[n] > concentration_threshold
        })
        .collect();
    StagnationReport {
        stagnating: !flagged_nodes.is_empty(),
        flagged_nodes,
    }
}
