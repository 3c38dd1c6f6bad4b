//! Steady incompressible Navier-Stokes on Taylor-Hood elements, solved by
//! Newton's method around a Stokes lifting of the inflow data.

mod newton;

pub use newton::{InsProblem, NewtonOptions, NewtonOutcome};

use crate::fem::{
    build_space, Constraints, DofMap, FemError, Field, SpaceKind,
};
use crate::geo_ingest::DomainSpec;
use crate::geometry::{dist, Point};
use crate::meshgen::{BoundaryTag, TriMesh};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InsError {
    #[error("the mesh has no inflow edges")]
    NoInflow,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Newton did not converge after {} iterations (residuals {history:?})", history.len().saturating_sub(1))]
    NonConvergence { history: Vec<f64> },
    #[error("singular Jacobian (pivot {pivot:?})")]
    Singular { pivot: Option<usize> },
    #[error(transparent)]
    Fem(FemError),
}

impl From<FemError> for InsError {
    fn from(e: FemError) -> Self {
        match e {
            FemError::Singular { pivot } => InsError::Singular { pivot },
            other => InsError::Fem(other),
        }
    }
}

/// Quadratic velocity and linear pressure spaces on one mesh.
#[derive(Debug, Clone)]
pub struct InsSpaces {
    pub velocity: Arc<DofMap>,
    pub pressure: Arc<DofMap>,
}

pub fn build_spaces(mesh: &TriMesh) -> Result<InsSpaces, FemError> {
    Ok(InsSpaces {
        velocity: Arc::new(build_space(mesh, SpaceKind::VelocityP2Vector)?),
        pressure: Arc::new(build_space(mesh, SpaceKind::PressureP1)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InsParams {
    /// Kinematic viscosity, m^2/s.
    pub nu: f64,
    /// Inflow multiplier.
    pub mu: f64,
    /// Newton stops once the residual drops below this fraction of the
    /// initial residual.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Retry failed solves by stepping through `mu/4, mu/2, mu`.
    pub continuation: bool,
}

impl Default for InsParams {
    fn default() -> Self {
        Self {
            nu: 1.0,
            mu: 1.0,
            newton_tol: 1e-10,
            newton_max_iter: 25,
            continuation: true,
        }
    }
}

impl InsParams {
    pub fn validate(&self) -> Result<(), InsError> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(InsError::InvalidParams(format!("nu must be positive, got {}", self.nu)));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(InsError::InvalidParams(format!("mu must be non-negative, got {}", self.mu)));
        }
        if !(self.newton_tol > 0.0 && self.newton_tol < 1.0) {
            return Err(InsError::InvalidParams(format!("newton_tol must lie in (0, 1), got {}", self.newton_tol)));
        }
        if self.newton_max_iter == 0 {
            return Err(InsError::InvalidParams("newton_max_iter must be positive".into()));
        }
        Ok(())
    }

    fn newton(&self) -> NewtonOptions {
        NewtonOptions {
            tol: self.newton_tol,
            max_iter: self.newton_max_iter,
        }
    }
}

/// Unit-parameter inflow data: `speed * ramp(x) * direction`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InflowProfile {
    /// Base speed in m/s.
    pub speed: f64,
    /// Unit vector the inflow points to (domain frame).
    pub direction: Point,
    /// Width of the smooth ramp from the lateral walls; `None` keeps the
    /// profile uniform up to the corners.
    pub ramp_width: Option<f64>,
}

impl InflowProfile {
    pub fn uniform(speed: f64) -> Self {
        Self {
            speed,
            direction: [0.0, 1.0],
            ramp_width: None,
        }
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// The velocity of the inflow problem at `mu = 1`, extended into the domain
/// by a Stokes solve.
#[derive(Debug, Clone)]
pub struct LiftingFunction {
    pub velocity: Field,
    pub profile: InflowProfile,
    /// Dirichlet data at `mu = 1` on every constrained velocity dof.
    pub dirichlet: Constraints,
}

impl LiftingFunction {
    /// Dirichlet data for a given multiplier.
    pub fn constraints(&self, mu: f64) -> Constraints {
        let mut c = Constraints::new();
        for (d, v) in self.dirichlet.iter() {
            c.insert_if_free(d, mu * v);
        }
        c
    }
}

/// Unit Dirichlet data: the inflow profile on inflow dofs, zero on walls.
/// Inflow values take precedence at shared corners.
pub fn inflow_constraints(spaces: &InsSpaces, profile: &InflowProfile) -> Result<Constraints, InsError> {
    let v = &spaces.velocity;
    let inflow = v.boundary_dofs(BoundaryTag::Inflow);
    if inflow.is_empty() {
        return Err(InsError::NoInflow);
    }
    let walls: Vec<usize> = [BoundaryTag::NoSlipWall, BoundaryTag::BuildingWall]
        .iter()
        .flat_map(|&t| v.boundary_dofs(t).iter().copied())
        .collect();
    let corners: Vec<Point> = inflow
        .iter()
        .filter(|d| v.boundary_dofs(BoundaryTag::NoSlipWall).binary_search(d).is_ok())
        .map(|&d| v.dof_coord(d))
        .collect();
    let mut c = Constraints::new();
    for &d in inflow {
        let x = v.dof_coord(d);
        let ramp = match profile.ramp_width {
            Some(w) if w > 0.0 && !corners.is_empty() => {
                let dmin = corners.iter().map(|&q| dist(q, x)).fold(f64::INFINITY, f64::min);
                smoothstep(dmin / w)
            }
            _ => 1.0,
        };
        c.insert(d, profile.speed * ramp * profile.direction[d % 2])?;
    }
    for d in walls {
        c.insert_if_free(d, 0.0);
    }
    Ok(c)
}

pub fn build_lifting(spaces: &InsSpaces, mesh: &TriMesh, profile: &InflowProfile) -> Result<LiftingFunction, InsError> {
    let dirichlet = inflow_constraints(spaces, profile)?;
    let problem = InsProblem::new(mesh, spaces, 1.0)?.without_convection();
    let mut u0 = vec![0.0; spaces.velocity.n_dofs()];
    dirichlet.impose(&mut u0);
    let out = problem.solve(&dirichlet, u0, None, &NewtonOptions { tol: 1e-12, max_iter: 3 })?;
    Ok(LiftingFunction {
        velocity: Field::new(spaces.velocity.clone(), out.velocity)?,
        profile: *profile,
        dirichlet,
    })
}

/// A converged wind field.
#[derive(Debug, Clone)]
pub struct WindField {
    pub velocity: Field,
    pub pressure: Field,
    pub mu: f64,
    pub newton_iterations: usize,
    pub residual_history: Vec<f64>,
}

/// Reusable full-order solver: operators are assembled once and shared by
/// solves at different `mu`.
#[derive(Debug, Clone)]
pub struct WindSolver {
    pub problem: InsProblem,
    pub lifting: LiftingFunction,
    pub spaces: InsSpaces,
}

impl WindSolver {
    pub fn new(mesh: &TriMesh, spaces: &InsSpaces, lifting: &LiftingFunction, nu: f64) -> Result<Self, InsError> {
        Ok(Self {
            problem: InsProblem::new(mesh, spaces, nu)?,
            lifting: lifting.clone(),
            spaces: spaces.clone(),
        })
    }

    pub fn nu(&self) -> f64 {
        self.problem.nu
    }

    pub fn solve(&self, params: &InsParams) -> Result<WindField, InsError> {
        params.validate()?;
        if (params.nu - self.problem.nu).abs() > 1e-15 * self.problem.nu {
            return Err(InsError::InvalidParams("solver was assembled for a different nu".into()));
        }
        let lift = &self.lifting.velocity.values;
        let start = |mu: f64| lift.iter().map(|v| mu * v).collect::<Vec<f64>>();
        let opts = params.newton();
        let first = self.problem.solve(&self.lifting.constraints(params.mu), start(params.mu), None, &opts);
        let out = match first {
            Ok(o) => o,
            Err(InsError::NonConvergence { .. } | InsError::Singular { .. }) if params.continuation && params.mu > 0.0 => {
                log::info!("continuation in mu for mu = {}", params.mu);
                let mut prev_mu = params.mu / 4.0;
                let mut out = self.problem.solve(&self.lifting.constraints(prev_mu), start(prev_mu), None, &opts)?;
                for mu in [params.mu / 2.0, params.mu] {
                    let u0: Vec<f64> = out.velocity.iter().zip(lift).map(|(u, l)| u + (mu - prev_mu) * l).collect();
                    out = self.problem.solve(&self.lifting.constraints(mu), u0, Some(out.pressure.clone()), &opts)?;
                    prev_mu = mu;
                }
                out
            }
            Err(e) => return Err(e),
        };
        Ok(WindField {
            velocity: Field::new(self.spaces.velocity.clone(), out.velocity)?,
            pressure: Field::new(self.spaces.pressure.clone(), out.pressure)?,
            mu: params.mu,
            newton_iterations: out.iterations,
            residual_history: out.history,
        })
    }
}

pub fn solve_steady_ins(
    mesh: &TriMesh,
    spaces: &InsSpaces,
    lifting: &LiftingFunction,
    params: &InsParams,
) -> Result<WindField, InsError> {
    params.validate()?;
    WindSolver::new(mesh, spaces, lifting, params.nu)?.solve(params)
}

/// `max |u| * l / nu` over the velocity nodes.
pub fn reynolds_number(wind: &WindField, domain: &DomainSpec, nu: f64) -> f64 {
    wind.velocity.max_magnitude() * domain.characteristic_length / nu
}
