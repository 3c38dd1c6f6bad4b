use super::{InsError, InsSpaces};
use crate::fem::{
    apply_dirichlet, assemble, convection_vector, Constraints, DofMap, Field, Form, SparseLu, SparseMatrix,
    TripletBuilder,
};
use crate::meshgen::TriMesh;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonOptions {
    /// Relative residual reduction to reach.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 25 }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonOutcome {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub iterations: usize,
    /// Residual norms, starting with the initial guess.
    pub history: Vec<f64>,
}

/// The discrete system
/// `nu (grad u, grad v) + ((u . grad) u, v) - (p, div v) = (f, v)`,
/// `-(q, div u) = 0`, with unknowns ordered `[u; p]`.
#[derive(Debug, Clone)]
pub struct InsProblem {
    pub nu: f64,
    pub mesh: Arc<TriMesh>,
    pub velocity: Arc<DofMap>,
    pub pressure: Arc<DofMap>,
    /// `nu` times the vector Laplacian.
    pub viscous: SparseMatrix,
    /// `(q, div u)`, pressure rows by velocity columns.
    pub divergence: SparseMatrix,
    pub forcing: Vec<f64>,
    pub convection: bool,
}

impl InsProblem {
    pub fn new(mesh: &TriMesh, spaces: &InsSpaces, nu: f64) -> Result<Self, InsError> {
        let v = &spaces.velocity;
        let p = &spaces.pressure;
        Ok(Self {
            nu,
            mesh: Arc::new(mesh.clone()),
            velocity: v.clone(),
            pressure: p.clone(),
            viscous: assemble(&Form::Viscous(nu), v, v, mesh)?,
            divergence: assemble(&Form::Divergence, v, p, mesh)?,
            forcing: vec![0.0; v.n_dofs()],
            convection: true,
        })
    }

    /// Drops the convection term (Stokes flow).
    pub fn without_convection(mut self) -> Self {
        self.convection = false;
        self
    }

    /// Right-hand side load on the velocity rows.
    pub fn with_forcing(mut self, forcing: Vec<f64>) -> Self {
        assert_eq!(forcing.len(), self.velocity.n_dofs());
        self.forcing = forcing;
        self
    }

    pub fn n_velocity(&self) -> usize {
        self.velocity.n_dofs()
    }

    pub fn n_total(&self) -> usize {
        self.velocity.n_dofs() + self.pressure.n_dofs()
    }

    fn field(&self, u: &[f64]) -> Result<Field, InsError> {
        Ok(Field::new(self.velocity.clone(), u.to_vec())?)
    }

    /// Full residual `F(u, p)` with constrained velocity rows zeroed.
    pub fn residual(&self, u: &[f64], p: &[f64], fixed: &[bool]) -> Result<Vec<f64>, InsError> {
        let nv = self.n_velocity();
        let mut r = self.viscous.mul_vec(u);
        if self.convection {
            let c = convection_vector(&self.mesh, &self.field(u)?)?;
            r.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        }
        let dtp = self.divergence.mul_vec_transpose(p);
        for i in 0..nv {
            r[i] -= dtp[i] + self.forcing[i];
            if fixed[i] {
                r[i] = 0.0;
            }
        }
        r.extend(self.divergence.mul_vec(u).iter().map(|v| -v));
        Ok(r)
    }

    /// Jacobian at `u`, before boundary conditions.
    pub fn jacobian(&self, u: &[f64]) -> Result<SparseMatrix, InsError> {
        let nv = self.n_velocity();
        let n = self.n_total();
        let mut t = TripletBuilder::new(n, n);
        t.add_matrix(&self.viscous, 0, 0, 1.0);
        if self.convection {
            let w = self.field(u)?;
            let v = &self.velocity;
            t.add_matrix(&assemble(&Form::Convection(&w), v, v, &self.mesh)?, 0, 0, 1.0);
            t.add_matrix(&assemble(&Form::ConvectionDerivative(&w), v, v, &self.mesh)?, 0, 0, 1.0);
        }
        t.add_transpose(&self.divergence, 0, nv, -1.0);
        t.add_matrix(&self.divergence, nv, 0, -1.0);
        Ok(t.build())
    }

    /// One Newton correction `J delta = -F` with homogeneous conditions on
    /// the constrained dofs. Returns the correction.
    pub fn newton_step(&self, u: &[f64], p: &[f64], constraints: &Constraints) -> Result<Vec<f64>, InsError> {
        let fixed = self.fixed_mask(constraints);
        let r = self.residual(u, p, &fixed)?;
        self.correction(u, &r, constraints)
    }

    fn fixed_mask(&self, constraints: &Constraints) -> Vec<bool> {
        let mut m = constraints.mask(self.n_velocity());
        m.resize(self.n_total(), false);
        m
    }

    fn correction(&self, u: &[f64], r: &[f64], constraints: &Constraints) -> Result<Vec<f64>, InsError> {
        let j = self.jacobian(u)?;
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let (j, rhs) = apply_dirichlet(&j, &rhs, &constraints.homogeneous())?;
        Ok(SparseLu::factor(&j)?.solve(&rhs)?)
    }

    /// Newton iteration from `u0` (which must satisfy `constraints`) with
    /// up to four step halvings whenever the residual grows.
    pub fn solve(
        &self,
        constraints: &Constraints,
        mut u: Vec<f64>,
        p0: Option<Vec<f64>>,
        opts: &NewtonOptions,
    ) -> Result<NewtonOutcome, InsError> {
        let nv = self.n_velocity();
        constraints.impose(&mut u);
        let mut p = p0.unwrap_or_else(|| vec![0.0; self.pressure.n_dofs()]);
        let fixed = self.fixed_mask(constraints);
        let norm = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut r = self.residual(&u, &p, &fixed)?;
        let r0 = norm(&r);
        // Below this the residual is rounding noise.
        let umax = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let fmax = self.forcing.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let floor = 1e-14 * (self.n_total() as f64).sqrt() * (self.viscous.norm_inf() * umax * (1.0 + umax) + fmax);
        let mut history = vec![r0];
        let mut increases = 0;
        let mut iterations = 0;
        while history[iterations] > (opts.tol * r0).max(floor) {
            if iterations == opts.max_iter {
                return Err(InsError::NonConvergence { history });
            }
            let delta = self.correction(&u, &r, constraints)?;
            let current = history[iterations];
            let mut alpha = 1.0;
            let (mut u_new, mut p_new, mut r_new, mut rn);
            let mut halvings = 0;
            loop {
                u_new = u.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect::<Vec<_>>();
                p_new = p.iter().zip(&delta[nv..]).map(|(a, d)| a + alpha * d).collect::<Vec<_>>();
                r_new = self.residual(&u_new, &p_new, &fixed)?;
                rn = norm(&r_new);
                if (rn.is_finite() && rn <= current) || halvings == 4 {
                    break;
                }
                alpha *= 0.5;
                halvings += 1;
            }
            if !rn.is_finite() {
                history.push(rn);
                return Err(InsError::NonConvergence { history });
            }
            increases = if rn > current { increases + 1 } else { 0 };
            u = u_new;
            p = p_new;
            r = r_new;
            iterations += 1;
            history.push(rn);
            log::debug!("newton {iterations}: residual {rn:.3e} (step {alpha})");
            if increases >= 3 {
                return Err(InsError::NonConvergence { history });
            }
        }
        Ok(NewtonOutcome {
            velocity: u,
            pressure: p,
            iterations,
            history,
        })
    }
}
