use super::{Deim, ParameterSampler, ReducedBasis, RomError};
use crate::fem::{assemble, Field, Form, SparseMatrix};
use crate::ins::WindSolver;
use nalgebra::{DMatrix, DVector};

/// Offline-projected quantities for `u = mu * L + V a`.
///
/// The reduced residual is
/// `mu * a_l + a_r a - f_r + W (mu^2 q0 + mu q1 a + Q2(a, a))`
/// where the bracket holds the convection vector at the sampled rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RomOperators {
    /// `V^T A L`.
    pub a_l: DVector<f64>,
    /// `V^T A V`.
    pub a_r: DMatrix<f64>,
    /// `V^T f`.
    pub f_r: DVector<f64>,
    /// `V^T U (P^T U)^-1`, `N_r x N_m`.
    pub w: DMatrix<f64>,
    /// Sampled `c(L, L)`.
    pub q0: DVector<f64>,
    /// Sampled `c(L, V_k) + c(V_k, L)`, `N_m x N_r`.
    pub q1: DMatrix<f64>,
    /// Sampled `c(V_k, V_l)`, one `N_r x N_r` block per sampled row.
    pub q2: Vec<DMatrix<f64>>,
    pub lifting: Vec<f64>,
    pub modes: Vec<Vec<f64>>,
    pub sampler: ParameterSampler,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sampled_rows(m: &SparseMatrix, rows: &[usize], x: &[f64]) -> Vec<f64> {
    rows.iter().map(|&i| m.row(i).map(|(j, v)| v * x[j]).sum()).collect()
}

impl RomOperators {
    pub fn n_r(&self) -> usize {
        self.a_r.nrows()
    }

    pub fn n_m(&self) -> usize {
        self.q0.len()
    }

    pub fn n_dofs(&self) -> usize {
        self.lifting.len()
    }

    /// Projects the full-order operators of `solver` onto `basis`.
    pub fn project(
        solver: &WindSolver,
        basis: &ReducedBasis,
        deim: &Deim,
        sampler: ParameterSampler,
    ) -> Result<Self, RomError> {
        let problem = &solver.problem;
        let n = problem.n_velocity();
        let lift = &solver.lifting.velocity.values;
        let v = &basis.modes;
        if v.iter().any(|m| m.len() != n) || deim.basis.iter().any(|u| u.len() != n) {
            return Err(RomError::Dimension(format!("basis vectors do not have {n} entries")));
        }
        let (nr, nm) = (v.len(), deim.n_m());
        let a = &problem.viscous;
        let av: Vec<Vec<f64>> = v.iter().map(|m| a.mul_vec(m)).collect();
        let al = a.mul_vec(lift);
        let a_l = DVector::from_fn(nr, |k, _| dot(&v[k], &al));
        let a_r = DMatrix::from_fn(nr, nr, |k, l| dot(&v[k], &av[l]));
        let f_r = DVector::from_fn(nr, |k, _| dot(&v[k], &problem.forcing));

        let vtu = DMatrix::from_fn(nr, nm, |k, j| dot(&v[k], &deim.basis[j]));
        let ptu_t = deim.sampled_basis().transpose();
        let w = ptu_t.lu().solve(&vtu.transpose()).ok_or(RomError::Singular)?.transpose();

        let space = &solver.spaces.velocity;
        let mesh = &problem.mesh;
        let conv = |x: &[f64]| -> Result<SparseMatrix, RomError> {
            let f = Field::new(space.clone(), x.to_vec())?;
            Ok(assemble(&Form::Convection(&f), space, space, mesh)?)
        };
        let rows = &deim.indices;
        let nl = conv(lift)?;
        let nv: Vec<SparseMatrix> = v.iter().map(|m| conv(m)).collect::<Result<_, _>>()?;
        let q0 = DVector::from_vec(sampled_rows(&nl, rows, lift));
        let mut q1 = DMatrix::zeros(nm, nr);
        for k in 0..nr {
            let a = sampled_rows(&nl, rows, &v[k]);
            let b = sampled_rows(&nv[k], rows, lift);
            for i in 0..nm {
                q1[(i, k)] = a[i] + b[i];
            }
        }
        let mut q2 = vec![DMatrix::zeros(nr, nr); nm];
        for k in 0..nr {
            for l in 0..nr {
                let c = sampled_rows(&nv[k], rows, &v[l]);
                for i in 0..nm {
                    q2[i][(k, l)] = c[i];
                }
            }
        }
        Ok(Self {
            a_l,
            a_r,
            f_r,
            w,
            q0,
            q1,
            q2,
            lifting: lift.clone(),
            modes: v.clone(),
            sampler,
        })
    }

    /// The same model restricted to the first `n` modes.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.min(self.n_r());
        Self {
            a_l: self.a_l.rows(0, n).into_owned(),
            a_r: self.a_r.view((0, 0), (n, n)).into_owned(),
            f_r: self.f_r.rows(0, n).into_owned(),
            w: self.w.rows(0, n).into_owned(),
            q0: self.q0.clone(),
            q1: self.q1.columns(0, n).into_owned(),
            q2: self.q2.iter().map(|q| q.view((0, 0), (n, n)).into_owned()).collect(),
            lifting: self.lifting.clone(),
            modes: self.modes[..n].to_vec(),
            sampler: self.sampler,
        }
    }

    /// Interpolated convection at the sampled rows.
    fn sampled_convection(&self, mu: f64, a: &DVector<f64>) -> DVector<f64> {
        let mut n = &self.q0 * (mu * mu) + &self.q1 * a * mu;
        for (i, q) in self.q2.iter().enumerate() {
            n[i] += a.dot(&(q * a));
        }
        n
    }

    /// Reduced residual.
    pub fn residual(&self, mu: f64, a: &DVector<f64>) -> DVector<f64> {
        &self.a_l * mu + &self.a_r * a - &self.f_r + &self.w * self.sampled_convection(mu, a)
    }

    /// Reduced Jacobian.
    pub fn jacobian(&self, mu: f64, a: &DVector<f64>) -> DMatrix<f64> {
        let nr = self.n_r();
        let mut dn = &self.q1 * mu;
        for (i, q) in self.q2.iter().enumerate() {
            let g = q * a + q.transpose() * a;
            for k in 0..nr {
                dn[(i, k)] += g[k];
            }
        }
        &self.a_r + &self.w * dn
    }

    /// `mu * L + V a`.
    pub fn reconstruct(&self, mu: f64, a: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = self.lifting.iter().map(|l| mu * l).collect();
        for (k, m) in self.modes.iter().enumerate().take(a.len()) {
            u.iter_mut().zip(m).for_each(|(x, y)| *x += a[k] * y);
        }
        u
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomSolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for RomSolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 30 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RomSolution {
    pub mu: f64,
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub history: Vec<f64>,
}

impl RomSolution {
    pub fn reconstruct(&self, ops: &RomOperators) -> Vec<f64> {
        ops.reconstruct(self.mu, &self.coefficients)
    }
}

/// Reduced Newton iteration started from `a = 0` with step halving.
pub fn solve_rom(mu: f64, ops: &RomOperators, opts: &RomSolveOptions) -> Result<RomSolution, RomError> {
    if !mu.is_finite() {
        return Err(RomError::InvalidRange(format!("mu = {mu}")));
    }
    if ops.sampler.is_extrapolation(mu) {
        log::warn!("mu = {mu} lies outside the training range [{}, {}]", ops.sampler.min, ops.sampler.max);
    }
    let nr = ops.n_r();
    let mut a = DVector::zeros(nr);
    let mut r = ops.residual(mu, &a);
    let r0 = r.norm();
    let mut history = vec![r0];
    let scale = (ops.a_r.norm() + ops.w.norm() * (ops.q0.norm() + ops.q1.norm()) + 1.0) * mu.abs().max(1.0);
    let floor = 1e-14 * scale;
    let mut iterations = 0;
    while history[iterations] > (opts.tol * r0).max(floor) {
        if iterations == opts.max_iter {
            return Err(RomError::NonConvergence { history });
        }
        let delta = ops.jacobian(mu, &a).lu().solve(&(-&r)).ok_or(RomError::Singular)?;
        let mut step = 1.0;
        let mut next = &a + &delta;
        let mut rn = ops.residual(mu, &next);
        for _ in 0..4 {
            if rn.norm() < r.norm() {
                break;
            }
            step *= 0.5;
            next = &a + &delta * step;
            rn = ops.residual(mu, &next);
        }
        a = next;
        r = rn;
        iterations += 1;
        history.push(r.norm());
        if !history[iterations].is_finite() {
            return Err(RomError::NonConvergence { history });
        }
        if delta.norm() * step <= 1e-14 * (1.0 + a.norm()) {
            break;
        }
    }
    Ok(RomSolution {
        mu,
        coefficients: a.iter().copied().collect(),
        iterations,
        history,
    })
}
