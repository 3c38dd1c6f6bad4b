//! POD-Galerkin reduced-order model of the parametrized wind solve, with
//! DEIM for the convective term.

mod benchmark;
mod container;
mod deim;
mod pod;
mod reduced;

pub use benchmark::{benchmark, BenchmarkOptions, BenchmarkSample, NrSweepPoint, RomBenchmark};
pub use container::{RomArtifact, CONTAINER_VERSION};
pub use deim::{select_indices, Deim};
pub use pod::{pod, InnerProduct, ReducedBasis};
pub use reduced::{solve_rom, RomOperators, RomSolution, RomSolveOptions};

use crate::fem::{assemble, convection_vector, FemError, Form, SparseMatrix};
use crate::ins::{InsError, InsParams, WindSolver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RomError {
    #[error("only {ok} usable snapshots ({} failed); at least 2 are needed", failed.len())]
    TooFewSnapshots { ok: usize, failed: Vec<(f64, String)> },
    #[error("snapshot set has rank {rank}, {requested} modes requested; use a smaller basis")]
    RankDeficient { requested: usize, rank: usize },
    #[error("singular interpolation or reduced matrix")]
    Singular,
    #[error("reduced Newton did not converge (residuals {history:?})")]
    NonConvergence { history: Vec<f64> },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter range: {0}")]
    InvalidRange(String),
    #[error("bad container: {0}")]
    Format(String),
    #[error(transparent)]
    Ins(#[from] InsError),
}

impl From<FemError> for RomError {
    fn from(e: FemError) -> Self {
        RomError::Ins(e.into())
    }
}

/// A range of inflow multipliers and a sample count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterSampler {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl ParameterSampler {
    pub fn new(min: f64, max: f64, count: usize) -> Result<Self, RomError> {
        if !(min.is_finite() && max.is_finite() && min >= 0.0 && max >= min) {
            return Err(RomError::InvalidRange(format!("[{min}, {max}]")));
        }
        Ok(Self { min, max, count })
    }

    pub fn width(&self) -> f64 {
        self.max - self.min
    }

    /// Equispaced samples including both ends.
    pub fn equispaced(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![0.5 * (self.min + self.max)],
            n => (0..n).map(|i| self.min + self.width() * i as f64 / (n - 1) as f64).collect(),
        }
    }

    /// `count` uniform random samples from a seeded generator, kept away
    /// from the values in `exclude`. Sorted.
    pub fn random_disjoint(&self, seed: u64, exclude: &[f64]) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gap = 1e-6 * self.width().max(f64::MIN_POSITIVE);
        let mut out: Vec<f64> = Vec::with_capacity(self.count);
        while out.len() < self.count {
            let mu = self.min + self.width() * rng.random::<f64>();
            if exclude.iter().chain(&out).all(|e| (e - mu).abs() > gap) {
                out.push(mu);
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }

    pub fn is_extrapolation(&self, mu: f64) -> bool {
        let pad = 0.1 * self.width();
        mu < self.min - pad || mu > self.max + pad
    }
}

/// Sorts and removes near-duplicate samples, with a warning when any were
/// dropped.
pub fn dedup_samples(mus: &[f64]) -> Vec<f64> {
    let mut out = mus.to_vec();
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    if out.len() < mus.len() {
        log::warn!("dropped {} duplicate parameter samples", mus.len() - out.len());
    }
    out
}

/// Full-order solutions at the training parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet {
    pub mus: Vec<f64>,
    /// Homogenized velocities `u_i - mu_i * lifting`.
    pub velocity: Vec<Vec<f64>>,
    /// Convection vectors at `u_i`, zero on constrained rows.
    pub nonlinear: Vec<Vec<f64>>,
    /// Samples whose full-order solve failed.
    pub failed: Vec<(f64, String)>,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.mus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mus.is_empty()
    }

    /// Full velocity of snapshot `i`.
    pub fn full_velocity(&self, i: usize, lifting: &[f64]) -> Vec<f64> {
        self.velocity[i].iter().zip(lifting).map(|(v, l)| v + self.mus[i] * l).collect()
    }
}

/// Convection vector at `u` with constrained rows zeroed.
pub fn nonlinear_term(solver: &WindSolver, u: &crate::fem::Field) -> Result<Vec<f64>, RomError> {
    let mut c = convection_vector(&solver.problem.mesh, u)?;
    for (d, _) in solver.lifting.dirichlet.iter() {
        c[d] = 0.0;
    }
    Ok(c)
}

/// Solves the full-order model at every sample. Failed samples are
/// reported in the result; fewer than two successes is an error.
pub fn collect_snapshots(solver: &WindSolver, params: &InsParams, mus: &[f64]) -> Result<SnapshotSet, RomError> {
    let mus = dedup_samples(mus);
    let lift = &solver.lifting.velocity.values;
    let mut set = SnapshotSet {
        mus: vec![],
        velocity: vec![],
        nonlinear: vec![],
        failed: vec![],
    };
    for &mu in &mus {
        match solver.solve(&InsParams { mu, ..*params }) {
            Ok(w) => {
                set.nonlinear.push(nonlinear_term(solver, &w.velocity)?);
                set.velocity.push(w.velocity.values.iter().zip(lift).map(|(u, l)| u - mu * l).collect());
                set.mus.push(mu);
            }
            Err(e @ (InsError::NonConvergence { .. } | InsError::Singular { .. })) => {
                log::warn!("snapshot at mu = {mu} failed: {e}");
                set.failed.push((mu, e.to_string()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    if set.len() < 2 {
        return Err(RomError::TooFewSnapshots { ok: set.len(), failed: set.failed });
    }
    Ok(set)
}

/// Mass matrix of the velocity space of `solver`.
pub fn velocity_mass(solver: &WindSolver) -> Result<SparseMatrix, RomError> {
    let v = &solver.spaces.velocity;
    Ok(assemble(&Form::Mass, v, v, &solver.problem.mesh)?)
}
