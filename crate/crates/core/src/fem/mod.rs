//! Lagrange finite elements on triangle meshes: quadratic vector and linear
//! scalar spaces, sparse assembly, Dirichlet elimination and a direct
//! sparse solver.

mod assembly;
pub mod basis;
mod dirichlet;
mod dofmap;
mod field;
pub mod quadrature;
mod solver;
mod sparse;

pub use assembly::{
    assemble, boundary_load, convection_vector, load_vector, supg_tau, AdCoefficients, Form, TauRule,
};
pub use dirichlet::{apply_dirichlet, Constraints};
pub use dofmap::{build_space, mesh_fingerprint, DofMap, SpaceKind};
pub use field::{l2_error_scalar, l2_error_vector, Field};
pub use solver::{relative_residual, solve_sparse, SparseLu};
pub use sparse::{SparseMatrix, TripletBuilder};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FemError {
    #[error("mesh is not usable: {0}")]
    Mesh(String),
    #[error("space does not belong to this mesh")]
    MeshMismatch,
    #[error("wrong space: {0}")]
    SpaceKind(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient at index {0}")]
    NonFinite(usize),
    #[error("invalid coefficient: {0}")]
    Coefficient(String),
    #[error("conflicting Dirichlet values on dof {dof}: {first} vs {second}")]
    ConstraintConflict { dof: usize, first: f64, second: f64 },
    #[error("matrix is singular (pivot {pivot:?})")]
    Singular { pivot: Option<usize> },
    #[error("linear solver failure: {0}")]
    Backend(String),
}

#[cfg(test)]
mod tests;
