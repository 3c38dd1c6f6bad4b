use std::path::{Path, PathBuf};
use thiserror::Error;
use urbanflow::advect::AdError;
use urbanflow::geo_ingest::GeoError;
use urbanflow::ins::InsError;
use urbanflow::meshgen::MeshError;
use urbanflow::rom::RomError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const IO: i32 = 4;
    pub const CONSTRAINT: i32 = 5;
    pub const NONCONVERGENCE: i32 = 6;
    pub const INSTABILITY: i32 = 7;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("solver did not converge: {0}")]
    NonConvergence(String),
    #[error("unstable transport run: {0}")]
    Instability(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Constraint(_) => exit::CONSTRAINT,
            CliError::NonConvergence(_) => exit::NONCONVERGENCE,
            CliError::Instability(_) => exit::INSTABILITY,
            CliError::Internal(_) => exit::INTERNAL,
        }
    }
}

impl From<GeoError> for CliError {
    fn from(e: GeoError) -> Self {
        match e {
            GeoError::BlockageExceeded { .. } | GeoError::BuildingOutsideDomain { .. } => CliError::Constraint(e.to_string()),
            _ => CliError::Config(format!("buildings: {e}")),
        }
    }
}

impl From<MeshError> for CliError {
    fn from(e: MeshError) -> Self {
        match e {
            MeshError::InvalidSizeField => CliError::Config(e.to_string()),
            _ => CliError::Constraint(format!("meshing: {e}")),
        }
    }
}

impl From<InsError> for CliError {
    fn from(e: InsError) -> Self {
        match e {
            InsError::NonConvergence { .. } | InsError::Singular { .. } => CliError::NonConvergence(e.to_string()),
            InsError::InvalidParams(_) => CliError::Config(e.to_string()),
            InsError::NoInflow => CliError::Constraint(e.to_string()),
            InsError::Fem(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<AdError> for CliError {
    fn from(e: AdError) -> Self {
        match e {
            AdError::Instability { .. } => CliError::Instability(e.to_string()),
            AdError::InvalidParams(_) | AdError::Placement(_) => CliError::Config(e.to_string()),
            AdError::Fem(_) => CliError::Internal(e.to_string()),
        }
    }
}

impl From<RomError> for CliError {
    fn from(e: RomError) -> Self {
        match e {
            RomError::Ins(inner) => inner.into(),
            RomError::NonConvergence { .. } | RomError::TooFewSnapshots { .. } => CliError::NonConvergence(e.to_string()),
            RomError::RankDeficient { .. } | RomError::InvalidRange(_) => CliError::Config(e.to_string()),
            RomError::Format(_) => CliError::Config(format!("reduced model file: {e}")),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

impl From<urbanflow::fem::FemError> for CliError {
    fn from(e: urbanflow::fem::FemError) -> Self {
        CliError::Internal(e.to_string())
    }
}
