//! Urban wind and contaminant transport: building footprints to meshes,
//! finite-element flow and transport solvers, and reduced-order models.

pub mod geo_ingest;
pub mod geometry;
pub mod ins;
pub mod advect;
pub mod fem;
pub mod meshgen;
pub mod rom;
