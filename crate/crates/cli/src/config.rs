//! Scenario configuration read from a TOML file.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use urbanflow::geometry::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    /// GeoJSON building footprints, relative to the config file.
    pub buildings_path: PathBuf,
    pub wind: WindConfig,
    pub mesh: MeshConfig,
    pub transport: TransportConfig,
    pub rom: RomConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindConfig {
    /// Unit vector the wind blows towards; `[0, 1]` is wind from the south.
    pub direction: Point,
    /// Inflow speed at `mu = 1`, m/s.
    pub base_speed: f64,
    /// Kinematic viscosity, m^2/s.
    pub nu: f64,
    /// Multiplier for the wind and transport phases.
    pub mu: f64,
    /// Training range for the reduced model.
    pub mu_range: [f64; 2],
    /// Extra multipliers solved and written by the wind phase.
    #[serde(default)]
    pub sweep: Vec<f64>,
    /// Width of the smooth inflow ramp at the wall corners, m.
    #[serde(default)]
    pub ramp_width: Option<f64>,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_iter")]
    pub newton_max_iter: usize,
}

fn default_newton_tol() -> f64 {
    1e-10
}

fn default_newton_iter() -> usize {
    25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    /// Target circumradius on building walls, m.
    pub lc_building: f64,
    /// Target circumradius between buildings, m.
    pub lc_gap: f64,
    /// Target circumradius in the buffer zone, m.
    pub lc_far: f64,
    /// Distance from a building within which `lc_gap` applies, m.
    pub gap_distance: f64,
    #[serde(default = "default_br_max")]
    pub br_max: f64,
    /// Minimum clearance between buildings and the domain border, m.
    #[serde(default)]
    pub min_clearance: Option<f64>,
    /// Explicit domain `[xmin, ymin, xmax, ymax]` in the wind frame, m.
    /// Checked against the blockage limit instead of being computed.
    #[serde(default)]
    pub domain_override: Option<[f64; 4]>,
}

fn default_br_max() -> f64 {
    0.17
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlumeConfig {
    /// Center in projected meters.
    pub center: Point,
    /// Peak concentration, ppm.
    pub amplitude: f64,
    /// Truncation radius, m.
    pub radius: f64,
    /// Gaussian standard deviation, m.
    pub width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransportConfig {
    /// Diffusivity, m^2/s.
    pub k: f64,
    /// Time step, s. Derived from `courant` when absent.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_courant")]
    pub courant: f64,
    /// Simulated time, s.
    pub t_final: f64,
    pub plume: PlumeConfig,
    /// Probe locations in projected meters.
    #[serde(default)]
    pub probes: Vec<Point>,
    /// Fixed concentration on the inflow side; no-flux when absent.
    #[serde(default)]
    pub inflow_value: Option<f64>,
    /// Contour levels, ppm.
    #[serde(default = "default_levels")]
    pub contour_levels: Vec<f64>,
}

fn default_courant() -> f64 {
    2.0
}

fn default_levels() -> Vec<f64> {
    vec![10.0, 100.0, 1000.0]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InnerProductKind {
    Mass,
    Euclidean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomConfig {
    pub n_snapshots: usize,
    pub n_test: usize,
    pub n_r: usize,
    pub n_m: usize,
    pub seed: u64,
    #[serde(default = "default_inner")]
    pub inner_product: InnerProductKind,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
}

fn default_inner() -> InnerProductKind {
    InnerProductKind::Mass
}

fn default_reps() -> usize {
    5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    /// Steps between saved concentration fields.
    pub save_interval: usize,
    /// Any of `vtk`, `geojson`, `csv`.
    pub formats: Vec<String>,
    /// Write P2 velocity on the refined quadratic grid instead of the vertices.
    #[serde(default)]
    pub vtk_quadratic: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("output"),
            save_interval: 10,
            formats: vec!["vtk".into(), "geojson".into(), "csv".into()],
            vtk_quadratic: false,
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, format: &str) -> bool {
        self.formats.iter().any(|f| f == format)
    }
}

fn check(ok: bool, what: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(what.to_string()))
    }
}

impl ScenarioConfig {
    /// Reads and validates a config file. Relative paths are resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if cfg.buildings_path.is_relative() {
            cfg.buildings_path = base.join(&cfg.buildings_path);
        }
        if cfg.output.directory.is_relative() {
            cfg.output.directory = base.join(&cfg.output.directory);
        }
        if !cfg.buildings_path.exists() {
            return Err(CliError::io(
                &cfg.buildings_path,
                std::io::Error::new(std::io::ErrorKind::NotFound, "buildings file not found"),
            ));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let w = &self.wind;
        check(w.direction.iter().all(|v| v.is_finite()), "wind.direction must be finite")?;
        check(w.base_speed > 0.0 && w.base_speed.is_finite(), "wind.base_speed must be positive")?;
        check(w.nu > 0.0 && w.nu.is_finite(), "wind.nu must be positive")?;
        check(w.mu >= 0.0 && w.mu.is_finite(), "wind.mu must be non-negative")?;
        check(
            w.mu_range[0] >= 0.0 && w.mu_range[1] > w.mu_range[0],
            "wind.mu_range must be a nonempty interval of non-negative values",
        )?;
        check(w.sweep.iter().all(|m| *m >= 0.0 && m.is_finite()), "wind.sweep values must be non-negative")?;
        check(w.newton_tol > 0.0 && w.newton_max_iter > 0, "Newton settings must be positive")?;
        let m = &self.mesh;
        check(
            m.lc_building > 0.0 && m.lc_building <= m.lc_gap && m.lc_gap <= m.lc_far && m.gap_distance >= 0.0,
            "mesh sizes need 0 < lc_building <= lc_gap <= lc_far and gap_distance >= 0",
        )?;
        check(m.br_max > 0.0 && m.br_max < 1.0, "mesh.br_max must lie in (0, 1)")?;
        let t = &self.transport;
        check(t.k >= 0.0 && t.t_final > 0.0, "transport needs k >= 0 and t_final > 0")?;
        check(t.dt.is_none_or(|dt| dt > 0.0) && t.courant > 0.0, "transport.dt and courant must be positive")?;
        check(t.plume.amplitude >= 0.0 && t.plume.radius > 0.0 && t.plume.width > 0.0, "invalid plume")?;
        check(t.contour_levels.iter().all(|l| l.is_finite()), "contour levels must be finite")?;
        let r = &self.rom;
        check(r.n_snapshots >= 2, "rom.n_snapshots must be at least 2")?;
        check(r.n_r >= 1 && r.n_r <= r.n_snapshots, "rom.n_r must lie in [1, n_snapshots]")?;
        check(r.n_m >= 1 && r.n_m <= r.n_snapshots, "rom.n_m must lie in [1, n_snapshots]")?;
        check(r.repetitions >= 1, "rom.repetitions must be positive")?;
        check(self.output.save_interval >= 1, "output.save_interval must be positive")?;
        for f in &self.output.formats {
            check(["vtk", "geojson", "csv"].contains(&f.as_str()), &format!("unknown output format `{f}`"))?;
        }
        Ok(())
    }
}
