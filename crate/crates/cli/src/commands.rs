//! Pipeline phases behind the subcommands.

use crate::config::{InnerProductKind, ScenarioConfig};
use crate::error::CliError;
use crate::output::contours::contour_geojson;
use crate::output::manifest::{sha256_hex, write_manifest, RunManifest};
use crate::output::vtk::{velocity_points, write_vtk, PointData, VtkGrid};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;
use urbanflow::advect::{courant_dt, gaussian_initial, run_transient, AdParams, AdSystem, InitialPlume};
use urbanflow::fem::{build_space, Field, SpaceKind};
use urbanflow::geo_ingest::{
    compute_domain_bounds, parse_building_file, project_to_local, BuildingSet, DomainOptions, DomainSpec, LatLon,
    LocalProjection, Rect,
};
use urbanflow::geometry::Point;
use urbanflow::ins::{
    build_lifting, build_spaces, reynolds_number, InflowProfile, InsError, InsParams, WindSolver,
};
use urbanflow::meshgen::{mesh_quality, triangulate, SizeField, TriMesh};
use urbanflow::rom::{
    benchmark, collect_snapshots, pod, solve_rom, velocity_mass, BenchmarkOptions, Deim, InnerProduct,
    ParameterSampler, RomArtifact, RomOperators, RomSolveOptions,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RomPhase {
    Offline,
    Online,
    Benchmark,
}

/// Buildings in the local frame and the simulation rectangle.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub buildings: BuildingSet,
    pub origin: LatLon,
    pub domain: DomainSpec,
    pub blockage_ratio: f64,
}

impl Geometry {
    /// Mesh coordinates to `[lon, lat]`.
    pub fn to_lonlat(&self, p: Point) -> Point {
        LocalProjection::new(self.origin).inverse(self.domain.from_frame(p))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DomainRecord {
    fingerprint: String,
    mesh_hash: String,
    origin: [f64; 2],
    bounds: [f64; 4],
    wind_direction: Point,
    characteristic_length: f64,
    blockage_ratio: f64,
    size_field: SizeField,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StoredWind {
    mesh_hash: String,
    mu: f64,
    nu: f64,
    velocity: Vec<f64>,
    pressure: Vec<f64>,
}

fn fmt_mu(mu: f64) -> String {
    format!("{mu:.4}")
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    write_bytes(path, text.as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Option<T> {
    serde_json::from_slice(&std::fs::read(path).ok()?).ok()
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let csv_err = |e: csv::Error| CliError::Internal(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r).map_err(csv_err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn mkdir(path: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

/// State shared by the phases of one invocation.
pub struct Pipeline {
    pub config: ScenarioConfig,
    pub out: PathBuf,
    pub seed: u64,
    pub mu_override: Option<f64>,
    phases: Vec<String>,
    timings: BTreeMap<String, f64>,
    attributes: BTreeMap<String, BTreeMap<String, String>>,
    geometry: Option<Geometry>,
    mesh: Option<Arc<TriMesh>>,
    solver: Option<WindSolver>,
    wind: Option<Field>,
}

impl Pipeline {
    pub fn new(config: ScenarioConfig, out: Option<PathBuf>, seed: Option<u64>, mu_override: Option<f64>) -> Self {
        let out = out.unwrap_or_else(|| config.output.directory.clone());
        let seed = seed.unwrap_or(config.rom.seed);
        Self {
            config,
            out,
            seed,
            mu_override,
            phases: vec![],
            timings: BTreeMap::new(),
            attributes: BTreeMap::new(),
            geometry: None,
            mesh: None,
            solver: None,
            wind: None,
        }
    }

    fn timed<T>(&mut self, phase: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let start = Instant::now();
        let out = f(self)?;
        self.timings.insert(phase.to_string(), start.elapsed().as_secs_f64());
        if !self.phases.iter().any(|p| p == phase) {
            self.phases.push(phase.to_string());
        }
        Ok(out)
    }

    fn size_field(&self) -> SizeField {
        let m = &self.config.mesh;
        SizeField {
            lc_building: m.lc_building,
            lc_gap: m.lc_gap,
            lc_far: m.lc_far,
            gap_distance: m.gap_distance,
        }
    }

    fn fingerprint(&self) -> Result<String, CliError> {
        let bytes = std::fs::read(&self.config.buildings_path).map_err(|e| CliError::io(&self.config.buildings_path, e))?;
        let key = serde_json::to_string(&(&self.config.mesh, self.config.wind.direction, sha256_hex(&bytes)))
            .map_err(|e| CliError::Internal(e.to_string()))?;
        Ok(sha256_hex(key.as_bytes()))
    }

    pub fn geometry(&mut self) -> Result<&Geometry, CliError> {
        if self.geometry.is_none() {
            let path = &self.config.buildings_path;
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            let parsed = parse_building_file(&bytes)?;
            for r in &parsed.rejected {
                log::warn!("feature {} ({}) skipped: {}", r.index, r.id, r.reason);
            }
            let buildings = project_to_local(&parsed.buildings)?;
            let origin = buildings.origin().ok_or_else(|| CliError::Internal("projection lost its origin".into()))?;
            let m = &self.config.mesh;
            let domain = match m.domain_override {
                Some([x0, y0, x1, y1]) => {
                    let d = DomainSpec::new(Rect { min: [x0, y0], max: [x1, y1] }, self.config.wind.direction)?;
                    d.check_contains(&buildings)?;
                    d
                }
                None => compute_domain_bounds(
                    &buildings,
                    self.config.wind.direction,
                    DomainOptions { br_max: m.br_max, min_clearance: m.min_clearance },
                )?,
            };
            let blockage_ratio = domain.check_blockage(&buildings, m.br_max)?;
            log::info!("domain {:?}, blockage ratio {blockage_ratio:.4}", domain.bounds);
            self.geometry = Some(Geometry { buildings, origin, domain, blockage_ratio });
        }
        Ok(self.geometry.as_ref().expect("just set"))
    }

    /// Generates the mesh and writes it with its quality report.
    pub fn cmd_mesh(&mut self) -> Result<Arc<TriMesh>, CliError> {
        self.timed("mesh", |p| {
            let size = p.size_field();
            let g = p.geometry()?.clone();
            let mesh = triangulate(&g.domain, &g.buildings, &size)?;
            let q = mesh_quality(&mesh);
            log::info!("mesh: {} triangles, min angle {:.2} deg", q.triangle_count, q.min_angle_deg);
            let dir = p.out.join("mesh");
            mkdir(&dir)?;
            let hash = mesh.content_hash();
            write_json(&dir.join("mesh.json"), &mesh)?;
            let b = g.domain.bounds;
            write_json(
                &dir.join("domain.json"),
                &DomainRecord {
                    fingerprint: p.fingerprint()?,
                    mesh_hash: hash.clone(),
                    origin: [g.origin.lon, g.origin.lat],
                    bounds: [b.min[0], b.min[1], b.max[0], b.max[1]],
                    wind_direction: g.domain.wind_direction,
                    characteristic_length: g.domain.characteristic_length,
                    blockage_ratio: g.blockage_ratio,
                    size_field: size,
                },
            )?;
            if p.config.output.wants("csv") {
                let rows = vec![
                    vec!["min_angle_deg".into(), q.min_angle_deg.to_string()],
                    vec!["max_circumradius_ratio".into(), q.max_circumradius_ratio.to_string()],
                    vec!["triangle_count".into(), q.triangle_count.to_string()],
                    vec!["vertex_count".into(), q.vertex_count.to_string()],
                    vec!["area_m2".into(), mesh.area().to_string()],
                    vec!["blockage_ratio".into(), g.blockage_ratio.to_string()],
                ];
                write_csv(&dir.join("quality.csv"), &["metric", "value"], &rows)?;
            }
            if p.config.output.wants("vtk") {
                let angles: Vec<f64> = (0..mesh.triangles.len())
                    .map(|t| {
                        let [a, b, c] = mesh.triangle_points(t);
                        urbanflow::geometry::min_angle_deg(a, b, c)
                    })
                    .collect();
                write_vtk(&dir.join("mesh.vtk"), "urbanflow mesh", &VtkGrid::from_mesh(&mesh), &[], &[("min_angle_deg", &angles)])?;
            }
            let mesh = Arc::new(mesh);
            p.mesh = Some(mesh.clone());
            Ok(mesh)
        })
    }

    /// The mesh of this config, reused from the output directory when it is
    /// up to date.
    pub fn mesh(&mut self) -> Result<Arc<TriMesh>, CliError> {
        if let Some(m) = &self.mesh {
            return Ok(m.clone());
        }
        let dir = self.out.join("mesh");
        let record: Option<DomainRecord> = read_json(&dir.join("domain.json"));
        if let Some(r) = record.filter(|r| self.fingerprint().is_ok_and(|f| f == r.fingerprint)) {
            if let Some(mesh) = read_json::<TriMesh>(&dir.join("mesh.json")).filter(|m| m.content_hash() == r.mesh_hash) {
                self.geometry()?;
                let mesh = Arc::new(mesh);
                self.mesh = Some(mesh.clone());
                return Ok(mesh);
            }
        }
        self.cmd_mesh()
    }

    fn ins_params(&self, mu: f64) -> InsParams {
        let w = &self.config.wind;
        InsParams {
            nu: w.nu,
            mu,
            newton_tol: w.newton_tol,
            newton_max_iter: w.newton_max_iter,
            continuation: true,
        }
    }

    pub fn solver(&mut self) -> Result<&WindSolver, CliError> {
        if self.solver.is_none() {
            let mesh = self.mesh()?;
            let spaces = build_spaces(&mesh)?;
            let profile = InflowProfile {
                speed: self.config.wind.base_speed,
                direction: [0.0, 1.0],
                ramp_width: self.config.wind.ramp_width,
            };
            let lifting = build_lifting(&spaces, &mesh, &profile)?;
            self.solver = Some(WindSolver::new(&mesh, &spaces, &lifting, self.config.wind.nu)?);
        }
        Ok(self.solver.as_ref().expect("just set"))
    }

    fn write_velocity_vtk(&self, path: &Path, title: &str, velocity: &Field, pressure: Option<&[f64]>) -> Result<(), CliError> {
        let mesh = self.mesh.as_ref().expect("mesh loaded");
        let grid = if self.config.output.vtk_quadratic {
            VtkGrid::quadratic(&velocity.space)
        } else {
            VtkGrid::from_mesh(mesh)
        };
        let u = velocity_points(velocity, &grid);
        let speed: Vec<f64> = u.iter().map(|v| v[0].hypot(v[1])).collect();
        let mut data = vec![PointData::Vectors("velocity", &u), PointData::Scalars("speed", &speed)];
        if let Some(p) = pressure.filter(|p| p.len() == grid.points.len()) {
            data.push(PointData::Scalars("pressure", p));
        }
        write_vtk(path, title, &grid, &data, &[])
    }

    /// Solves the wind field at the configured multiplier and any sweep
    /// values. Failures in the sweep are recorded and skipped.
    pub fn cmd_wind(&mut self) -> Result<Field, CliError> {
        self.timed("wind", |p| {
            let mesh = p.mesh()?;
            let primary = p.config.wind.mu;
            let mut mus = p.config.wind.sweep.clone();
            mus.push(primary);
            mus.sort_by(f64::total_cmp);
            mus.dedup();
            let dir = p.out.join("wind");
            mkdir(&dir)?;
            let domain = p.geometry()?.domain;
            let nu = p.config.wind.nu;
            let mut rows = vec![];
            let mut primary_field = None;
            let mut primary_error = None;
            for &mu in &mus {
                let params = p.ins_params(mu);
                match p.solver()?.solve(&params) {
                    Ok(w) => {
                        let re = reynolds_number(&w, &domain, nu);
                        log::info!("wind mu = {mu}: Re = {re:.2}, {} Newton iterations", w.newton_iterations);
                        rows.push(vec![
                            mu.to_string(),
                            re.to_string(),
                            w.newton_iterations.to_string(),
                            w.residual_history.last().copied().unwrap_or(0.0).to_string(),
                            "converged".into(),
                        ]);
                        if p.config.output.wants("vtk") {
                            let path = dir.join(format!("wind_mu_{}.vtk", fmt_mu(mu)));
                            p.write_velocity_vtk(&path, &format!("wind mu={mu}"), &w.velocity, Some(&w.pressure.values))?;
                        }
                        if mu == primary {
                            write_json(
                                &dir.join("wind_field.json"),
                                &StoredWind {
                                    mesh_hash: mesh.content_hash(),
                                    mu,
                                    nu,
                                    velocity: w.velocity.values.clone(),
                                    pressure: w.pressure.values.clone(),
                                },
                            )?;
                            primary_field = Some(w.velocity);
                        }
                    }
                    Err(e @ (InsError::NonConvergence { .. } | InsError::Singular { .. })) => {
                        log::warn!("wind mu = {mu} failed: {e}");
                        let last = match &e {
                            InsError::NonConvergence { history } => history.last().copied().unwrap_or(f64::NAN),
                            _ => f64::NAN,
                        };
                        rows.push(vec![mu.to_string(), String::new(), String::new(), last.to_string(), "failed".into()]);
                        if mu == primary {
                            primary_error = Some(CliError::from(e));
                        }
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            if p.config.output.wants("csv") {
                write_csv(&dir.join("summary.csv"), &["mu", "re", "newton_iters", "residual", "status"], &rows)?;
            }
            if let Some(e) = primary_error {
                return Err(e);
            }
            let field = primary_field.expect("primary solve succeeded");
            p.wind = Some(field.clone());
            Ok(field)
        })
    }

    /// The wind field at the configured multiplier, reused when stored.
    pub fn wind(&mut self) -> Result<Field, CliError> {
        if let Some(w) = &self.wind {
            return Ok(w.clone());
        }
        let mesh = self.mesh()?;
        let stored: Option<StoredWind> = read_json(&self.out.join("wind/wind_field.json"));
        let (mu, nu) = (self.config.wind.mu, self.config.wind.nu);
        if let Some(s) = stored.filter(|s| s.mesh_hash == mesh.content_hash() && s.mu == mu && s.nu == nu) {
            let space = self.solver()?.spaces.velocity.clone();
            if let Ok(f) = Field::new(space, s.velocity) {
                self.wind = Some(f.clone());
                return Ok(f);
            }
        }
        self.cmd_wind()
    }

    /// Releases the plume in the stored wind field and writes fields,
    /// contours, probe traces and per-step statistics.
    pub fn cmd_transport(&mut self) -> Result<(), CliError> {
        let wind = self.wind()?;
        self.timed("transport", |p| {
            let mesh = p.mesh()?;
            let g = p.geometry()?.clone();
            let t = p.config.transport.clone();
            let space = Arc::new(build_space(&mesh, SpaceKind::ScalarP1)?);
            let dt = t.dt.unwrap_or_else(|| courant_dt(&mesh, &wind, t.courant).min(t.t_final));
            let params = AdParams { k: t.k, dt, t_final: t.t_final, inflow_value: t.inflow_value };
            let plume = InitialPlume {
                center: g.domain.to_frame(t.plume.center),
                amplitude: t.plume.amplitude,
                radius: t.plume.radius,
                width: t.plume.width,
            };
            let initial = gaussian_initial(&mesh, space.clone(), &plume)?;
            let system = AdSystem::build(&mesh, space, &wind, &params)?;
            let probes: Vec<Point> = t.probes.iter().map(|&q| g.domain.to_frame(q)).collect();
            let save = p.config.output.save_interval;
            let result = run_transient(&mesh, &initial, &system, &params, &probes, save)?;
            log::info!(
                "transport: {} steps of {dt} s, final max {:.3} ppm, undershoot {:.3e}",
                params.n_steps(),
                result.final_field().field.values.iter().copied().fold(f64::MIN, f64::max),
                result.max_undershoot
            );
            let dir = p.out.join("transport");
            mkdir(&dir)?;
            let grid = VtkGrid::from_mesh(&mesh);
            for c in &result.saved {
                let step = (c.time / dt).round() as usize;
                if p.config.output.wants("vtk") {
                    write_vtk(
                        &dir.join(format!("concentration_{step:05}.vtk")),
                        &format!("concentration t={}", c.time),
                        &grid,
                        &[PointData::Scalars("concentration_ppm", &c.field.values)],
                        &[],
                    )?;
                }
                if p.config.output.wants("geojson") {
                    let gj = contour_geojson(&mesh, &c.field.values, &t.contour_levels, c.time, |q| g.to_lonlat(q));
                    write_json(&dir.join(format!("contours_{step:05}.geojson")), &gj)?;
                }
            }
            if p.config.output.wants("csv") {
                let rows: Vec<Vec<String>> = result
                    .probes
                    .iter()
                    .map(|s| {
                        let q = g.domain.from_frame([s.x, s.y]);
                        vec![s.time.to_string(), s.probe_id.to_string(), q[0].to_string(), q[1].to_string(), s.concentration.to_string()]
                    })
                    .collect();
                write_csv(&dir.join("probes.csv"), &["time_s", "probe_id", "x_m", "y_m", "concentration_ppm"], &rows)?;
                let rows: Vec<Vec<String>> = std::iter::once(&result.initial)
                    .chain(&result.stats)
                    .map(|s| vec![s.step.to_string(), s.time.to_string(), s.min.to_string(), s.max.to_string(), s.mass.to_string()])
                    .collect();
                write_csv(&dir.join("stats.csv"), &["step", "time_s", "min_ppm", "max_ppm", "mass_ppm_m2"], &rows)?;
            }
            Ok(())
        })
    }

    fn sampler(&self) -> Result<ParameterSampler, CliError> {
        let [a, b] = self.config.wind.mu_range;
        Ok(ParameterSampler::new(a, b, self.config.rom.n_snapshots)?)
    }

    fn load_artifact(&mut self) -> Result<RomArtifact, CliError> {
        let path = self.out.join("rom/rom.bin");
        if !path.exists() {
            self.cmd_rom(RomPhase::Offline)?;
        }
        let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
        let art = RomArtifact::from_bytes(&bytes)?;
        let mesh = self.mesh()?;
        if art.mesh_hash != mesh.content_hash() || art.nu != self.config.wind.nu {
            return Err(CliError::Config(format!("{} was built for a different mesh or viscosity", path.display())));
        }
        Ok(art)
    }

    pub fn cmd_rom(&mut self, phase: RomPhase) -> Result<(), CliError> {
        match phase {
            RomPhase::Offline => self.timed("rom-offline", Self::rom_offline),
            RomPhase::Online => {
                let art = self.load_artifact()?;
                self.timed("rom-online", |p| p.rom_online(&art))
            }
            RomPhase::Benchmark => {
                let art = self.load_artifact()?;
                self.timed("rom-benchmark", |p| p.rom_benchmark(&art))
            }
        }
    }

    fn rom_offline(&mut self) -> Result<(), CliError> {
        let mesh = self.mesh()?;
        let sampler = self.sampler()?;
        let params = self.ins_params(1.0);
        let rc = self.config.rom.clone();
        let solver = self.solver()?;
        let snaps = collect_snapshots(solver, &params, &sampler.equispaced())?;
        let mass = velocity_mass(solver)?;
        let inner = match rc.inner_product {
            InnerProductKind::Mass => InnerProduct::Weighted(&mass),
            InnerProductKind::Euclidean => InnerProduct::Euclidean,
        };
        let basis = pod(&snaps.velocity, rc.n_r, inner)?;
        let deim = Deim::build(&snaps.nonlinear, rc.n_m)?;
        let ops = RomOperators::project(solver, &basis, &deim, sampler)?;
        log::info!(
            "reduced model: {} snapshots ({} failed), N_r = {}, N_m = {}",
            snaps.len(),
            snaps.failed.len(),
            rc.n_r,
            rc.n_m
        );
        let art = RomArtifact {
            mesh_hash: mesh.content_hash(),
            nu: self.config.wind.nu,
            training_mus: snaps.mus.clone(),
            eigenvalues: basis.eigenvalues.clone(),
            lambda_1: basis.lambda_1,
            deim,
            ops,
        };
        let dir = self.out.join("rom");
        write_bytes(&dir.join("rom.bin"), &art.to_bytes())?;
        if self.config.output.wants("csv") {
            let rows: Vec<Vec<String>> =
                basis.eigenvalues.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), l.to_string()]).collect();
            write_csv(&dir.join("eigenvalues.csv"), &["mode", "eigenvalue_normalized"], &rows)?;
            let mut rows: Vec<Vec<String>> = snaps.mus.iter().map(|m| vec![m.to_string(), "converged".into()]).collect();
            rows.extend(snaps.failed.iter().map(|(m, _)| vec![m.to_string(), "failed".into()]));
            rows.sort_by(|a, b| a[0].parse::<f64>().unwrap_or(0.0).total_cmp(&b[0].parse().unwrap_or(0.0)));
            write_csv(&dir.join("snapshots.csv"), &["mu", "status"], &rows)?;
        }
        Ok(())
    }

    fn rom_online(&mut self, art: &RomArtifact) -> Result<(), CliError> {
        let mu = self.mu_override.unwrap_or(self.config.wind.mu);
        let sol = solve_rom(mu, &art.ops, &RomSolveOptions::default())?;
        let u = sol.reconstruct(&art.ops);
        log::info!("reduced solve at mu = {mu}: {} iterations", sol.iterations);
        let space = self.solver()?.spaces.velocity.clone();
        let field = Field::new(space, u)?;
        let dir = self.out.join("rom");
        mkdir(&dir)?;
        let mut written = vec![format!("rom/online_mu_{}.json", fmt_mu(mu))];
        write_json(
            &self.out.join(&written[0]),
            &serde_json::json!({ "mu": mu, "coefficients": sol.coefficients, "iterations": sol.iterations, "velocity": field.values }),
        )?;
        if self.config.output.wants("vtk") {
            let name = format!("rom/online_mu_{}.vtk", fmt_mu(mu));
            self.write_velocity_vtk(&self.out.join(&name), &format!("reduced wind mu={mu}"), &field, None)?;
            written.push(name);
        }
        for f in written {
            self.attributes.entry(f).or_default().insert("rom_generated".into(), "true".into());
        }
        Ok(())
    }

    fn rom_benchmark(&mut self, art: &RomArtifact) -> Result<(), CliError> {
        let sampler = ParameterSampler { count: self.config.rom.n_test, ..art.ops.sampler };
        let test = sampler.random_disjoint(self.seed, &art.training_mus);
        let params = self.ins_params(1.0);
        let opts = BenchmarkOptions {
            repetitions: self.config.rom.repetitions,
            n_r_values: (1..=art.ops.n_r()).collect(),
            rom: RomSolveOptions::default(),
        };
        let solver = self.solver()?;
        let mass = velocity_mass(solver)?;
        let b = benchmark(solver, &params, &art.ops, &mass, &test, &opts)?;
        for (mu, e) in &b.failed {
            log::warn!("benchmark sample mu = {mu} excluded: {e}");
        }
        if let Some(last) = b.sweep.last() {
            log::info!(
                "N_r = {}: max error {:.3e}, speedup {:.1}..{:.1}",
                last.n_r,
                last.max_error,
                last.min_speedup,
                last.max_speedup
            );
        }
        let dir = self.out.join("rom");
        let rows: Vec<Vec<String>> = b
            .final_rows()
            .iter()
            .map(|s| {
                vec![s.mu.to_string(), s.error_rel.to_string(), s.t_fom_s.to_string(), s.t_rom_s.to_string(), s.speedup.to_string()]
            })
            .collect();
        write_csv(&dir.join("benchmark.csv"), &["mu", "error_rel", "t_fom_s", "t_rom_s", "speedup"], &rows)?;
        let rows: Vec<Vec<String>> = b
            .samples
            .iter()
            .map(|s| {
                vec![s.n_r.to_string(), s.mu.to_string(), s.error_rel.to_string(), s.t_fom_s.to_string(), s.t_rom_s.to_string(), s.speedup.to_string()]
            })
            .collect();
        write_csv(&dir.join("benchmark_sweep.csv"), &["n_r", "mu", "error_rel", "t_fom_s", "t_rom_s", "speedup"], &rows)?;
        let rows: Vec<Vec<String>> =
            b.sweep.iter().map(|p| vec![p.n_r.to_string(), p.max_error.to_string(), p.mean_error.to_string()]).collect();
        write_csv(&dir.join("error_vs_nr.csv"), &["n_r", "max_error_rel", "mean_error_rel"], &rows)?;
        let rows: Vec<Vec<String>> = b
            .sweep
            .iter()
            .map(|p| vec![p.n_r.to_string(), p.min_speedup.to_string(), p.mean_speedup.to_string(), p.max_speedup.to_string()])
            .collect();
        write_csv(&dir.join("speedup_vs_nr.csv"), &["n_r", "min_speedup", "mean_speedup", "max_speedup"], &rows)?;
        let rows: Vec<Vec<String>> =
            art.eigenvalues.iter().enumerate().map(|(i, l)| vec![(i + 1).to_string(), l.to_string()]).collect();
        write_csv(&dir.join("eigenvalues.csv"), &["mode", "eigenvalue_normalized"], &rows)?;
        Ok(())
    }

    /// Mesh, wind, transport, and the offline and online reduced model.
    pub fn run_all(&mut self) -> Result<(), CliError> {
        self.cmd_mesh()?;
        self.cmd_wind()?;
        self.cmd_transport()?;
        self.cmd_rom(RomPhase::Offline)?;
        self.cmd_rom(RomPhase::Online)
    }

    /// Writes the manifest for everything currently in the output directory.
    pub fn finish(&mut self) -> Result<RunManifest, CliError> {
        mkdir(&self.out)?;
        let buildings = std::fs::read(&self.config.buildings_path).map_err(|e| CliError::io(&self.config.buildings_path, e))?;
        let mut config = self.config.clone();
        config.buildings_path = config.buildings_path.file_name().map(PathBuf::from).unwrap_or_default();
        config.output.directory = PathBuf::from(".");
        let manifest = RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config,
            buildings_sha256: sha256_hex(&buildings),
            seed: self.seed,
            mesh_hash: self.mesh.as_ref().map(|m| m.content_hash()),
            phases: self.phases.clone(),
            timings_file: crate::output::manifest::TIMINGS_FILE.into(),
            files: vec![],
        };
        write_manifest(&self.out, manifest, &self.timings, &self.attributes)
    }
}
