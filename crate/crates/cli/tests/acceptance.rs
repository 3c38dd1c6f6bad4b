//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion
//! and exits nonzero if any fails.

mod common;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};
use urbanflow::advect::{gaussian_initial, moments, run_transient, step, AdParams, AdSystem, ConcentrationField, InitialPlume};
use urbanflow::fem::{boundary_load, build_space, l2_error_scalar, l2_error_vector, load_vector, Constraints, DofMap, Field, SpaceKind};
use urbanflow::geo_ingest::{
    blockage_ratio, compute_domain_bounds, BuildingSet, Crs, DomainOptions, DomainSpec, GeoPolygon, LatLon, Rect,
};
use urbanflow::geometry::Point;
use urbanflow::ins::{build_lifting, build_spaces, reynolds_number, solve_steady_ins, InflowProfile, InsParams, InsProblem, NewtonOptions};
use urbanflow::meshgen::{BoundaryTag, TriMesh};
use urbanflow::rom::{
    benchmark, collect_snapshots, pod, velocity_mass, BenchmarkOptions, Deim, InnerProduct, ParameterSampler, RomBenchmark, RomOperators,
    SnapshotSet,
};
use urbanflow_cli::output::manifest::{read_manifest, sha256_hex};
use urbanflow_cli::{Pipeline, ScenarioConfig};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

struct Report {
    failures: usize,
}

impl Report {
    fn run(&mut self, id: usize, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {:.1} s, limit {:.0} s", elapsed.as_secs_f64(), l.as_secs_f64())),
            (o, _) => o,
        };
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                self.failures += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {id:>2} {name} ({:.2} s): {detail}", elapsed.as_secs_f64());
    }
}

fn local_set(polygons: Vec<GeoPolygon>) -> BuildingSet {
    BuildingSet { polygons, crs: Crs::Local { origin: LatLon { lat: 0.0, lon: 0.0 } } }
}

fn rotated_rect(id: String, c: Point, w: f64, h: f64, angle: f64) -> GeoPolygon {
    let (s, co) = angle.sin_cos();
    let mut ring: Vec<Point> = [[-w, -h], [w, -h], [w, h], [-w, h]]
        .iter()
        .map(|&[x, y]| [c[0] + 0.5 * (co * x - s * y), c[1] + 0.5 * (s * x + co * y)])
        .collect();
    ring.push(ring[0]);
    GeoPolygon { id, ring }
}

/// Crosswind coverage by merging sorted intervals.
fn union_ratio(b: &BuildingSet, d: &DomainSpec) -> f64 {
    let mut iv: Vec<(f64, f64)> = b
        .polygons
        .iter()
        .map(|p| {
            let xs = p.ring.iter().map(|&q| d.to_frame(q)[0]);
            (xs.clone().fold(f64::INFINITY, f64::min), xs.fold(f64::NEG_INFINITY, f64::max))
        })
        .collect();
    iv.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut total = 0.0;
    let mut cur = iv[0];
    for &(a, b) in &iv[1..] {
        if a > cur.1 {
            total += cur.1 - cur.0;
            cur = (a, b);
        } else {
            cur.1 = cur.1.max(b);
        }
    }
    total += cur.1 - cur.0;
    total / d.bounds.width()
}

fn blockage_clusters() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_br: f64 = 0.0;
    let mut worst_diff: f64 = 0.0;
    for k in 0..100 {
        let n = rng.random_range(1..=12);
        let spread = rng.random_range(10.0..300.0);
        let polys = (0..n)
            .map(|i| {
                let c = [rng.random_range(-spread..spread), rng.random_range(-spread..spread)];
                rotated_rect(format!("c{k}b{i}"), c, rng.random_range(3.0..60.0), rng.random_range(3.0..60.0), rng.random_range(0.0..PI))
            })
            .collect();
        let set = local_set(polys);
        let theta = rng.random_range(0.0..2.0 * PI);
        let d = compute_domain_bounds(&set, [theta.cos(), theta.sin()], DomainOptions::default()).map_err(e)?;
        let br = blockage_ratio(&set, &d);
        let oracle = union_ratio(&set, &d);
        ensure(br < 0.17, format!("cluster {k}: BR {br}"))?;
        worst_br = worst_br.max(br);
        worst_diff = worst_diff.max((br - oracle).abs());
    }
    ensure(worst_diff <= 1e-12, format!("oracle mismatch {worst_diff:.2e}"))?;
    Ok(format!("max BR {worst_br:.6}, max oracle difference {worst_diff:.1e}"))
}

fn seg_distance(p: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let t = (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / (dx * dx + dy * dy)).clamp(0.0, 1.0);
    ((p[0] - a[0] - t * dx).powi(2) + (p[1] - a[1] - t * dy).powi(2)).sqrt()
}

fn shoelace(ring: &[Point]) -> f64 {
    let n = ring.len();
    0.5 * (0..n).map(|i| ring[i][0] * ring[(i + 1) % n][1] - ring[(i + 1) % n][0] * ring[i][1]).sum::<f64>()
}

fn fixture_mesh() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let cfg = ScenarioConfig::load(&common::scenario(dir.path(), |_| {})).map_err(e)?;
    let (lc_gap, gap) = (cfg.mesh.lc_gap, cfg.mesh.gap_distance);
    let mut p = Pipeline::new(cfg, Some(dir.path().join("out")), None, None);
    let mesh = p.mesh().map_err(e)?;
    let g = p.geometry().map_err(e)?.clone();
    mesh.check_conformity().map_err(e)?;

    let mut min_angle: f64 = 180.0;
    let mut area = 0.0;
    let rings = g.domain.frame_rings(&g.buildings);
    let (mut gap_tris, mut worst_gap) = (0usize, 0.0f64);
    for t in &mesh.triangles {
        let [a, b, c] = t.map(|i| mesh.vertices[i]);
        let l = [(b, c), (c, a), (a, b)].map(|(p, q)| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt());
        let tri_area = 0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]));
        ensure(tri_area > 0.0, "inverted triangle")?;
        area += tri_area;
        for i in 0..3 {
            let (x, y, z) = (l[i], l[(i + 1) % 3], l[(i + 2) % 3]);
            min_angle = min_angle.min(((y * y + z * z - x * x) / (2.0 * y * z)).clamp(-1.0, 1.0).acos().to_degrees());
        }
        let centroid = [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0];
        let dist = rings
            .iter()
            .flat_map(|r| (0..r.len()).map(move |i| (r[i], r[(i + 1) % r.len()])))
            .map(|(p, q)| seg_distance(centroid, p, q))
            .fold(f64::INFINITY, f64::min);
        if dist <= gap {
            gap_tris += 1;
            worst_gap = worst_gap.max(l[0] * l[1] * l[2] / (4.0 * tri_area) / lc_gap);
        }
    }
    let expected = g.domain.bounds.area() - rings.iter().map(|r| shoelace(r).abs()).sum::<f64>();
    let balance = (area - expected).abs() / expected;
    ensure(min_angle >= 20.0 - 1e-9, format!("min angle {min_angle}"))?;
    ensure(balance <= 1e-9, format!("area balance {balance:.2e}"))?;
    ensure(gap_tris > 0 && worst_gap <= 1.5, format!("gap circumradius / lc_gap {worst_gap:.3} over {gap_tris} triangles"))?;
    Ok(format!(
        "{} triangles, min angle {min_angle:.2} deg, area balance {balance:.1e}, gap R/lc_gap <= {worst_gap:.3} ({gap_tris} triangles)",
        mesh.triangles.len()
    ))
}

fn unit_square(nx: usize, ny: usize, w: f64, h: f64) -> (DomainSpec, TriMesh) {
    let d = DomainSpec::new(Rect { min: [0.0, 0.0], max: [w, h] }, [0.0, 1.0]).expect("valid rectangle");
    let m = TriMesh::structured(&d, nx, ny);
    (d, m)
}

fn mms_u(x: Point) -> [f64; 2] {
    [(PI * x[0]).sin() * (PI * x[1]).cos(), -(PI * x[0]).cos() * (PI * x[1]).sin()]
}

fn mms_p(x: Point) -> f64 {
    (PI * x[0]).cos() * (PI * x[1]).cos()
}

fn mms_grad(x: Point) -> [[f64; 2]; 2] {
    let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
    [[PI * cx * cy, -PI * sx * sy], [PI * sx * sy, -PI * cx * cy]]
}

fn mms_forcing(x: Point, nu: f64) -> [f64; 2] {
    let u = mms_u(x);
    let g = mms_grad(x);
    let (sx, cx, sy, cy) = ((PI * x[0]).sin(), (PI * x[0]).cos(), (PI * x[1]).sin(), (PI * x[1]).cos());
    let grad_p = [-PI * sx * cy, -PI * cx * sy];
    std::array::from_fn(|c| nu * 2.0 * PI * PI * u[c] + u[0] * g[c][0] + u[1] * g[c][1] + grad_p[c])
}

fn mms_errors(n: usize, nu: f64) -> Result<(f64, f64), String> {
    let (_, m) = unit_square(n, n, 1.0, 1.0);
    let s = build_spaces(&m).map_err(e)?;
    let mut f = load_vector(&m, &s.velocity, |x| mms_forcing(x, nu)).map_err(e)?;
    let traction = boundary_load(&m, &s.velocity, BoundaryTag::Outflow, |x, nrm| {
        let g = mms_grad(x);
        let p = mms_p(x);
        std::array::from_fn(|c| nu * (g[c][0] * nrm[0] + g[c][1] * nrm[1]) - p * nrm[c])
    })
    .map_err(e)?;
    f.iter_mut().zip(&traction).for_each(|(a, b)| *a += b);
    let problem = InsProblem::new(&m, &s, nu).map_err(e)?.with_forcing(f);
    let mut c = Constraints::new();
    for tag in [BoundaryTag::Inflow, BoundaryTag::NoSlipWall] {
        for &d in s.velocity.boundary_dofs(tag) {
            c.insert_if_free(d, mms_u(s.velocity.dof_coord(d))[d % 2]);
        }
    }
    let out = problem.solve(&c, vec![0.0; s.velocity.n_dofs()], None, &NewtonOptions::default()).map_err(e)?;
    let u = Field::new(s.velocity.clone(), out.velocity).map_err(e)?;
    let p = Field::new(s.pressure.clone(), out.pressure).map_err(e)?;
    Ok((l2_error_vector(&u, &m, mms_u), l2_error_scalar(&p, &m, mms_p)))
}

fn taylor_hood_orders() -> Check {
    let nu = 0.1;
    let errs = [4, 8, 16, 32].iter().map(|&n| mms_errors(n, nu)).collect::<Result<Vec<_>, _>>()?;
    let mut orders = vec![];
    for k in 0..errs.len() - 1 {
        let ru = (errs[k].0 / errs[k + 1].0).log2();
        let rp = (errs[k].1 / errs[k + 1].1).log2();
        orders.push(format!("({ru:.2}, {rp:.2})"));
        ensure(ru >= 2.5 && rp >= 1.8, format!("orders {orders:?}, errors {errs:?}"))?;
    }
    Ok(format!("velocity/pressure orders {}", orders.join(" ")))
}

fn poiseuille_channel() -> Check {
    let (d, m) = unit_square(8, 36, 1.0, 6.0);
    let s = build_spaces(&m).map_err(e)?;
    let lift = build_lifting(&s, &m, &InflowProfile::uniform(1.0)).map_err(e)?;
    let w = solve_steady_ins(&m, &s, &lift, &InsParams { nu: 1.0, mu: 1.0, ..InsParams::default() }).map_err(e)?;
    let re = reynolds_number(&w, &d, 1.0);
    let v = &w.velocity.space;
    let mut samples: Vec<(f64, f64)> = v
        .boundary_dofs(BoundaryTag::Outflow)
        .iter()
        .filter(|&&k| k % 2 == 1)
        .map(|&k| (v.dof_coord(k)[0], w.velocity.values[k]))
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = samples.len() - 1;
    let h = 1.0 / n as f64;
    let flux: f64 = (0..n).step_by(2).map(|k| h / 3.0 * (samples[k].1 + 4.0 * samples[k + 1].1 + samples[k + 2].1)).sum();
    let center = samples.iter().find(|s| (s.0 - 0.5).abs() < 1e-12).ok_or("no centerline node")?.1;
    let ratio = center / flux;
    ensure((ratio - 1.5).abs() / 1.5 < 0.02, format!("ratio {ratio:.4} at Re {re:.2}"))?;
    Ok(format!("centerline/mean {ratio:.4} at Re {re:.2}"))
}

fn scalar_spaces(m: &TriMesh) -> Result<(Arc<DofMap>, Arc<DofMap>), String> {
    Ok((
        Arc::new(build_space(m, SpaceKind::ScalarP1).map_err(e)?),
        Arc::new(build_space(m, SpaceKind::VelocityP2Vector).map_err(e)?),
    ))
}

fn transport_consistency() -> Check {
    // A constant is a fixed point of one implicit step.
    let (_, m) = unit_square(9, 6, 3.0, 2.0);
    let (s, v) = scalar_spaces(&m)?;
    let wind = Field::interpolate_vector(v.clone(), |x| [0.4 + 0.1 * x[1], 1.0 - 0.2 * x[0]]);
    let p = AdParams { k: 0.02, dt: 0.05, t_final: 0.5, inflow_value: None };
    let sys = AdSystem::build(&m, s.clone(), &wind, &p).map_err(e)?;
    let c0 = ConcentrationField { field: Field::interpolate_scalar(s, |_| 3.0), time: 0.0 };
    let c1 = step(&c0, &sys).map_err(e)?;
    let fixed = c1.field.values.iter().map(|v| (v - 3.0).abs()).fold(0.0, f64::max);
    ensure(fixed <= 1e-10 * 3.0, format!("constant drifted by {fixed:.2e}"))?;

    // Mass in still air with no-flux boundaries.
    let (_, m) = unit_square(12, 12, 4.0, 4.0);
    let (s, v) = scalar_spaces(&m)?;
    let plume = InitialPlume { center: [2.0, 2.0], amplitude: 10.0, radius: 1.5, width: 0.5 };
    let c0 = gaussian_initial(&m, s.clone(), &plume).map_err(e)?;
    let p = AdParams { k: 0.05, dt: 0.05, t_final: 5.0, inflow_value: None };
    let sys = AdSystem::build(&m, s, &Field::zeros(v), &p).map_err(e)?;
    let out = run_transient(&m, &c0, &sys, &p, &[], 10).map_err(e)?;
    ensure(out.stats.len() == 100, "expected 100 steps")?;
    let mut prev = out.initial.mass;
    let mut drift: f64 = 0.0;
    for st in &out.stats {
        drift = drift.max((st.mass - prev).abs() / out.initial.mass);
        prev = st.mass;
    }
    ensure(drift <= 1e-9, format!("mass drift {drift:.2e} per step"))?;

    // Variance of a narrow Gaussian grows by 2 k dt per step.
    let (_, m) = unit_square(80, 80, 20.0, 20.0);
    let (s, v) = scalar_spaces(&m)?;
    let plume = InitialPlume { center: [10.0, 10.0], amplitude: 1.0, radius: 6.0, width: 1.0 };
    let (k, dt) = (0.1, 0.1);
    let p = AdParams { k, dt, t_final: 1.0, inflow_value: None };
    let sys = AdSystem::build(&m, s.clone(), &Field::zeros(v), &p).map_err(e)?;
    let mut c = gaussian_initial(&m, s, &plume).map_err(e)?;
    let mut var = moments(&c.field, &m).variance;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        c = step(&c, &sys).map_err(e)?;
        let next = moments(&c.field, &m).variance;
        for d in 0..2 {
            worst = worst.max(((next[d] - var[d]) / (2.0 * k * dt) - 1.0).abs());
        }
        var = next;
    }
    ensure(worst < 0.05, format!("variance growth off by {:.2}%", 100.0 * worst))?;
    Ok(format!(
        "fixed point {fixed:.1e}, mass drift {drift:.1e} per step, variance growth within {:.2}%",
        100.0 * worst
    ))
}

fn plume_advection() -> Check {
    let (_, m) = unit_square(24, 80, 60.0, 200.0);
    let (s, v) = scalar_spaces(&m)?;
    let speed = 2.0;
    let wind = Field::interpolate_vector(v, |_| [0.0, speed]);
    let plume = InitialPlume { center: [30.0, 40.0], amplitude: 1e4, radius: 20.0, width: 6.0 };
    let c0 = gaussian_initial(&m, s.clone(), &plume).map_err(e)?;
    let p = AdParams { k: 0.1, dt: 0.5, t_final: 25.0, inflow_value: None };
    let sys = AdSystem::build(&m, s, &wind, &p).map_err(e)?;
    let out = run_transient(&m, &c0, &sys, &p, &[], 10).map_err(e)?;
    let peak0 = c0.field.values.iter().copied().fold(0.0, f64::max);
    let y0 = moments(&c0.field, &m).mean[1];
    let y1 = moments(&out.final_field().field, &m).mean[1];
    let expected = speed * p.t_final;
    let rel = ((y1 - y0) - expected).abs() / expected;
    ensure(rel < 0.05, format!("moved {:.2} m, expected {expected} m", y1 - y0))?;
    Ok(format!("peak {peak0:.0} ppm, centroid moved {:.2} m of {expected} m ({:.2}% off)", y1 - y0, 100.0 * rel))
}

struct Offline {
    snaps: SnapshotSet,
    eigenvalues: Vec<f64>,
    re_range: (f64, f64),
    deim: Deim,
    bench: Result<RomBenchmark, String>,
    timing: Duration,
}

fn offline(config: &Path, out: &Path) -> Result<Offline, String> {
    let start = Instant::now();
    let cfg = ScenarioConfig::load(config).map_err(e)?;
    let rc = cfg.rom.clone();
    let w = cfg.wind.clone();
    let mut p = Pipeline::new(cfg, Some(out.to_path_buf()), None, None);
    let domain = p.geometry().map_err(e)?.domain;
    let solver = p.solver().map_err(e)?;
    let params = InsParams { nu: w.nu, mu: 1.0, newton_tol: w.newton_tol, newton_max_iter: w.newton_max_iter, continuation: true };
    let sampler = ParameterSampler::new(w.mu_range[0], w.mu_range[1], rc.n_snapshots).map_err(e)?;
    let snaps = collect_snapshots(solver, &params, &sampler.equispaced()).map_err(e)?;
    let re = |i: usize| -> Result<f64, String> {
        let u = Field::new(solver.spaces.velocity.clone(), snaps.full_velocity(i, &solver.lifting.velocity.values)).map_err(e)?;
        Ok(u.max_magnitude() * domain.characteristic_length / w.nu)
    };
    let re_range = (re(0)?, re(snaps.len() - 1)?);
    let mass = velocity_mass(solver).map_err(e)?;
    let basis = pod(&snaps.velocity, rc.n_r, InnerProduct::Weighted(&mass)).map_err(e)?;
    let deim = Deim::build(&snaps.nonlinear, rc.n_m).map_err(e)?;
    let ops = RomOperators::project(solver, &basis, &deim, sampler).map_err(e)?;
    let test = ParameterSampler { count: rc.n_test, ..sampler }.random_disjoint(rc.seed, &snaps.mus);
    let opts = BenchmarkOptions { repetitions: rc.repetitions, n_r_values: (1..=rc.n_r).collect(), ..BenchmarkOptions::default() };
    let bench = benchmark(solver, &params, &ops, &mass, &test, &opts).map_err(e);
    Ok(Offline { eigenvalues: basis.eigenvalues.clone(), snaps, re_range, deim, bench, timing: start.elapsed() })
}

fn pod_spectrum(o: &Offline) -> Check {
    let (lo, hi) = o.re_range;
    ensure(o.snaps.len() == 50, format!("{} snapshots ({} failed)", o.snaps.len(), o.snaps.failed.len()))?;
    ensure((5.0..=100.0).contains(&lo) && (5.0..=100.0).contains(&hi), format!("Re range [{lo:.1}, {hi:.1}]"))?;
    let l20 = o.eigenvalues.get(19).copied().ok_or("fewer than 20 eigenvalues")?;
    ensure(l20 <= 1e-6, format!("lambda_20 / lambda_1 = {l20:.2e}"))?;
    Ok(format!(
        "Re in [{lo:.1}, {hi:.1}], lambda_6 {:.1e}, lambda_10 {:.1e}, lambda_20 {:.1e} (relative)",
        o.eigenvalues[5], o.eigenvalues[9], l20
    ))
}

fn rom_accuracy(o: &Offline) -> Check {
    let b = o.bench.as_ref()?;
    ensure(b.failed.is_empty(), format!("full-order failures at {:?}", b.failed))?;
    let e6 = b.at(6).ok_or("no N_r = 6 row")?.max_error;
    let e10 = b.at(10).ok_or("no N_r = 10 row")?.max_error;
    let n = b.final_rows().len();
    ensure(n == 20, format!("{n} test samples"))?;
    ensure(e6 < 0.02 && e10 < 1e-3, format!("max error N_r=6 {e6:.2e}, N_r=10 {e10:.2e}"))?;
    ensure(o.timing < Duration::from_secs(600), format!("offline and benchmark took {:.0} s", o.timing.as_secs_f64()))?;
    Ok(format!(
        "max relative error N_r=6 {e6:.2e}, N_r=10 {e10:.2e} over {n} samples; snapshots and benchmark {:.1} s",
        o.timing.as_secs_f64()
    ))
}

fn rom_speedup(o: &Offline) -> Check {
    let b = o.bench.as_ref()?;
    let min = b.samples.iter().filter(|s| s.n_r <= 10).map(|s| s.speedup).fold(f64::INFINITY, f64::min);
    let max = b.samples.iter().map(|s| s.speedup).fold(0.0, f64::max);
    ensure(!b.samples.is_empty() && min > 1.0, format!("min speedup {min:.2}"))?;
    Ok(format!("speedup {min:.0}x to {max:.0}x over {} rows", b.samples.len()))
}

fn deim_oracle(o: &Offline) -> Check {
    let d = &o.deim;
    let n = d.basis[0].len();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut worst_in: f64 = 0.0;
    for _ in 0..50 {
        let coeffs: Vec<f64> = (0..d.n_m()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f: Vec<f64> = (0..n).map(|i| coeffs.iter().zip(&d.basis).map(|(c, u)| c * u[i]).sum()).collect();
        let r = d.interpolate(&f).map_err(e)?;
        let err = norm(&f.iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>()) / norm(&f);
        worst_in = worst_in.max(err);
    }
    ensure(worst_in <= 1e-8, format!("in-span error {worst_in:.2e}"))?;
    let kappa = d.error_constant();
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..50 {
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut proj = f.clone();
        for u in &d.basis {
            let c: f64 = u.iter().zip(&f).map(|(a, b)| a * b).sum();
            proj.iter_mut().zip(u).for_each(|(p, v)| *p -= c * v);
        }
        let r = d.interpolate(&f).map_err(e)?;
        let err = norm(&f.iter().zip(&r).map(|(a, b)| a - b).collect::<Vec<_>>());
        worst_ratio = worst_ratio.max(err / (kappa * norm(&proj)));
    }
    ensure(worst_ratio <= 1.0 + 1e-10, format!("bound exceeded by factor {worst_ratio}"))?;
    Ok(format!("in-span error <= {worst_in:.1e}; outside, error / bound <= {worst_ratio:.3} with ||(P^T U)^-1|| = {kappa:.2}"))
}

fn run_all_twice() -> Check {
    let dir = tempfile::tempdir().map_err(e)?;
    let cfg = common::scenario(dir.path(), |_| {});
    let outs = [dir.path().join("a"), dir.path().join("b")];
    for out in &outs {
        let o = common::run(&["run-all"], &cfg, out);
        ensure(o.status.success(), format!("run-all failed: {}", String::from_utf8_lossy(&o.stderr)))?;
    }
    let read = |p: &Path| std::fs::read(p).map_err(|err| format!("{}: {err}", p.display()));
    ensure(read(&outs[0].join("manifest.json"))? == read(&outs[1].join("manifest.json"))?, "manifests differ")?;
    let m = read_manifest(&outs[0]).ok_or("unreadable manifest")?;
    let mut csvs = 0;
    for f in m.files.iter().filter(|f| f.path.ends_with(".csv")) {
        ensure(read(&outs[0].join(&f.path))? == read(&outs[1].join(&f.path))?, format!("{} differs", f.path))?;
        csvs += 1;
    }
    let hashes: Vec<String> = outs
        .iter()
        .map(|o| {
            let mesh: TriMesh = serde_json::from_slice(&read(&o.join("mesh/mesh.json"))?).map_err(e)?;
            Ok::<_, String>(mesh.content_hash())
        })
        .collect::<Result<_, _>>()?;
    ensure(hashes[0] == hashes[1] && m.mesh_hash.as_ref() == Some(&hashes[0]), "mesh hashes differ")?;
    Ok(format!(
        "{} files, {csvs} CSVs identical, manifest sha256 {}, mesh hash {}",
        m.files.len(),
        &sha256_hex(&read(&outs[0].join("manifest.json"))?)[..12],
        &hashes[0][..12]
    ))
}

fn main() {
    let mut r = Report { failures: 0 };
    let secs = Duration::from_secs;
    r.run(1, "blockage ratio on random clusters", Some(secs(5)), blockage_clusters);
    r.run(2, "fixture mesh validity", Some(secs(30)), fixture_mesh);
    r.run(3, "Taylor-Hood convergence orders", Some(secs(120)), taylor_hood_orders);
    r.run(4, "channel Poiseuille profile", Some(secs(30)), poiseuille_channel);
    r.run(5, "transport consistency and conservation", Some(secs(60)), transport_consistency);
    r.run(6, "plume advection in uniform wind", Some(secs(60)), plume_advection);

    let dir = tempfile::tempdir().expect("temporary directory");
    let config = common::scenario(dir.path(), |_| {});
    let start = Instant::now();
    let shared = catch_unwind(AssertUnwindSafe(|| offline(&config, &dir.path().join("out"))))
        .unwrap_or_else(|_| Err("offline stage panicked".into()));
    println!("     reduced-model offline stage and benchmark: {:.1} s", start.elapsed().as_secs_f64());
    let with = |f: fn(&Offline) -> Check| {
        let s = &shared;
        move || s.as_ref().map_err(Clone::clone).and_then(f)
    };
    r.run(7, "POD eigenvalue decay", None, with(pod_spectrum));
    r.run(8, "reduced-model accuracy", None, with(rom_accuracy));
    r.run(9, "reduced-model speedup", None, with(rom_speedup));
    r.run(10, "DEIM interpolation oracle", Some(secs(10)), with(deim_oracle));
    r.run(11, "run-all determinism", None, run_all_twice);

    if r.failures > 0 {
        println!("{} criteria failed", r.failures);
        std::process::exit(1);
    }
    println!("all criteria passed");
}
