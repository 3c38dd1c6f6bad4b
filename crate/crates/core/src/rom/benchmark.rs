use super::{solve_rom, RomError, RomOperators, RomSolveOptions};
use crate::fem::SparseMatrix;
use crate::ins::{InsError, InsParams, WindSolver};
use std::time::{Duration, Instant};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    /// Timed repetitions per solve; the median is reported.
    pub repetitions: usize,
    /// Reduced dimensions of the sweep. The largest is used for the
    /// per-sample table.
    pub n_r_values: Vec<usize>,
    pub rom: RomSolveOptions,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            repetitions: 5,
            n_r_values: (1..=10).collect(),
            rom: RomSolveOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchmarkSample {
    pub mu: f64,
    pub n_r: usize,
    pub error_rel: f64,
    pub t_fom_s: f64,
    pub t_rom_s: f64,
    pub speedup: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrSweepPoint {
    pub n_r: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub min_speedup: f64,
    pub mean_speedup: f64,
    pub max_speedup: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RomBenchmark {
    /// One row per test sample and swept dimension.
    pub samples: Vec<BenchmarkSample>,
    pub sweep: Vec<NrSweepPoint>,
    pub failed: Vec<(f64, String)>,
}

impl RomBenchmark {
    /// Rows for the largest swept dimension.
    pub fn final_rows(&self) -> Vec<BenchmarkSample> {
        let n = self.samples.iter().map(|s| s.n_r).max().unwrap_or(0);
        self.samples.iter().filter(|s| s.n_r == n).copied().collect()
    }

    pub fn at(&self, n_r: usize) -> Option<&NrSweepPoint> {
        self.sweep.iter().find(|p| p.n_r == n_r)
    }
}

fn median(mut t: Vec<Duration>) -> f64 {
    t.sort();
    let n = t.len();
    let m = if n % 2 == 1 { t[n / 2] } else { (t[n / 2 - 1] + t[n / 2]) / 2 };
    m.as_secs_f64().max(1e-9)
}

fn timed<T>(reps: usize, mut f: impl FnMut() -> Result<T, RomError>) -> Result<(T, f64), RomError> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        let out = f()?;
        times.push(start.elapsed());
        last = Some(out);
    }
    Ok((last.expect("at least one repetition"), median(times)))
}

fn mass_norm(mass: &SparseMatrix, x: &[f64]) -> f64 {
    mass.bilinear(x, x).max(0.0).sqrt()
}

/// Times full-order and reduced solves on the test samples and measures
/// the relative velocity error in the mass norm.
pub fn benchmark(
    solver: &WindSolver,
    params: &InsParams,
    ops: &RomOperators,
    mass: &SparseMatrix,
    test_mus: &[f64],
    opts: &BenchmarkOptions,
) -> Result<RomBenchmark, RomError> {
    let mut samples = vec![];
    let mut failed = vec![];
    let dims: Vec<usize> = opts.n_r_values.iter().copied().filter(|&n| n >= 1 && n <= ops.n_r()).collect();
    let reduced: Vec<RomOperators> = dims.iter().map(|&n| ops.truncated(n)).collect();
    for &mu in test_mus {
        let p = InsParams { mu, ..*params };
        let fom = timed(opts.repetitions, || Ok(solver.solve(&p)));
        let (u_fom, t_fom) = match fom? {
            (Ok(w), t) => (w.velocity.values, t),
            (Err(e @ (InsError::NonConvergence { .. } | InsError::Singular { .. })), _) => {
                log::warn!("test sample mu = {mu} excluded: {e}");
                failed.push((mu, e.to_string()));
                continue;
            }
            (Err(e), _) => return Err(e.into()),
        };
        let norm = mass_norm(mass, &u_fom);
        for (rom, &n) in reduced.iter().zip(&dims) {
            let (u_rom, t_rom) = timed(opts.repetitions, || {
                let s = solve_rom(mu, rom, &opts.rom)?;
                Ok(s.reconstruct(rom))
            })?;
            let diff: Vec<f64> = u_fom.iter().zip(&u_rom).map(|(a, b)| a - b).collect();
            let error_rel = if norm > 0.0 { mass_norm(mass, &diff) / norm } else { mass_norm(mass, &diff) };
            samples.push(BenchmarkSample {
                mu,
                n_r: n,
                error_rel,
                t_fom_s: t_fom,
                t_rom_s: t_rom,
                speedup: t_fom / t_rom,
            });
        }
    }
    let sweep = dims
        .iter()
        .filter_map(|&n| {
            let rows: Vec<&BenchmarkSample> = samples.iter().filter(|s| s.n_r == n).collect();
            if rows.is_empty() {
                return None;
            }
            let m = rows.len() as f64;
            Some(NrSweepPoint {
                n_r: n,
                max_error: rows.iter().map(|s| s.error_rel).fold(0.0, f64::max),
                mean_error: rows.iter().map(|s| s.error_rel).sum::<f64>() / m,
                min_speedup: rows.iter().map(|s| s.speedup).fold(f64::INFINITY, f64::min),
                mean_speedup: rows.iter().map(|s| s.speedup).sum::<f64>() / m,
                max_speedup: rows.iter().map(|s| s.speedup).fold(0.0, f64::max),
            })
        })
        .collect();
    Ok(RomBenchmark { samples, sweep, failed })
}
