use super::RomError;
use crate::fem::SparseMatrix;
use nalgebra::{DMatrix, SymmetricEigen};

/// Inner product used to measure snapshots.
#[derive(Debug, Clone, Copy)]
pub enum InnerProduct<'a> {
    /// `x^T M y` with a mass matrix.
    Weighted(&'a SparseMatrix),
    Euclidean,
}

impl InnerProduct<'_> {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Self::Weighted(m) => m.mul_vec(x),
            Self::Euclidean => x.to_vec(),
        }
    }

    pub fn dot(&self, x: &[f64], y: &[f64]) -> f64 {
        self.apply(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.dot(x, x).max(0.0).sqrt()
    }
}

/// POD modes from the method of snapshots.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedBasis {
    /// Modes, orthonormal in the chosen inner product.
    pub modes: Vec<Vec<f64>>,
    /// All correlation eigenvalues divided by the largest, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Largest eigenvalue before normalization.
    pub lambda_1: f64,
}

impl ReducedBasis {
    pub fn n_r(&self) -> usize {
        self.modes.len()
    }

    /// First `n` modes only.
    pub fn truncated(&self, n: usize) -> Self {
        Self {
            modes: self.modes[..n.min(self.modes.len())].to_vec(),
            eigenvalues: self.eigenvalues.clone(),
            lambda_1: self.lambda_1,
        }
    }
}

/// Correlation eigenpairs sorted by decreasing eigenvalue, with the sign of
/// each eigenvector fixed by its largest entry.
fn sorted_eigen(c: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = c.nrows();
    let eig = SymmetricEigen::new(c);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &k) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(k);
        let imax = (0..n).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a))).unwrap_or(0);
        let s = if col[imax] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            vectors[(i, j)] = s * col[i];
        }
    }
    (values, vectors)
}

/// Method of snapshots: eigen-decompose `C_ij = <s_i, s_j>` and return the
/// first `n_r` modes `V_k = sum_i e_ki s_i / sqrt(lambda_k)`, finished by a
/// modified Gram-Schmidt pass to remove rounding drift.
pub fn pod(snapshots: &[Vec<f64>], n_r: usize, inner: InnerProduct<'_>) -> Result<ReducedBasis, RomError> {
    let ns = snapshots.len();
    if n_r == 0 || n_r > ns {
        return Err(RomError::Dimension(format!("cannot extract {n_r} modes from {ns} snapshots")));
    }
    let n = snapshots[0].len();
    if snapshots.iter().any(|s| s.len() != n) {
        return Err(RomError::Dimension("snapshots differ in length".into()));
    }
    let weighted: Vec<Vec<f64>> = snapshots.iter().map(|s| inner.apply(s)).collect();
    let mut c = DMatrix::zeros(ns, ns);
    for i in 0..ns {
        for j in 0..=i {
            let v: f64 = snapshots[i].iter().zip(&weighted[j]).map(|(a, b)| a * b).sum();
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    let (values, vectors) = sorted_eigen(c);
    let lambda_1 = values[0];
    if lambda_1 <= 0.0 {
        return Err(RomError::RankDeficient { requested: n_r, rank: 0 });
    }
    let rank = values.iter().take_while(|&&l| l >= 1e-14 * lambda_1).count();
    if rank < n_r {
        return Err(RomError::RankDeficient { requested: n_r, rank });
    }
    let mut modes: Vec<Vec<f64>> = Vec::with_capacity(n_r);
    for k in 0..n_r {
        let scale = 1.0 / values[k].sqrt();
        let mut v = vec![0.0; n];
        for (i, s) in snapshots.iter().enumerate() {
            let a = vectors[(i, k)] * scale;
            v.iter_mut().zip(s).for_each(|(x, y)| *x += a * y);
        }
        for prev in &modes {
            let p = inner.dot(prev, &v);
            v.iter_mut().zip(prev).for_each(|(x, y)| *x -= p * y);
        }
        let nv = inner.norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        modes.push(v);
    }
    Ok(ReducedBasis {
        modes,
        eigenvalues: values.iter().map(|l| l / lambda_1).collect(),
        lambda_1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::TripletBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identical_snapshots_have_rank_one() {
        let s = vec![1.0, -2.0, 0.5, 3.0];
        let b = pod(&[s.clone(), s], 1, InnerProduct::Euclidean).unwrap();
        assert!(b.eigenvalues[1] <= 1e-14);
        assert!(matches!(
            pod(&[vec![1.0, 2.0], vec![1.0, 2.0]], 2, InnerProduct::Euclidean),
            Err(RomError::RankDeficient { requested: 2, rank: 1 })
        ));
    }

    #[test]
    fn unit_vectors_give_equal_eigenvalues() {
        let snaps: Vec<Vec<f64>> = (0..4).map(|i| (0..6).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let b = pod(&snaps, 4, InnerProduct::Euclidean).unwrap();
        assert!(b.eigenvalues.iter().all(|l| (l - 1.0).abs() < 1e-12));
        for i in 0..4 {
            for j in 0..4 {
                let d: f64 = b.modes[i].iter().zip(&b.modes[j]).map(|(a, c)| a * c).sum();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_five_matches_svd_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (n, ns, r) = (40, 20, 5);
        let left = DMatrix::<f64>::from_fn(n, r, |_, _| rng.random_range(-1.0..1.0));
        let right = DMatrix::<f64>::from_fn(r, ns, |_, _| rng.random_range(-1.0..1.0));
        let s = &left * &right;
        let snaps: Vec<Vec<f64>> = (0..ns).map(|j| s.column(j).iter().copied().collect()).collect();
        let b = pod(&snaps, 5, InnerProduct::Euclidean).unwrap();
        let above = b.eigenvalues.iter().filter(|&&l| l > 1e-12).count();
        assert_eq!(above, 5);
        let sv = s.svd(false, false).singular_values;
        let mut sv: Vec<f64> = sv.iter().copied().collect();
        sv.sort_by(|a, c| c.total_cmp(a));
        for k in 0..5 {
            let oracle = sv[k] * sv[k] / (sv[0] * sv[0]);
            assert!((b.eigenvalues[k] - oracle).abs() < 1e-10);
        }
    }

    #[test]
    fn weighted_modes_are_orthonormal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let mut t = TripletBuilder::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0 + i as f64 * 0.1);
            if i + 1 < n {
                t.push(i, i + 1, 0.5);
                t.push(i + 1, i, 0.5);
            }
        }
        let m = t.build();
        let snaps: Vec<Vec<f64>> = (0..8).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let ip = InnerProduct::Weighted(&m);
        let b = pod(&snaps, 6, ip).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!((ip.dot(&b.modes[i], &b.modes[j]) - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
            }
        }
        assert!(b.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }
}
