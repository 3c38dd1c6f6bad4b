use super::RomError;
use nalgebra::{DMatrix, DVector};

/// Discrete empirical interpolation: an orthonormal basis for nonlinear
/// term snapshots together with greedily selected sample rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Deim {
    /// Basis vectors `U_m`, Euclidean-orthonormal.
    pub basis: Vec<Vec<f64>>,
    /// Sampled rows, one per basis vector, in selection order.
    pub indices: Vec<usize>,
    /// Singular values of the snapshot matrix, largest first.
    pub singular_values: Vec<f64>,
}

/// Left singular vectors of the snapshot matrix, signs fixed by the
/// largest entry of each vector.
fn left_singular_vectors(snapshots: &[Vec<f64>], m: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>), RomError> {
    let ns = snapshots.len();
    let n = snapshots.first().map_or(0, Vec::len);
    if ns == 0 || n == 0 || snapshots.iter().any(|s| s.len() != n) {
        return Err(RomError::Dimension("empty or ragged nonlinear snapshots".into()));
    }
    if m == 0 || m > ns.min(n) {
        return Err(RomError::Dimension(format!("cannot build {m} interpolation vectors from {ns} snapshots")));
    }
    let s = DMatrix::from_fn(n, ns, |i, j| snapshots[j][i]);
    let svd = s.svd(true, false);
    let u = svd.u.ok_or_else(|| RomError::Dimension("SVD failed".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));
    let values: Vec<f64> = order.iter().map(|&k| svd.singular_values[k]).collect();
    let vectors = order[..m]
        .iter()
        .map(|&k| {
            let col: Vec<f64> = u.column(k).iter().copied().collect();
            let imax = (0..n).max_by(|&a, &b| col[a].abs().total_cmp(&col[b].abs()).then(b.cmp(&a))).unwrap_or(0);
            let s = if col[imax] < 0.0 { -1.0 } else { 1.0 };
            col.into_iter().map(|v| s * v).collect()
        })
        .collect();
    Ok((vectors, values))
}

fn argmax_abs(v: &[f64]) -> usize {
    (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a))).unwrap_or(0)
}

/// Greedy index selection for a given basis.
pub fn select_indices(basis: &[Vec<f64>]) -> Result<Vec<usize>, RomError> {
    let mut indices = vec![argmax_abs(&basis[0])];
    for l in 1..basis.len() {
        let p = DMatrix::from_fn(l, l, |i, j| basis[j][indices[i]]);
        let rhs = DVector::from_fn(l, |i, _| basis[l][indices[i]]);
        let c = p.lu().solve(&rhs).ok_or(RomError::Singular)?;
        let r: Vec<f64> = (0..basis[l].len())
            .map(|i| basis[l][i] - (0..l).map(|j| c[j] * basis[j][i]).sum::<f64>())
            .collect();
        let next = argmax_abs(&r);
        if indices.contains(&next) || r[next] == 0.0 {
            return Err(RomError::Singular);
        }
        indices.push(next);
    }
    Ok(indices)
}

impl Deim {
    /// POD of the snapshots followed by greedy index selection.
    pub fn build(snapshots: &[Vec<f64>], m: usize) -> Result<Self, RomError> {
        let (basis, singular_values) = left_singular_vectors(snapshots, m)?;
        let indices = select_indices(&basis)?;
        Ok(Self { basis, indices, singular_values })
    }

    pub fn n_m(&self) -> usize {
        self.basis.len()
    }

    /// `P^T U`.
    pub fn sampled_basis(&self) -> DMatrix<f64> {
        let m = self.n_m();
        DMatrix::from_fn(m, m, |i, j| self.basis[j][self.indices[i]])
    }

    /// Coefficients `(P^T U)^-1 f_P` from sampled values.
    pub fn coefficients(&self, sampled: &[f64]) -> Result<DVector<f64>, RomError> {
        let rhs = DVector::from_column_slice(sampled);
        self.sampled_basis().lu().solve(&rhs).ok_or(RomError::Singular)
    }

    /// Full-length interpolant of `f` built from its sampled rows.
    pub fn interpolate(&self, f: &[f64]) -> Result<Vec<f64>, RomError> {
        let sampled: Vec<f64> = self.indices.iter().map(|&i| f[i]).collect();
        let c = self.coefficients(&sampled)?;
        let mut out = vec![0.0; f.len()];
        for (k, u) in self.basis.iter().enumerate() {
            out.iter_mut().zip(u).for_each(|(o, v)| *o += c[k] * v);
        }
        Ok(out)
    }

    /// `||(P^T U)^-1||_2`, the amplification of the best-approximation error.
    pub fn error_constant(&self) -> f64 {
        let sv = self.sampled_basis().singular_values();
        let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
        1.0 / smin
    }
}
