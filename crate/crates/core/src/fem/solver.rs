use super::{FemError, SparseMatrix};
use faer::prelude::Solve;
use faer::sparse::linalg::LuError;
use faer::sparse::{SparseRowMat, SymbolicSparseRowMat};
use faer::Mat;

/// A sparse LU factorization (partial pivoting) that can be reused for
/// many right-hand sides.
pub struct SparseLu {
    n: usize,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
    matrix: SparseMatrix,
}

impl std::fmt::Debug for SparseLu {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SparseLu").field("n", &self.n).finish()
    }
}

impl SparseLu {
    pub fn factor(a: &SparseMatrix) -> Result<Self, FemError> {
        if a.nrows != a.ncols {
            return Err(FemError::Dimension(format!("matrix is {}x{}, not square", a.nrows, a.ncols)));
        }
        let n = a.nrows;
        // An empty row is singular regardless of pivoting.
        if let Some(i) = (0..n).find(|&i| a.row_ptr[i] == a.row_ptr[i + 1]) {
            return Err(FemError::Singular { pivot: Some(i) });
        }
        let symbolic = SymbolicSparseRowMat::new_checked(n, n, a.row_ptr.clone(), None, a.col_idx.clone());
        let mat = SparseRowMat::new(symbolic, a.values.clone());
        let lu = mat.sp_lu().map_err(|e| match e {
            LuError::SymbolicSingular { index } => FemError::Singular { pivot: Some(index) },
            LuError::Generic(e) => FemError::Backend(format!("{e:?}")),
        })?;
        Ok(Self {
            n,
            lu,
            matrix: a.clone(),
        })
    }

    fn raw_solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }

    /// Solves `A x = b` with one step of iterative refinement.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, FemError> {
        if b.len() != self.n {
            return Err(FemError::Dimension(format!("rhs has length {}, expected {}", b.len(), self.n)));
        }
        let mut x = self.raw_solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FemError::Singular { pivot: None });
        }
        let ax = self.matrix.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        if r.iter().any(|v| *v != 0.0) {
            let dx = self.raw_solve(&r);
            if dx.iter().all(|v| v.is_finite()) {
                x.iter_mut().zip(&dx).for_each(|(xi, di)| *xi += di);
            }
        }
        Ok(x)
    }
}

/// Direct sparse solve of `A x = b`.
pub fn solve_sparse(a: &SparseMatrix, b: &[f64]) -> Result<Vec<f64>, FemError> {
    if b.len() != a.nrows {
        return Err(FemError::Dimension(format!("rhs has length {}, expected {}", b.len(), a.nrows)));
    }
    SparseLu::factor(a)?.solve(b)
}

/// `||Ax - b||_inf / (||A||_inf ||x||_inf + ||b||_inf)`.
pub fn relative_residual(a: &SparseMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let num = ax.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let bn = b.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let den = a.norm_inf() * xn + bn;
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::TripletBuilder;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![3.0, -1.0, 2.5, 0.0];
        assert_eq!(solve_sparse(&SparseMatrix::identity(4), &b).unwrap(), b);
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = SparseMatrix::from_dense(&[vec![2.0, 0.0], vec![0.0, 4.0]]);
        let x = solve_sparse(&a, &[2.0, 8.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn needs_pivoting() {
        let a = SparseMatrix::from_dense(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let x = solve_sparse(&a, &[5.0, 7.0]).unwrap();
        assert_eq!(x, vec![7.0, 5.0]);
    }

    #[test]
    fn empty_row_is_singular_with_pivot() {
        let mut b = TripletBuilder::new(3, 3);
        b.push(0, 0, 1.0);
        b.push(2, 2, 1.0);
        let err = solve_sparse(&b.build(), &[1.0, 1.0, 1.0]).unwrap_err();
        assert!(matches!(err, FemError::Singular { pivot: Some(1) }));
    }

    #[test]
    fn structurally_singular_is_reported() {
        // Two rows sharing a single column.
        let mut b = TripletBuilder::new(2, 2);
        b.push(0, 0, 1.0);
        b.push(1, 0, 1.0);
        assert!(matches!(solve_sparse(&b.build(), &[1.0, 1.0]), Err(FemError::Singular { .. })));
    }

    // Gaussian elimination with partial pivoting on a dense copy.
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for k in (0..n).rev() {
            let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
            x[k] = (b[k] - s) / a[k][k];
        }
        x
    }

    #[test]
    fn random_spd_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 50;
        // A = B^T B + n I with sparse B.
        let mut bm = vec![vec![0.0; n]; n];
        for row in bm.iter_mut() {
            for _ in 0..3 {
                row[rng.random_range(0..n)] = rng.random_range(-1.0..1.0);
            }
        }
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                dense[i][j] = (0..n).map(|k| bm[k][i] * bm[k][j]).sum::<f64>() + if i == j { n as f64 } else { 0.0 };
            }
        }
        let a = SparseMatrix::from_dense(&dense);
        let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = solve_sparse(&a, &b).unwrap();
        let oracle = dense_solve(dense, b.clone());
        assert!(relative_residual(&a, &x, &b) < 1e-10);
        for (p, q) in x.iter().zip(&oracle) {
            assert!((p - q).abs() < 1e-10);
        }
    }
}
