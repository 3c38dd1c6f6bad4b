use super::{FemError, SparseMatrix, TripletBuilder};
use std::collections::BTreeMap;

/// Dirichlet values keyed by dof.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Constraints {
    values: BTreeMap<usize, f64>,
}

impl Constraints {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `dof = value`; a second, different value for the same dof is a
    /// conflict.
    pub fn insert(&mut self, dof: usize, value: f64) -> Result<(), FemError> {
        match self.values.get(&dof) {
            Some(&old) if (old - value).abs() > 1e-12 => Err(FemError::ConstraintConflict { dof, first: old, second: value }),
            Some(_) => Ok(()),
            None => {
                self.values.insert(dof, value);
                Ok(())
            }
        }
    }

    /// Adds `dof = value` unless the dof is already constrained.
    pub fn insert_if_free(&mut self, dof: usize, value: f64) {
        self.values.entry(dof).or_insert(value);
    }

    pub fn from_pairs(pairs: &[(usize, f64)]) -> Result<Self, FemError> {
        let mut c = Self::new();
        for &(d, v) in pairs {
            c.insert(d, v)?;
        }
        Ok(c)
    }

    pub fn get(&self, dof: usize) -> Option<f64> {
        self.values.get(&dof).copied()
    }

    pub fn contains(&self, dof: usize) -> bool {
        self.values.contains_key(&dof)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values.iter().map(|(&d, &v)| (d, v))
    }

    /// Same dofs, all values zero.
    pub fn homogeneous(&self) -> Self {
        Self {
            values: self.values.keys().map(|&d| (d, 0.0)).collect(),
        }
    }

    /// Dense mask of constrained dofs.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &d in self.values.keys() {
            m[d] = true;
        }
        m
    }

    /// Writes the constraint values into `x`.
    pub fn impose(&self, x: &mut [f64]) {
        for (&d, &v) in &self.values {
            x[d] = v;
        }
    }
}

/// Symmetric elimination: constrained rows and columns become identity,
/// with the known values moved to the right-hand side.
pub fn apply_dirichlet(
    a: &SparseMatrix,
    rhs: &[f64],
    constraints: &Constraints,
) -> Result<(SparseMatrix, Vec<f64>), FemError> {
    if a.nrows != a.ncols || rhs.len() != a.nrows {
        return Err(FemError::Dimension("apply_dirichlet needs a square system".into()));
    }
    if let Some((d, _)) = constraints.iter().find(|&(d, _)| d >= a.nrows) {
        return Err(FemError::Dimension(format!("constraint on dof {d} outside 0..{}", a.nrows)));
    }
    if constraints.is_empty() {
        return Ok((a.clone(), rhs.to_vec()));
    }
    let fixed = constraints.mask(a.nrows);
    let mut g = vec![0.0; a.nrows];
    constraints.impose(&mut g);
    let mut b = rhs.to_vec();
    let mut t = TripletBuilder::with_capacity(a.nrows, a.ncols, a.nnz());
    for i in 0..a.nrows {
        if fixed[i] {
            t.push(i, i, 1.0);
            b[i] = g[i];
            continue;
        }
        for (j, v) in a.row(i) {
            if fixed[j] {
                b[i] -= v * g[j];
            } else {
                t.push(i, j, v);
            }
        }
    }
    Ok((t.build(), b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::solve_sparse;

    fn laplace_chain() -> SparseMatrix {
        SparseMatrix::from_dense(&[vec![1.0, -1.0, 0.0], vec![-1.0, 2.0, -1.0], vec![0.0, -1.0, 1.0]])
    }

    #[test]
    fn three_node_chain() {
        let c = Constraints::from_pairs(&[(0, 0.0), (2, 1.0)]).unwrap();
        let (a, b) = apply_dirichlet(&laplace_chain(), &[0.0; 3], &c).unwrap();
        assert!(a.is_symmetric(0.0));
        let x = solve_sparse(&a, &b).unwrap();
        assert!((x[1] - 0.5).abs() < 1e-15);
        assert_eq!((x[0], x[2]), (0.0, 1.0));
    }

    #[test]
    fn full_constraint_gives_values() {
        let c = Constraints::from_pairs(&[(0, 3.0), (1, -2.0), (2, 7.5)]).unwrap();
        let (a, b) = apply_dirichlet(&laplace_chain(), &[1.0; 3], &c).unwrap();
        assert_eq!(solve_sparse(&a, &b).unwrap(), vec![3.0, -2.0, 7.5]);
    }

    #[test]
    fn empty_constraints_leave_system() {
        let a = laplace_chain();
        let (a2, b2) = apply_dirichlet(&a, &[1.0, 2.0, 3.0], &Constraints::new()).unwrap();
        assert_eq!(a2, a);
        assert_eq!(b2, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn conflicting_values_are_rejected() {
        assert!(Constraints::from_pairs(&[(1, 0.0), (1, 1e-13)]).is_ok());
        assert!(matches!(
            Constraints::from_pairs(&[(1, 0.0), (1, 1e-6)]),
            Err(FemError::ConstraintConflict { dof: 1, .. })
        ));
    }
}
