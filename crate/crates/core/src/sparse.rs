//! Minimal compressed-row sparse matrix with deterministic assembly.

use crate::error::{Error, Result};
use faer::sparse::{SparseColMat, Triplet};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets; duplicates are summed in
    /// insertion order, so the result is independent of hashing or threads.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            debug_assert!(r < nrows && c < ncols);
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..nrows {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.col_idx[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows)
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn to_dense(&self) -> faer::Mat<f64> {
        let mut m = faer::Mat::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    pub(crate) fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let triplets: Vec<Triplet<usize, usize, f64>> = self
            .triplets()
            .map(|(i, j, v)| Triplet::new(i, j, v))
            .collect();
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &triplets)
            .map_err(|e| Error::Factorization(format!("{e:?}")))
    }
}

/// Sparse Cholesky factor of a symmetric positive-definite matrix, reusable
/// across right-hand sides.
pub struct CholeskySolver {
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
    n: usize,
}

impl CholeskySolver {
    pub fn new(matrix: &CsrMatrix) -> Result<Self> {
        let a = matrix.to_faer()?;
        let llt = a
            .sp_cholesky(faer::Side::Lower)
            .map_err(|e| Error::Factorization(format!("{e:?}")))?;
        Ok(CholeskySolver {
            llt,
            n: matrix.nrows(),
        })
    }

    /// Solves in place for each column of `rhs` (column-major, `n` rows).
    pub fn solve_columns(&self, rhs: &mut [f64]) {
        use faer::linalg::solvers::SolveCore;
        assert_eq!(rhs.len() % self.n.max(1), 0);
        let ncols = rhs.len().checked_div(self.n).unwrap_or(0);
        let view = faer::MatMut::from_column_major_slice_mut(rhs, self.n, ncols);
        self.llt.solve_in_place_with_conj(faer::Conj::No, view);
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = rhs.to_vec();
        self.solve_columns(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(1, 1, 1.0), (0, 0, 2.0), (1, 1, 3.0), (0, 1, -1.0)]);
        assert_eq!(m.nnz(), 3);
        assert_eq!(m.get(1, 1), 4.0);
        assert_eq!(m.get(1, 0), 0.0);
        assert_eq!(m.mul_vec(&[1.0, 2.0]), vec![0.0, 8.0]);
    }

    #[test]
    fn cholesky_solves_spd_system() {
        let m = CsrMatrix::from_triplets(
            3,
            3,
            vec![(0, 0, 4.0), (1, 1, 5.0), (2, 2, 6.0), (0, 1, 1.0), (1, 0, 1.0), (1, 2, 2.0), (2, 1, 2.0)],
        );
        let solver = CholeskySolver::new(&m).unwrap();
        let b = vec![1.0, 2.0, 3.0, 0.0, 1.0, 0.0];
        let mut x = b.clone();
        solver.solve_columns(&mut x);
        for c in 0..2 {
            let ax = m.mul_vec(&x[c * 3..c * 3 + 3]);
            for i in 0..3 {
                assert!((ax[i] - b[c * 3 + i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn indefinite_matrix_fails_to_factor() {
        let m = CsrMatrix::from_triplets(2, 2, vec![(0, 0, 1.0), (1, 1, -1.0)]);
        assert!(CholeskySolver::new(&m).is_err());
    }
}
