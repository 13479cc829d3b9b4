//! Compressed-row sparse matrices and a sparse Cholesky wrapper.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FactorError {
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("sparse matrix construction failed: {0}")]
    Construction(String),
}

/// Square sparse matrix in compressed-row form with sorted, unique columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds an `n × n` matrix summing duplicate entries in input order.
    pub fn from_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let mut t: Vec<(usize, usize, f64)> = triplets.into_iter().collect();
        t.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in t {
            assert!(i < n && j < n, "entry ({i}, {j}) out of bounds for dimension {n}");
            if last == Some((i, j)) {
                *vals.last_mut().unwrap() += v;
            } else {
                cols.push(j);
                vals.push(v);
                row_ptr[i + 1] += 1;
                last = Some((i, j));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, cols, vals }
    }

    /// Builds an exactly symmetric matrix from the upper-triangle entries
    /// (`i <= j`) of `triplets`; lower entries are ignored. Full element
    /// matrices of a symmetric operator can therefore be passed as-is.
    pub fn from_symmetric_triplets(n: usize, triplets: impl IntoIterator<Item = (usize, usize, f64)>) -> Self {
        let upper = Self::from_triplets(n, triplets.into_iter().filter(|&(i, j, _)| i <= j));
        let mut mirrored = Vec::with_capacity(2 * upper.nnz());
        for i in 0..n {
            for (j, v) in upper.row(i) {
                mirrored.push((i, j, v));
                if i != j {
                    mirrored.push((j, i, v));
                }
            }
        }
        Self::from_triplets(n, mirrored)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_triplets(n, (0..n).map(|i| (i, i, 1.0)))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        }
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.vals.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        Self::from_triplets(self.n, self.triplets().chain(other.triplets()).collect::<Vec<_>>())
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.vals.iter_mut().for_each(|v| *v *= c);
        out
    }

    /// `self + c · diag(d)`.
    pub fn plus_diagonal(&self, c: f64, d: &[f64]) -> Self {
        let extra = d.iter().enumerate().map(|(i, &x)| (i, i, c * x));
        Self::from_triplets(self.n, self.triplets().chain(extra))
    }

    /// Largest |A_ij − A_ji|.
    pub fn asymmetry(&self) -> f64 {
        self.triplets().map(|(i, j, v)| (v - self.get(j, i)).abs()).fold(0.0, f64::max)
    }

    /// Principal submatrix on `keep` (indices into the original ordering).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (k, &i) in keep.iter().enumerate() {
            map[i] = k;
        }
        let entries = keep.iter().enumerate().flat_map(|(k, &i)| {
            let map = &map;
            self.row(i).filter_map(move |(j, v)| (map[j] != usize::MAX).then_some((k, map[j], v)))
        });
        Self::from_triplets(keep.len(), entries.collect::<Vec<_>>())
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for (i, j, v) in self.triplets() {
            d[(i, j)] += v;
        }
        d
    }

    pub fn cholesky(&self) -> Result<Cholesky, FactorError> {
        Cholesky::new(self)
    }
}

/// Sparse LLᵀ factorization with fill-reducing ordering.
pub struct Cholesky {
    n: usize,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

impl std::fmt::Debug for Cholesky {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Cholesky").field("n", &self.n).finish_non_exhaustive()
    }
}

impl Cholesky {
    pub fn new(a: &CsrMatrix) -> Result<Self, FactorError> {
        let triplets: Vec<_> =
            a.triplets().filter(|&(i, j, _)| i >= j).map(|(i, j, v)| Triplet::new(i, j, v)).collect();
        let lower = SparseColMat::<usize, f64>::try_new_from_triplets(a.n, a.n, &triplets)
            .map_err(|e| FactorError::Construction(format!("{e:?}")))?;
        let llt = lower.sp_cholesky(Side::Lower).map_err(|_| FactorError::NotPositiveDefinite)?;
        Ok(Self { n: a.n, llt })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut rhs = Mat::<f64>::from_fn(self.n, 1, |i, _| b[i]);
        self.llt.solve_in_place(rhs.as_mut());
        (0..self.n).map(|i| rhs[(i, 0)]).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let a = CsrMatrix::from_triplets(2, [(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]);
        assert_eq!(a.get(0, 0), 4.0);
        assert_eq!(a.get(1, 0), 2.0);
        assert_eq!(a.get(0, 1), 0.0);
        assert_eq!(a.nnz(), 2);
    }

    #[test]
    fn symmetric_assembly_is_exact() {
        let a =
            CsrMatrix::from_symmetric_triplets(3, [(0, 1, 0.1), (1, 0, 0.2), (2, 2, 1.0), (0, 1, 0.3), (2, 0, 1e-17)]);
        assert_eq!(a.asymmetry(), 0.0);
        assert_eq!(a.get(1, 0), 0.1 + 0.3);
        assert_eq!(a.get(0, 2), 0.0);
    }

    #[test]
    fn cholesky_solves_and_rejects_indefinite() {
        let a =
            CsrMatrix::from_symmetric_triplets(3, [(0, 0, 4.0), (0, 1, 1.0), (1, 1, 3.0), (2, 2, 2.0), (1, 2, -0.5)]);
        let b = [1.0, 2.0, 3.0];
        let x = a.cholesky().unwrap().solve(&b);
        let r = a.mul_vec(&x);
        for i in 0..3 {
            assert!((r[i] - b[i]).abs() < 1e-14);
        }
        let bad = CsrMatrix::from_triplets(2, [(0, 0, -1.0), (1, 1, 1.0)]);
        assert!(matches!(bad.cholesky(), Err(FactorError::NotPositiveDefinite)));
    }

    #[test]
    fn principal_submatrix_keeps_selected() {
        let a = CsrMatrix::from_triplets(3, [(0, 0, 1.0), (0, 2, 2.0), (2, 0, 2.0), (1, 1, 5.0), (2, 2, 7.0)]);
        let s = a.principal_submatrix(&[0, 2]);
        assert_eq!(s.to_dense(), nalgebra::DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 7.0]));
    }
}
