//! Compressed-row sparse matrices and the glue to faer's factorizations.

use faer::sparse::{SparseColMat, SparseRowMat, SymbolicSparseRowMat};
use faer::{Mat, MatRef};

use crate::error::{Error, Result};

/// Compressed sparse row matrix with sorted, duplicate-free column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed in
    /// input order.
    pub fn from_triplets(nrows: usize, ncols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r},{c}) outside {nrows}x{ncols}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds from raw parts; the caller guarantees sorted unique columns.
    pub(crate) fn from_raw(
        nrows: usize,
        ncols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(row_ptr.len(), nrows + 1);
        debug_assert_eq!(col_idx.len(), values.len());
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            values: vec![0.0; self.values.len()],
            ..self.clone()
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

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        assert_eq!(y.len(), self.nrows);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            *out = acc;
        }
    }

    /// `A^T x`.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for (r, &xr) in x.iter().enumerate() {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                y[self.col_idx[k]] += self.values[k] * xr;
            }
        }
        y
    }

    /// `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        assert_eq!(x.len(), self.nrows);
        let mut total = 0.0;
        for (r, &xr) in x.iter().enumerate() {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * y[self.col_idx[k]];
            }
            total += xr * acc;
        }
        total
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// `self + factor * other`; both matrices must share the sparsity pattern.
    pub fn add_scaled(&self, factor: f64, other: &CsrMatrix) -> Result<Self> {
        if self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::DimensionMismatch {
                context: "CsrMatrix::add_scaled pattern",
                expected: self.nnz(),
                actual: other.nnz(),
            });
        }
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a += factor * b;
        }
        Ok(out)
    }

    pub fn transpose(&self) -> Self {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                triplets.push((c, r, v));
            }
        }
        Self::from_triplets(self.ncols, self.nrows, triplets)
    }

    /// Submatrix with rows `rows` and columns `cols` (both given as global
    /// indices in increasing order).
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut col_map = vec![usize::MAX; self.ncols];
        for (local, &c) in cols.iter().enumerate() {
            col_map[c] = local;
        }
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &r in rows {
            for (c, v) in self.row(r) {
                let local = col_map[c];
                if local != usize::MAX {
                    col_idx.push(local);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_raw(rows.len(), cols.len(), row_ptr, col_idx, values)
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    /// `self * dense`.
    pub fn mul_dense(&self, dense: MatRef<'_, f64>) -> Mat<f64> {
        assert_eq!(dense.nrows(), self.ncols);
        let mut out = Mat::zeros(self.nrows, dense.ncols());
        for j in 0..dense.ncols() {
            let x = dense.col(j);
            let mut y = out.col_mut(j);
            for r in 0..self.nrows {
                let mut acc = 0.0;
                for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                    acc += self.values[k] * x[self.col_idx[k]];
                }
                y[r] = acc;
            }
        }
        out
    }

    pub fn to_faer(&self) -> SparseRowMat<usize, f64> {
        let symbolic = SymbolicSparseRowMat::new_checked(
            self.nrows,
            self.ncols,
            self.row_ptr.clone(),
            None,
            self.col_idx.clone(),
        );
        SparseRowMat::new(symbolic, self.values.clone())
    }

    /// Column-major copy for faer's factorizations.
    pub fn to_faer_col(&self) -> Result<SparseColMat<usize, f64>> {
        self.to_faer()
            .as_ref()
            .to_col_major()
            .map_err(|e| Error::Factorization {
                context: "sparse conversion".into(),
                reason: format!("{e:?}"),
            })
    }

    /// Symmetric difference bound `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }
}

/// Horizontal/vertical concatenation of a grid of equally sized blocks.
/// `None` entries are treated as zero blocks.
pub fn block_csr(blocks: &[Vec<Option<&CsrMatrix>>]) -> CsrMatrix {
    let brows = blocks.len();
    let bcols = blocks[0].len();
    let mut row_sizes = vec![0; brows];
    let mut col_sizes = vec![0; bcols];
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, blk) in row.iter().enumerate() {
            if let Some(m) = blk {
                row_sizes[bi] = m.nrows();
                col_sizes[bj] = m.ncols();
            }
        }
    }
    let col_offsets: Vec<usize> = col_sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let nrows: usize = row_sizes.iter().sum();
    let ncols: usize = col_sizes.iter().sum();
    let mut row_ptr = Vec::with_capacity(nrows + 1);
    row_ptr.push(0);
    let mut col_idx = Vec::new();
    let mut values = Vec::new();
    for (bi, row) in blocks.iter().enumerate() {
        for r in 0..row_sizes[bi] {
            for (bj, blk) in row.iter().enumerate() {
                if let Some(m) = blk {
                    for (c, v) in m.row(r) {
                        col_idx.push(col_offsets[bj] + c);
                        values.push(v);
                    }
                }
            }
            row_ptr.push(col_idx.len());
        }
    }
    CsrMatrix::from_raw(nrows, ncols, row_ptr, col_idx, values)
}

/// Dense Cholesky solve helper; fails loudly on a non-SPD matrix.
pub fn dense_cholesky_solve(a: MatRef<'_, f64>, rhs: MatRef<'_, f64>, context: &str) -> Result<Mat<f64>> {
    use faer::linalg::solvers::Solve;
    let llt = a.llt(faer::Side::Lower).map_err(|e| Error::Factorization {
        context: context.to_string(),
        reason: format!("{e:?}"),
    })?;
    Ok(llt.solve(rhs))
}

/// Dense LU solve with partial pivoting; rejects non-finite results.
pub fn dense_lu_solve(a: MatRef<'_, f64>, rhs: MatRef<'_, f64>, context: &str) -> Result<Mat<f64>> {
    use faer::linalg::solvers::Solve;
    let lu = a.partial_piv_lu();
    let x = lu.solve(rhs);
    for j in 0..x.ncols() {
        for i in 0..x.nrows() {
            if !x[(i, j)].is_finite() {
                return Err(Error::Factorization {
                    context: context.to_string(),
                    reason: "singular matrix (non-finite solution)".into(),
                });
            }
        }
    }
    Ok(x)
}

/// Sparse Cholesky solve for an SPD matrix.
pub fn sparse_cholesky_solve(a: &CsrMatrix, rhs: &[f64], context: &str) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let fail = |reason: String| Error::Factorization {
        context: context.to_string(),
        reason,
    };
    let llt = a
        .to_faer_col()?
        .sp_cholesky(faer::Side::Lower)
        .map_err(|e| fail(format!("{e:?}")))?;
    let x = llt.solve(MatRef::from_column_major_slice(rhs, rhs.len(), 1));
    let out: Vec<f64> = (0..x.nrows()).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(fail("non-finite solution".into()));
    }
    Ok(out)
}

/// Sparse LU solve for a general square matrix.
pub fn sparse_lu_solve(a: &CsrMatrix, rhs: &[f64], context: &str) -> Result<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let fail = |reason: String| Error::Factorization {
        context: context.to_string(),
        reason,
    };
    let lu = a.to_faer_col()?.sp_lu().map_err(|e| fail(format!("{e:?}")))?;
    let x = lu.solve(MatRef::from_column_major_slice(rhs, rhs.len(), 1));
    let out: Vec<f64> = (0..x.nrows()).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(fail("non-finite solution".into()));
    }
    Ok(out)
}
