//! Compressed-row sparse matrices and a deterministic triplet accumulator.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Sums `(row, col, value)` contributions. Each entry is summed in the
/// order its contributions arrive, so a fixed insertion order gives a
/// bitwise-reproducible matrix.
#[derive(Debug, Clone)]
pub struct TripletAccumulator {
    ncols: usize,
    rows: Vec<BTreeMap<usize, f64>>,
}

impl TripletAccumulator {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self { ncols, rows: vec![BTreeMap::new(); nrows] }
    }

    #[inline]
    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(col < self.ncols);
        *self.rows[row].entry(col).or_insert(0.0) += value;
    }

    /// Consolidates into CSR, dropping entries that summed to exactly zero.
    pub fn into_csr(self, symmetric: bool) -> CsrMatrix {
        let nrows = self.rows.len();
        let mut row_ptr = Vec::with_capacity(nrows + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in self.rows {
            for (c, v) in row {
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows, ncols: self.ncols, row_ptr, col_idx, values, symmetric }
    }
}

/// Sparse matrix in compressed-row layout with sorted column indices.
///
/// `symmetric` records that the matrix is structurally and numerically
/// symmetric; both triangles are stored.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
    symmetric: bool,
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            row_ptr: vec![0; nrows + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
            symmetric: nrows == ncols,
        }
    }

    /// Builds from triplets; duplicates are summed in input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
        symmetric: bool,
    ) -> Result<Self> {
        let mut acc = TripletAccumulator::new(nrows, ncols);
        for (r, c, v) in triplets {
            if r >= nrows {
                return Err(Error::DimensionMismatch { expected: nrows, found: r + 1 });
            }
            if c >= ncols {
                return Err(Error::DimensionMismatch { expected: ncols, found: c + 1 });
            }
            acc.add(r, c, v);
        }
        Ok(acc.into_csr(symmetric))
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

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    /// Iterates stored entries as `(row, col, value)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows).flat_map(move |i| {
            let (cols, vals) = self.row(i);
            cols.iter().zip(vals).map(move |(&c, &v)| (i, c, v))
        })
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.ncols {
            return Err(Error::DimensionMismatch { expected: self.ncols, found: x.len() });
        }
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        Ok(y)
    }

    /// `y = A x`; lengths must match.
    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&c, &v) in cols.iter().zip(vals) {
                s += v * x[c];
            }
            *yi = s;
        }
    }

    /// `y = Aᵀ x`.
    pub fn transpose_matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.nrows {
            return Err(Error::DimensionMismatch { expected: self.nrows, found: x.len() });
        }
        let mut y = vec![0.0; self.ncols];
        for (i, &xi) in x.iter().enumerate() {
            let (cols, vals) = self.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                y[c] += v * xi;
            }
        }
        Ok(y)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut acc = TripletAccumulator::new(self.ncols, self.nrows);
        for (i, j, v) in self.iter() {
            acc.add(j, i, v);
        }
        acc.into_csr(self.symmetric)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.iter() {
            d[(i, j)] = v;
        }
        d
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows).map(|i| self.row(i).1.iter().map(|v| libm::fabs(*v)).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn norm_frobenius(&self) -> f64 {
        libm::sqrt(self.values.iter().fold(0.0, |s, v| s + v * v))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    /// `max |A_ij − A_ji|` over stored entries (square matrices only).
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, j, v) in self.iter() {
            worst = worst.max(libm::fabs(v - self.get(j, i)));
        }
        worst
    }

    /// Sub-matrix with rows `rows.start..rows.end` and columns
    /// `cols.start..cols.end`, re-indexed from zero.
    pub fn block(&self, rows: core::ops::Range<usize>, cols: core::ops::Range<usize>, symmetric: bool) -> CsrMatrix {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for i in rows.clone() {
            let (c, v) = self.row(i);
            for (&cj, &vj) in c.iter().zip(v) {
                if cols.contains(&cj) {
                    col_idx.push(cj - cols.start);
                    values.push(vj);
                }
            }
            row_ptr.push(col_idx.len());
        }
        CsrMatrix { nrows: rows.len(), ncols: cols.len(), row_ptr, col_idx, values, symmetric }
    }
}
