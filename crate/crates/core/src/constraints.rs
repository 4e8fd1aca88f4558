//! Signed incidence constraints tying together the copies of an interface
//! node held by different subdomains.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::decomposition::DecompIndex;
use crate::dense::{self, DenseMatrix};
use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, TripletAccumulator};

/// Largest constraint count for which the dense rank check runs.
pub const RANK_CHECK_LIMIT: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstraintMode {
    /// One row per consecutive pair of `θ(x_i)`.
    #[default]
    NonRedundant,
    /// One row per distinct pair of `θ(x_i)`.
    Redundant,
}

/// Row `(u_plus)_{plus_col} − (u_minus)_{minus_col} = 0` for one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintRow {
    pub node: usize,
    pub plus: usize,
    pub minus: usize,
    pub plus_col: usize,
    pub minus_col: usize,
}

/// `M = (M_1 … M_{N_s})` stored row by row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintMatrix {
    mode: ConstraintMode,
    rows: Vec<ConstraintRow>,
    block_cols: Vec<usize>,
}

impl ConstraintMatrix {
    pub fn mode(&self) -> ConstraintMode {
        self.mode
    }

    pub fn rows(&self) -> &[ConstraintRow] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_blocks(&self) -> usize {
        self.block_cols.len()
    }

    /// Column widths `N_n` of the blocks.
    pub fn block_cols(&self) -> &[usize] {
        &self.block_cols
    }

    /// Column offset of each block in the stacked matrix.
    pub fn offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.block_cols.len() + 1);
        off.push(0);
        for &c in &self.block_cols {
            off.push(off.last().unwrap() + c);
        }
        off
    }

    /// `M_n` as a sparse `M_rows × N_n` matrix.
    pub fn block(&self, n: usize) -> CsrMatrix {
        let mut acc = TripletAccumulator::new(self.rows.len(), self.block_cols[n]);
        for (k, r) in self.rows.iter().enumerate() {
            if r.plus == n {
                acc.add(k, r.plus_col, 1.0);
            }
            if r.minus == n {
                acc.add(k, r.minus_col, -1.0);
            }
        }
        acc.into_csr(false)
    }

    /// The stacked matrix `M`.
    pub fn to_csr(&self) -> CsrMatrix {
        let off = self.offsets();
        let mut acc = TripletAccumulator::new(self.rows.len(), *off.last().unwrap());
        for (k, r) in self.rows.iter().enumerate() {
            acc.add(k, off[r.plus] + r.plus_col, 1.0);
            acc.add(k, off[r.minus] + r.minus_col, -1.0);
        }
        acc.into_csr(false)
    }

    fn check_family(&self, u: &[Vec<f64>]) -> Result<()> {
        if u.len() != self.block_cols.len() {
            return Err(Error::DimensionMismatch { expected: self.block_cols.len(), found: u.len() });
        }
        for (un, &c) in u.iter().zip(&self.block_cols) {
            if un.len() != c {
                return Err(Error::DimensionMismatch { expected: c, found: un.len() });
            }
        }
        Ok(())
    }

    /// `Σ_n M_n u_n`.
    pub fn apply(&self, u: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.check_family(u)?;
        Ok(self.rows.iter().map(|r| u[r.plus][r.plus_col] - u[r.minus][r.minus_col]).collect())
    }

    /// `M_nᵀ λ` for every block.
    pub fn transpose_apply(&self, lambda: &[f64]) -> Result<Vec<Vec<f64>>> {
        if lambda.len() != self.rows.len() {
            return Err(Error::DimensionMismatch { expected: self.rows.len(), found: lambda.len() });
        }
        let mut out: Vec<Vec<f64>> = self.block_cols.iter().map(|&c| vec![0.0; c]).collect();
        for (r, &l) in self.rows.iter().zip(lambda) {
            out[r.plus][r.plus_col] += l;
            out[r.minus][r.minus_col] -= l;
        }
        Ok(out)
    }
}

/// Builds the constraint rows, ordered by node id and then by pair.
pub fn build_constraints(index: &DecompIndex, mode: ConstraintMode) -> Result<ConstraintMatrix> {
    let block_cols = index.subdomains().iter().map(|s| s.num_unknowns()).collect();
    let mut rows = Vec::new();
    for node in 0..index.num_nodes() {
        let theta = index.theta(node);
        if theta.len() < 2 {
            continue;
        }
        let col = |n: usize| {
            index
                .subdomain(n)
                .local_unknown(node)
                .ok_or_else(|| Error::IndexInconsistency(format!("node {node} is not an unknown of subdomain {n}")))
        };
        let mut push = |a: usize, b: usize| -> Result<()> {
            rows.push(ConstraintRow { node, plus: a, minus: b, plus_col: col(a)?, minus_col: col(b)? });
            Ok(())
        };
        match mode {
            ConstraintMode::NonRedundant => {
                for w in theta.windows(2) {
                    push(w[0], w[1])?;
                }
            }
            ConstraintMode::Redundant => {
                for i in 0..theta.len() {
                    for j in i + 1..theta.len() {
                        push(theta[i], theta[j])?;
                    }
                }
            }
        }
    }
    Ok(ConstraintMatrix { mode, rows, block_cols })
}

/// `Σ_i (m_i − 1)` or `Σ_i m_i (m_i − 1) / 2` over nodes with `m_i ≥ 2`.
pub fn expected_rows(index: &DecompIndex, mode: ConstraintMode) -> usize {
    (0..index.num_nodes())
        .map(|i| index.multiplicity(i))
        .filter(|&m| m >= 2)
        .map(|m| match mode {
            ConstraintMode::NonRedundant => m - 1,
            ConstraintMode::Redundant => m * (m - 1) / 2,
        })
        .sum()
}

/// Rows of the redundant set beyond a spanning chain: `Σ_{m≥3} [m(m−1)/2 − (m−1)]`.
pub fn redundant_deficiency(index: &DecompIndex) -> usize {
    expected_rows(index, ConstraintMode::Redundant) - expected_rows(index, ConstraintMode::NonRedundant)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstraintReport {
    pub rows: usize,
    /// Dense numerical rank, when the row count allows the check.
    pub rank: Option<usize>,
}

/// Checks the row count, the `±1` structure and the rank.
pub fn verify_constraint_matrix(c: &ConstraintMatrix, index: &DecompIndex) -> Result<ConstraintReport> {
    let expected = expected_rows(index, c.mode);
    if c.num_rows() != expected {
        return Err(Error::ConstraintCheck {
            row: c.num_rows().min(expected),
            reason: format!("{} rows, expected {expected}", c.num_rows()),
        });
    }
    let m = c.to_csr();
    for k in 0..m.nrows() {
        let (_, vals) = m.row(k);
        let plus = vals.iter().filter(|&&v| v == 1.0).count();
        let minus = vals.iter().filter(|&&v| v == -1.0).count();
        if vals.len() != 2 || plus != 1 || minus != 1 {
            return Err(Error::ConstraintCheck { row: k, reason: "row is not a single +1/-1 pair".into() });
        }
        let r = c.rows[k];
        if index.subdomain(r.plus).local_unknown(r.node) != Some(r.plus_col)
            || index.subdomain(r.minus).local_unknown(r.node) != Some(r.minus_col)
        {
            return Err(Error::ConstraintCheck { row: k, reason: "columns do not match the index maps".into() });
        }
    }
    let rank = if c.num_rows() <= RANK_CHECK_LIMIT {
        let r = if c.num_rows() == 0 { 0 } else { dense_rank(&m)? };
        let want = match c.mode {
            ConstraintMode::NonRedundant => c.num_rows(),
            ConstraintMode::Redundant => c.num_rows() - redundant_deficiency(index),
        };
        if r != want {
            return Err(Error::ConstraintCheck { row: r, reason: format!("rank {r}, expected {want}") });
        }
        Some(r)
    } else {
        None
    };
    Ok(ConstraintReport { rows: c.num_rows(), rank })
}

fn dense_rank(m: &CsrMatrix) -> Result<usize> {
    let d: DenseMatrix = m.to_dense();
    Ok(dense::rank(d, 1e-10))
}

/// `max_row |Σ_n (M_n u_n)_row|`, zero for an empty matrix.
pub fn constraint_violation(c: &ConstraintMatrix, u: &[Vec<f64>]) -> Result<f64> {
    Ok(c.apply(u)?.iter().fold(0.0, |m, v| m.max(libm::fabs(*v))))
}
