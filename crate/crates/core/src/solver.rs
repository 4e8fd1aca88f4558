//! Sparse symmetric positive definite solves.
//!
//! The default path is an envelope (skyline) Cholesky factorization; a
//! Jacobi-preconditioned conjugate gradient is available on its own and as
//! a fallback when the direct residual misses the tolerance.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative residual target for linear solves.
pub const SOLVE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMethod {
    #[default]
    Direct,
    ConjugateGradient,
}

/// Envelope Cholesky factor `A = L Lᵀ` storing each row of `L` from its
/// first structural nonzero to the diagonal.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols() });
        }
        let mut first = Vec::with_capacity(n);
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for i in 0..n {
            let (cols, _) = a.row(i);
            let f = cols.first().copied().unwrap_or(i).min(i);
            first.push(f);
            start.push(start[i] + (i - f + 1));
        }
        let mut data = vec![0.0; start[n]];
        for i in 0..n {
            let (cols, vals) = a.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                if c <= i {
                    data[start[i] + c - first[i]] = v;
                }
            }
        }
        let mut f = Self { first, start, data };
        for i in 0..n {
            let fi = f.first[i];
            for j in fi..i {
                let fj = f.first[j];
                let lo = fi.max(fj);
                let mut s = f.data[f.start[i] + j - fi];
                for k in lo..j {
                    s -= f.data[f.start[i] + k - fi] * f.data[f.start[j] + k - fj];
                }
                f.data[f.start[i] + j - fi] = s / f.data[f.start[j] + j - fj];
            }
            let mut d = f.data[f.start[i] + i - fi];
            for k in fi..i {
                let l = f.data[f.start[i] + k - fi];
                d -= l * l;
            }
            if !(d > 0.0) {
                return Err(Error::NotSpd { row: i });
            }
            f.data[f.start[i] + i - fi] = libm::sqrt(d);
        }
        Ok(f)
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let mut s = y[i];
            for k in fi..i {
                s -= row[k - fi] * y[k];
            }
            y[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for k in fi..i {
                y[k] -= row[k - fi] * yi;
            }
        }
        Ok(y)
    }
}

/// `‖A x − b‖₂ / ‖b‖₂`, or `‖A x‖₂` when `b = 0`.
pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> Result<f64> {
    let ax = a.matvec(x)?;
    let r = norm2(ax.iter().zip(b).map(|(p, q)| p - q));
    let bn = norm2(b.iter().copied());
    Ok(if bn > 0.0 { r / bn } else { r })
}

pub(crate) fn norm2(v: impl Iterator<Item = f64>) -> f64 {
    libm::sqrt(v.fold(0.0, |s, x| s + x * x))
}

/// Jacobi-preconditioned conjugate gradient from the initial guess `x0`.
pub fn conjugate_gradient(
    a: &CsrMatrix,
    b: &[f64],
    x0: Option<&[f64]>,
    tolerance: f64,
    max_iterations: usize,
) -> Result<Vec<f64>> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let mut x = match x0 {
        Some(x0) => x0.to_vec(),
        None => vec![0.0; n],
    };
    let bnorm = norm2(b.iter().copied());
    if bnorm == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let diag: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    if diag.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::NotSpd { row: diag.iter().position(|d| !(*d > 0.0)).unwrap_or(0) });
    }
    let mut r: Vec<f64> = {
        let ax = a.matvec(&x)?;
        b.iter().zip(&ax).map(|(b, ax)| b - ax).collect()
    };
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    let mut rel = norm2(r.iter().copied()) / bnorm;
    for _ in 0..max_iterations {
        if rel <= tolerance {
            return Ok(x);
        }
        a.matvec_into(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NotSpd { row: 0 });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        rel = norm2(r.iter().copied()) / bnorm;
    }
    if rel <= tolerance {
        return Ok(x);
    }
    Err(Error::NoConvergence { iterations: max_iterations, residual: rel })
}

/// Solves an SPD system to relative residual [`SOLVE_TOLERANCE`].
pub fn solve_spd(a: &CsrMatrix, b: &[f64], method: SolverMethod) -> Result<Vec<f64>> {
    let n = a.nrows();
    if b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: b.len() });
    }
    let max_it = 10 * n + 100;
    match method {
        SolverMethod::Direct => {
            let x = SkylineCholesky::factor(a)?.solve(b)?;
            if relative_residual(a, &x, b)? <= SOLVE_TOLERANCE {
                return Ok(x);
            }
            conjugate_gradient(a, b, Some(&x), SOLVE_TOLERANCE, max_it)
        }
        SolverMethod::ConjugateGradient => conjugate_gradient(a, b, None, SOLVE_TOLERANCE, max_it),
    }
}
