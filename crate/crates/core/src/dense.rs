//! Small dense linear algebra: symmetric-indefinite factorization,
//! rank estimation and symmetric eigenvalues.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    nrows: usize,
    ncols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, data: vec![0.0; nrows * ncols] }
    }

    pub fn from_row_major(nrows: usize, ncols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != nrows * ncols {
            return Err(Error::DimensionMismatch { expected: nrows * ncols, found: data.len() });
        }
        Ok(Self { nrows, ncols, data })
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .map(|i| self.data[i * self.ncols..(i + 1) * self.ncols].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(libm::fabs(*v)))
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.ncols {
            self.data.swap(a * self.ncols + j, b * self.ncols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.nrows {
            self.data.swap(i * self.ncols + a, i * self.ncols + b);
        }
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.ncols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.ncols + j]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Pivot {
    One(f64),
    Two { a: f64, b: f64, c: f64 },
}

/// `P A Pᵀ = L D Lᵀ` with 1×1 and 2×2 diagonal blocks (Bunch–Kaufman).
#[derive(Debug, Clone)]
pub struct BunchKaufman {
    n: usize,
    lower: DenseMatrix,
    pivots: Vec<(usize, Pivot)>,
    perm: Vec<usize>,
}

impl BunchKaufman {
    /// Factors a symmetric matrix. Pivots whose magnitude falls below
    /// `1e-13 · max|A|` are treated as a breakdown.
    pub fn factor(mut a: DenseMatrix) -> Result<Self> {
        let n = a.nrows;
        if a.ncols != n {
            return Err(Error::DimensionMismatch { expected: n, found: a.ncols });
        }
        let alpha = (1.0 + libm::sqrt(17.0)) / 8.0;
        let tiny = 1e-13 * a.max_abs();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pivots = Vec::new();
        let mut k = 0;
        while k < n {
            let absakk = libm::fabs(a[(k, k)]);
            let (mut imax, mut colmax) = (k, 0.0);
            for i in k + 1..n {
                let v = libm::fabs(a[(i, k)]);
                if v > colmax {
                    colmax = v;
                    imax = i;
                }
            }
            if absakk.max(colmax) <= tiny {
                return Err(Error::SingularKkt { pivot: k });
            }
            let (kp, kstep) = if absakk >= alpha * colmax {
                (k, 1)
            } else {
                let mut rowmax: f64 = 0.0;
                for j in k..n {
                    if j != imax {
                        rowmax = rowmax.max(libm::fabs(a[(imax, j)]));
                    }
                }
                if absakk * rowmax >= alpha * colmax * colmax {
                    (k, 1)
                } else if libm::fabs(a[(imax, imax)]) >= alpha * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };
            let kk = k + kstep - 1;
            if kp != kk {
                a.swap_rows(kk, kp);
                a.swap_cols(kk, kp);
                perm.swap(kk, kp);
            }
            if kstep == 1 {
                let d = a[(k, k)];
                if libm::fabs(d) <= tiny {
                    return Err(Error::SingularKkt { pivot: k });
                }
                for i in k + 1..n {
                    let lik = a[(i, k)] / d;
                    if lik == 0.0 {
                        continue;
                    }
                    for j in k + 1..n {
                        a[(i, j)] -= lik * a[(j, k)];
                    }
                }
                for i in k + 1..n {
                    a[(i, k)] /= d;
                }
                pivots.push((k, Pivot::One(d)));
            } else {
                let (pa, pb, pc) = (a[(k, k)], a[(k + 1, k)], a[(k + 1, k + 1)]);
                let det = pa * pc - pb * pb;
                if libm::fabs(det) <= tiny * tiny {
                    return Err(Error::SingularKkt { pivot: k });
                }
                let mut l = vec![(0.0, 0.0); n];
                for (i, li) in l.iter_mut().enumerate().skip(k + 2) {
                    let (w0, w1) = (a[(i, k)], a[(i, k + 1)]);
                    *li = ((pc * w0 - pb * w1) / det, (pa * w1 - pb * w0) / det);
                }
                for i in k + 2..n {
                    let (l0, l1) = l[i];
                    if l0 == 0.0 && l1 == 0.0 {
                        continue;
                    }
                    for j in k + 2..n {
                        a[(i, j)] -= l0 * a[(j, k)] + l1 * a[(j, k + 1)];
                    }
                }
                for (i, &(l0, l1)) in l.iter().enumerate().skip(k + 2) {
                    a[(i, k)] = l0;
                    a[(i, k + 1)] = l1;
                }
                pivots.push((k, Pivot::Two { a: pa, b: pb, c: pc }));
            }
            k += kstep;
        }
        Ok(Self { n, lower: a, pivots, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of 2×2 pivot blocks used.
    pub fn two_by_two_pivots(&self) -> usize {
        self.pivots.iter().filter(|(_, p)| matches!(p, Pivot::Two { .. })).count()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: b.len() });
        }
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // L z = y, column oriented; the 2×2 diagonal blocks of L are identity.
        for &(k, piv) in &self.pivots {
            let width = match piv {
                Pivot::One(_) => 1,
                Pivot::Two { .. } => 2,
            };
            for c in k..k + width {
                let yc = y[c];
                if yc != 0.0 {
                    for i in k + width..n {
                        y[i] -= self.lower[(i, c)] * yc;
                    }
                }
            }
        }
        for &(k, piv) in &self.pivots {
            match piv {
                Pivot::One(d) => y[k] /= d,
                Pivot::Two { a, b, c } => {
                    let det = a * c - b * b;
                    let (y0, y1) = (y[k], y[k + 1]);
                    y[k] = (c * y0 - b * y1) / det;
                    y[k + 1] = (a * y1 - b * y0) / det;
                }
            }
        }
        for &(k, piv) in self.pivots.iter().rev() {
            let width = match piv {
                Pivot::One(_) => 1,
                Pivot::Two { .. } => 2,
            };
            for c in k..k + width {
                let mut s = y[c];
                for i in k + width..n {
                    s -= self.lower[(i, c)] * y[i];
                }
                y[c] = s;
            }
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        Ok(x)
    }
}

/// Numerical rank by Gaussian elimination with complete pivoting. Pivots
/// below `rel_tol · max|A|` count as zero.
pub fn rank(mut a: DenseMatrix, rel_tol: f64) -> usize {
    let (m, n) = (a.nrows, a.ncols);
    let tol = rel_tol * a.max_abs();
    if tol == 0.0 {
        return 0;
    }
    let mut r = 0;
    while r < m.min(n) {
        let (mut pi, mut pj, mut best) = (r, r, 0.0);
        for i in r..m {
            for j in r..n {
                let v = libm::fabs(a[(i, j)]);
                if v > best {
                    best = v;
                    pi = i;
                    pj = j;
                }
            }
        }
        if best <= tol {
            break;
        }
        a.swap_rows(r, pi);
        a.swap_cols(r, pj);
        let p = a[(r, r)];
        for i in r + 1..m {
            let f = a[(i, r)] / p;
            if f != 0.0 {
                for j in r..n {
                    a[(i, j)] -= f * a[(r, j)];
                }
            }
        }
        r += 1;
    }
    r
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues(mut a: DenseMatrix) -> Result<Vec<f64>> {
    let n = a.nrows;
    if a.ncols != n {
        return Err(Error::DimensionMismatch { expected: n, found: a.ncols });
    }
    let scale = a.max_abs();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[(i, j)] * a[(i, j)];
                }
            }
        }
        if libm::sqrt(off) <= 1e-15 * scale.max(f64::MIN_POSITIVE) * n as f64 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if libm::fabs(apq) <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (libm::fabs(theta) + libm::sqrt(theta * theta + 1.0));
                let c = 1.0 / libm::sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random_symmetric(n: usize, seed: u64) -> DenseMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut a = DenseMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        a
    }

    #[test]
    fn bunch_kaufman_solves_indefinite_systems() {
        for seed in 0..20 {
            let n = 3 + seed as usize;
            let a = random_symmetric(n, seed);
            let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
            let b = a.matvec(&x_true);
            let f = BunchKaufman::factor(a.clone()).unwrap();
            let x = f.solve(&b).unwrap();
            let err = x.iter().zip(&x_true).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "seed {seed}: {err}");
        }
    }

    #[test]
    fn bunch_kaufman_saddle_point_uses_two_by_two_pivots() {
        // [[0, 1], [1, 0]] has no usable 1×1 pivot.
        let a = DenseMatrix::from_row_major(2, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        let f = BunchKaufman::factor(a).unwrap();
        assert_eq!(f.two_by_two_pivots(), 1);
        assert_eq!(f.solve(&[2.0, 3.0]).unwrap(), vec![3.0, 2.0]);
    }

    #[test]
    fn bunch_kaufman_reports_singular() {
        let a = DenseMatrix::from_row_major(2, 2, vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert!(matches!(BunchKaufman::factor(a), Err(Error::SingularKkt { .. })));
    }

    #[test]
    fn rank_of_incidence_cycle() {
        // Three pairwise differences among three values: rank 2.
        let a = DenseMatrix::from_row_major(3, 3, vec![1.0, -1.0, 0.0, 1.0, 0.0, -1.0, 0.0, 1.0, -1.0]).unwrap();
        assert_eq!(rank(a, 1e-10), 2);
        assert_eq!(rank(DenseMatrix::zeros(2, 3), 1e-10), 0);
    }

    #[test]
    fn jacobi_eigenvalues() {
        let a = DenseMatrix::from_row_major(2, 2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let ev = symmetric_eigenvalues(a).unwrap();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let a = random_symmetric(12, 99);
        let ev = symmetric_eigenvalues(a.clone()).unwrap();
        let trace: f64 = (0..12).map(|i| a[(i, i)]).sum();
        assert!((ev.iter().sum::<f64>() - trace).abs() < 1e-12);
    }
}
