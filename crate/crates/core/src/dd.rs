//! Coupled saddle-point solve of the subdomain systems.
//!
//! The multipliers follow the convention `A_n u_n + M_nᵀ λ = b_n`,
//! `Σ_n M_n u_n = 0`.

use alloc::vec;
use alloc::vec::Vec;

use crate::constraints::{constraint_violation, ConstraintMatrix, ConstraintMode};
use crate::decomposition::DecompIndex;
use crate::dense::BunchKaufman;
use crate::error::{Error, Result};
use crate::multi::SubdomainSystem;
use crate::solver::{self, norm2, SolverMethod, SOLVE_TOLERANCE};
use crate::sparse::{CsrMatrix, TripletAccumulator};

const REFINEMENT_STEPS: usize = 3;

/// `[diag(A_n) Mᵀ; M 0] [u; λ] = [b; 0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KktSystem {
    blocks: Vec<CsrMatrix>,
    rhs: Vec<Vec<f64>>,
    constraints: ConstraintMatrix,
}

impl KktSystem {
    pub fn blocks(&self) -> &[CsrMatrix] {
        &self.blocks
    }

    pub fn constraints(&self) -> &ConstraintMatrix {
        &self.constraints
    }

    pub fn num_unknowns(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum()
    }

    /// `Σ N_n + M_rows`.
    pub fn dim(&self) -> usize {
        self.num_unknowns() + self.constraints.num_rows()
    }

    /// The monolithic KKT matrix.
    pub fn to_csr(&self) -> CsrMatrix {
        let nu = self.num_unknowns();
        let dim = self.dim();
        let mut acc = TripletAccumulator::new(dim, dim);
        let mut off = 0;
        for b in &self.blocks {
            for (i, j, v) in b.iter() {
                acc.add(off + i, off + j, v);
            }
            off += b.nrows();
        }
        for (k, j, v) in self.constraints.to_csr().iter() {
            acc.add(nu + k, j, v);
            acc.add(j, nu + k, v);
        }
        acc.into_csr(true)
    }

    /// `[b_1; …; b_{N_s}; 0]`.
    pub fn rhs_vector(&self) -> Vec<f64> {
        let mut r: Vec<f64> = self.rhs.iter().flatten().copied().collect();
        r.resize(self.dim(), 0.0);
        r
    }
}

/// Stacks the subdomain systems with the constraints. Only non-redundant
/// constraints give a nonsingular matrix.
pub fn assemble_kkt(systems: &[SubdomainSystem], constraints: &ConstraintMatrix) -> Result<KktSystem> {
    if constraints.mode() == ConstraintMode::Redundant && constraints.num_rows() > 0 {
        return Err(Error::RedundantKkt);
    }
    if constraints.num_blocks() != systems.len() {
        return Err(Error::DimensionMismatch { expected: systems.len(), found: constraints.num_blocks() });
    }
    for (s, &c) in systems.iter().zip(constraints.block_cols()) {
        if s.num_unknowns() != c {
            return Err(Error::DimensionMismatch { expected: s.num_unknowns(), found: c });
        }
    }
    Ok(KktSystem {
        blocks: systems.iter().map(|s| s.a.clone()).collect(),
        rhs: systems.iter().map(|s| s.b.clone()).collect(),
        constraints: constraints.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdSolution {
    pub u: Vec<Vec<f64>>,
    pub lambda: Vec<f64>,
    /// Relative residual of the solved system.
    pub residual: f64,
}

/// Solves the KKT system. Without constraints the blocks are independent
/// and each is solved with the SPD solver `method`; otherwise the whole
/// system goes through a symmetric-indefinite factorization with a few
/// steps of iterative refinement.
pub fn solve_dd(kkt: &KktSystem, method: SolverMethod) -> Result<DdSolution> {
    if kkt.constraints.num_rows() == 0 {
        let mut u = Vec::with_capacity(kkt.blocks.len());
        let mut worst: f64 = 0.0;
        for (a, b) in kkt.blocks.iter().zip(&kkt.rhs) {
            let x = solver::solve_spd(a, b, method)?;
            worst = worst.max(solver::relative_residual(a, &x, b)?);
            u.push(x);
        }
        return Ok(DdSolution { u, lambda: Vec::new(), residual: worst });
    }

    let k = kkt.to_csr();
    let r = kkt.rhs_vector();
    let lu = BunchKaufman::factor(k.to_dense())?;
    let mut x = lu.solve(&r)?;
    let mut res = solver::relative_residual(&k, &x, &r)?;
    for _ in 0..REFINEMENT_STEPS {
        if res <= 0.1 * SOLVE_TOLERANCE {
            break;
        }
        let kx = k.matvec(&x)?;
        let resid: Vec<f64> = r.iter().zip(&kx).map(|(a, b)| a - b).collect();
        let dx = lu.solve(&resid)?;
        let cand: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
        let cres = solver::relative_residual(&k, &cand, &r)?;
        if cres >= res {
            break;
        }
        x = cand;
        res = cres;
    }
    if res > SOLVE_TOLERANCE {
        return Err(Error::ResidualTooLarge { residual: res, tolerance: SOLVE_TOLERANCE });
    }
    let mut u = Vec::with_capacity(kkt.blocks.len());
    let mut off = 0;
    for b in &kkt.blocks {
        u.push(x[off..off + b.nrows()].to_vec());
        off += b.nrows();
    }
    Ok(DdSolution { u, lambda: x[off..].to_vec(), residual: res })
}

/// `max_n ‖A_n u_n + M_nᵀ λ − b_n‖ / (1 + ‖b_n‖)`.
pub fn stationarity_residual(kkt: &KktSystem, sol: &DdSolution) -> Result<f64> {
    let mt = if sol.lambda.is_empty() {
        kkt.blocks.iter().map(|b| vec![0.0; b.nrows()]).collect()
    } else {
        kkt.constraints.transpose_apply(&sol.lambda)?
    };
    let mut worst: f64 = 0.0;
    for ((a, b), (u, m)) in kkt.blocks.iter().zip(&kkt.rhs).zip(sol.u.iter().zip(&mt)) {
        let au = a.matvec(u)?;
        let r = norm2(au.iter().zip(m).zip(b).map(|((p, q), s)| p + q - s));
        worst = worst.max(r / (1.0 + norm2(b.iter().copied())));
    }
    Ok(worst)
}

/// Global unknown vector taking each node from its lowest-indexed
/// subdomain, with the largest spread between copies of a node.
pub fn reconstruct_global(u: &[Vec<f64>], index: &DecompIndex, num_unknowns: usize) -> Result<(Vec<f64>, f64)> {
    if u.len() != index.num_subdomains() {
        return Err(Error::DimensionMismatch { expected: index.num_subdomains(), found: u.len() });
    }
    let mut lo = vec![f64::INFINITY; num_unknowns];
    let mut hi = vec![f64::NEG_INFINITY; num_unknowns];
    let mut out = vec![f64::NAN; num_unknowns];
    let mut seen = vec![false; num_unknowns];
    for (un, s) in u.iter().zip(index.subdomains()) {
        if un.len() != s.num_unknowns() {
            return Err(Error::DimensionMismatch { expected: s.num_unknowns(), found: un.len() });
        }
        for (&g, &v) in s.unknowns().iter().zip(un) {
            if g >= num_unknowns {
                return Err(Error::IndexInconsistency(alloc::format!("local unknown maps to node {g}")));
            }
            if !seen[g] {
                out[g] = v;
                seen[g] = true;
            }
            lo[g] = lo[g].min(v);
            hi[g] = hi[g].max(v);
        }
    }
    if let Some(g) = seen.iter().position(|&s| !s) {
        return Err(Error::IndexInconsistency(alloc::format!("unknown node {g} belongs to no subdomain")));
    }
    let spread = lo.iter().zip(&hi).fold(0.0, |m: f64, (a, b)| m.max(b - a));
    Ok((out, spread))
}

/// Agreement between the decomposed and the single-domain solutions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    /// `‖u_dd − u_single‖_∞ / max(1, ‖u_single‖_∞)`.
    pub rel_inf_error: f64,
    /// `‖u_dd − u_single‖_2 / max(1, ‖u_single‖_2)`.
    pub rel_l2_error: f64,
    pub constraint_violation: f64,
    pub max_disagreement: f64,
    pub solver_residual: f64,
}

pub fn equivalence_report(
    u_dd: &[f64],
    max_disagreement: f64,
    u_single: &[f64],
    constraints: &ConstraintMatrix,
    sol: &DdSolution,
) -> Result<EquivalenceReport> {
    if u_dd.len() != u_single.len() {
        return Err(Error::DimensionMismatch { expected: u_single.len(), found: u_dd.len() });
    }
    let inf = |v: &mut dyn Iterator<Item = f64>| v.fold(0.0, |m: f64, x| m.max(libm::fabs(x)));
    let diff_inf = inf(&mut u_dd.iter().zip(u_single).map(|(a, b)| a - b));
    let ref_inf = inf(&mut u_single.iter().copied());
    let diff_l2 = norm2(u_dd.iter().zip(u_single).map(|(a, b)| a - b));
    let ref_l2 = norm2(u_single.iter().copied());
    Ok(EquivalenceReport {
        rel_inf_error: diff_inf / ref_inf.max(1.0),
        rel_l2_error: diff_l2 / ref_l2.max(1.0),
        constraint_violation: constraint_violation(constraints, &sol.u)?,
        max_disagreement,
        solver_residual: sol.residual,
    })
}
