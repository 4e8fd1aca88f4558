//! Overlap-weighted subdomain systems and the checks that they sum to the
//! single-domain system.

use alloc::vec;
use alloc::vec::Vec;

use crate::assembly::{
    accumulate_pairs, accumulate_reaction, block_energy, element_load, FullSystem, Interactions, LoadData, Rhs,
};
use crate::decomposition::{DecompIndex, Decomposition, OverlapWeights};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::mesh::{Mesh, Region};
use crate::quadrature::TriangleRule;
use crate::solver::norm2;
use crate::sparse::{CsrMatrix, TripletAccumulator};

/// Everything subdomain assembly needs besides the decomposition.
#[derive(Clone, Copy)]
pub struct Problem<'a> {
    pub mesh: &'a Mesh,
    pub interactions: &'a Interactions,
    pub load: LoadData<'a>,
    pub reaction: Option<&'a dyn Field>,
    pub quad_order: usize,
}

/// Local system of one subdomain over `X̃_n = X_n ∪ X_{Γ_n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubdomainSystem {
    pub id: usize,
    /// `N_n × N_n` unknown block.
    pub a: CsrMatrix,
    /// `N_n × |X_{Γ_n}|` coupling to the Dirichlet collar.
    pub collar: CsrMatrix,
    /// `ζ_F`-weighted `∫ f φ_j` for every node of `X̃_n`.
    pub load: Vec<f64>,
    /// `load` on the unknowns minus `collar · g`.
    pub b: Vec<f64>,
    /// Dirichlet values on the collar.
    pub g: Vec<f64>,
    pub floating: bool,
}

impl SubdomainSystem {
    pub fn num_unknowns(&self) -> usize {
        self.a.nrows()
    }
}

/// Assembles subdomain `n` with the given overlap counts. Refuses to run
/// before the decomposition's coverage has been verified.
pub fn assemble_subdomain<W: OverlapWeights + ?Sized>(
    problem: &Problem<'_>,
    decomp: &Decomposition,
    weights: &W,
    n: usize,
) -> Result<SubdomainSystem> {
    if decomp.coverage().is_none() {
        return Err(Error::CoverageNotVerified);
    }
    if n >= decomp.num_subdomains() {
        return Err(Error::DimensionMismatch { expected: decomp.num_subdomains(), found: n + 1 });
    }
    let mesh = problem.mesh;
    let geo = &decomp.geometry[n];
    let idx = decomp.index.subdomain(n);
    let zeta = &decomp.zeta;
    let size = idx.len();
    let nu = idx.num_unknowns();
    let local = |g: usize| idx.local(g);

    let mut acc = TripletAccumulator::new(size, size);
    accumulate_pairs(
        &mut acc,
        problem.interactions,
        |t, tp| {
            let touches_omega = mesh.region(t) == Region::Omega || mesh.region(tp) == Region::Omega;
            if touches_omega && zeta.contains(t, n) && zeta.contains(tp, n) {
                Some(weights.zeta_a(t, tp) as f64)
            } else {
                None
            }
        },
        local,
    );

    let rule = TriangleRule::collapsed_gauss(problem.quad_order)?;
    let mut inner: Vec<usize> = geo.omega_elems.iter().chain(&geo.hat_elems).copied().collect();
    inner.sort_unstable();
    if let Some(c) = problem.reaction {
        let weighted = inner.iter().map(|&e| (e, weights.zeta_f(e) as f64));
        accumulate_reaction(&mut acc, mesh, weighted, c, &rule, local);
    }
    let full = acc.into_csr(true);

    let mut load = vec![0.0; size];
    for &e in &inner {
        let vals = element_load(mesh, e, problem.load.f, &rule);
        let z = weights.zeta_f(e) as f64;
        for (a, &v) in mesh.element(e).vertices.iter().enumerate() {
            if let Some(l) = idx.local(v) {
                load[l] += vals[a] / z;
            }
        }
    }
    let g: Vec<f64> = idx.collar().iter().map(|&v| problem.load.g.value(mesh.vertex(v))).collect();
    let a = full.block(0..nu, 0..nu, true);
    let collar = full.block(0..nu, nu..size, false);
    let cg = collar.matvec(&g)?;
    let b = load[..nu].iter().zip(&cg).map(|(f, c)| f - c).collect();
    Ok(SubdomainSystem { id: n, a, collar, load, b, g, floating: geo.floating })
}

/// Assembles every subdomain with the decomposition's own overlap counts.
pub fn assemble_subdomains(problem: &Problem<'_>, decomp: &Decomposition) -> Result<Vec<SubdomainSystem>> {
    (0..decomp.num_subdomains()).map(|n| assemble_subdomain(problem, decomp, &decomp.zeta, n)).collect()
}

/// Relative residuals of the scattered subdomain sums against the
/// single-domain system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterReport {
    /// `‖Σ_n R_nᵀ [A_n C_n] R_n − [A G]‖_F / ‖[A G]‖_F` over the unknown rows.
    pub matrix_residual: f64,
    /// `‖Σ_n R_nᵀ b_n − b_single‖ / ‖b_single‖` (absolute if `b_single = 0`).
    pub load_residual: f64,
}

/// Scatters every local system to global numbering and compares the sums
/// with the single-domain matrix and right-hand side.
pub fn scatter_sum_check(
    systems: &[SubdomainSystem],
    index: &DecompIndex,
    full: &FullSystem,
    rhs: &Rhs,
) -> Result<ScatterReport> {
    let n_all = full.full.nrows();
    let n = full.num_unknowns;
    if systems.len() != index.num_subdomains() {
        return Err(Error::DimensionMismatch { expected: index.num_subdomains(), found: systems.len() });
    }
    let mut diff = TripletAccumulator::new(n, n_all);
    let mut db = vec![0.0; n];
    for (sys, idx) in systems.iter().zip(index.subdomains()) {
        let nodes = idx.nodes();
        let nu = idx.num_unknowns();
        for (i, j, v) in sys.a.iter() {
            diff.add(nodes[i], nodes[j], v);
        }
        for (i, j, v) in sys.collar.iter() {
            diff.add(nodes[i], nodes[nu + j], v);
        }
        for (l, &v) in sys.b.iter().enumerate() {
            db[nodes[l]] += v;
        }
    }
    let reference = full.full.block(0..n, 0..n_all, false);
    for (i, j, v) in reference.iter() {
        diff.add(i, j, -v);
    }
    for (d, r) in db.iter_mut().zip(&rhs.b_single) {
        *d -= r;
    }
    let relative = |num: f64, den: f64| if den > 0.0 { num / den } else { num };
    Ok(ScatterReport {
        matrix_residual: relative(diff.into_csr(false).norm_frobenius(), reference.norm_frobenius()),
        load_residual: relative(norm2(db.iter().copied()), norm2(rhs.b_single.iter().copied())),
    })
}

/// Restriction of a global unknown vector to the unknowns of subdomain `n`.
pub fn restrict(index: &DecompIndex, n: usize, u_global: &[f64]) -> Vec<f64> {
    index.subdomain(n).unknowns().iter().map(|&g| u_global[g]).collect()
}

/// `Σ_n [½ (u_nᵀ A_n u_n + 2 u_nᵀ C_n g_n) − F_n · (u_n, g_n)]`, the
/// subdomain counterpart of [`energy_single`](crate::assembly::energy_single).
pub fn energy_sum(systems: &[SubdomainSystem], u: &[Vec<f64>]) -> Result<f64> {
    if u.len() != systems.len() {
        return Err(Error::DimensionMismatch { expected: systems.len(), found: u.len() });
    }
    let mut total = 0.0;
    for (sys, un) in systems.iter().zip(u) {
        let nu = sys.num_unknowns();
        total += block_energy(&sys.a, &sys.collar, &sys.load[..nu], &sys.load[nu..], un, &sys.g)?;
    }
    Ok(total)
}
