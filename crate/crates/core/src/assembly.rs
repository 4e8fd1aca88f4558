//! Single-domain assembly: element-pair blocks, the global Galerkin matrix,
//! the load vector, the single-domain solve and the discrete energy.
//!
//! Each unordered interacting pair `{T, T'}` is integrated once as
//! `∫_T ∫_T' (φ_j(y) − φ_j(x)) (φ_i(y) − φ_i(x)) γ(x, y) dy dx`. Distinct
//! pairs enter the matrix with multiplicity two, which accounts for both
//! orientations `(x ∈ T, y ∈ T')` and `(x ∈ T', y ∈ T)`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::kernel::KernelSpec;
use crate::mesh::{Mesh, Region};
use crate::quadrature::{MappedPoint, TriangleRule};
use crate::solver::{self, SolverMethod};
use crate::sparse::{CsrMatrix, TripletAccumulator};
use crate::spatial::BucketGrid;

/// Default number of Gauss points per direction on each triangle.
pub const DEFAULT_QUAD_ORDER: usize = 4;

/// Local matrix of one element pair over the union of their vertex sets.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBlock {
    pub t: usize,
    pub tp: usize,
    nodes: [usize; 6],
    len: usize,
    values: [f64; 36],
}

impl PairBlock {
    /// Global node ids, `T`'s vertices first.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes[..self.len]
    }

    pub fn value(&self, a: usize, b: usize) -> f64 {
        self.values[a * 6 + b]
    }

    /// Orientations this block stands for in the full form.
    pub fn multiplicity(&self) -> f64 {
        if self.t == self.tp {
            1.0
        } else {
            2.0
        }
    }

    pub fn is_self_pair(&self) -> bool {
        self.t == self.tp
    }
}

/// Quadrature points mapped onto every element of a mesh, ready to
/// integrate pair blocks.
#[derive(Debug, Clone)]
pub struct PairIntegrator {
    kernel: KernelSpec,
    mapped: Vec<Vec<MappedPoint>>,
}

impl PairIntegrator {
    pub fn new(mesh: &Mesh, kernel: KernelSpec, quad_order: usize) -> Result<Self> {
        let rule = TriangleRule::collapsed_gauss(quad_order)?;
        let mut mapped = Vec::with_capacity(mesh.num_elements());
        for (e, el) in mesh.elements().iter().enumerate() {
            if !(el.area > 0.0) {
                return Err(Error::DegenerateElement(e));
            }
            mapped.push(rule.map(mesh.element_points(e), el.area));
        }
        Ok(Self { kernel, mapped })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Integrates the block of the pair `(t, tp)`.
    pub fn block(&self, mesh: &Mesh, t: usize, tp: usize) -> PairBlock {
        let vt = mesh.element(t).vertices;
        let vtp = mesh.element(tp).vertices;
        let mut nodes = [0usize; 6];
        nodes[..3].copy_from_slice(&vt);
        let mut len = 3;
        let mut idx_tp = [0usize; 3];
        for (a, &v) in vtp.iter().enumerate() {
            idx_tp[a] = match nodes[..len].iter().position(|&n| n == v) {
                Some(p) => p,
                None => {
                    nodes[len] = v;
                    len += 1;
                    len - 1
                }
            };
        }

        let mut values = [0.0; 36];
        for px in &self.mapped[t] {
            for py in &self.mapped[tp] {
                let gamma = self.kernel.eval_quadrature(px.point, py.point);
                if gamma == 0.0 {
                    continue;
                }
                let w = px.weight * py.weight * gamma;
                let mut d = [0.0; 6];
                for a in 0..3 {
                    d[idx_tp[a]] += py.basis[a];
                    d[a] -= px.basis[a];
                }
                for a in 0..len {
                    let wa = w * d[a];
                    for b in a..len {
                        values[a * 6 + b] += wa * d[b];
                    }
                }
            }
        }
        for a in 0..len {
            for b in 0..a {
                values[a * 6 + b] = values[b * 6 + a];
            }
        }
        PairBlock { t, tp, nodes, len, values }
    }
}

/// Block of a single element pair with a fresh rule of the given order.
pub fn pair_block(mesh: &Mesh, t: usize, tp: usize, kernel: &KernelSpec, quad_order: usize) -> Result<PairBlock> {
    let rule = TriangleRule::collapsed_gauss(quad_order)?;
    for e in [t, tp] {
        if e >= mesh.num_elements() {
            return Err(Error::DimensionMismatch { expected: mesh.num_elements(), found: e + 1 });
        }
        if !(mesh.element(e).area > 0.0) {
            return Err(Error::DegenerateElement(e));
        }
    }
    let integrator = PairIntegrator {
        kernel: *kernel,
        mapped: [t, tp].iter().map(|&e| (e, rule.map(mesh.element_points(e), mesh.element(e).area))).fold(
            vec![Vec::new(); mesh.num_elements()],
            |mut acc, (e, m)| {
                acc[e] = m;
                acc
            },
        ),
    };
    Ok(integrator.block(mesh, t, tp))
}

/// Unordered interacting pairs `(t, tp)` with `t ≤ tp`, sorted.
pub fn interacting_pairs(mesh: &Mesh, kernel: &KernelSpec) -> Vec<(usize, usize)> {
    let centers: Vec<_> = mesh.elements().iter().map(|e| e.barycenter).collect();
    let reach = kernel.barycenter_reach(mesh);
    let grid = BucketGrid::new(&centers, reach);
    let mut pairs = Vec::new();
    let mut row = Vec::new();
    for t in 0..mesh.num_elements() {
        row.clear();
        grid.for_each_candidate(centers[t], reach, |tp| {
            if tp >= t && kernel.pair_interacts(mesh, t, tp) {
                row.push(tp);
            }
        });
        row.sort_unstable();
        pairs.extend(row.iter().map(|&tp| (t, tp)));
    }
    pairs
}

/// All interacting pairs of a mesh together with their integrated blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Interactions {
    blocks: Vec<PairBlock>,
}

impl Interactions {
    /// Enumerates and integrates every interacting pair sequentially.
    pub fn compute(mesh: &Mesh, kernel: &KernelSpec, quad_order: usize) -> Result<Self> {
        let integrator = PairIntegrator::new(mesh, *kernel, quad_order)?;
        let blocks = interacting_pairs(mesh, kernel).into_iter().map(|(t, tp)| integrator.block(mesh, t, tp)).collect();
        Self::from_blocks(blocks)
    }

    /// Wraps blocks computed elsewhere; they must be sorted by `(t, tp)`
    /// with `t ≤ tp`.
    pub fn from_blocks(blocks: Vec<PairBlock>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::NoInteractions);
        }
        let ordered =
            blocks.iter().all(|b| b.t <= b.tp) && blocks.windows(2).all(|w| (w[0].t, w[0].tp) < (w[1].t, w[1].tp));
        if !ordered {
            return Err(Error::InvalidMesh("pair blocks are not sorted by (t, tp)".into()));
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[PairBlock] {
        &self.blocks
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.blocks.iter().map(|b| (b.t, b.tp))
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Keeps only the pairs accepted by `keep`.
    pub fn filtered(&self, mut keep: impl FnMut(usize, usize) -> bool) -> Result<Self> {
        Self::from_blocks(self.blocks.iter().filter(|b| keep(b.t, b.tp)).cloned().collect())
    }
}

/// Adds `multiplicity · block / divisor` for every pair with a divisor,
/// mapping global nodes through `local`. Contributions arrive in pair
/// order, which fixes the summation order of every entry.
pub(crate) fn accumulate_pairs(
    acc: &mut TripletAccumulator,
    interactions: &Interactions,
    mut divisor: impl FnMut(usize, usize) -> Option<f64>,
    local: impl Fn(usize) -> Option<usize>,
) {
    for block in interactions.blocks() {
        let Some(div) = divisor(block.t, block.tp) else {
            continue;
        };
        let w = block.multiplicity();
        let nodes = block.nodes();
        let mapped: Vec<Option<usize>> = nodes.iter().map(|&n| local(n)).collect();
        for (a, la) in mapped.iter().enumerate() {
            let Some(la) = *la else { continue };
            for (b, lb) in mapped.iter().enumerate() {
                let Some(lb) = *lb else { continue };
                acc.add(la, lb, w * block.value(a, b) / div);
            }
        }
    }
}

/// Adds the reaction mass term `∫_T c φ_a φ_b / divisor` for each listed element.
pub(crate) fn accumulate_reaction(
    acc: &mut TripletAccumulator,
    mesh: &Mesh,
    elements: impl Iterator<Item = (usize, f64)>,
    reaction: &dyn Field,
    rule: &TriangleRule,
    local: impl Fn(usize) -> Option<usize>,
) {
    for (e, div) in elements {
        let local_mass = element_mass(mesh, e, reaction, rule);
        let verts = mesh.element(e).vertices;
        for a in 0..3 {
            let Some(la) = local(verts[a]) else { continue };
            for b in 0..3 {
                let Some(lb) = local(verts[b]) else { continue };
                acc.add(la, lb, local_mass[a][b] / div);
            }
        }
    }
}

fn element_mass(mesh: &Mesh, e: usize, c: &dyn Field, rule: &TriangleRule) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for q in rule.map(mesh.element_points(e), mesh.element(e).area) {
        let cw = q.weight * c.value(q.point);
        for a in 0..3 {
            for b in a..3 {
                m[a][b] += cw * q.basis[a] * q.basis[b];
            }
        }
    }
    for a in 0..3 {
        for b in 0..a {
            m[a][b] = m[b][a];
        }
    }
    m
}

/// `∫_T f φ_a` for the three vertices of element `e`.
pub fn element_load(mesh: &Mesh, e: usize, f: &dyn Field, rule: &TriangleRule) -> [f64; 3] {
    let mut out = [0.0; 3];
    for q in rule.map(mesh.element_points(e), mesh.element(e).area) {
        let fw = q.weight * f.value(q.point);
        for a in 0..3 {
            out[a] += fw * q.basis[a];
        }
    }
    out
}

/// Global matrix split into its unknown/Dirichlet blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSystem {
    /// `Ñ × Ñ` Galerkin matrix.
    pub full: CsrMatrix,
    /// `N × N` unknown block.
    pub a_single: CsrMatrix,
    /// `N × (Ñ − N)` unknown/Dirichlet coupling.
    pub g_coupling: CsrMatrix,
    pub num_unknowns: usize,
}

/// Assembles the full Galerkin matrix once and splits it.
///
/// `reaction`, when given, adds `∫_Ω c φ_i φ_j`.
pub fn assemble_full(
    mesh: &Mesh,
    interactions: &Interactions,
    reaction: Option<&dyn Field>,
    quad_order: usize,
) -> Result<FullSystem> {
    let n_all = mesh.num_nodes();
    let n = mesh.num_unknowns();
    let mut acc = TripletAccumulator::new(n_all, n_all);
    accumulate_pairs(&mut acc, interactions, |_, _| Some(1.0), Some);
    if let Some(c) = reaction {
        let rule = TriangleRule::collapsed_gauss(quad_order)?;
        let omega = (0..mesh.num_elements()).filter(|&e| mesh.region(e) == Region::Omega).map(|e| (e, 1.0));
        accumulate_reaction(&mut acc, mesh, omega, c, &rule, Some);
    }
    let full = acc.into_csr(true);
    Ok(FullSystem {
        a_single: full.block(0..n, 0..n, true),
        g_coupling: full.block(0..n, n..n_all, false),
        full,
        num_unknowns: n,
    })
}

/// `∫_Ω f φ_j` for every node `j` (Dirichlet nodes included).
pub fn load_vector(mesh: &Mesh, f: &dyn Field, quad_order: usize) -> Result<Vec<f64>> {
    let rule = TriangleRule::collapsed_gauss(quad_order)?;
    let mut out = vec![0.0; mesh.num_nodes()];
    for e in 0..mesh.num_elements() {
        if mesh.region(e) != Region::Omega {
            continue;
        }
        let vals = element_load(mesh, e, f, &rule);
        for (a, &v) in mesh.element(e).vertices.iter().enumerate() {
            out[v] += vals[a];
        }
    }
    Ok(out)
}

/// Source and Dirichlet data of a problem.
#[derive(Clone, Copy)]
pub struct LoadData<'a> {
    pub f: &'a dyn Field,
    pub g: &'a dyn Field,
}

impl LoadData<'_> {
    /// Nodal interpolant of `g` at the Dirichlet nodes, in numbering order.
    pub fn dirichlet_values(&self, mesh: &Mesh) -> Vec<f64> {
        mesh.vertices()[mesh.num_unknowns()..].iter().map(|&p| self.g.value(p)).collect()
    }
}

/// Right-hand side data of the single-domain system.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    /// `∫_Ω f φ_j` over all nodes.
    pub f_full: Vec<f64>,
    /// Dirichlet values at the nodes `N..Ñ`.
    pub g_vec: Vec<f64>,
    pub b_single: Vec<f64>,
}

/// `b_i = ∫_Ω f φ_i − (G g)_i` for every unknown node.
pub fn build_rhs(mesh: &Mesh, load: &LoadData<'_>, g_coupling: &CsrMatrix, quad_order: usize) -> Result<Rhs> {
    let f_full = load_vector(mesh, load.f, quad_order)?;
    let g_vec = load.dirichlet_values(mesh);
    let gg = g_coupling.matvec(&g_vec)?;
    let b_single = f_full[..mesh.num_unknowns()].iter().zip(&gg).map(|(f, c)| f - c).collect();
    Ok(Rhs { f_full, g_vec, b_single })
}

/// Solves `A u = b` for the unknown nodal values.
pub fn solve_single(a_single: &CsrMatrix, b_single: &[f64], method: SolverMethod) -> Result<Vec<f64>> {
    solver::solve_spd(a_single, b_single, method)
}

/// `½ (uᵀ A u + 2 uᵀ C g) − F_u · u − F_c · g`.
pub(crate) fn block_energy(
    a: &CsrMatrix,
    c: &CsrMatrix,
    f_u: &[f64],
    f_c: &[f64],
    u: &[f64],
    g: &[f64],
) -> Result<f64> {
    if u.len() != a.nrows() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), found: u.len() });
    }
    if g.len() != c.ncols() {
        return Err(Error::DimensionMismatch { expected: c.ncols(), found: g.len() });
    }
    let au = a.matvec(u)?;
    let cg = c.matvec(g)?;
    let dot = |x: &[f64], y: &[f64]| x.iter().zip(y).fold(0.0, |s, (p, q)| s + p * q);
    let quad = dot(u, &au) + 2.0 * dot(u, &cg);
    Ok(0.5 * quad - dot(f_u, u) - dot(f_c, g))
}

/// Discrete energy `½ 𝒜(uʰ, uʰ) − ℱ(uʰ)` where `uʰ` takes the values `u`
/// on unknown nodes and `rhs.g_vec` on Dirichlet nodes.
///
/// The interaction of `Γ` with itself depends on `g` alone and is left
/// out, so the value is the energy up to a data-dependent constant.
pub fn energy_single(system: &FullSystem, rhs: &Rhs, u: &[f64]) -> Result<f64> {
    let n = system.num_unknowns;
    block_energy(&system.a_single, &system.g_coupling, &rhs.f_full[..n], &rhs.f_full[n..], u, &rhs.g_vec)
}
