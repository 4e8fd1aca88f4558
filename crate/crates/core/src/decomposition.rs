//! Element-whole overlapping decomposition of `Ω`.
//!
//! Subdomain `n` owns the elements `Ω̃_n` of a non-overlapping partition.
//! Its interface strip `Γ̂_n` collects the `Ω` elements whose barycenter
//! lies within `δ/2 + h` of a vertex it shares with another subdomain, its
//! Dirichlet collar `Γ_n` the `Γ` elements within `δ + h` of a vertex it
//! shares with `Γ`, and `Ω_n = Ω̃_n \ Γ̂_n`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, NodeClass, Region};
use crate::spatial::BucketGrid;

/// Non-overlapping assignment of `Ω` elements to subdomains `0..N_s`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    num_subdomains: usize,
    owner: Vec<Option<usize>>,
}

impl Partition {
    /// Validates an owner vector: `Some` exactly on `Ω` elements, every
    /// subdomain non-empty.
    pub fn from_owners(mesh: &Mesh, num_subdomains: usize, owner: Vec<Option<usize>>) -> Result<Self> {
        if num_subdomains == 0 {
            return Err(Error::InvalidPartition("at least one subdomain is required".into()));
        }
        if owner.len() != mesh.num_elements() {
            return Err(Error::DimensionMismatch { expected: mesh.num_elements(), found: owner.len() });
        }
        let mut counts = vec![0usize; num_subdomains];
        for (e, o) in owner.iter().enumerate() {
            match (mesh.region(e), *o) {
                (Region::Omega, Some(n)) if n < num_subdomains => counts[n] += 1,
                (Region::Omega, Some(n)) => {
                    return Err(Error::InvalidPartition(format!(
                        "element {e} owned by subdomain {n} of {num_subdomains}"
                    )))
                }
                (Region::Omega, None) => return Err(Error::InvalidPartition(format!("Ω element {e} has no owner"))),
                (Region::Gamma, Some(_)) => return Err(Error::InvalidPartition(format!("Γ element {e} has an owner"))),
                (Region::Gamma, None) => {}
            }
        }
        if let Some(block) = counts.iter().position(|&c| c == 0) {
            return Err(Error::EmptyBlock { block });
        }
        Ok(Self { num_subdomains, owner })
    }

    pub fn num_subdomains(&self) -> usize {
        self.num_subdomains
    }

    pub fn owner(&self, e: usize) -> Option<usize> {
        self.owner[e]
    }

    pub fn owners(&self) -> &[Option<usize>] {
        &self.owner
    }

    /// Elements owned by `n`, ascending.
    pub fn owned(&self, n: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&e| self.owner[e] == Some(n)).collect()
    }
}

/// `bx × by` block partition of the bounding box of `Ω` by element
/// barycenter. Blocks are numbered row by row from the lower left; a
/// barycenter on a block line goes to the lower block.
pub fn partition_blocks(mesh: &Mesh, bx: usize, by: usize) -> Result<Partition> {
    if bx == 0 || by == 0 {
        return Err(Error::InvalidPartition(format!("block counts must be positive, got {bx}×{by}")));
    }
    let (lo, hi) = mesh.omega_bounding_box();
    let wx = (hi.x - lo.x) / bx as f64;
    let wy = (hi.y - lo.y) / by as f64;
    let block_of = |t: f64, count: usize| -> usize {
        let k = libm::ceil(t - 1e-9) - 1.0;
        if k < 0.0 {
            0
        } else {
            (k as usize).min(count - 1)
        }
    };
    let owner = mesh
        .elements()
        .iter()
        .enumerate()
        .map(|(e, el)| match mesh.region(e) {
            Region::Gamma => None,
            Region::Omega => {
                let ix = block_of((el.barycenter.x - lo.x) / wx, bx);
                let iy = block_of((el.barycenter.y - lo.y) / wy, by);
                Some(iy * bx + ix)
            }
        })
        .collect();
    Partition::from_owners(mesh, bx * by, owner)
}

/// Element sets of one subdomain, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubdomainGeometry {
    pub omega_elems: Vec<usize>,
    pub hat_elems: Vec<usize>,
    pub gamma_elems: Vec<usize>,
    pub type1_vertices: Vec<usize>,
    pub type2_vertices: Vec<usize>,
    pub floating: bool,
}

impl SubdomainGeometry {
    /// `Ω_n ∪ Γ̂_n ∪ Γ_n`, ascending.
    pub fn domain_elements(&self) -> Vec<usize> {
        let mut all: Vec<usize> =
            self.omega_elems.iter().chain(&self.hat_elems).chain(&self.gamma_elems).copied().collect();
        all.sort_unstable();
        all
    }
}

/// Builds `Ω_n`, `Γ̂_n` and `Γ_n` for every subdomain.
pub fn build_subdomain_regions(mesh: &Mesh, partition: &Partition, delta: f64) -> Result<Vec<SubdomainGeometry>> {
    if partition.owners().len() != mesh.num_elements() {
        return Err(Error::DimensionMismatch { expected: mesh.num_elements(), found: partition.owners().len() });
    }
    let ns = partition.num_subdomains();
    let h = mesh.h();
    let mut geo = vec![SubdomainGeometry::default(); ns];

    for node in 0..mesh.num_nodes() {
        let mut owners: Vec<usize> = Vec::new();
        let mut touches_gamma = false;
        for &e in mesh.node_elements(node)? {
            match partition.owner(e) {
                Some(n) => owners.push(n),
                None => touches_gamma = true,
            }
        }
        owners.sort_unstable();
        owners.dedup();
        for &n in &owners {
            if owners.len() > 1 {
                geo[n].type1_vertices.push(node);
            }
            if touches_gamma {
                geo[n].type2_vertices.push(node);
            }
        }
    }

    let centers: Vec<_> = mesh.elements().iter().map(|e| e.barycenter).collect();
    let hat_r = 0.5 * delta + h;
    let col_r = delta + h;
    let grid = BucketGrid::new(&centers, hat_r.max(col_r));
    let within = |vertices: &[usize], radius: f64, region: Region| -> Vec<usize> {
        let mut hit = vec![false; centers.len()];
        for &v in vertices {
            let p = mesh.vertex(v);
            grid.for_each_candidate(p, radius, |e| {
                if mesh.region(e) == region && centers[e].dist2(p) <= radius * radius {
                    hit[e] = true;
                }
            });
        }
        (0..centers.len()).filter(|&e| hit[e]).collect()
    };

    for (n, g) in geo.iter_mut().enumerate() {
        g.hat_elems = within(&g.type1_vertices, hat_r, Region::Omega);
        g.gamma_elems = within(&g.type2_vertices, col_r, Region::Gamma);
        g.omega_elems = partition.owned(n).into_iter().filter(|e| g.hat_elems.binary_search(e).is_err()).collect();
        g.floating = g.gamma_elems.is_empty();
    }
    Ok(geo)
}

const ABSENT: usize = usize::MAX;

/// Local numbering of one subdomain: unknown nodes `X_n` first, then the
/// Dirichlet collar `X_{Γ_n}`, each ascending by global id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubdomainIndex {
    nodes: Vec<usize>,
    num_unknowns: usize,
    local: Vec<usize>,
}

impl SubdomainIndex {
    /// `X̃_n` as global ids.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    pub fn unknowns(&self) -> &[usize] {
        &self.nodes[..self.num_unknowns]
    }

    pub fn collar(&self) -> &[usize] {
        &self.nodes[self.num_unknowns..]
    }

    pub fn num_unknowns(&self) -> usize {
        self.num_unknowns
    }

    pub fn num_collar(&self) -> usize {
        self.nodes.len() - self.num_unknowns
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Local position of a global node in `X̃_n`.
    pub fn local(&self, global: usize) -> Option<usize> {
        match self.local.get(global) {
            Some(&l) if l != ABSENT => Some(l),
            _ => None,
        }
    }

    /// Local position among the unknowns only.
    pub fn local_unknown(&self, global: usize) -> Option<usize> {
        self.local(global).filter(|&l| l < self.num_unknowns)
    }
}

/// Index maps of all subdomains together with the interface multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompIndex {
    subdomains: Vec<SubdomainIndex>,
    theta: Vec<Vec<usize>>,
}

impl DecompIndex {
    pub fn subdomains(&self) -> &[SubdomainIndex] {
        &self.subdomains
    }

    pub fn subdomain(&self, n: usize) -> &SubdomainIndex {
        &self.subdomains[n]
    }

    pub fn num_subdomains(&self) -> usize {
        self.subdomains.len()
    }

    /// `θ(x_i)`: subdomains whose `Γ̂_n` closure contains node `i`.
    pub fn theta(&self, node: usize) -> &[usize] {
        &self.theta[node]
    }

    /// `m(x_i) = |θ(x_i)|`.
    pub fn multiplicity(&self, node: usize) -> usize {
        self.theta[node].len()
    }

    pub fn num_nodes(&self) -> usize {
        self.theta.len()
    }

    /// Subdomains listing `node` among their unknowns.
    pub fn unknown_owners(&self, node: usize) -> Vec<usize> {
        (0..self.subdomains.len()).filter(|&n| self.subdomains[n].local_unknown(node).is_some()).collect()
    }

    /// Total number of local unknowns `Σ_n N_n`.
    pub fn total_unknowns(&self) -> usize {
        self.subdomains.iter().map(|s| s.num_unknowns).sum()
    }
}

/// Treatment of Dirichlet nodes touched by `Ω_n ∪ Γ̂_n` but by no element
/// of `Γ_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollarPolicy {
    /// Such a node is an error.
    #[default]
    Strict,
    /// Such a node joins the collar and takes its Dirichlet value.
    Extended,
}

/// Builds `X̃_n`, the global-to-local maps and `θ`.
pub fn build_index_maps(mesh: &Mesh, geometry: &[SubdomainGeometry], policy: CollarPolicy) -> Result<DecompIndex> {
    let nn = mesh.num_nodes();
    let mut theta = vec![Vec::new(); nn];
    let mut subdomains = Vec::with_capacity(geometry.len());
    for (n, g) in geometry.iter().enumerate() {
        let mut in_inner = vec![false; nn];
        let mut in_collar = vec![false; nn];
        for &e in g.omega_elems.iter().chain(&g.hat_elems) {
            for &v in &mesh.element(e).vertices {
                in_inner[v] = true;
            }
        }
        for &e in &g.hat_elems {
            for &v in &mesh.element(e).vertices {
                if mesh.node_class(v) == NodeClass::OmegaUnknown && theta[v].last() != Some(&n) {
                    theta[v].push(n);
                }
            }
        }
        for &e in &g.gamma_elems {
            for &v in &mesh.element(e).vertices {
                if mesh.node_class(v) == NodeClass::GammaDirichlet {
                    in_collar[v] = true;
                }
            }
        }
        let mut unknowns = Vec::new();
        let mut collar = Vec::new();
        for v in 0..nn {
            match mesh.node_class(v) {
                NodeClass::OmegaUnknown if in_inner[v] => unknowns.push(v),
                NodeClass::GammaDirichlet if in_collar[v] => collar.push(v),
                NodeClass::GammaDirichlet if in_inner[v] => match policy {
                    CollarPolicy::Strict => return Err(Error::CollarDeficiency { subdomain: n, node: v }),
                    CollarPolicy::Extended => collar.push(v),
                },
                _ => {}
            }
        }
        let num_unknowns = unknowns.len();
        let mut nodes = unknowns;
        nodes.extend(collar);
        let mut local = vec![ABSENT; nn];
        for (l, &v) in nodes.iter().enumerate() {
            local[v] = l;
        }
        subdomains.push(SubdomainIndex { nodes, num_unknowns, local });
    }
    let index = DecompIndex { subdomains, theta };
    for node in 0..mesh.num_unknowns() {
        let owners = index.unknown_owners(node);
        if owners.is_empty() {
            return Err(Error::IndexInconsistency(format!("unknown node {node} belongs to no subdomain")));
        }
        let theta = index.theta(node);
        if (owners.len() > 1 || theta.len() > 1) && owners.as_slice() != theta {
            return Err(Error::IndexInconsistency(format!(
                "node {node}: interface multiplicity set {theta:?} differs from its owners {owners:?}"
            )));
        }
    }
    Ok(index)
}

/// Overlap counts consumed by subdomain assembly.
pub trait OverlapWeights {
    /// `ζ_A(T, T')`: subdomains whose `Ω_n ∪ Γ̂_n ∪ Γ_n` holds both elements.
    fn zeta_a(&self, t: usize, tp: usize) -> usize;
    /// `ζ_F(T)`: subdomains whose `Ω_n ∪ Γ̂_n` holds the element.
    fn zeta_f(&self, t: usize) -> usize;
}

/// Membership signatures `D(T)` and `ζ_F` per element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ZetaTables {
    signatures: Vec<Vec<usize>>,
    zeta_f: Vec<usize>,
}

impl ZetaTables {
    /// Sorted `D(T)`.
    pub fn signature(&self, t: usize) -> &[usize] {
        &self.signatures[t]
    }

    pub fn contains(&self, t: usize, n: usize) -> bool {
        self.signatures[t].binary_search(&n).is_ok()
    }

    pub fn num_elements(&self) -> usize {
        self.signatures.len()
    }
}

impl OverlapWeights for ZetaTables {
    fn zeta_a(&self, t: usize, tp: usize) -> usize {
        let (a, b) = (&self.signatures[t], &self.signatures[tp]);
        let (mut i, mut j, mut count) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    count += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        count
    }

    fn zeta_f(&self, t: usize) -> usize {
        self.zeta_f[t]
    }
}

/// Signatures and `ζ_F`; fails if some `Ω` element is covered by no
/// subdomain.
pub fn compute_zeta(mesh: &Mesh, geometry: &[SubdomainGeometry]) -> Result<ZetaTables> {
    let ne = mesh.num_elements();
    let mut signatures = vec![Vec::new(); ne];
    let mut zeta_f = vec![0usize; ne];
    for (n, g) in geometry.iter().enumerate() {
        for &e in g.omega_elems.iter().chain(&g.hat_elems) {
            zeta_f[e] += 1;
        }
        for e in g.domain_elements() {
            signatures[e].push(n);
        }
    }
    for e in 0..ne {
        signatures[e].dedup();
        if mesh.region(e) == Region::Omega && zeta_f[e] == 0 {
            return Err(Error::InvalidDecomposition(format!("Ω element {e} lies in no subdomain")));
        }
    }
    Ok(ZetaTables { signatures, zeta_f })
}

/// Outcome of a successful coverage check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CoverageReport {
    pub checked_pairs: usize,
    pub min_zeta_a: usize,
    pub max_zeta_a: usize,
}

/// Checks `ζ_A ≥ 1` on every listed interacting pair that involves an
/// `Ω` element. Pairs inside `Γ` only couple Dirichlet data and are skipped.
pub fn verify_coverage<W: OverlapWeights + ?Sized>(
    mesh: &Mesh,
    weights: &W,
    pairs: impl IntoIterator<Item = (usize, usize)>,
) -> Result<CoverageReport> {
    let mut checked_pairs = 0;
    let mut min_zeta_a = usize::MAX;
    let mut max_zeta_a = 0;
    let mut offending = Vec::new();
    for (t, tp) in pairs {
        if mesh.region(t) == Region::Gamma && mesh.region(tp) == Region::Gamma {
            continue;
        }
        checked_pairs += 1;
        let z = weights.zeta_a(t, tp);
        min_zeta_a = min_zeta_a.min(z);
        max_zeta_a = max_zeta_a.max(z);
        if z == 0 {
            offending.push((t, tp));
        }
    }
    if !offending.is_empty() {
        return Err(Error::CoverageViolation { pairs: offending });
    }
    if checked_pairs == 0 {
        min_zeta_a = 0;
    }
    Ok(CoverageReport { checked_pairs, min_zeta_a, max_zeta_a })
}

/// Elements sharing one membership signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub signature: Vec<usize>,
    pub elements: Vec<usize>,
}

/// Partition of all elements by membership signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapAtoms {
    atoms: Vec<Atom>,
    atom_of: Vec<usize>,
    num_subdomains: usize,
}

impl OverlapAtoms {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_of(&self, e: usize) -> usize {
        self.atom_of[e]
    }

    /// `Σ_n 𝟙[n ∈ sig(T) ∩ sig(T')]`, from the atom signatures alone.
    pub fn zeta_a_from_atoms(&self, t: usize, tp: usize) -> usize {
        let a = &self.atoms[self.atom_of[t]].signature;
        let b = &self.atoms[self.atom_of[tp]].signature;
        (0..self.num_subdomains).filter(|n| a.contains(n) && b.contains(n)).count()
    }
}

/// Groups elements by `D(T)`, atoms ordered by signature.
pub fn overlap_atoms(num_elements: usize, geometry: &[SubdomainGeometry]) -> OverlapAtoms {
    let mut member = vec![Vec::new(); num_elements];
    for (n, g) in geometry.iter().enumerate() {
        for e in g.domain_elements() {
            if member[e].last() != Some(&n) {
                member[e].push(n);
            }
        }
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (e, sig) in member.into_iter().enumerate() {
        groups.entry(sig).or_default().push(e);
    }
    let mut atom_of = vec![0; num_elements];
    let atoms: Vec<Atom> = groups
        .into_iter()
        .enumerate()
        .map(|(i, (signature, elements))| {
            for &e in &elements {
                atom_of[e] = i;
            }
            Atom { signature, elements }
        })
        .collect();
    OverlapAtoms { atoms, atom_of, num_subdomains: geometry.len() }
}

/// Partition, geometry, index maps and overlap counts of one decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub partition: Partition,
    pub geometry: Vec<SubdomainGeometry>,
    pub index: DecompIndex,
    pub zeta: ZetaTables,
    coverage: Option<CoverageReport>,
}

impl Decomposition {
    pub fn build(mesh: &Mesh, partition: Partition, delta: f64) -> Result<Self> {
        Self::build_with(mesh, partition, delta, CollarPolicy::Strict)
    }

    pub fn build_with(mesh: &Mesh, partition: Partition, delta: f64, policy: CollarPolicy) -> Result<Self> {
        let geometry = build_subdomain_regions(mesh, &partition, delta)?;
        let index = build_index_maps(mesh, &geometry, policy)?;
        let zeta = compute_zeta(mesh, &geometry)?;
        Ok(Self { partition, geometry, index, zeta, coverage: None })
    }

    pub fn num_subdomains(&self) -> usize {
        self.geometry.len()
    }

    /// Runs the coverage check and records its outcome.
    pub fn verify(&mut self, mesh: &Mesh, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<CoverageReport> {
        let report = verify_coverage(mesh, &self.zeta, pairs)?;
        self.coverage = Some(report);
        Ok(report)
    }

    pub fn coverage(&self) -> Option<&CoverageReport> {
        self.coverage.as_ref()
    }

    pub fn atoms(&self) -> OverlapAtoms {
        overlap_atoms(self.zeta.num_elements(), &self.geometry)
    }
}
