//! Conforming triangulations of the domain plus its interaction frame.
//!
//! A [`Mesh`] covers `Ω ∪ Γ` where `Γ` is made of whole elements. Nodes that
//! touch any `Γ` element carry Dirichlet data; all other nodes are unknowns.
//! Global numbering always lists the unknown nodes first.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::point::Point;

/// Region tag of an element.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Region {
    Omega,
    Gamma,
}

/// Classification of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeClass {
    OmegaUnknown,
    GammaDirichlet,
}

/// A linear triangle with cached barycenter and area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Element {
    pub vertices: [usize; 3],
    pub barycenter: Point,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<Element>,
    regions: Vec<Region>,
    node_class: Vec<NodeClass>,
    incidence: Vec<Vec<usize>>,
    num_unknowns: usize,
    h: f64,
}

impl Mesh {
    /// Builds a mesh from raw parts and checks the structural invariants.
    ///
    /// Node classes are derived from element incidence: a node is Dirichlet
    /// iff at least one incident element lies in `Γ`. The caller's numbering
    /// must already list every unknown node before every Dirichlet node.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>, regions: Vec<Region>, h: f64) -> Result<Self> {
        if triangles.len() != regions.len() {
            return Err(Error::DimensionMismatch { expected: triangles.len(), found: regions.len() });
        }
        if !(h > 0.0) {
            return Err(Error::InvalidMesh(format!("grid size {h} must be positive")));
        }
        let n_nodes = vertices.len();
        let mut incidence = vec![Vec::new(); n_nodes];
        let mut elements = Vec::with_capacity(triangles.len());
        for (e, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= n_nodes {
                    return Err(Error::NodeOutOfRange { index: v, count: n_nodes });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateElement(e));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let cross = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
            let area = 0.5 * libm::fabs(cross);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement(e));
            }
            let barycenter = Point::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            for &v in tri {
                incidence[v].push(e);
            }
            elements.push(Element { vertices: *tri, barycenter, area });
        }

        let mut node_class = Vec::with_capacity(n_nodes);
        for (node, inc) in incidence.iter().enumerate() {
            if inc.is_empty() {
                return Err(Error::InvalidMesh(format!("node {node} has no incident element")));
            }
            let dirichlet = inc.iter().any(|&e| regions[e] == Region::Gamma);
            node_class.push(if dirichlet { NodeClass::GammaDirichlet } else { NodeClass::OmegaUnknown });
        }
        let num_unknowns = node_class.iter().take_while(|&&c| c == NodeClass::OmegaUnknown).count();
        if node_class[num_unknowns..].contains(&NodeClass::OmegaUnknown) {
            return Err(Error::InvalidMesh("unknown nodes must be numbered before Dirichlet nodes".into()));
        }
        if !regions.contains(&Region::Gamma) {
            return Err(Error::InvalidMesh("mesh has no Γ elements".into()));
        }

        Ok(Self { vertices, elements, regions, node_class, incidence, num_unknowns, h })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, node: usize) -> Point {
        self.vertices[node]
    }

    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn element(&self, e: usize) -> &Element {
        &self.elements[e]
    }

    pub fn element_points(&self, e: usize) -> [Point; 3] {
        self.elements[e].vertices.map(|v| self.vertices[v])
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, e: usize) -> Region {
        self.regions[e]
    }

    pub fn node_classes(&self) -> &[NodeClass] {
        &self.node_class
    }

    pub fn node_class(&self, node: usize) -> NodeClass {
        self.node_class[node]
    }

    pub fn num_nodes(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    /// `N^h`, the number of unknown nodes.
    pub fn num_unknowns(&self) -> usize {
        self.num_unknowns
    }

    /// Number of Dirichlet nodes, `Ñ^h − N^h`.
    pub fn num_dirichlet(&self) -> usize {
        self.vertices.len() - self.num_unknowns
    }

    /// Nominal grid size.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Elements having `node` as a vertex, i.e. the support of its hat function.
    pub fn node_elements(&self, node: usize) -> Result<&[usize]> {
        self.incidence
            .get(node)
            .map(Vec::as_slice)
            .ok_or(Error::NodeOutOfRange { index: node, count: self.vertices.len() })
    }

    /// Axis-aligned bounding box `(min, max)` of all vertices.
    pub fn bounding_box(&self) -> (Point, Point) {
        bounding_box(self.vertices.iter().copied())
    }

    /// Bounding box of the vertices of `Ω` elements.
    pub fn omega_bounding_box(&self) -> (Point, Point) {
        bounding_box(
            self.elements
                .iter()
                .zip(&self.regions)
                .filter(|(_, &r)| r == Region::Omega)
                .flat_map(|(el, _)| el.vertices.iter().map(|&v| self.vertices[v])),
        )
    }

    /// Checks that the `Γ` elements form a frame at least `delta` wide
    /// around every `Ω` element.
    pub fn check_frame(&self, delta: f64) -> Result<()> {
        let (lo, hi) = self.bounding_box();
        let tol = 1e-12 * (hi.x - lo.x).max(hi.y - lo.y);
        for (e, el) in self.elements.iter().enumerate() {
            if self.regions[e] != Region::Omega {
                continue;
            }
            for &v in &el.vertices {
                let p = self.vertices[v];
                let gap = (p.x - lo.x).min(hi.x - p.x).min(p.y - lo.y).min(hi.y - p.y);
                if gap + tol < delta {
                    return Err(Error::InvalidMesh(format!(
                        "Ω element {e} lies {gap} from the outer boundary, less than δ = {delta}"
                    )));
                }
            }
        }
        Ok(())
    }
}

fn bounding_box(points: impl Iterator<Item = Point>) -> (Point, Point) {
    let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        lo.x = lo.x.min(p.x);
        lo.y = lo.y.min(p.y);
        hi.x = hi.x.max(p.x);
        hi.y = hi.y.max(p.y);
    }
    (lo, hi)
}

/// Number of element layers needed so that a frame of whole `h`-cells is at
/// least `delta` wide.
pub fn frame_layers(h: f64, delta: f64) -> usize {
    let ratio = delta / h;
    let nearest = libm::round(ratio);
    let layers = if libm::fabs(ratio - nearest) <= 1e-9 * nearest.max(1.0) { nearest } else { libm::ceil(ratio) };
    (layers as usize).max(1)
}

/// Structured triangulation of `Ω = (0, L)²` surrounded by a `Γ` frame of
/// `ceil(δ/h)` cell layers.
///
/// Every `h × h` cell is split along its lower-left to upper-right diagonal.
/// Elements are numbered cell by cell in row-major order, the lower-right
/// triangle first.
pub fn build_frame_mesh(side_length: f64, h: f64, delta: f64) -> Result<Mesh> {
    if !(h > 0.0) || !(side_length > 0.0) {
        return Err(Error::InvalidMeshParameters("side length and h must be positive".into()));
    }
    if h >= side_length {
        return Err(Error::InvalidMeshParameters(format!(
            "h = {h} must be smaller than the side length {side_length}"
        )));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidMeshParameters(format!("horizon δ = {delta} must be positive")));
    }
    let cells_f = libm::round(side_length / h);
    if libm::fabs(cells_f * h - side_length) > 1e-9 * side_length {
        return Err(Error::InvalidMeshParameters(format!("side length {side_length} is not a multiple of h = {h}")));
    }
    let omega_cells = cells_f as usize;
    let layers = frame_layers(h, delta);
    let cells = omega_cells + 2 * layers;
    let side = cells + 1;

    let is_unknown =
        |i: usize, j: usize| i > layers && i < layers + omega_cells && j > layers && j < layers + omega_cells;
    // Unknown nodes first, then Dirichlet nodes, both in row-major order.
    let mut number = vec![0usize; side * side];
    let mut next = 0;
    for pass in [true, false] {
        for j in 0..side {
            for i in 0..side {
                if is_unknown(i, j) == pass {
                    number[j * side + i] = next;
                    next += 1;
                }
            }
        }
    }
    let mut vertices = vec![Point::default(); side * side];
    for j in 0..side {
        for i in 0..side {
            vertices[number[j * side + i]] = Point::new((i as f64 - layers as f64) * h, (j as f64 - layers as f64) * h);
        }
    }

    let mut triangles = Vec::with_capacity(2 * cells * cells);
    let mut regions = Vec::with_capacity(2 * cells * cells);
    let inside = |c: usize| c >= layers && c < layers + omega_cells;
    for cj in 0..cells {
        for ci in 0..cells {
            let v00 = number[cj * side + ci];
            let v10 = number[cj * side + ci + 1];
            let v11 = number[(cj + 1) * side + ci + 1];
            let v01 = number[(cj + 1) * side + ci];
            let region = if inside(ci) && inside(cj) { Region::Omega } else { Region::Gamma };
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
            regions.push(region);
            regions.push(region);
        }
    }
    Mesh::from_parts(vertices, triangles, regions, h)
}

/// Splits the node indices into unknown and Dirichlet nodes, in numbering order.
pub fn classify_nodes(mesh: &Mesh) -> (Vec<usize>, Vec<usize>) {
    let mut omega = Vec::new();
    let mut gamma = Vec::new();
    for (node, inc) in mesh.incidence.iter().enumerate() {
        if inc.iter().any(|&e| mesh.regions[e] == Region::Gamma) {
            gamma.push(node);
        } else {
            omega.push(node);
        }
    }
    (omega, gamma)
}
