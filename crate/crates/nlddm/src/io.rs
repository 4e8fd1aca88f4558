//! Plain-text mesh files, MatrixMarket matrices, CSV tables and
//! `key: value` reports.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use nlddm_core::constraints::ConstraintMatrix;
use nlddm_core::decomposition::Partition;
use nlddm_core::mesh::{Mesh, NodeClass, Region};
use nlddm_core::sparse::CsrMatrix;
use nlddm_core::Point;

use crate::error::{RunError, RunResult};

fn node_class_name(c: NodeClass) -> &'static str {
    match c {
        NodeClass::OmegaUnknown => "omega",
        NodeClass::GammaDirichlet => "gamma",
    }
}

fn region_name(r: Region) -> &'static str {
    match r {
        Region::Omega => "omega",
        Region::Gamma => "gamma",
    }
}

/// `NODES k` / `id x y class`, then `ELEMENTS m` / `id v1 v2 v3 region`.
pub fn mesh_to_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    writeln!(s, "NODES {}", mesh.num_nodes()).unwrap();
    for (i, p) in mesh.vertices().iter().enumerate() {
        writeln!(s, "{i} {} {} {}", p.x, p.y, node_class_name(mesh.node_class(i))).unwrap();
    }
    writeln!(s, "ELEMENTS {}", mesh.num_elements()).unwrap();
    for (e, el) in mesh.elements().iter().enumerate() {
        let [a, b, c] = el.vertices;
        writeln!(s, "{e} {a} {b} {c} {}", region_name(mesh.region(e))).unwrap();
    }
    s
}

/// Grid size of a loaded mesh: the largest shortest edge over all elements.
pub fn infer_h(vertices: &[Point], triangles: &[[usize; 3]]) -> f64 {
    triangles
        .iter()
        .map(|t| {
            let [a, b, c] = t.map(|v| vertices[v]);
            a.dist(b).min(b.dist(c)).min(c.dist(a))
        })
        .fold(0.0, f64::max)
}

pub fn parse_mesh(text: &str, path: &Path) -> RunResult<Mesh> {
    let err = |line: usize, msg: &str| RunError::format(path, format!("line {}: {msg}", line + 1));
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let mut header = |key: &str| -> RunResult<usize> {
        let (n, l) = lines.next().ok_or_else(|| RunError::format(path, format!("missing {key} header")))?;
        let mut it = l.split_whitespace();
        if it.next() != Some(key) {
            return Err(err(n, &format!("expected {key}")));
        }
        it.next().and_then(|c| c.parse().ok()).ok_or_else(|| err(n, "bad count"))
    };
    let k = header("NODES")?;
    let mut vertices = Vec::with_capacity(k);
    let mut classes = Vec::with_capacity(k);
    for i in 0..k {
        let (n, l) = lines.next().ok_or_else(|| RunError::format(path, "truncated node list"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 || f[0].parse::<usize>().ok() != Some(i) {
            return Err(err(n, "expected `id x y class` with consecutive ids"));
        }
        let x: f64 = f[1].parse().map_err(|_| err(n, "bad x"))?;
        let y: f64 = f[2].parse().map_err(|_| err(n, "bad y"))?;
        let class = match f[3] {
            "omega" => NodeClass::OmegaUnknown,
            "gamma" => NodeClass::GammaDirichlet,
            _ => return Err(err(n, "class must be omega or gamma")),
        };
        vertices.push(Point::new(x, y));
        classes.push(class);
    }
    let (n, l) = lines.next().ok_or_else(|| RunError::format(path, "missing ELEMENTS header"))?;
    let mut it = l.split_whitespace();
    if it.next() != Some("ELEMENTS") {
        return Err(err(n, "expected ELEMENTS"));
    }
    let m: usize = it.next().and_then(|c| c.parse().ok()).ok_or_else(|| err(n, "bad count"))?;
    let mut triangles = Vec::with_capacity(m);
    let mut regions = Vec::with_capacity(m);
    for e in 0..m {
        let (n, l) = lines.next().ok_or_else(|| RunError::format(path, "truncated element list"))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 5 || f[0].parse::<usize>().ok() != Some(e) {
            return Err(err(n, "expected `id v1 v2 v3 region` with consecutive ids"));
        }
        let mut tri = [0usize; 3];
        for (slot, s) in tri.iter_mut().zip(&f[1..4]) {
            *slot = s.parse().map_err(|_| err(n, "bad vertex id"))?;
        }
        regions.push(match f[4] {
            "omega" => Region::Omega,
            "gamma" => Region::Gamma,
            _ => return Err(err(n, "region must be omega or gamma")),
        });
        triangles.push(tri);
    }
    if let Some((n, _)) = lines.next() {
        return Err(err(n, "trailing content"));
    }
    if triangles.iter().flatten().any(|&v| v >= k) {
        return Err(RunError::format(path, "element references a missing node"));
    }
    let h = infer_h(&vertices, &triangles);
    let mesh = Mesh::from_parts(vertices, triangles, regions, h).map_err(|e| RunError::format(path, e.to_string()))?;
    if let Some(i) = (0..k).find(|&i| mesh.node_class(i) != classes[i]) {
        return Err(RunError::format(path, format!("node {i}: class disagrees with element incidence")));
    }
    Ok(mesh)
}

pub fn read_mesh(path: &Path) -> RunResult<Mesh> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    parse_mesh(&text, path)
}

/// MatrixMarket coordinate text. Symmetric matrices store their lower
/// triangle under the `symmetric` qualifier.
pub fn matrix_market_string(m: &CsrMatrix) -> String {
    let sym = m.is_symmetric() && m.nrows() == m.ncols();
    let entries: Vec<(usize, usize, f64)> = m.iter().filter(|&(i, j, _)| !sym || j <= i).collect();
    let mut s = String::new();
    let kind = if sym { "symmetric" } else { "general" };
    writeln!(s, "%%MatrixMarket matrix coordinate real {kind}").unwrap();
    writeln!(s, "{} {} {}", m.nrows(), m.ncols(), entries.len()).unwrap();
    for (i, j, v) in entries {
        writeln!(s, "{} {} {v:e}", i + 1, j + 1).unwrap();
    }
    s
}

pub fn parse_matrix_market(text: &str, path: &Path) -> RunResult<CsrMatrix> {
    let bad = |m: String| RunError::format(path, m);
    let mut lines = text.lines();
    let banner = lines.next().ok_or_else(|| bad("empty file".into()))?;
    let b: Vec<String> = banner.split_whitespace().map(|t| t.to_ascii_lowercase()).collect();
    if b.len() != 5 || b[0] != "%%matrixmarket" || b[1] != "matrix" || b[2] != "coordinate" {
        return Err(bad(format!("unsupported banner `{banner}`")));
    }
    let pattern = match b[3].as_str() {
        "real" | "integer" | "double" => false,
        "pattern" => true,
        other => return Err(bad(format!("unsupported field `{other}`"))),
    };
    let (symmetric, skew) = match b[4].as_str() {
        "general" => (false, false),
        "symmetric" => (true, false),
        "skew-symmetric" => (false, true),
        other => return Err(bad(format!("unsupported symmetry `{other}`"))),
    };
    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size = body.next().ok_or_else(|| bad("missing size line".into()))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| bad(format!("bad size line `{size}`"))))
        .collect::<RunResult<_>>()?;
    let [nrows, ncols, nnz] = dims[..] else {
        return Err(bad(format!("bad size line `{size}`")));
    };
    let mut triplets = Vec::with_capacity(if symmetric || skew { 2 * nnz } else { nnz });
    for _ in 0..nnz {
        let l = body.next().ok_or_else(|| bad("fewer entries than declared".into()))?;
        let f: Vec<&str> = l.split_whitespace().collect();
        let want = if pattern { 2 } else { 3 };
        if f.len() != want {
            return Err(bad(format!("bad entry `{l}`")));
        }
        let idx = |t: &str| t.parse::<usize>().ok().filter(|&v| v >= 1).map(|v| v - 1);
        let (Some(i), Some(j)) = (idx(f[0]), idx(f[1])) else {
            return Err(bad(format!("bad entry `{l}`")));
        };
        let v = if pattern { 1.0 } else { f[2].parse::<f64>().map_err(|_| bad(format!("bad value in `{l}`")))? };
        triplets.push((i, j, v));
        if i != j && symmetric {
            triplets.push((j, i, v));
        }
        if i != j && skew {
            triplets.push((j, i, -v));
        }
    }
    if body.next().is_some() {
        return Err(bad("more entries than declared".into()));
    }
    CsrMatrix::from_triplets(nrows, ncols, triplets, symmetric).map_err(|e| bad(e.to_string()))
}

pub fn read_matrix_market(path: &Path) -> RunResult<CsrMatrix> {
    let text = fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
    parse_matrix_market(&text, path)
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).unwrap();
    for r in rows {
        w.write_record(&r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// `index,value` per entry.
pub fn vector_csv(values: &[f64]) -> String {
    csv_string(&["index", "value"], values.iter().enumerate().map(|(i, v)| vec![i.to_string(), format!("{v:e}")]))
}

/// `element,subdomain`, with an empty subdomain for `Γ` elements.
pub fn partition_csv(p: &Partition) -> String {
    csv_string(
        &["element", "subdomain"],
        p.owners().iter().enumerate().map(|(e, o)| vec![e.to_string(), o.map(|n| n.to_string()).unwrap_or_default()]),
    )
}

/// Reads an `element,subdomain` table into per-element owners.
pub fn read_partition(path: &Path, num_elements: usize) -> RunResult<(usize, Vec<Option<usize>>)> {
    let file = fs::File::open(path).map_err(|e| RunError::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let mut owners = vec![None; num_elements];
    let mut seen = vec![false; num_elements];
    let mut max = None;
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| RunError::format(path, e.to_string()))?;
        let bad = || RunError::format(path, format!("record {}: expected `element,subdomain`", k + 1));
        if rec.len() != 2 {
            return Err(bad());
        }
        let e: usize = rec[0].trim().parse().map_err(|_| bad())?;
        if e >= num_elements || seen[e] {
            return Err(RunError::format(path, format!("element {e} out of range or repeated")));
        }
        seen[e] = true;
        let o = rec[1].trim();
        if !o.is_empty() {
            let n: usize = o.parse().map_err(|_| bad())?;
            max = max.max(Some(n));
            owners[e] = Some(n);
        }
    }
    if let Some(e) = seen.iter().position(|s| !s) {
        return Err(RunError::format(path, format!("element {e} missing")));
    }
    let count = max.map_or(0, |m| m + 1);
    Ok((count, owners))
}

/// One row per constraint: global node, the two subdomains and their local
/// columns.
pub fn constraint_csv(c: &ConstraintMatrix) -> String {
    csv_string(
        &["row", "node", "plus_subdomain", "plus_column", "minus_subdomain", "minus_column"],
        c.rows().iter().enumerate().map(|(k, r)| {
            vec![
                k.to_string(),
                r.node.to_string(),
                r.plus.to_string(),
                r.plus_col.to_string(),
                r.minus.to_string(),
                r.minus_col.to_string(),
            ]
        }),
    )
}

/// `node,x,y,u_single,u_dd,abs_diff` for every unknown node.
pub fn solution_csv(mesh: &Mesh, u_single: &[f64], u_dd: &[f64]) -> String {
    csv_string(
        &["node", "x", "y", "u_single", "u_dd", "abs_diff"],
        u_single.iter().zip(u_dd).enumerate().map(|(i, (a, b))| {
            let p = mesh.vertex(i);
            vec![
                i.to_string(),
                p.x.to_string(),
                p.y.to_string(),
                format!("{a:e}"),
                format!("{b:e}"),
                format!("{:e}", (a - b).abs()),
            ]
        }),
    )
}

/// Ordered `key: value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn parse(text: &str) -> Option<Self> {
        let mut r = Report::new();
        for l in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = l.split_once(": ")?;
            r.push(k, v);
        }
        Some(r)
    }
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k}: {v}")?;
        }
        Ok(())
    }
}

pub fn write_file(path: &Path, contents: &str) -> RunResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| RunError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| RunError::io(path, e))
}

pub fn read_report(path: &Path) -> RunResult<Report> {
    let file = fs::File::open(path).map_err(|e| RunError::io(path, e))?;
    let mut text = String::new();
    for line in BufReader::new(file).lines() {
        text.push_str(&line.map_err(|e| RunError::io(path, e))?);
        text.push('\n');
    }
    Report::parse(&text).ok_or_else(|| RunError::format(path, "expected `key: value` lines"))
}
