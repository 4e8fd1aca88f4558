//! The configured pipeline: mesh, single-domain solve, decomposition,
//! subdomain assembly, constraints, coupled solve and reports.

use std::thread;
use std::time::{Duration, Instant};

use log::info;
use nlddm_core::assembly::{
    assemble_full, build_rhs, energy_single, interacting_pairs, solve_single, FullSystem, Interactions, LoadData,
    PairIntegrator, Rhs,
};
use nlddm_core::constraints::{build_constraints, verify_constraint_matrix, ConstraintMatrix, ConstraintReport};
use nlddm_core::dd::{
    assemble_kkt, equivalence_report, reconstruct_global, solve_dd, stationarity_residual, DdSolution,
    EquivalenceReport, KktSystem,
};
use nlddm_core::decomposition::{partition_blocks, CoverageReport, Decomposition, Partition};
use nlddm_core::field::{Field, FoldedSource, ScalarField};
use nlddm_core::kernel::KernelSpec;
use nlddm_core::mesh::{build_frame_mesh, Mesh};
use nlddm_core::multi::{assemble_subdomain, energy_sum, scatter_sum_check, Problem, ScatterReport, SubdomainSystem};
use nlddm_core::solver::relative_residual;

use crate::config::{Artifact, RunConfig};
use crate::error::{RunError, RunResult};
use crate::io::{self, Report};

/// Environment variable holding the worker-thread count.
pub const THREADS_VAR: &str = "NLDD_THREADS";

/// Largest accepted scatter residual.
pub const SCATTER_TOLERANCE: f64 = 1e-12;
/// Largest accepted `rel_inf_error`.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-8;
/// Largest accepted constraint violation and reconstruction spread.
pub const CONSTRAINT_TOLERANCE: f64 = 1e-10;
/// Largest accepted relative energy mismatch.
pub const ENERGY_TOLERANCE: f64 = 1e-10;

/// Worker threads from [`THREADS_VAR`], 1 when unset or invalid.
pub fn threads_from_env() -> usize {
    std::env::var(THREADS_VAR).ok().and_then(|v| v.trim().parse().ok()).filter(|&n| n >= 1).unwrap_or(1)
}

/// Splits `0..len` into `threads` contiguous chunks, maps each on its own
/// thread and concatenates the results in order.
fn chunked<T: Send>(len: usize, threads: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    if threads <= 1 || len < 2 {
        return (0..len).map(f).collect();
    }
    let chunk = len.div_ceil(threads);
    let f = &f;
    thread::scope(|s| {
        let handles: Vec<_> = (0..len)
            .step_by(chunk)
            .map(|lo| s.spawn(move || (lo..(lo + chunk).min(len)).map(f).collect::<Vec<T>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker thread panicked")).collect()
    })
}

/// Integrates every interacting pair, splitting the pair list across
/// threads. The result does not depend on the thread count.
pub fn compute_interactions(
    mesh: &Mesh,
    kernel: &KernelSpec,
    quad_order: usize,
    threads: usize,
) -> RunResult<Interactions> {
    let integrator = PairIntegrator::new(mesh, *kernel, quad_order)?;
    let pairs = interacting_pairs(mesh, kernel);
    let blocks = chunked(pairs.len(), threads, |k| integrator.block(mesh, pairs[k].0, pairs[k].1));
    Ok(Interactions::from_blocks(blocks)?)
}

/// Owned source, Dirichlet and reaction fields of a configuration.
pub struct Fields {
    f: Box<dyn Field>,
    g: ScalarField,
    reaction: Option<ScalarField>,
}

impl Fields {
    pub fn new(cfg: &RunConfig) -> Self {
        let interior: ScalarField = cfg.load.f.into();
        let f: Box<dyn Field> = match &cfg.load.neumann {
            Some(n) => {
                Box::new(FoldedSource { interior, neumann: ScalarField::from(n.flux), neumann_region: n.region() })
            }
            None => Box::new(interior),
        };
        Self { f, g: cfg.load.g.into(), reaction: cfg.load.reaction.map(Into::into) }
    }

    pub fn load(&self) -> LoadData<'_> {
        LoadData { f: self.f.as_ref(), g: &self.g }
    }

    pub fn reaction(&self) -> Option<&dyn Field> {
        self.reaction.as_ref().map(|r| r as &dyn Field)
    }
}

/// Wall-clock time of each stage.
#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub stages: Vec<(&'static str, Duration)>,
}

impl Timings {
    fn record<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        let d = t.elapsed();
        info!("{name}: {d:?}");
        self.stages.push((name, d));
        out
    }

    pub fn total(&self) -> Duration {
        self.stages.iter().map(|(_, d)| *d).sum()
    }
}

/// Everything up to and including the coverage check.
pub struct Prepared {
    pub mesh: Mesh,
    pub kernel: KernelSpec,
    pub interactions: Interactions,
    pub decomposition: Decomposition,
    pub coverage: CoverageReport,
    pub timings: Timings,
}

pub fn build_mesh(cfg: &RunConfig) -> RunResult<Mesh> {
    let mesh = match &cfg.mesh.file {
        Some(path) => io::read_mesh(path)?,
        None => build_frame_mesh(cfg.mesh.side_length, cfg.mesh.h.unwrap_or(0.0), cfg.kernel.delta)?,
    };
    mesh.check_frame(cfg.kernel.delta).map_err(|e| RunError::Config(e.to_string()))?;
    Ok(mesh)
}

pub fn build_partition(cfg: &RunConfig, mesh: &Mesh) -> RunResult<Partition> {
    match &cfg.decomposition.partition_file {
        Some(path) => {
            let (count, owners) = io::read_partition(path, mesh.num_elements())?;
            Ok(Partition::from_owners(mesh, count, owners)?)
        }
        None => Ok(partition_blocks(mesh, cfg.decomposition.bx, cfg.decomposition.by)?),
    }
}

/// Mesh, interactions, decomposition and coverage verification.
pub fn prepare(cfg: &RunConfig, threads: usize) -> RunResult<Prepared> {
    cfg.validate()?;
    let mut timings = Timings::default();
    let kernel = cfg.kernel_spec()?;
    let mesh = timings.record("mesh", || build_mesh(cfg))?;
    let interactions =
        timings.record("interactions", || compute_interactions(&mesh, &kernel, cfg.kernel.quad_order, threads))?;
    let (decomposition, coverage) = timings.record("decomposition", || -> RunResult<_> {
        let partition = build_partition(cfg, &mesh)?;
        let mut d = Decomposition::build_with(&mesh, partition, cfg.kernel.delta, cfg.collar_policy())?;
        let cov = d.verify(&mesh, interactions.pairs())?;
        Ok((d, cov))
    })?;
    Ok(Prepared { mesh, kernel, interactions, decomposition, coverage, timings })
}

/// Single-domain and subdomain systems with their consistency checks.
pub struct Assembled {
    pub full: FullSystem,
    pub rhs: Rhs,
    pub systems: Vec<SubdomainSystem>,
    pub scatter: ScatterReport,
    pub constraints: ConstraintMatrix,
    pub constraint_report: ConstraintReport,
}

pub fn assemble(cfg: &RunConfig, p: &mut Prepared, fields: &Fields, threads: usize) -> RunResult<Assembled> {
    let q = cfg.kernel.quad_order;
    let (full, rhs) = p.timings.record("single assembly", || -> RunResult<_> {
        let full = assemble_full(&p.mesh, &p.interactions, fields.reaction(), q)?;
        let rhs = build_rhs(&p.mesh, &fields.load(), &full.g_coupling, q)?;
        Ok((full, rhs))
    })?;
    let problem = Problem {
        mesh: &p.mesh,
        interactions: &p.interactions,
        load: fields.load(),
        reaction: fields.reaction(),
        quad_order: q,
    };
    let d = &p.decomposition;
    let systems = p.timings.record("subdomain assembly", || {
        chunked(d.num_subdomains(), threads, |n| assemble_subdomain(&problem, d, &d.zeta, n))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
    })?;
    let scatter = scatter_sum_check(&systems, &d.index, &full, &rhs)?;
    let (constraints, constraint_report) = p.timings.record("constraints", || -> RunResult<_> {
        let c = build_constraints(&d.index, cfg.constraint_mode())?;
        let r = verify_constraint_matrix(&c, &d.index)?;
        Ok((c, r))
    })?;
    Ok(Assembled { full, rhs, systems, scatter, constraints, constraint_report })
}

/// Both solutions and the equivalence measures.
pub struct Solved {
    pub u_single: Vec<f64>,
    pub single_residual: f64,
    pub kkt: KktSystem,
    pub dd: DdSolution,
    pub u_dd: Vec<f64>,
    pub equivalence: EquivalenceReport,
    pub stationarity: f64,
    pub energy_single: f64,
    pub energy_dd: f64,
}

pub fn solve(cfg: &RunConfig, p: &mut Prepared, a: &Assembled) -> RunResult<Solved> {
    let method = cfg.solver_method();
    let (u_single, single_residual) = p.timings.record("single solve", || -> RunResult<_> {
        let u = solve_single(&a.full.a_single, &a.rhs.b_single, method).map_err(RunError::Solver)?;
        let r = relative_residual(&a.full.a_single, &u, &a.rhs.b_single)?;
        Ok((u, r))
    })?;
    let (kkt, dd) = p.timings.record("coupled solve", || -> RunResult<_> {
        let kkt = assemble_kkt(&a.systems, &a.constraints)?;
        let dd = solve_dd(&kkt, method).map_err(RunError::Solver)?;
        Ok((kkt, dd))
    })?;
    let (u_dd, spread) = reconstruct_global(&dd.u, &p.decomposition.index, p.mesh.num_unknowns())?;
    let equivalence = equivalence_report(&u_dd, spread, &u_single, &a.constraints, &dd)?;
    let stationarity = stationarity_residual(&kkt, &dd)?;
    let energy_single = energy_single(&a.full, &a.rhs, &u_single)?;
    let energy_dd = energy_sum(&a.systems, &dd.u)?;
    Ok(Solved { u_single, single_residual, kkt, dd, u_dd, equivalence, stationarity, energy_single, energy_dd })
}

/// Failed checks, one message each.
pub fn invariant_failures(cfg: &RunConfig, a: &Assembled, s: &Solved) -> Vec<String> {
    let tol = cfg.solver.tolerance;
    let mut out = Vec::new();
    let mut check = |ok: bool, msg: String| {
        if !ok {
            out.push(msg);
        }
    };
    check(
        a.scatter.matrix_residual <= SCATTER_TOLERANCE,
        format!("matrix scatter residual {:e} above {SCATTER_TOLERANCE:e}", a.scatter.matrix_residual),
    );
    check(
        a.scatter.load_residual <= SCATTER_TOLERANCE,
        format!("load scatter residual {:e} above {SCATTER_TOLERANCE:e}", a.scatter.load_residual),
    );
    check(s.single_residual <= tol, format!("single-domain residual {:e} above {tol:e}", s.single_residual));
    check(s.dd.residual <= tol, format!("coupled residual {:e} above {tol:e}", s.dd.residual));
    check(s.stationarity <= tol, format!("stationarity residual {:e} above {tol:e}", s.stationarity));
    let e = &s.equivalence;
    check(
        e.rel_inf_error <= EQUIVALENCE_TOLERANCE,
        format!("rel_inf_error {:e} above {EQUIVALENCE_TOLERANCE:e}", e.rel_inf_error),
    );
    check(
        e.constraint_violation <= CONSTRAINT_TOLERANCE,
        format!("constraint violation {:e} above {CONSTRAINT_TOLERANCE:e}", e.constraint_violation),
    );
    check(
        e.max_disagreement <= CONSTRAINT_TOLERANCE,
        format!("max disagreement {:e} above {CONSTRAINT_TOLERANCE:e}", e.max_disagreement),
    );
    let gap = (s.energy_dd - s.energy_single).abs();
    check(
        gap <= ENERGY_TOLERANCE * (1.0 + s.energy_single.abs()),
        format!("energy mismatch {gap:e} between {} and {}", s.energy_dd, s.energy_single),
    );
    out
}

/// Run summary as `key: value` lines; contains no timings so that repeated
/// runs give identical text.
pub fn build_report(p: &Prepared, a: &Assembled, s: Option<&Solved>, failures: &[String]) -> Report {
    let mut r = Report::new();
    let d = &p.decomposition;
    r.push("nodes", p.mesh.num_nodes());
    r.push("elements", p.mesh.num_elements());
    r.push("unknowns", p.mesh.num_unknowns());
    r.push("h", p.mesh.h());
    r.push("delta", p.kernel.delta());
    r.push("kernel", format!("{:?}", p.kernel.family()));
    r.push("truncation", format!("{:?}", p.kernel.truncation()));
    r.push("interacting_pairs", p.interactions.len());
    r.push("subdomains", d.num_subdomains());
    r.push("floating_subdomains", d.geometry.iter().filter(|g| g.floating).count());
    r.push("coverage_checked_pairs", p.coverage.checked_pairs);
    r.push("zeta_a_min", p.coverage.min_zeta_a);
    r.push("zeta_a_max", p.coverage.max_zeta_a);
    r.push("subdomain_unknowns", d.index.total_unknowns());
    r.push("scatter_matrix_residual", format!("{:e}", a.scatter.matrix_residual));
    r.push("scatter_load_residual", format!("{:e}", a.scatter.load_residual));
    r.push("constraint_mode", format!("{:?}", a.constraints.mode()));
    r.push("constraint_rows", a.constraint_report.rows);
    r.push("constraint_rank", a.constraint_report.rank.map_or("unchecked".to_string(), |k| k.to_string()));
    if let Some(s) = s {
        let e = &s.equivalence;
        r.push("kkt_dimension", s.kkt.dim());
        r.push("single_residual", format!("{:e}", s.single_residual));
        r.push("solver_residual", format!("{:e}", e.solver_residual));
        r.push("stationarity_residual", format!("{:e}", s.stationarity));
        r.push("rel_inf_error", format!("{:e}", e.rel_inf_error));
        r.push("rel_l2_error", format!("{:e}", e.rel_l2_error));
        r.push("constraint_violation", format!("{:e}", e.constraint_violation));
        r.push("max_disagreement", format!("{:e}", e.max_disagreement));
        r.push("bitwise_equal", s.u_dd == s.u_single);
        r.push("energy_single", format!("{:e}", s.energy_single));
        r.push("energy_dd", format!("{:e}", s.energy_dd));
    }
    r.push("status", if failures.is_empty() { "ok".to_string() } else { failures.join("; ") });
    r
}

/// Subdomain table followed by the overlap atoms.
pub fn decomposition_report(p: &Prepared) -> String {
    use std::fmt::Write as _;
    let d = &p.decomposition;
    let mut s = String::new();
    writeln!(s, "subdomains: {}", d.num_subdomains()).unwrap();
    for (n, g) in d.geometry.iter().enumerate() {
        let idx = d.index.subdomain(n);
        writeln!(
            s,
            "subdomain {n}: omega {} hat {} gamma {} type1 {} type2 {} unknowns {} collar {} floating {}",
            g.omega_elems.len(),
            g.hat_elems.len(),
            g.gamma_elems.len(),
            g.type1_vertices.len(),
            g.type2_vertices.len(),
            idx.num_unknowns(),
            idx.num_collar(),
            g.floating
        )
        .unwrap();
    }
    let atoms = d.atoms();
    writeln!(s, "atoms: {}", atoms.atoms().len()).unwrap();
    for a in atoms.atoms() {
        let sig: Vec<String> = a.signature.iter().map(|n| n.to_string()).collect();
        writeln!(s, "atom {{{}}}: {} elements", sig.join(","), a.elements.len()).unwrap();
    }
    s
}

/// Writes the selected artifacts that the available state can provide.
pub fn write_artifacts(
    cfg: &RunConfig,
    selection: &[Artifact],
    p: &Prepared,
    a: &Assembled,
    s: Option<&Solved>,
    report: Option<&Report>,
) -> RunResult<Vec<std::path::PathBuf>> {
    let dir = &cfg.outputs.directory;
    let mut written = Vec::new();
    let mut put = |name: &str, text: String| -> RunResult<()> {
        let path = dir.join(name);
        io::write_file(&path, &text)?;
        written.push(path);
        Ok(())
    };
    let mut sel = selection.to_vec();
    sel.sort();
    sel.dedup();
    for art in sel {
        match art {
            Artifact::Mesh => put("mesh.txt", io::mesh_to_string(&p.mesh))?,
            Artifact::Partition => put("partition.csv", io::partition_csv(&p.decomposition.partition))?,
            Artifact::Decomposition => put("decomposition.txt", decomposition_report(p))?,
            Artifact::ASingle => {
                put("a_single.mtx", io::matrix_market_string(&a.full.a_single))?;
                put("g_coupling.mtx", io::matrix_market_string(&a.full.g_coupling))?;
            }
            Artifact::BSingle => put("b_single.csv", io::vector_csv(&a.rhs.b_single))?,
            Artifact::SubdomainMatrices => {
                for sys in &a.systems {
                    put(&format!("a_{}.mtx", sys.id), io::matrix_market_string(&sys.a))?;
                    put(&format!("c_{}.mtx", sys.id), io::matrix_market_string(&sys.collar))?;
                    put(&format!("b_{}.csv", sys.id), io::vector_csv(&sys.b))?;
                }
            }
            Artifact::Constraints => {
                put("m.mtx", io::matrix_market_string(&a.constraints.to_csr()))?;
                put("constraints.csv", io::constraint_csv(&a.constraints))?;
            }
            Artifact::Kkt => {
                if a.constraints.mode() == nlddm_core::constraints::ConstraintMode::NonRedundant {
                    put("kkt.mtx", io::matrix_market_string(&assemble_kkt(&a.systems, &a.constraints)?.to_csr()))?;
                }
            }
            Artifact::Solution => {
                if let Some(s) = s {
                    put("solution.csv", io::solution_csv(&p.mesh, &s.u_single, &s.u_dd))?;
                }
            }
            Artifact::Report => {
                if let Some(r) = report {
                    put("report.txt", r.to_string())?;
                }
            }
        }
    }
    Ok(written)
}

/// Result of [`run`].
pub struct Outcome {
    pub prepared: Prepared,
    pub assembled: Assembled,
    pub solved: Solved,
    pub report: Report,
    pub failures: Vec<String>,
}

/// Full pipeline. Artifacts are written before the invariant verdict, so a
/// failing run still leaves its report behind.
pub fn run(cfg: &RunConfig, threads: usize) -> RunResult<Outcome> {
    let fields = Fields::new(cfg);
    let mut prepared = prepare(cfg, threads)?;
    let assembled = assemble(cfg, &mut prepared, &fields, threads)?;
    let solved = solve(cfg, &mut prepared, &assembled)?;
    let failures = invariant_failures(cfg, &assembled, &solved);
    let report = build_report(&prepared, &assembled, Some(&solved), &failures);
    write_artifacts(cfg, &cfg.outputs.artifacts, &prepared, &assembled, Some(&solved), Some(&report))?;
    info!("total: {:?}", prepared.timings.total());
    Ok(Outcome { prepared, assembled, solved, report, failures })
}

/// Pipeline through assembly; writes the selected artifacts that need no
/// solve.
pub fn export(cfg: &RunConfig, threads: usize) -> RunResult<Vec<std::path::PathBuf>> {
    let fields = Fields::new(cfg);
    let mut prepared = prepare(cfg, threads)?;
    let assembled = assemble(cfg, &mut prepared, &fields, threads)?;
    let selection: Vec<Artifact> = cfg.outputs.artifacts.iter().copied().filter(|a| !a.needs_solution()).collect();
    write_artifacts(cfg, &selection, &prepared, &assembled, None, None)
}
