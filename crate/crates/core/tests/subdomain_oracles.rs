mod common;

use std::collections::BTreeSet;

use common::{decompose, desk, load, rhs, Setup, QUAD};
use nalgebra::DMatrix;
use nlddm_core::assembly::{assemble_full, build_rhs, energy_single, solve_single, LoadData};
use nlddm_core::constraints::{
    build_constraints, constraint_violation, expected_rows, redundant_deficiency, verify_constraint_matrix,
    ConstraintMode,
};
use nlddm_core::dd::{assemble_kkt, equivalence_report, reconstruct_global, solve_dd, stationarity_residual};
use nlddm_core::decomposition::{partition_blocks, CollarPolicy, Decomposition, OverlapWeights, ZetaTables};
use nlddm_core::field::{Field, ScalarField};
use nlddm_core::kernel::KernelFamily;
use nlddm_core::mesh::Region;
use nlddm_core::multi::{
    assemble_subdomain, assemble_subdomains, energy_sum, restrict, scatter_sum_check, Problem, SubdomainSystem,
};
use nlddm_core::solver::SolverMethod;
use nlddm_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem<'a>(s: &'a Setup, load: LoadData<'a>, reaction: Option<&'a dyn Field>) -> Problem<'a> {
    Problem { mesh: &s.mesh, interactions: &s.inter, load, reaction, quad_order: QUAD }
}

fn dense(m: &nlddm_core::sparse::CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.iter() {
        d[(i, j)] = v;
    }
    d
}

#[test]
fn subdomain_matrices_match_signature_scan() {
    let s = desk();
    let d = decompose(&s, 2, CollarPolicy::Strict);
    let systems = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
    let sets: Vec<BTreeSet<usize>> = d.geometry.iter().map(|g| g.domain_elements().into_iter().collect()).collect();
    for (n, sys) in systems.iter().enumerate() {
        let idx = d.index.subdomain(n);
        let nu = idx.num_unknowns();
        let mut brute = DMatrix::<f64>::zeros(nu, nu);
        for b in s.inter.blocks() {
            let (t, tp) = (b.t, b.tp);
            if s.mesh.region(t) == Region::Gamma && s.mesh.region(tp) == Region::Gamma {
                continue;
            }
            if !(sets[n].contains(&t) && sets[n].contains(&tp)) {
                continue;
            }
            let zeta = sets.iter().filter(|m| m.contains(&t) && m.contains(&tp)).count() as f64;
            let w = if t == tp { 1.0 } else { 2.0 };
            for (a, &i) in b.nodes().iter().enumerate() {
                for (c, &j) in b.nodes().iter().enumerate() {
                    if let (Some(li), Some(lj)) = (idx.local_unknown(i), idx.local_unknown(j)) {
                        brute[(li, lj)] += w * b.value(a, c) / zeta;
                    }
                }
            }
        }
        let err = (dense(&sys.a) - &brute).abs().max();
        assert!(err <= 1e-14 * brute.abs().max(), "subdomain {n}: {err}");
    }
}

#[test]
fn scattered_sums_reproduce_the_single_system() {
    for family in [KernelFamily::Constant, KernelFamily::Gaussian] {
        let s = common::setup(0.125, family);
        let r = rhs(&s);
        for (b, policy) in [(1, CollarPolicy::Strict), (2, CollarPolicy::Strict), (3, CollarPolicy::Extended)] {
            let d = decompose(&s, b, policy);
            let systems = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
            let rep = scatter_sum_check(&systems, &d.index, &s.sys, &r).unwrap();
            assert!(rep.matrix_residual <= 1e-12 && rep.load_residual <= 1e-12, "{family:?} {b}x{b}: {rep:?}");
        }
    }
}

#[test]
fn single_subdomain_is_bitwise_identical() {
    let s = desk();
    let r = rhs(&s);
    let d = decompose(&s, 1, CollarPolicy::Strict);
    let systems = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
    assert_eq!(systems[0].a, s.sys.a_single);
    assert_eq!(systems[0].b, r.b_single);
}

/// Overlap counts with one pair forced to 1.
struct Corrupted<'a> {
    inner: &'a ZetaTables,
    pair: (usize, usize),
}

impl OverlapWeights for Corrupted<'_> {
    fn zeta_a(&self, t: usize, tp: usize) -> usize {
        if (t, tp) == self.pair {
            1
        } else {
            self.inner.zeta_a(t, tp)
        }
    }

    fn zeta_f(&self, t: usize) -> usize {
        self.inner.zeta_f(t)
    }
}

#[test]
fn corrupting_one_zeta_is_detected() {
    let s = desk();
    let r = rhs(&s);
    let d = decompose(&s, 2, CollarPolicy::Strict);
    let pair = s
        .inter
        .pairs()
        .find(|&(t, tp)| t != tp && s.mesh.region(t) == Region::Omega && d.zeta.zeta_a(t, tp) >= 2)
        .unwrap();
    let bad = Corrupted { inner: &d.zeta, pair };
    let p = problem(&s, load(), None);
    let systems: Vec<SubdomainSystem> = (0..4).map(|n| assemble_subdomain(&p, &d, &bad, n).unwrap()).collect();
    let rep = scatter_sum_check(&systems, &d.index, &s.sys, &r).unwrap();
    assert!(rep.matrix_residual > 1e-6, "{rep:?}");
}

#[test]
fn assembly_requires_verified_coverage() {
    let s = desk();
    let d = Decomposition::build(&s.mesh, partition_blocks(&s.mesh, 2, 2).unwrap(), common::DELTA).unwrap();
    let err = assemble_subdomain(&problem(&s, load(), None), &d, &d.zeta, 0).unwrap_err();
    assert!(matches!(err, Error::CoverageNotVerified));
}

#[test]
fn energies_add_up_for_random_vectors() {
    let s = desk();
    let r = rhs(&s);
    let d = decompose(&s, 2, CollarPolicy::Strict);
    let systems = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let u: Vec<f64> = (0..s.mesh.num_unknowns()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let parts: Vec<Vec<f64>> = (0..4).map(|n| restrict(&d.index, n, &u)).collect();
        let e1 = energy_single(&s.sys, &r, &u).unwrap();
        let es = energy_sum(&systems, &parts).unwrap();
        assert!((e1 - es).abs() <= 1e-12 * (1.0 + e1.abs()), "{e1} vs {es}");
    }
}

#[test]
fn constraint_counts_match_enumeration() {
    let s = desk();
    for (b, policy) in [(2, CollarPolicy::Strict), (3, CollarPolicy::Extended)] {
        let d = decompose(&s, b, policy);
        let (mut chain, mut all, mut cycles) = (0, 0, 0);
        for v in 0..s.mesh.num_unknowns() {
            let m = (0..d.num_subdomains()).filter(|&n| d.index.subdomain(n).local_unknown(v).is_some()).count();
            if m >= 2 {
                chain += m - 1;
                all += m * (m - 1) / 2;
            }
            if m >= 3 {
                cycles += m * (m - 1) / 2 - (m - 1);
            }
        }
        assert!(cycles > 0);
        assert_eq!(expected_rows(&d.index, ConstraintMode::NonRedundant), chain);
        assert_eq!(expected_rows(&d.index, ConstraintMode::Redundant), all);
        assert_eq!(redundant_deficiency(&d.index), cycles);
        let nr = build_constraints(&d.index, ConstraintMode::NonRedundant).unwrap();
        let rd = build_constraints(&d.index, ConstraintMode::Redundant).unwrap();
        assert_eq!(nr.num_rows(), chain);
        assert_eq!(rd.num_rows(), all);
        assert_eq!(verify_constraint_matrix(&nr, &d.index).unwrap().rank, Some(chain));
        assert_eq!(verify_constraint_matrix(&rd, &d.index).unwrap().rank, Some(all - cycles));
    }
}

#[test]
fn three_way_node_rows() {
    let s = desk();
    let p = partition_blocks(&s.mesh, 3, 1).unwrap();
    let mut d = Decomposition::build_with(&s.mesh, p, common::DELTA, CollarPolicy::Extended).unwrap();
    d.verify(&s.mesh, s.inter.pairs()).unwrap();
    let node = (0..s.mesh.num_unknowns()).find(|&v| d.index.theta(v) == [0, 1, 2]).unwrap();
    let pairs = |mode| -> Vec<(usize, usize)> {
        build_constraints(&d.index, mode)
            .unwrap()
            .rows()
            .iter()
            .filter(|r| r.node == node)
            .map(|r| (r.plus, r.minus))
            .collect()
    };
    assert_eq!(pairs(ConstraintMode::NonRedundant), vec![(0, 1), (1, 2)]);
    assert_eq!(pairs(ConstraintMode::Redundant), vec![(0, 1), (0, 2), (1, 2)]);
}

fn solve_case(s: &Setup, b: usize, policy: CollarPolicy, f: &dyn Field, g: &dyn Field) -> (Vec<f64>, Vec<f64>, f64) {
    let data = LoadData { f, g };
    let r = build_rhs(&s.mesh, &data, &s.sys.g_coupling, QUAD).unwrap();
    let u = solve_single(&s.sys.a_single, &r.b_single, SolverMethod::Direct).unwrap();
    let d = decompose(s, b, policy);
    let systems = assemble_subdomains(&problem(s, data, None), &d).unwrap();
    let c = build_constraints(&d.index, ConstraintMode::NonRedundant).unwrap();
    let kkt = assemble_kkt(&systems, &c).unwrap();
    assert_eq!(kkt.dim(), systems.iter().map(|x| x.num_unknowns()).sum::<usize>() + c.num_rows());
    let k = kkt.to_csr();
    assert!(k.asymmetry() <= 1e-14 * k.max_abs());
    let sol = solve_dd(&kkt, SolverMethod::Direct).unwrap();
    assert!(stationarity_residual(&kkt, &sol).unwrap() <= 1e-10);
    let (udd, spread) = reconstruct_global(&sol.u, &d.index, s.mesh.num_unknowns()).unwrap();
    let rep = equivalence_report(&udd, spread, &u, &c, &sol).unwrap();
    assert!(rep.constraint_violation <= 1e-10 && spread <= 1e-10);
    (u, udd, rep.rel_inf_error)
}

#[test]
fn decomposed_solution_matches_single_domain() {
    for family in [KernelFamily::Constant, KernelFamily::Gaussian] {
        let s = common::setup(0.125, family);
        for (b, policy) in [(2, CollarPolicy::Strict), (3, CollarPolicy::Extended)] {
            let (_, _, err) = solve_case(&s, b, policy, &common::F, &common::G);
            assert!(err <= 1e-8, "{family:?} {b}x{b}: {err}");
        }
    }
}

#[test]
fn trivial_data_gives_trivial_solutions() {
    let s = desk();
    let zero = ScalarField::Constant(0.0);
    let (u, udd, _) = solve_case(&s, 2, CollarPolicy::Strict, &zero, &zero);
    assert!(u.iter().chain(&udd).all(|&v| v == 0.0));
    let c = ScalarField::Constant(-1.5);
    let (u, udd, _) = solve_case(&s, 3, CollarPolicy::Extended, &zero, &c);
    assert!(u.iter().chain(&udd).all(|v| (v + 1.5).abs() <= 1e-10));
}

#[test]
fn reaction_makes_every_subdomain_matrix_positive_definite() {
    let s = desk();
    let c = ScalarField::Constant(1.0);
    let d = decompose(&s, 3, CollarPolicy::Extended);
    let systems = assemble_subdomains(&problem(&s, load(), Some(&c)), &d).unwrap();
    for sys in &systems {
        let min = dense(&sys.a).symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min > 0.0, "subdomain {}: {min}", sys.id);
    }
    // and the reaction sums back to the single-domain matrix
    let full = assemble_full(&s.mesh, &s.inter, Some(&c), QUAD).unwrap();
    let r = build_rhs(&s.mesh, &load(), &full.g_coupling, QUAD).unwrap();
    let rep = scatter_sum_check(&systems, &d.index, &full, &r).unwrap();
    assert!(rep.matrix_residual <= 1e-12 && rep.load_residual <= 1e-12);
}

#[test]
fn floating_subdomain_annihilates_constants() {
    let s = common::setup(0.0625, KernelFamily::Gaussian);
    let d = decompose(&s, 3, CollarPolicy::Strict);
    let systems = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
    let center = &systems[4];
    assert!(center.floating && center.collar.ncols() == 0);
    let ones = vec![1.0; center.num_unknowns()];
    let r = center.a.matvec(&ones).unwrap();
    let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(worst <= 1e-12 * center.a.max_abs(), "{worst}");
}

#[test]
fn reconstruction_reports_spread() {
    let s = desk();
    let d = decompose(&s, 2, CollarPolicy::Strict);
    let global: Vec<f64> = (0..s.mesh.num_unknowns()).map(|i| i as f64).collect();
    let mut parts: Vec<Vec<f64>> = (0..4).map(|n| restrict(&d.index, n, &global)).collect();
    let (u, spread) = reconstruct_global(&parts, &d.index, global.len()).unwrap();
    assert_eq!(u, global);
    assert_eq!(spread, 0.0);
    let c = build_constraints(&d.index, ConstraintMode::NonRedundant).unwrap();
    let row = c.rows()[0];
    parts[row.minus][row.minus_col] += 0.25;
    let (_, spread) = reconstruct_global(&parts, &d.index, global.len()).unwrap();
    assert!(spread >= 0.25);
    assert!(constraint_violation(&c, &parts).unwrap() >= 0.25);
}

#[test]
fn redundant_constraints_are_refused_by_the_direct_path() {
    let s = desk();
    let d = decompose(&s, 2, CollarPolicy::Strict);
    let systems = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
    let c = build_constraints(&d.index, ConstraintMode::Redundant).unwrap();
    assert!(matches!(assemble_kkt(&systems, &c), Err(Error::RedundantKkt)));
}

#[test]
fn assembly_is_deterministic() {
    let s = desk();
    let d = decompose(&s, 3, CollarPolicy::Extended);
    let a = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
    let b = assemble_subdomains(&problem(&s, load(), None), &d).unwrap();
    assert_eq!(a, b);
}
