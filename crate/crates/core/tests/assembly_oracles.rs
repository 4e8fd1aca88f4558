mod common;

use common::{desk, rhs, QUAD};
use nalgebra::DMatrix;
use nlddm_core::assembly::{assemble_full, build_rhs, energy_single, solve_single, LoadData};
use nlddm_core::field::ScalarField;
use nlddm_core::kernel::{KernelFamily, KernelSpec, Truncation};
use nlddm_core::mesh::Region;
use nlddm_core::solver::SolverMethod;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn to_nalgebra(m: &nlddm_core::sparse::CsrMatrix) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, j, v) in m.iter() {
        d[(i, j)] = v;
    }
    d
}

#[test]
fn interacting_pairs_match_ordered_brute_force() {
    let s = desk();
    let reach = s.kernel.delta() + s.mesh.h();
    let els = s.mesh.elements();
    let mut ordered = 0usize;
    for a in els {
        for b in els {
            if a.barycenter.dist(b.barycenter) <= reach {
                ordered += 1;
            }
        }
    }
    let selfs = s.inter.blocks().iter().filter(|b| b.t == b.tp).count();
    assert_eq!(selfs, 288);
    assert_eq!(2 * s.inter.len() - selfs, ordered);
}

#[test]
fn a_single_is_symmetric_positive_definite() {
    let s = desk();
    let a = &s.sys.a_single;
    assert_eq!(a.nrows(), 49);
    assert!(a.asymmetry() <= 1e-14 * a.max_abs());
    let d = to_nalgebra(a);
    let eig = d.symmetric_eigen();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > 0.0, "smallest eigenvalue {min}");
}

#[test]
fn full_matrix_annihilates_constants() {
    for family in [KernelFamily::Constant, KernelFamily::Gaussian] {
        let s = common::setup(0.125, family);
        let ones = vec![1.0; s.mesh.num_nodes()];
        let r = s.sys.full.matvec(&ones).unwrap();
        let worst = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst <= 1e-12 * s.sys.full.max_abs(), "{family:?}: {worst}");
    }
}

/// With only self pairs kept the matrix is a sum of per-element terms
/// `2|T| M_T − 2 m_T m_Tᵀ` for the constant kernel.
#[test]
fn self_pairs_only_match_elementwise_formula() {
    let s = desk();
    let selfs = s.inter.filtered(|t, tp| t == tp).unwrap();
    let sys = assemble_full(&s.mesh, &selfs, None, QUAD).unwrap();
    let n = s.mesh.num_nodes();
    let mut brute = DMatrix::<f64>::zeros(n, n);
    for el in s.mesh.elements() {
        let area = el.area;
        for (a, &i) in el.vertices.iter().enumerate() {
            for (b, &j) in el.vertices.iter().enumerate() {
                let mass = if a == b { area / 6.0 } else { area / 12.0 };
                brute[(i, j)] += 2.0 * area * mass - 2.0 * (area / 3.0) * (area / 3.0);
            }
        }
    }
    let got = to_nalgebra(&sys.full);
    let err = (&got - &brute).abs().max();
    assert!(err <= 1e-15, "max deviation {err}");
}

#[test]
fn constant_dirichlet_data_is_reproduced() {
    for family in [KernelFamily::Constant, KernelFamily::Gaussian] {
        let s = common::setup(0.125, family);
        let zero = ScalarField::Constant(0.0);
        let g = ScalarField::Constant(2.5);
        let r = build_rhs(&s.mesh, &LoadData { f: &zero, g: &g }, &s.sys.g_coupling, QUAD).unwrap();
        let u = solve_single(&s.sys.a_single, &r.b_single, SolverMethod::Direct).unwrap();
        assert!(u.iter().all(|v| (v - 2.5).abs() <= 1e-10));
    }
}

#[test]
fn unit_source_matches_incident_areas() {
    let s = desk();
    let one = ScalarField::Constant(1.0);
    let zero = ScalarField::Constant(0.0);
    let r = build_rhs(&s.mesh, &LoadData { f: &one, g: &zero }, &s.sys.g_coupling, QUAD).unwrap();
    for (i, b) in r.b_single.iter().enumerate() {
        let support: f64 = s
            .mesh
            .node_elements(i)
            .unwrap()
            .iter()
            .filter(|&&e| s.mesh.region(e) == Region::Omega)
            .map(|&e| s.mesh.element(e).area)
            .sum();
        assert!((b - support / 3.0).abs() < 1e-15);
    }
}

#[test]
fn solution_is_a_local_energy_minimum() {
    let s = desk();
    let r = rhs(&s);
    let u = solve_single(&s.sys.a_single, &r.b_single, SolverMethod::Direct).unwrap();
    let e0 = energy_single(&s.sys, &r, &u).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let v: Vec<f64> = u.iter().map(|x| x + 1e-3 * rng.gen_range(-1.0..1.0)).collect();
        assert!(energy_single(&s.sys, &r, &v).unwrap() >= e0);
    }
}

#[test]
fn pointwise_truncation_assembles_an_spd_matrix() {
    let mesh = nlddm_core::mesh::build_frame_mesh(1.0, 0.125, 0.25).unwrap();
    let k = KernelSpec::new(KernelFamily::Gaussian, 0.25, 1.0, Truncation::Pointwise).unwrap();
    let inter = nlddm_core::assembly::Interactions::compute(&mesh, &k, QUAD).unwrap();
    let sys = assemble_full(&mesh, &inter, None, QUAD).unwrap();
    let d = to_nalgebra(&sys.a_single);
    let min = d.symmetric_eigen().eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(min > 0.0);
}
