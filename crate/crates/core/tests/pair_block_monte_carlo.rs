use nlddm_core::assembly::pair_block;
use nlddm_core::kernel::{KernelFamily, KernelSpec, Truncation};
use nlddm_core::mesh::{Mesh, Region};
use nlddm_core::Point;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Uniform point in the triangle `abc` and its barycentric coordinates.
fn sample(rng: &mut ChaCha8Rng, tri: [Point; 3]) -> (Point, [f64; 3]) {
    let (mut r, mut s): (f64, f64) = (rng.gen(), rng.gen());
    if r + s > 1.0 {
        r = 1.0 - r;
        s = 1.0 - s;
    }
    let [a, b, c] = tri;
    let p = Point::new(a.x + r * (b.x - a.x) + s * (c.x - a.x), a.y + r * (b.y - a.y) + s * (c.y - a.y));
    (p, [1.0 - r - s, r, s])
}

#[test]
fn unit_right_triangles_sharing_an_edge() {
    let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0)];
    let tris = vec![[0, 1, 2], [1, 3, 2]];
    let mesh = Mesh::from_parts(pts, tris.clone(), vec![Region::Gamma, Region::Gamma], 1.0).unwrap();
    let kernel = KernelSpec::new(KernelFamily::Constant, 2.0, 1.0, Truncation::BarycenterPair).unwrap();
    let block = pair_block(&mesh, 0, 1, &kernel, 4).unwrap();
    let nodes = block.nodes().to_vec();
    assert_eq!(nodes.len(), 4);

    let t = mesh.element_points(0);
    let tp = mesh.element_points(1);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let samples = 1_000_000;
    let mut est = [[0.0f64; 4]; 4];
    let mut sq = [[0.0f64; 4]; 4];
    for _ in 0..samples {
        let (_, bx) = sample(&mut rng, t);
        let (_, by) = sample(&mut rng, tp);
        let mut d = [0.0; 4];
        for (k, &node) in nodes.iter().enumerate() {
            let phi_x = tris[0].iter().position(|&v| v == node).map_or(0.0, |i| bx[i]);
            let phi_y = tris[1].iter().position(|&v| v == node).map_or(0.0, |i| by[i]);
            d[k] = phi_y - phi_x;
        }
        for a in 0..4 {
            for b in 0..4 {
                let v = d[a] * d[b];
                est[a][b] += v;
                sq[a][b] += v * v;
            }
        }
    }
    let n = samples as f64;
    let measure = 0.5 * 0.5;
    for a in 0..4 {
        for b in 0..4 {
            let mean = est[a][b] / n;
            let stderr = ((sq[a][b] / n - mean * mean) / n).sqrt();
            let mc = mean * measure;
            let q = block.value(a, b);
            let tol = 4.0 * stderr * measure + 1e-12;
            assert!((mc - q).abs() <= tol, "entry ({a},{b}): quadrature {q}, Monte Carlo {mc}, tol {tol}");
        }
    }
}

/// With a constant kernel the block is a combination of element mass
/// matrices and basis integrals.
#[test]
fn constant_kernel_matches_mass_matrix_formula() {
    let pts = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0), Point::new(1.0, 1.0)];
    let tris = vec![[0, 1, 2], [1, 3, 2]];
    let mesh = Mesh::from_parts(pts, tris.clone(), vec![Region::Gamma, Region::Gamma], 1.0).unwrap();
    let kernel = KernelSpec::new(KernelFamily::Constant, 2.0, 1.0, Truncation::BarycenterPair).unwrap();
    let block = pair_block(&mesh, 0, 1, &kernel, 4).unwrap();
    let nodes = block.nodes().to_vec();
    let area = 0.5;
    let mass = |e: usize, i: usize, j: usize| -> f64 {
        let (pi, pj) = (tris[e].contains(&i), tris[e].contains(&j));
        match (pi && pj, i == j) {
            (true, true) => area / 6.0,
            (true, false) => area / 12.0,
            _ => 0.0,
        }
    };
    let basis = |e: usize, i: usize| if tris[e].contains(&i) { area / 3.0 } else { 0.0 };
    for (a, &i) in nodes.iter().enumerate() {
        for (b, &j) in nodes.iter().enumerate() {
            let exact =
                area * mass(1, i, j) + area * mass(0, i, j) - basis(1, i) * basis(0, j) - basis(0, i) * basis(1, j);
            assert!((block.value(a, b) - exact).abs() < 1e-14, "({i},{j}): {} vs {exact}", block.value(a, b));
        }
    }
}
