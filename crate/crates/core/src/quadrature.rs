//! Gauss–Legendre rules and collapsed (Duffy) tensor-product rules on triangles.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::point::Point;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::InvalidQuadratureOrder(0));
    }
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if libm::fabs(dx) <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes.push(0.5 * (1.0 - x));
        weights.push(0.5 * w);
    }
    Ok((nodes, weights))
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A rule on the reference triangle `{(0,0), (1,0), (0,1)}`; weights sum to ½.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleRule {
    /// Reference coordinates `(ξ, η)`.
    pub points: Vec<(f64, f64)>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    /// Collapsed Gauss rule with `order` points per direction (`order²`
    /// points). Integrates polynomials of total degree `2·order − 2` exactly.
    pub fn collapsed_gauss(order: usize) -> Result<Self> {
        let (x, w) = gauss_legendre(order)?;
        let mut points = Vec::with_capacity(order * order);
        let mut weights = Vec::with_capacity(order * order);
        for i in 0..order {
            for j in 0..order {
                let xi = x[i];
                let eta = x[j] * (1.0 - xi);
                points.push((xi, eta));
                weights.push(w[i] * w[j] * (1.0 - xi));
            }
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Maps the rule onto a physical triangle. Returns, per point, the
    /// physical location, the physical weight, and the three linear basis
    /// values associated with the triangle's vertices in order.
    pub fn map(&self, tri: [Point; 3], area: f64) -> Vec<MappedPoint> {
        let [a, b, c] = tri;
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&(xi, eta), &w)| {
                let basis = [1.0 - xi - eta, xi, eta];
                let p = Point::new(
                    basis[0] * a.x + basis[1] * b.x + basis[2] * c.x,
                    basis[0] * a.y + basis[1] * b.y + basis[2] * c.y,
                );
                MappedPoint { point: p, weight: 2.0 * area * w, basis }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappedPoint {
    pub point: Point,
    pub weight: f64,
    pub basis: [f64; 3],
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rules_integrate_polynomials() {
        for n in 1..8 {
            let (x, w) = gauss_legendre(n).unwrap();
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(&x, &w)| w * x.powi(deg as i32)).sum();
                assert!((q - 1.0 / (deg as f64 + 1.0)).abs() < 1e-14, "n={n} deg={deg}");
            }
        }
        assert!(gauss_legendre(0).is_err());
    }

    // ∫_T ξ^a η^b = a! b! / (a + b + 2)!
    fn monomial_exact(a: u32, b: u32) -> f64 {
        let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn triangle_rule_exactness() {
        for order in 1..6u32 {
            let rule = TriangleRule::collapsed_gauss(order as usize).unwrap();
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 0.5).abs() < 1e-15);
            for a in 0..=(2 * order - 2) {
                for b in 0..=(2 * order - 2 - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(&(xi, eta), &w)| w * xi.powi(a as i32) * eta.powi(b as i32))
                        .sum();
                    assert!((q - monomial_exact(a, b)).abs() < 1e-14, "order {order}: {a},{b}");
                }
            }
        }
    }

    #[test]
    fn mapped_weights_sum_to_area() {
        let rule = TriangleRule::collapsed_gauss(4).unwrap();
        let tri = [Point::new(1.0, 1.0), Point::new(3.0, 1.5), Point::new(1.5, 4.0)];
        let area = 0.5 * ((2.0 * 3.0) - (0.5 * 0.5));
        let mapped = rule.map(tri, area);
        let s: f64 = mapped.iter().map(|m| m.weight).sum();
        assert!((s - area).abs() < 1e-13);
        for m in &mapped {
            assert!((m.basis.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
    }
}
