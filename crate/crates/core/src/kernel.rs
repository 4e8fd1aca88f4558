//! Finite-horizon symmetric kernels and the element-pair interaction test.

use alloc::format;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::point::{point_segment_distance, Point};

/// Smallest separation used when a fractional kernel is sampled by a
/// quadrature rule that may place both points at the same location.
pub const FRACTIONAL_DISTANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `γ = scale`.
    Constant,
    /// `γ = scale · exp(−|y − x|² / δ²)`.
    Gaussian,
    /// `γ = scale · |y − x|^(−2 − 2s)`, `0 < s < 1`.
    FractionalTruncated { s: f64 },
}

/// How the horizon cuts off interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Element pairs with barycenters at most `δ + h` apart interact over
    /// their full extent; no pointwise indicator.
    #[default]
    BarycenterPair,
    /// Element pairs whose closures come within `δ` interact, and the
    /// kernel carries the indicator of `|y − x| ≤ δ`.
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    delta: f64,
    scale: f64,
    truncation: Truncation,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, delta: f64, scale: f64, truncation: Truncation) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidKernel(format!("horizon δ = {delta} must be positive")));
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidKernel(format!("scale {scale} must be positive")));
        }
        if let KernelFamily::FractionalTruncated { s } = family {
            if !(s > 0.0 && s < 1.0) {
                return Err(Error::InvalidKernel(format!("fractional exponent s = {s} not in (0, 1)")));
            }
            if truncation != Truncation::Pointwise {
                return Err(Error::InvalidKernel("the fractional kernel requires pointwise truncation".into()));
            }
        }
        Ok(Self { family, delta, scale, truncation })
    }

    /// Constant kernel scaled by `4 / (π δ⁴)`, the usual calibration that
    /// matches the classical Laplacian as `δ → 0`.
    pub fn calibrated_constant(delta: f64, truncation: Truncation) -> Result<Self> {
        Self::new(KernelFamily::Constant, delta, constant_scale(delta), truncation)
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn truncation(&self) -> Truncation {
        self.truncation
    }

    /// Evaluates `γ(x, y)`.
    pub fn eval(&self, x: Point, y: Point) -> Result<f64> {
        let r2 = x.dist2(y);
        if r2 == 0.0 && matches!(self.family, KernelFamily::FractionalTruncated { .. }) {
            return Err(Error::SingularKernel);
        }
        Ok(self.eval_r2(r2))
    }

    /// Evaluation used by quadrature: never fails, and clamps the separation
    /// of the fractional family at [`FRACTIONAL_DISTANCE_FLOOR`].
    pub(crate) fn eval_quadrature(&self, x: Point, y: Point) -> f64 {
        let r2 = x.dist2(y);
        match self.family {
            KernelFamily::FractionalTruncated { .. } => {
                let floor2 = FRACTIONAL_DISTANCE_FLOOR * FRACTIONAL_DISTANCE_FLOOR;
                self.eval_r2(r2.max(floor2))
            }
            _ => self.eval_r2(r2),
        }
    }

    fn eval_r2(&self, r2: f64) -> f64 {
        if self.truncation == Truncation::Pointwise && r2 > self.delta * self.delta {
            return 0.0;
        }
        match self.family {
            KernelFamily::Constant => self.scale,
            KernelFamily::Gaussian => self.scale * libm::exp(-r2 / (self.delta * self.delta)),
            KernelFamily::FractionalTruncated { s } => self.scale * libm::pow(r2, -1.0 - s),
        }
    }

    /// Whether the ordered element pair `(t, tp)` contributes to the
    /// bilinear form. Symmetric in its arguments; a self-pair always
    /// interacts.
    pub fn pair_interacts(&self, mesh: &Mesh, t: usize, tp: usize) -> bool {
        if t == tp {
            return true;
        }
        match self.truncation {
            Truncation::BarycenterPair => {
                let reach = self.delta + mesh.h();
                mesh.element(t).barycenter.dist2(mesh.element(tp).barycenter) <= reach * reach
            }
            Truncation::Pointwise => triangle_distance(mesh.element_points(t), mesh.element_points(tp)) <= self.delta,
        }
    }

    /// Upper bound on the barycenter separation of any interacting pair.
    pub(crate) fn barycenter_reach(&self, mesh: &Mesh) -> f64 {
        match self.truncation {
            Truncation::BarycenterPair => self.delta + mesh.h(),
            Truncation::Pointwise => {
                let mut rmax: f64 = 0.0;
                for el in mesh.elements() {
                    for &v in &el.vertices {
                        rmax = rmax.max(el.barycenter.dist(mesh.vertex(v)));
                    }
                }
                self.delta + 2.0 * rmax
            }
        }
    }
}

/// `4 / (π δ⁴)`.
pub fn constant_scale(delta: f64) -> f64 {
    4.0 / (core::f64::consts::PI * delta * delta * delta * delta)
}

/// Distance between two closed, non-overlapping triangles.
fn triangle_distance(a: [Point; 3], b: [Point; 3]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..3 {
        for j in 0..3 {
            best = best.min(point_segment_distance(a[i], b[j], b[(j + 1) % 3])).min(point_segment_distance(
                b[i],
                a[j],
                a[(j + 1) % 3],
            ));
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_frame_mesh;

    #[test]
    fn constant_and_indicator() {
        let k = KernelSpec::new(KernelFamily::Constant, 0.25, 1.0, Truncation::Pointwise).unwrap();
        let x = Point::new(0.0, 0.0);
        assert_eq!(k.eval(x, Point::new(0.1, 0.2)).unwrap(), 1.0);
        assert_eq!(k.eval(x, Point::new(0.5, 0.0)).unwrap(), 0.0);
        let k = KernelSpec::new(KernelFamily::Constant, 0.25, 1.0, Truncation::BarycenterPair).unwrap();
        assert_eq!(k.eval(x, Point::new(0.5, 0.0)).unwrap(), 1.0);
    }

    #[test]
    fn fractional_value_and_singularity() {
        let k = KernelSpec::new(KernelFamily::FractionalTruncated { s: 0.5 }, 1.0, 1.0, Truncation::Pointwise).unwrap();
        let x = Point::new(0.2, 0.1);
        let y = Point::new(0.5, 0.5);
        // |y − x| = 0.5, so 0.5^(−3)
        let expected = 1.0 / (0.5f64 * 0.5 * 0.5);
        assert!((k.eval(x, y).unwrap() - expected).abs() < 1e-12);
        assert_eq!(k.eval(x, x), Err(Error::SingularKernel));
        assert!(k.eval_quadrature(x, x).is_finite());
    }

    #[test]
    fn gaussian_value() {
        let k = KernelSpec::new(KernelFamily::Gaussian, 0.5, 2.0, Truncation::BarycenterPair).unwrap();
        let v = k.eval(Point::new(0.0, 0.0), Point::new(0.3, 0.4)).unwrap();
        assert!((v - 2.0 * (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(KernelSpec::new(KernelFamily::Constant, 0.0, 1.0, Truncation::Pointwise).is_err());
        assert!(KernelSpec::new(KernelFamily::Constant, 1.0, -1.0, Truncation::Pointwise).is_err());
        let frac = KernelFamily::FractionalTruncated { s: 1.5 };
        assert!(KernelSpec::new(frac, 1.0, 1.0, Truncation::Pointwise).is_err());
        let frac = KernelFamily::FractionalTruncated { s: 0.5 };
        assert!(KernelSpec::new(frac, 1.0, 1.0, Truncation::BarycenterPair).is_err());
    }

    #[test]
    fn calibrated_scale() {
        let k = KernelSpec::calibrated_constant(0.5, Truncation::BarycenterPair).unwrap();
        assert!((k.scale() - 64.0 / core::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn self_and_far_pairs() {
        let mesh = build_frame_mesh(1.0, 0.125, 0.25).unwrap();
        let k = KernelSpec::new(KernelFamily::Constant, 0.25, 1.0, Truncation::BarycenterPair).unwrap();
        assert!(k.pair_interacts(&mesh, 17, 17));
        let a = mesh.element(0).barycenter;
        let far = (0..mesh.num_elements()).find(|&e| mesh.element(e).barycenter.dist(a) >= 0.75).unwrap();
        assert!(!k.pair_interacts(&mesh, 0, far));
    }
}
