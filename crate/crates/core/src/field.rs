//! Scalar fields used for the source, the Dirichlet data and the reaction
//! coefficient.

use crate::point::Point;

/// Shared between assembly threads, hence `Sync`.
pub trait Field: Sync {
    fn value(&self, p: Point) -> f64;
}

impl<F: Fn(Point) -> f64 + Sync> Field for F {
    fn value(&self, p: Point) -> f64 {
        self(p)
    }
}

/// The closed vocabulary of fields accepted by run configurations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarField {
    Constant(f64),
    /// `a·x + b·y + c`
    Linear {
        a: f64,
        b: f64,
        c: f64,
    },
    /// `amplitude · sin(πx) · sin(πy)`
    Sinusoidal {
        amplitude: f64,
    },
}

impl Default for ScalarField {
    fn default() -> Self {
        ScalarField::Constant(0.0)
    }
}

impl Field for ScalarField {
    fn value(&self, p: Point) -> f64 {
        match *self {
            ScalarField::Constant(k) => k,
            ScalarField::Linear { a, b, c } => a * p.x + b * p.y + c,
            ScalarField::Sinusoidal { amplitude } => {
                use core::f64::consts::PI;
                amplitude * libm::sin(PI * p.x) * libm::sin(PI * p.y)
            }
        }
    }
}

/// Closed axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

/// Source for the folded domain `Ω = Ω̂ ∪ Γ_Neumann`: the interior source on
/// `Ω̂` and the negated Neumann flux on the Neumann region.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldedSource<A, B> {
    pub interior: A,
    pub neumann: B,
    pub neumann_region: Rect,
}

impl<A: Field, B: Field> Field for FoldedSource<A, B> {
    fn value(&self, p: Point) -> f64 {
        if self.neumann_region.contains(p) {
            -self.neumann.value(p)
        } else {
            self.interior.value(p)
        }
    }
}
