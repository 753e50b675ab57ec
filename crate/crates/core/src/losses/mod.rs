//! The loss zoo.
//!
//! Every loss implements [`SmoothLoss`], returning value, gradient and
//! Hessian at a point. Losses are immutable and safe to evaluate from many
//! threads at once.

mod benchmarks;
mod counterexample;
mod polynorm;
mod polytope;
mod quadratic;
mod radial;

use std::fmt;

pub use benchmarks::{make_benchmark, Benchmark, BenchmarkLoss};
pub use counterexample::{make_counterexample, CounterexampleLoss};
pub use polynorm::{make_polynorm, PolyNormLoss};
pub use polytope::{make_polytope, PolytopeLoss};
pub use quadratic::QuadraticLoss;
pub(crate) use radial::radial_derivatives;
pub use radial::{as_1d_loss, make_radial, RadialLoss, RadialProfile};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Value, gradient and Hessian of a loss at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Vector,
    pub hessian: Matrix,
}

impl Evaluation {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite()
            && self.gradient.iter().all(|v| v.is_finite())
            && self.hessian.iter().all(|v| v.is_finite())
    }
}

/// A twice-differentiable loss `f: ℝᵈ → ℝ`.
pub trait SmoothLoss: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &Vector) -> Result<f64>;

    fn evaluate(&self, x: &Vector) -> Result<Evaluation>;

    /// The global minimizer `x*`, when known.
    fn minimizer(&self) -> Option<Vector> {
        None
    }

    /// `f(x*)`, when known.
    fn min_value(&self) -> Option<f64> {
        None
    }

    fn name(&self) -> String;
}

impl fmt::Debug for dyn SmoothLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SmoothLoss({})", self.name())
    }
}

pub(crate) fn check_dim(x: &Vector, dim: usize) -> Result<()> {
    if x.len() != dim {
        return Err(Error::input(format!(
            "expected a point of dimension {dim}, got {}",
            x.len()
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("point has non-finite coordinates"));
    }
    Ok(())
}

pub(crate) fn v2(x: f64, y: f64) -> Vector {
    Vector::from_column_slice(&[x, y])
}

pub(crate) fn m2(xx: f64, xy: f64, yy: f64) -> Matrix {
    Matrix::from_row_slice(2, 2, &[xx, xy, xy, yy])
}
