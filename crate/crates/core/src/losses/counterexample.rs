use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

use super::{check_dim, Evaluation, SmoothLoss};

/// `f(x) = |1 + (x − 1)⁵|`: convex sublevel sets, not pseudoconvex, and not
/// convexifiable by any monotone transformation.
///
/// The kink sits at `x = 0`, which is also the global minimizer. The
/// gradient vanishes at `x = 1` where `f = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct CounterexampleLoss;

pub fn make_counterexample() -> CounterexampleLoss {
    CounterexampleLoss
}

impl SmoothLoss for CounterexampleLoss {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(x, 1)?;
        Ok((1.0 + (x[0] - 1.0).powi(5)).abs())
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        check_dim(x, 1)?;
        let d = x[0] - 1.0;
        let inner = 1.0 + d.powi(5);
        if inner == 0.0 {
            return Err(Error::eval(format!(
                "derivatives are undefined at the kink x = {}",
                x[0]
            )));
        }
        let sign = inner.signum();
        Ok(Evaluation {
            value: inner.abs(),
            gradient: Vector::from_element(1, sign * 5.0 * d.powi(4)),
            hessian: Matrix::from_element(1, 1, sign * 20.0 * d.powi(3)),
        })
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(Vector::zeros(1))
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> String {
        "counterexample".into()
    }
}
