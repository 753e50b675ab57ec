use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

use super::{check_dim, Evaluation, SmoothLoss};

/// `f(x) = ½ xᵀAx` for a symmetric `A`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    a: Matrix,
    positive_definite: bool,
}

impl QuadraticLoss {
    pub fn new(a: Matrix) -> Result<Self> {
        let a = linalg::symmetrized(&a)?;
        let positive_definite = linalg::min_eigenvalue(&a)? > 0.0;
        Ok(QuadraticLoss { a, positive_definite })
    }

    pub fn identity(dim: usize) -> Self {
        QuadraticLoss {
            a: Matrix::identity(dim, dim),
            positive_definite: true,
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }
}

impl SmoothLoss for QuadraticLoss {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(x, self.dim())?;
        Ok(0.5 * x.dot(&(&self.a * x)))
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        check_dim(x, self.dim())?;
        let ax = &self.a * x;
        Ok(Evaluation {
            value: 0.5 * x.dot(&ax),
            gradient: ax,
            hessian: self.a.clone(),
        })
    }

    fn minimizer(&self) -> Option<Vector> {
        self.positive_definite.then(|| Vector::zeros(self.dim()))
    }

    fn min_value(&self) -> Option<f64> {
        self.positive_definite.then_some(0.0)
    }

    fn name(&self) -> String {
        "quadratic".into()
    }
}

impl TryFrom<&[f64]> for QuadraticLoss {
    type Error = Error;

    /// Diagonal quadratic from its diagonal entries.
    fn try_from(diag: &[f64]) -> Result<Self> {
        QuadraticLoss::new(Matrix::from_diagonal(&Vector::from_column_slice(diag)))
    }
}
