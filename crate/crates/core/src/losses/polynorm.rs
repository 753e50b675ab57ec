use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};

use super::{check_dim, Evaluation, SmoothLoss};

/// `f(x) = (1/p)‖x‖_A^p` with `A ≻ 0`.
#[derive(Debug, Clone)]
pub struct PolyNormLoss {
    a: Matrix,
    p: f64,
}

/// Builds the polynomial-norm loss. Rejects `p = 1`, `p ≤ 0` and non-SPD `A`.
pub fn make_polynorm(a: Matrix, p: f64) -> Result<PolyNormLoss> {
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::input(format!("exponent must be positive, got {p}")));
    }
    if p == 1.0 {
        return Err(Error::input("exponent p = 1 is not supported"));
    }
    let a = linalg::symmetrized(&a)?;
    if linalg::min_eigenvalue(&a)? <= 0.0 {
        return Err(Error::input("A must be positive definite"));
    }
    Ok(PolyNormLoss { a, p })
}

impl PolyNormLoss {
    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn matrix(&self) -> &Matrix {
        &self.a
    }
}

impl SmoothLoss for PolyNormLoss {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(x, self.dim())?;
        let n = x.dot(&(&self.a * x)).sqrt();
        Ok(n.powf(self.p) / self.p)
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        check_dim(x, self.dim())?;
        let d = self.dim();
        let p = self.p;
        let ax = &self.a * x;
        let n2 = x.dot(&ax);
        if n2 == 0.0 {
            return if p == 2.0 {
                Ok(Evaluation {
                    value: 0.0,
                    gradient: Vector::zeros(d),
                    hessian: self.a.clone(),
                })
            } else if p > 2.0 {
                Ok(Evaluation {
                    value: 0.0,
                    gradient: Vector::zeros(d),
                    hessian: Matrix::zeros(d, d),
                })
            } else {
                Err(Error::eval(format!(
                    "Hessian of the p = {p} norm loss is undefined at the origin"
                )))
            };
        }
        let n = n2.sqrt();
        let np2 = n.powf(p - 2.0);
        let value = n.powf(p) / p;
        let gradient = &ax * np2;
        let mut hessian = &self.a * np2;
        if p != 2.0 {
            hessian += &ax * ax.transpose() * ((p - 2.0) * n.powf(p - 4.0));
        }
        Ok(Evaluation {
            value,
            gradient,
            hessian,
        })
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(Vector::zeros(self.dim()))
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> String {
        format!("polynorm:p={}", self.p)
    }
}
