use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

use super::{check_dim, Evaluation, SmoothLoss};

/// Polytope feasibility loss `Σᵢ (⟨aᵢ, x⟩ − bᵢ)₊ᵖ`.
///
/// Rows are stored as the rows of `rows`. Only strictly violated constraints
/// (`⟨aᵢ, x⟩ − bᵢ > 0`) contribute to value, gradient and Hessian.
#[derive(Debug, Clone)]
pub struct PolytopeLoss {
    rows: Matrix,
    offsets: Vector,
    p: f64,
}

pub fn make_polytope(rows: Matrix, offsets: Vector, p: f64) -> Result<PolytopeLoss> {
    if rows.nrows() == 0 || rows.ncols() == 0 {
        return Err(Error::input("polytope needs at least one row and one column"));
    }
    if rows.nrows() != offsets.len() {
        return Err(Error::input(format!(
            "{} rows but {} offsets",
            rows.nrows(),
            offsets.len()
        )));
    }
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::input(format!("polytope exponent must be >= 2, got {p}")));
    }
    if rows.iter().chain(offsets.iter()).any(|v| !v.is_finite()) {
        return Err(Error::input("polytope data must be finite"));
    }
    Ok(PolytopeLoss { rows, offsets, p })
}

impl PolytopeLoss {
    /// Random instance: standard normal rows, unit offsets.
    pub fn seeded(dim: usize, n_rows: usize, p: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = Matrix::from_fn(n_rows, dim, |_, _| StandardNormal.sample(&mut rng));
        make_polytope(rows, Vector::from_element(n_rows, 1.0), p)
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    pub fn rows(&self) -> &Matrix {
        &self.rows
    }

    pub fn offsets(&self) -> &Vector {
        &self.offsets
    }

    fn slacks(&self, x: &Vector) -> Vector {
        &self.rows * x - &self.offsets
    }
}

impl SmoothLoss for PolytopeLoss {
    fn dim(&self) -> usize {
        self.rows.ncols()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(x, self.dim())?;
        Ok(self
            .slacks(x)
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|s| s.powf(self.p))
            .sum())
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        check_dim(x, self.dim())?;
        let d = self.dim();
        let p = self.p;
        let mut value = 0.0;
        let mut gradient = Vector::zeros(d);
        let mut hessian = Matrix::zeros(d, d);
        for (i, &s) in self.slacks(x).iter().enumerate() {
            if s <= 0.0 {
                continue;
            }
            let a = self.rows.row(i).transpose();
            value += s.powf(p);
            gradient.axpy(p * s.powf(p - 1.0), &a, 1.0);
            hessian += &a * a.transpose() * (p * (p - 1.0) * s.powf(p - 2.0));
        }
        Ok(Evaluation {
            value,
            gradient,
            hessian,
        })
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> String {
        format!("polytope:p={}", self.p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn one_sided_quadratic() {
        let f = make_polytope(Matrix::from_row_slice(1, 2, &[1.0, 0.0]), v(&[0.0]), 2.0).unwrap();
        let e = f.evaluate(&v(&[2.0, 0.0])).unwrap();
        assert_eq!(e.value, 4.0);
        assert_eq!(e.gradient, v(&[4.0, 0.0]));

        let e = f.evaluate(&v(&[-1.0, 0.0])).unwrap();
        assert_eq!(e.value, 0.0);
        assert_eq!(e.gradient, v(&[0.0, 0.0]));
        assert_eq!(e.hessian, Matrix::zeros(2, 2));
    }

    #[test]
    fn two_cubic_rows() {
        let f = make_polytope(Matrix::identity(2, 2), v(&[0.0, 0.0]), 3.0).unwrap();
        let e = f.evaluate(&v(&[1.0, 1.0])).unwrap();
        assert_relative_eq!(e.value, 2.0);
        assert_relative_eq!(e.gradient, v(&[3.0, 3.0]));
    }

    #[test]
    fn rejects_small_exponent() {
        assert!(make_polytope(Matrix::identity(2, 2), v(&[0.0, 0.0]), 1.5).is_err());
    }

    #[test]
    fn seeded_instances_are_reproducible() {
        let a = PolytopeLoss::seeded(10, 20, 3.0, 7).unwrap();
        let b = PolytopeLoss::seeded(10, 20, 3.0, 7).unwrap();
        assert_eq!(a.rows(), b.rows());
        let c = PolytopeLoss::seeded(10, 20, 3.0, 8).unwrap();
        assert_ne!(a.rows(), c.rows());
    }
}
