//! Dense small-dimension linear algebra.
//!
//! Everything here works on symmetric matrices of dimension at most
//! [`MAX_SPECTRAL_DIM`]. Inputs are symmetrized as `(M + Mᵀ)/2` before any
//! spectral operation; an asymmetry larger than [`SYMMETRY_TOL`] (relative to
//! the largest entry) is rejected as an input error.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default relative cutoff below which eigenvalues are treated as zero.
pub const DEFAULT_PINV_REL_TOL: f64 = 1e-10;
/// Largest accepted relative asymmetry `max|M - Mᵀ| / max|M|`.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Largest dimension accepted by the spectral routines.
pub const MAX_SPECTRAL_DIM: usize = 16;
/// Largest dimension accepted by [`principal_minors`] (2^d − 1 subsets).
pub const MAX_MINOR_DIM: usize = 8;

/// `‖g‖*²` together with the range diagnostics used by the Newton driver.
#[derive(Debug, Clone, PartialEq)]
pub struct DualNormResult {
    /// `⟨g, H†g⟩`.
    pub value: f64,
    /// Whether `g` lies in the range of `H` up to the relative tolerance.
    pub in_range: bool,
    /// Number of eigenvalues above the cutoff.
    pub rank: usize,
}

/// A principal minor: the determinant of the submatrix on `indices` (0-based).
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalMinor {
    pub indices: Vec<usize>,
    pub det: f64,
}

fn check_finite_vec(g: &Vector, what: &str) -> Result<()> {
    if g.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::input(format!("{what} has non-finite entries")))
    }
}

/// Validates and symmetrizes `m`.
pub fn symmetrized(m: &Matrix) -> Result<Matrix> {
    if !m.is_square() {
        return Err(Error::input(format!(
            "matrix must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() > MAX_SPECTRAL_DIM {
        return Err(Error::Capability(format!(
            "dimension {} exceeds the supported maximum {MAX_SPECTRAL_DIM}",
            m.nrows()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let scale = m.amax();
    let asym = (m - m.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::input(format!(
            "matrix is not symmetric (asymmetry {asym:e} relative to {scale:e})"
        )));
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Eigendecomposition of a validated symmetric matrix.
pub(crate) fn eigen(m: &Matrix) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
    Ok(SymmetricEigen::new(symmetrized(m)?))
}

struct Spectral {
    eig: SymmetricEigen<f64, nalgebra::Dyn>,
    cutoff: f64,
}

impl Spectral {
    fn new(h: &Matrix, rel_tol: f64) -> Result<Self> {
        if !(rel_tol > 0.0 && rel_tol <= 1e-4) {
            return Err(Error::input(format!(
                "pseudoinverse tolerance must lie in (0, 1e-4], got {rel_tol}"
            )));
        }
        let eig = eigen(h)?;
        let sigma_max = eig.eigenvalues.amax();
        Ok(Spectral {
            eig,
            cutoff: rel_tol * sigma_max,
        })
    }

    fn kept(&self, i: usize) -> bool {
        let lambda = self.eig.eigenvalues[i];
        lambda != 0.0 && lambda.abs() >= self.cutoff
    }

    /// Returns `(H†g, ‖(I − HH†)g‖, rank)`.
    fn solve(&self, g: &Vector) -> (Vector, f64, usize) {
        let n = g.len();
        let mut p = Vector::zeros(n);
        let mut null = Vector::zeros(n);
        let mut rank = 0;
        for i in 0..n {
            let v = self.eig.eigenvectors.column(i);
            let coeff = v.dot(g);
            if self.kept(i) {
                rank += 1;
                p.axpy(coeff / self.eig.eigenvalues[i], &v, 1.0);
            } else {
                null.axpy(coeff, &v, 1.0);
            }
        }
        (p, null.norm(), rank)
    }
}

fn check_shapes(h: &Matrix, g: &Vector) -> Result<()> {
    if h.nrows() != g.len() {
        return Err(Error::input(format!(
            "dimension mismatch: matrix is {}x{}, vector has {} entries",
            h.nrows(),
            h.ncols(),
            g.len()
        )));
    }
    check_finite_vec(g, "vector")
}

/// Minimum-norm least-squares solution `H†g` of `min ‖Hp − g‖`.
///
/// Eigenvalues with magnitude below `rel_tol · max|λ|` are treated as zero.
pub fn pinv_solve(h: &Matrix, g: &Vector, rel_tol: f64) -> Result<Vector> {
    check_shapes(h, g)?;
    let spectral = Spectral::new(h, rel_tol)?;
    Ok(spectral.solve(g).0)
}

/// `‖g‖*² = ⟨g, H†g⟩` with a range-membership flag.
///
/// `in_range` compares the component of `g` outside the retained eigenspace,
/// which equals `‖H(H†g) − g‖`, against `rel_tol · ‖g‖`.
pub fn dual_norm_sq(h: &Matrix, g: &Vector, rel_tol: f64) -> Result<DualNormResult> {
    newton_direction(h, g, rel_tol).map(|(_, d)| d)
}

/// The pseudoinverse direction `H†g` together with its dual-norm diagnostics.
pub fn newton_direction(h: &Matrix, g: &Vector, rel_tol: f64) -> Result<(Vector, DualNormResult)> {
    check_shapes(h, g)?;
    let spectral = Spectral::new(h, rel_tol)?;
    let (p, residual, rank) = spectral.solve(g);
    let gnorm = g.norm();
    let in_range = gnorm == 0.0 || residual <= rel_tol * gnorm;
    let value = g.dot(&p);
    Ok((p, DualNormResult { value, in_range, rank }))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> Result<f64> {
    let eig = eigen(m)?;
    Ok(eig.eigenvalues.min())
}

/// Largest absolute eigenvalue (spectral norm) of a symmetric matrix.
pub fn spectral_norm(m: &Matrix) -> Result<f64> {
    let eig = eigen(m)?;
    Ok(eig.eigenvalues.amax())
}

/// Determinant of the principal submatrix of `m` on `indices`.
pub fn principal_minor(m: &Matrix, indices: &[usize]) -> f64 {
    let k = indices.len();
    if k == 0 {
        return 1.0;
    }
    let sub = Matrix::from_fn(k, k, |i, j| m[(indices[i], indices[j])]);
    sub.lu().determinant()
}

pub(crate) fn enumerate_minors(m: &Matrix, cap: usize) -> Result<Vec<PrincipalMinor>> {
    if !m.is_square() {
        return Err(Error::input("matrix must be square"));
    }
    let d = m.nrows();
    if d > cap {
        return Err(Error::Capability(format!(
            "principal minor enumeration is limited to dimension {cap}, got {d}"
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("matrix has non-finite entries"));
    }
    let mut sets: Vec<Vec<usize>> = (1u32..(1u32 << d))
        .map(|mask| (0..d).filter(|i| mask & (1 << i) != 0).collect())
        .collect();
    sets.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    Ok(sets
        .into_iter()
        .map(|indices| {
            let det = principal_minor(m, &indices);
            PrincipalMinor { indices, det }
        })
        .collect())
}

/// All nonempty principal minors, ordered by size then lexicographically.
pub fn principal_minors(m: &Matrix) -> Result<Vec<PrincipalMinor>> {
    enumerate_minors(m, MAX_MINOR_DIM)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    fn diag(xs: &[f64]) -> Matrix {
        Matrix::from_diagonal(&v(xs))
    }

    #[test]
    fn pinv_identity() {
        let p = pinv_solve(&Matrix::identity(2, 2), &v(&[3.0, -1.0]), 1e-10).unwrap();
        assert_eq!(p, v(&[3.0, -1.0]));
    }

    #[test]
    fn pinv_zero_block() {
        let h = diag(&[2.0, 0.0]);
        let p = pinv_solve(&h, &v(&[4.0, 0.0]), 1e-10).unwrap();
        assert_relative_eq!(p, v(&[2.0, 0.0]), epsilon = 1e-14);

        let g = v(&[4.0, 1.0]);
        let p = pinv_solve(&h, &g, 1e-10).unwrap();
        assert_relative_eq!(p, v(&[2.0, 0.0]), epsilon = 1e-14);
        assert_relative_eq!((&h * &p - &g).norm(), 1.0, epsilon = 1e-14);

        // independent route: SVD least squares
        let svd = h.clone().svd(true, true);
        let oracle = svd.solve(&g, 1e-10).unwrap();
        assert_relative_eq!(p, oracle, epsilon = 1e-14);
    }

    #[test]
    fn pinv_rejects_bad_input() {
        let mut h = Matrix::identity(2, 2);
        h[(0, 1)] = f64::NAN;
        assert!(matches!(
            pinv_solve(&h, &v(&[1.0, 1.0]), 1e-10),
            Err(Error::InvalidInput(_))
        ));
        let h = Matrix::identity(2, 2);
        assert!(pinv_solve(&h, &v(&[f64::INFINITY, 1.0]), 1e-10).is_err());
        assert!(pinv_solve(&h, &v(&[1.0, 1.0]), 1e-2).is_err());
        assert!(pinv_solve(&h, &v(&[1.0, 1.0, 1.0]), 1e-10).is_err());
        let asym = Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(pinv_solve(&asym, &v(&[1.0, 1.0]), 1e-10).is_err());
    }

    #[test]
    fn dual_norm_diagonal() {
        let r = dual_norm_sq(&diag(&[1.0, 4.0]), &v(&[1.0, 2.0]), 1e-10).unwrap();
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-14);
        assert!(r.in_range);
        assert_eq!(r.rank, 2);
    }

    #[test]
    fn dual_norm_zero_gradient() {
        let r = dual_norm_sq(&diag(&[1.0, 0.0]), &v(&[0.0, 0.0]), 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.in_range);
        assert_eq!(r.rank, 1);
    }

    #[test]
    fn dual_norm_out_of_range() {
        let r = dual_norm_sq(&diag(&[2.0, 0.0]), &v(&[4.0, 1.0]), 1e-10).unwrap();
        assert!(!r.in_range);
        assert_eq!(r.rank, 1);
        assert_relative_eq!(r.value, 8.0, epsilon = 1e-14);
    }

    #[test]
    fn dual_norm_cauchy_1d() {
        // f(x) = ln(1 + x²) at x = 0.8, derivatives checked by finite differences
        let x: f64 = 0.8;
        let f = |t: f64| (1.0 + t * t).ln();
        let g = 2.0 * x / (1.0 + x * x);
        let h = 2.0 * (1.0 - x * x) / (1.0 + x * x).powi(2);
        let step = 1e-5;
        let g_fd = (f(x + step) - f(x - step)) / (2.0 * step);
        let h_fd = (f(x + step) - 2.0 * f(x) + f(x - step)) / (step * step);
        assert_relative_eq!(g, g_fd, max_relative = 1e-8);
        assert_relative_eq!(h, h_fd, max_relative = 1e-4);

        let r = dual_norm_sq(&Matrix::from_element(1, 1, h), &v(&[g]), 1e-10).unwrap();
        assert_relative_eq!(r.value, 2.0 * x * x / (1.0 - x * x), epsilon = 1e-12);
        assert!((r.value - 3.5556).abs() < 1e-4);
    }

    #[test]
    fn min_eigenvalues() {
        assert_relative_eq!(min_eigenvalue(&diag(&[3.0, -2.0])).unwrap(), -2.0);
        assert_relative_eq!(min_eigenvalue(&Matrix::identity(3, 3)).unwrap(), 1.0);
        let m = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert_relative_eq!(min_eigenvalue(&m).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn minors_small_cases() {
        let m = principal_minors(&diag(&[2.0, 5.0])).unwrap();
        let dets: Vec<_> = m.iter().map(|pm| (pm.indices.clone(), pm.det)).collect();
        assert_eq!(dets, vec![(vec![0], 2.0), (vec![1], 5.0), (vec![0, 1], 10.0)]);

        let m = principal_minors(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(m.len(), 7);
        assert!(m.iter().all(|pm| (pm.det - 1.0).abs() < 1e-15));

        let m = principal_minors(&Matrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!(m[0].det, 0.0);
        assert_eq!(m[1].det, 2.0);
        assert_relative_eq!(m[2].det, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn minors_dimension_cap() {
        assert!(matches!(
            principal_minors(&Matrix::identity(9, 9)),
            Err(Error::Capability(_))
        ));
    }
}
