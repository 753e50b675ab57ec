//! Central finite-difference checks of analytic derivatives.

use crate::error::Result;
use crate::linalg::{Matrix, Vector};
use crate::losses::SmoothLoss;
use crate::transforms::ScalarTransform;

/// Step used at `x`: `1e-6·(1 + ‖x‖)`.
pub fn fd_step(x: &Vector) -> f64 {
    1e-6 * (1.0 + x.norm())
}

pub fn fd_gradient(loss: &dyn SmoothLoss, x: &Vector, h: f64) -> Result<Vector> {
    let mut g = Vector::zeros(x.len());
    for i in 0..x.len() {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        g[i] = (loss.value(&xp)? - loss.value(&xm)?) / (2.0 * h);
    }
    Ok(g)
}

/// Central differences of the analytic gradient, symmetrized.
pub fn fd_hessian(loss: &dyn SmoothLoss, x: &Vector, h: f64) -> Result<Matrix> {
    let d = x.len();
    let mut m = Matrix::zeros(d, d);
    for j in 0..d {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[j] += h;
        xm[j] -= h;
        let col = (loss.evaluate(&xp)?.gradient - loss.evaluate(&xm)?.gradient) / (2.0 * h);
        m.set_column(j, &col);
    }
    Ok((&m + m.transpose()) * 0.5)
}

/// Relative derivative errors at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdCheck {
    pub gradient_error: f64,
    pub hessian_error: f64,
}

/// Bound on the rounding error of a central difference of a quantity of
/// magnitude `scale`, summed over `d` components.
fn roundoff(scale: f64, h: f64, d: usize) -> f64 {
    8.0 * f64::EPSILON * (1.0 + scale) * (d as f64).sqrt() / h
}

/// Error beyond the rounding bound, relative to `max(‖reference‖, floor)`.
fn rel(diff: f64, noise: f64, reference: f64, floor: f64) -> f64 {
    (diff - noise).max(0.0) / reference.max(floor)
}

/// Compares analytic derivatives with central differences at `x`.
///
/// Errors are relative to the analytic norm, after discounting the rounding
/// error of the differences themselves; an absolute floor scaled by
/// `1 + |f(x)|` keeps points where a derivative vanishes from dividing by
/// zero.
pub fn check_derivatives(loss: &dyn SmoothLoss, x: &Vector) -> Result<FdCheck> {
    let h = fd_step(x);
    let d = x.len();
    let e = loss.evaluate(x)?;
    let floor = 1e-6 * (1.0 + e.value.abs());
    let g = fd_gradient(loss, x, h)?;
    let hess = fd_hessian(loss, x, h)?;
    Ok(FdCheck {
        gradient_error: rel(
            (&g - &e.gradient).norm(),
            roundoff(e.value.abs(), h, d),
            e.gradient.norm(),
            floor,
        ),
        hessian_error: rel(
            (&hess - &e.hessian).norm(),
            roundoff(e.gradient.norm(), h, d * d),
            e.hessian.norm(),
            floor,
        ),
    })
}

/// Relative errors of `φ'` and `φ''` against central differences at `y`.
pub fn check_transform(t: &dyn ScalarTransform, y: f64) -> Result<FdCheck> {
    let h = 1e-6 * (1.0 + y.abs());
    let j = t.jet(y)?;
    let (p, m) = (t.jet(y + h)?, t.jet(y - h)?);
    let d1 = (p.value - m.value) / (2.0 * h);
    let d2 = (p.d1 - m.d1) / (2.0 * h);
    let floor = 1e-6 * (1.0 + j.value.abs());
    Ok(FdCheck {
        gradient_error: rel((d1 - j.d1).abs(), roundoff(j.value.abs(), h, 1), j.d1.abs(), floor),
        hessian_error: rel((d2 - j.d2).abs(), roundoff(j.d1.abs(), h, 1), j.d2.abs(), floor),
    })
}
