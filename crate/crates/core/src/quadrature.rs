//! Adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// Default absolute tolerance for integrals in this crate.
pub const DEFAULT_ABS_TOL: f64 = 1e-10;
/// Maximum recursion depth of [`adaptive_simpson`].
pub const MAX_DEPTH: u32 = 40;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn finite(v: f64, at: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical(format!("integrand is {v} at t = {at}")))
    }
}

fn recurse<F: Fn(f64) -> f64>(f: &F, p: Panel, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (p.a + p.b);
    let lm = 0.5 * (p.a + m);
    let rm = 0.5 * (m + p.b);
    let flm = finite(f(lm), lm)?;
    let frm = finite(f(rm), rm)?;
    let left = simpson(p.a, m, p.fa, flm, p.fm);
    let right = simpson(m, p.b, p.fm, frm, p.fb);
    let delta = left + right - p.whole;
    if depth >= MAX_DEPTH || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    let l = recurse(
        f,
        Panel {
            a: p.a,
            b: m,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
        },
        0.5 * tol,
        depth + 1,
    )?;
    let r = recurse(
        f,
        Panel {
            a: m,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
        },
        0.5 * tol,
        depth + 1,
    )?;
    Ok(l + r)
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
///
/// The interval is first split into four panels so that integrands with a
/// feature between the Simpson nodes are not missed. A non-finite integrand
/// value is reported as [`Error::Numerical`].
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::input("integration limits must be finite"));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::input("quadrature tolerance must be positive"));
    }
    if a == b {
        return Ok(0.0);
    }
    const PIECES: usize = 4;
    let h = (b - a) / PIECES as f64;
    let mut total = 0.0;
    for i in 0..PIECES {
        let lo = a + h * i as f64;
        let hi = if i + 1 == PIECES { b } else { lo + h };
        let mid = 0.5 * (lo + hi);
        let fa = finite(f(lo), lo)?;
        let fm = finite(f(mid), mid)?;
        let fb = finite(f(hi), hi)?;
        let whole = simpson(lo, hi, fa, fm, fb);
        total += recurse(
            &f,
            Panel {
                a: lo,
                b: hi,
                fa,
                fm,
                fb,
                whole,
            },
            tol / PIECES as f64,
            0,
        )?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomials_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-13);
    }

    #[test]
    fn smooth_integrands() {
        let v = adaptive_simpson(f64::exp, 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::E - 1.0, epsilon = 1e-11);
        let v = adaptive_simpson(|x| 1.0 / (1.0 + x * x), 0.0, 1.0, 1e-12).unwrap();
        assert_abs_diff_eq!(v, std::f64::consts::FRAC_PI_4, epsilon = 1e-11);
    }

    #[test]
    fn reversed_and_empty_limits() {
        let fwd = adaptive_simpson(f64::sin, 0.0, 2.0, 1e-12).unwrap();
        let rev = adaptive_simpson(f64::sin, 2.0, 0.0, 1e-12).unwrap();
        assert_abs_diff_eq!(fwd, -rev, epsilon = 1e-12);
        assert_eq!(adaptive_simpson(f64::sin, 1.0, 1.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn non_finite_integrand_is_an_error() {
        assert!(adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-10).is_err());
    }
}
