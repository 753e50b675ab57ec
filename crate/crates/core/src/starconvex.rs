//! Star-convexifying transformations.
//!
//! For a loss with known minimizer `x*` the line integral
//! `g(x) = f(x*) + ∫₀¹ ⟨∇f(x* + t(x − x*)), x − x*⟩ / t dt`
//! is star-convex around `x*`. For radial losses `f = ψ(‖x − x*‖)` it has the
//! closed form `Ψ(r) = r·K(r)` with `K(r) = ∫₀ʳ ψ'(t)/t dt`, and it is a
//! monotone transform of `f`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::losses::{check_dim, radial_derivatives, Evaluation, RadialLoss, RadialProfile, SmoothLoss};
use crate::newton::{run_newton, NewtonConfig, StepsizeSchedule, Termination};
use crate::quadrature::adaptive_simpson;
use crate::transforms::{Interval, Jet, ScalarTransform};

/// Error function, accurate to about `1e-15` absolute.
///
/// Uses the Taylor series `(2/√π)e^{−x²} Σ 2ⁿx^{2n+1}/(2n+1)!!` for
/// `|x| ≤ 3`, and a continued fraction for `erfc` beyond.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < 0.0 {
        return -erf(-x);
    }
    if x <= 3.0 {
        let x2 = x * x;
        let mut term = x;
        let mut sum = x;
        let mut n = 0.0;
        while term > 1e-17 * sum {
            n += 1.0;
            term *= 2.0 * x2 / (2.0 * n + 1.0);
            sum += term;
        }
        return 2.0 / PI.sqrt() * (-x2).exp() * sum;
    }
    1.0 - erfc_cf(x)
}

/// `erfc(x)` for `x > 0` by the modified Lentz method on
/// `1/(x + (1/2)/(x + 1/(x + (3/2)/(x + …))))`.
fn erfc_cf(x: f64) -> f64 {
    let tiny = 1e-300;
    let mut f = x;
    let mut c = f;
    let mut d = 0.0;
    for n in 1..500 {
        let a = n as f64 / 2.0;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x * x).exp() / (PI.sqrt() * f)
}

/// Split point between the analytic head and the quadrature tail of the
/// line integral.
pub const HEAD_SPLIT: f64 = 1e-4;

/// Evaluates the star transform `g(x)` of `base` by quadrature.
///
/// On `[0, δ]` the integrand is replaced by the trapezoid between its limit
/// `⟨∇²f(x*)u, u⟩` at `t = 0` and its value at `δ`; the rest is integrated
/// by adaptive Simpson to `quad_tol`.
pub fn star_value(base: &dyn SmoothLoss, x: &Vector, quad_tol: f64) -> Result<f64> {
    let center = base
        .minimizer()
        .ok_or_else(|| Error::Precondition(format!("{} has no known minimizer", base.name())))?;
    check_dim(x, base.dim())?;
    let f_star = match base.min_value() {
        Some(v) => v,
        None => base.value(&center)?,
    };
    let u = x - &center;
    if u.norm() == 0.0 {
        return Ok(f_star);
    }
    let integrand = |t: f64| -> f64 {
        base.evaluate(&(&center + &u * t))
            .map(|e| e.gradient.dot(&u) / t)
            .unwrap_or(f64::NAN)
    };
    let h_star = base.evaluate(&center)?.hessian;
    let limit = u.dot(&(&h_star * &u));
    let at_split = integrand(HEAD_SPLIT);
    if !(limit.is_finite() && at_split.is_finite()) {
        return Err(Error::Numerical("star integrand is not finite near t = 0".into()));
    }
    let head = 0.5 * HEAD_SPLIT * (limit + at_split);
    let tail = adaptive_simpson(integrand, HEAD_SPLIT, 1.0, quad_tol)?;
    Ok(f_star + head + tail)
}

/// Below this radius the series forms are used.
const SERIES_RADIUS: f64 = 1e-2;
/// Absolute tolerance of the `∫ dv/ψ⁻¹(v)` quadrature.
pub const STAR_QUAD_TOL: f64 = 1e-13;

/// Coefficient arrays in `u = r²` for `ψ'/r`, `K/r` and `ψ''`.
struct Series {
    p: [f64; 6],
    q: [f64; 6],
    r: [f64; 6],
}

impl Series {
    fn new(profile: RadialProfile) -> Self {
        let c = profile.series();
        let mut s = Series {
            p: [0.0; 6],
            q: [0.0; 6],
            r: [0.0; 6],
        };
        for (i, ck) in c.iter().enumerate() {
            let k = (i + 1) as f64;
            s.p[i] = 2.0 * k * ck;
            s.q[i] = 2.0 * k / (2.0 * k - 1.0) * ck;
            s.r[i] = 2.0 * k * (2.0 * k - 1.0) * ck;
        }
        s
    }

    fn eval(coeffs: &[f64], u: f64) -> f64 {
        coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    /// `(P² − QR)/u`, whose constant term cancels exactly.
    fn s_coeffs(&self) -> [f64; 5] {
        let mut prod = [0.0; 6];
        for i in 0..6 {
            for j in 0..6 - i {
                prod[i + j] += self.p[i] * self.p[j] - self.q[i] * self.r[j];
            }
        }
        [prod[1], prod[2], prod[3], prod[4], prod[5]]
    }
}

/// `K(r)/r`, continuous at zero.
fn k_over_r(profile: RadialProfile, r: f64) -> f64 {
    if r < SERIES_RADIUS {
        Series::eval(&Series::new(profile).q, r * r)
    } else {
        profile.star_integral(r) / r
    }
}

/// The closed-form star transform `x ↦ Ψ(‖x − x*‖)` of a radial loss.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialStarLoss {
    radial: RadialLoss,
}

impl RadialStarLoss {
    pub fn profile(&self) -> RadialProfile {
        self.radial.profile()
    }

    /// `Ψ(r) = r·K(r)`.
    pub fn psi_star(&self, r: f64) -> f64 {
        r * self.profile().star_integral(r)
    }

    /// `Ψ'(r) = K(r) + ψ'(r)`.
    pub fn psi_star_prime(&self, r: f64) -> f64 {
        let p = self.profile();
        p.star_integral(r) + p.psi_prime(r)
    }

    /// `Ψ''(r) = ψ''(r) + ψ'(r)/r`.
    pub fn psi_star_double_prime(&self, r: f64) -> f64 {
        let p = self.profile();
        p.psi_double_prime(r) + p.psi_prime_over_r(r)
    }
}

impl SmoothLoss for RadialStarLoss {
    fn dim(&self) -> usize {
        self.radial.dim()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(x, self.dim())?;
        Ok(self.psi_star((x - self.radial.center()).norm()))
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        check_dim(x, self.dim())?;
        let p = self.profile();
        let offset = x - self.radial.center();
        let r = offset.norm();
        let d1_over_r = k_over_r(p, r) + p.psi_prime_over_r(r);
        let (gradient, hessian) = radial_derivatives(&offset, r, d1_over_r, self.psi_star_double_prime(r));
        Ok(Evaluation {
            value: self.psi_star(r),
            gradient,
            hessian,
        })
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(self.radial.center().clone())
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> String {
        format!("star({})", self.radial.name())
    }
}

/// The star transform of a radial loss as a map on loss values:
/// `φ(c) = ψ⁻¹(c)·∫₀ᶜ dv/ψ⁻¹(v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarTransform {
    profile: RadialProfile,
}

pub fn star_transform(profile: RadialProfile) -> StarTransform {
    StarTransform { profile }
}

impl StarTransform {
    pub fn profile(&self) -> RadialProfile {
        self.profile
    }

    /// `J(c) = ∫₀ᶜ dv/ψ⁻¹(v)`, integrated in `u = √v` as
    /// `∫₀^{√c} 2u/ψ⁻¹(u²) du`.
    pub fn inverse_integral(&self, c: f64) -> Result<f64> {
        let p = self.profile;
        let limit = (2.0 * p.psi_double_prime(0.0)).sqrt();
        let integrand = |u: f64| -> f64 {
            let r = p.psi_inverse(u * u).unwrap_or(f64::NAN);
            if r == 0.0 {
                limit
            } else {
                2.0 * u / r
            }
        };
        adaptive_simpson(integrand, 0.0, c.sqrt(), STAR_QUAD_TOL)
    }
}

impl ScalarTransform for StarTransform {
    fn domain(&self) -> Interval {
        let (hi, hi_closed) = self.profile.range_upper();
        Interval {
            lo: 0.0,
            hi,
            lo_closed: true,
            hi_closed,
        }
    }

    fn raw_jet(&self, c: f64) -> Result<Jet> {
        let p = self.profile;
        let r = p.psi_inverse(c)?;
        if r < SERIES_RADIUS {
            let s = Series::new(p);
            let u = r * r;
            let big_p = Series::eval(&s.p, u);
            let big_q = Series::eval(&s.q, u);
            let big_s = Series::eval(&s.s_coeffs(), u);
            return Ok(Jet {
                value: u * big_q,
                d1: 1.0 + big_q / big_p,
                d2: big_s / big_p.powi(3),
            });
        }
        let j = self.inverse_integral(c)?;
        let d1 = p.psi_prime(r);
        Ok(Jet {
            value: r * j,
            d1: 1.0 + j / d1,
            d2: (d1 * d1 / r - j * p.psi_double_prime(r)) / d1.powi(3),
        })
    }

    fn name(&self) -> String {
        format!("star:{}", self.profile)
    }
}

/// Both views of the star transform of a radial loss.
pub fn radial_star_loss(radial: &RadialLoss) -> (RadialStarLoss, StarTransform) {
    (
        RadialStarLoss { radial: radial.clone() },
        star_transform(radial.profile()),
    )
}

/// `ψ''(r) + ψ'(r)/r`, the radial curvature of the star transform.
pub fn star_curvature(profile: RadialProfile, r: f64) -> f64 {
    profile.psi_double_prime(r) + profile.psi_prime_over_r(r)
}

/// Whether `ψ''(r) + ψ'(r)/r ≥ −1e-10` on `{step, 2·step, …, M}` and at the
/// limit `r → 0`.
pub fn convexity_neighborhood(profile: RadialProfile, m: f64, grid_step: f64) -> Result<bool> {
    if !(m > 0.0 && grid_step > 0.0) {
        return Err(Error::input("M and the grid step must be positive"));
    }
    if 2.0 * profile.psi_double_prime(0.0) < -1e-10 {
        return Ok(false);
    }
    let n = (m / grid_step).floor() as usize;
    Ok((1..=n).all(|i| star_curvature(profile, i as f64 * grid_step) >= -1e-10))
}

/// Radius of the convex neighbourhood of the minimizer: the first root of
/// `ψ''` (original) or of `ψ'' + ψ'/r` (star-transformed), or `+∞` if there
/// is none below `1e3`.
pub fn convexity_radius(profile: RadialProfile, transformed: bool) -> f64 {
    let curvature = |r: f64| {
        if transformed {
            star_curvature(profile, r)
        } else {
            profile.psi_double_prime(r)
        }
    };
    let step = 1e-3;
    let mut lo = 0.0;
    while lo < 1e3 {
        let hi = lo + step;
        if curvature(hi) < 0.0 {
            let (mut a, mut b) = (lo, hi);
            for _ in 0..60 {
                let mid = 0.5 * (a + b);
                if curvature(mid) < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            return 0.5 * (a + b);
        }
        lo = hi;
    }
    f64::INFINITY
}

/// Outcome of [`convergence_radius`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadiusEstimate {
    pub radius: f64,
    /// Whether the post-hoc probes agreed with a monotone predicate.
    pub monotone: bool,
}

/// Distance to the minimizer below which a run counts as converged.
pub const RADIUS_CONVERGENCE_TOL: f64 = 1e-6;

fn unit_newton_converges(loss: &dyn SmoothLoss, center: &Vector, offset: f64, cfg: &NewtonConfig) -> Result<bool> {
    let x0 = center.add_scalar(offset);
    let trace = run_newton(loss, &StepsizeSchedule::Constant(1.0), &x0, cfg)?;
    Ok(trace.termination == Termination::Converged && (&trace.last().x - center).norm() <= RADIUS_CONVERGENCE_TOL)
}

/// Largest `x0 − x*` from which unit-step Newton converges on a 1D loss,
/// found by 50 bisection steps on `(0, bracket_hi]`.
///
/// If the run from `bracket_hi` converges, the bracket is extended by
/// factors 10, 100 and 1000; convergence from all of them is reported as
/// `+∞`. The predicate is then probed at 20 points below and 20 above the
/// radius, and `monotone` records whether all of them agreed.
pub fn convergence_radius(loss_1d: &dyn SmoothLoss, bracket_hi: f64, cfg: &NewtonConfig) -> Result<RadiusEstimate> {
    if loss_1d.dim() != 1 {
        return Err(Error::input("convergence_radius needs a one-dimensional loss"));
    }
    if !(bracket_hi > 0.0 && bracket_hi.is_finite()) {
        return Err(Error::input("bracket_hi must be positive and finite"));
    }
    let center = loss_1d
        .minimizer()
        .ok_or_else(|| Error::Precondition(format!("{} has no known minimizer", loss_1d.name())))?;
    let converges = |h: f64| unit_newton_converges(loss_1d, &center, h, cfg);

    let mut lo = bracket_hi * 1e-6;
    if !converges(lo)? {
        return Err(Error::Numerical(format!(
            "unit Newton does not converge even from {lo:e}"
        )));
    }
    let mut hi = bracket_hi;
    if converges(hi)? {
        let mut failing = None;
        for factor in [10.0, 100.0, 1000.0] {
            let probe = bracket_hi * factor;
            if converges(probe)? {
                lo = probe;
            } else {
                failing = Some(probe);
                break;
            }
        }
        match failing {
            Some(f) => hi = f,
            None => {
                return Ok(RadiusEstimate {
                    radius: f64::INFINITY,
                    monotone: true,
                })
            }
        }
    }
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let radius = 0.5 * (lo + hi);
    let mut monotone = true;
    for i in 1..=20 {
        let t = i as f64 / 21.0;
        if !converges(radius * t * (1.0 - 1e-9))? || converges(radius * (1.0 + t) * (1.0 + 1e-9))? {
            monotone = false;
            break;
        }
    }
    Ok(RadiusEstimate { radius, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::QuadraticLoss;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn erf_reference_values() {
        assert_eq!(erf(0.0), 0.0);
        assert_abs_diff_eq!(erf(6.0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(erf(1.0), 0.842_700_792_949_714_9, epsilon = 1e-15);
        assert_abs_diff_eq!(erf(-0.5), -0.520_499_877_813_046_5, epsilon = 1e-15);
        assert_abs_diff_eq!(erf(3.5), 0.999_999_256_901_627_7, epsilon = 1e-15);
    }

    #[test]
    fn erf_is_continuous_at_switch() {
        let below = erf(3.0);
        let above = 1.0 - erfc_cf(3.0);
        assert_abs_diff_eq!(below, above, epsilon = 1e-15);
    }

    #[test]
    fn star_of_quadratic_doubles() {
        let f = QuadraticLoss::identity(2);
        let x = v(&[0.7, -1.1]);
        let g = star_value(&f, &x, 1e-12).unwrap();
        assert_relative_eq!(g, x.norm_squared(), max_relative = 1e-12);
        assert_eq!(star_value(&f, &v(&[0.0, 0.0]), 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn star_of_cauchy_at_one() {
        let f = RadialLoss::one_dim(RadialProfile::Cauchy);
        let g = star_value(&f, &v(&[1.0]), 1e-12).unwrap();
        assert_abs_diff_eq!(g, PI / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn closed_forms() {
        let x: f64 = 0.9;
        let cases = [
            (RadialProfile::Cauchy, 2.0 * x * x.atan()),
            (RadialProfile::Welsh, PI.sqrt() * x * erf(x)),
            (RadialProfile::GemanMcClure, x * x / (x * x + 1.0) + x * x.atan()),
        ];
        for (p, expected) in cases {
            let (l, t) = radial_star_loss(&RadialLoss::one_dim(p));
            assert_relative_eq!(l.value(&v(&[x])).unwrap(), expected, max_relative = 1e-14);
            assert_relative_eq!(t.phi(p.psi(x)).unwrap(), expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn star_transform_near_zero() {
        for p in RadialProfile::ROBUST {
            let t = star_transform(p);
            let j = t.jet(0.0).unwrap();
            assert_eq!(j.value, 0.0);
            assert_relative_eq!(j.d1, 2.0, max_relative = 1e-15);
            for c in [1e-5, 0.5 * p.psi(SERIES_RADIUS), 2.0 * p.psi(SERIES_RADIUS)] {
                assert!(t.jet(c).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn convexity_neighborhoods() {
        assert!(convexity_neighborhood(RadialProfile::Cauchy, 100.0, 1e-2).unwrap());
        assert!(convexity_neighborhood(RadialProfile::Quadratic, 50.0, 1e-2).unwrap());
        assert!(!convexity_neighborhood(RadialProfile::Welsh, 2.0, 1e-2).unwrap());
        assert!(convexity_neighborhood(RadialProfile::Welsh, 0.99, 1e-2).unwrap());
    }

    #[test]
    fn convexity_radii() {
        let s3 = 1.0 / 3f64.sqrt();
        assert_abs_diff_eq!(
            convexity_radius(RadialProfile::GemanMcClure, false),
            s3,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            convexity_radius(RadialProfile::Welsh, false),
            0.5f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(convexity_radius(RadialProfile::Cauchy, false), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            convexity_radius(RadialProfile::GemanMcClure, true),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(convexity_radius(RadialProfile::Welsh, true), 1.0, epsilon = 1e-12);
        assert_eq!(convexity_radius(RadialProfile::Cauchy, true), f64::INFINITY);
    }

    #[test]
    fn quadratic_radius_is_infinite() {
        let f = QuadraticLoss::identity(1);
        let r = convergence_radius(&f, 1.0, &NewtonConfig::default()).unwrap();
        assert_eq!(r.radius, f64::INFINITY);
    }
}
