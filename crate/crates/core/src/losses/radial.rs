use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::starconvex::erf;

use super::{check_dim, Evaluation, SmoothLoss};

/// Scalar profile `ψ` of a radial-symmetric loss `f(x) = ψ(‖x − x*‖)`.
///
/// All profiles are even, analytic at zero, with `ψ(0) = 0`, `ψ'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RadialProfile {
    /// `r² / (r² + 1)`
    GemanMcClure,
    /// `1 − exp(−r²)`
    Welsh,
    /// `ln(1 + r²)`
    Cauchy,
    /// `r² / 2`, the convex reference profile.
    Quadratic,
}

impl RadialProfile {
    pub const ROBUST: [RadialProfile; 3] = [RadialProfile::GemanMcClure, RadialProfile::Welsh, RadialProfile::Cauchy];

    pub fn as_str(self) -> &'static str {
        match self {
            RadialProfile::GemanMcClure => "geman_mcclure",
            RadialProfile::Welsh => "welsh",
            RadialProfile::Cauchy => "cauchy",
            RadialProfile::Quadratic => "quadratic",
        }
    }

    pub fn psi(self, r: f64) -> f64 {
        let u = r * r;
        match self {
            RadialProfile::GemanMcClure => u / (1.0 + u),
            RadialProfile::Welsh => -(-u).exp_m1(),
            RadialProfile::Cauchy => u.ln_1p(),
            RadialProfile::Quadratic => 0.5 * u,
        }
    }

    pub fn psi_prime(self, r: f64) -> f64 {
        r * self.psi_prime_over_r(r)
    }

    /// `ψ'(r)/r`, continuous at `r = 0` where it equals `ψ''(0)`.
    pub fn psi_prime_over_r(self, r: f64) -> f64 {
        let u = r * r;
        match self {
            RadialProfile::GemanMcClure => 2.0 / ((1.0 + u) * (1.0 + u)),
            RadialProfile::Welsh => 2.0 * (-u).exp(),
            RadialProfile::Cauchy => 2.0 / (1.0 + u),
            RadialProfile::Quadratic => 1.0,
        }
    }

    pub fn psi_double_prime(self, r: f64) -> f64 {
        let u = r * r;
        match self {
            RadialProfile::GemanMcClure => 2.0 * (1.0 - 3.0 * u) / (1.0 + u).powi(3),
            RadialProfile::Welsh => 2.0 * (-u).exp() * (1.0 - 2.0 * u),
            RadialProfile::Cauchy => 2.0 * (1.0 - u) / ((1.0 + u) * (1.0 + u)),
            RadialProfile::Quadratic => 1.0,
        }
    }

    /// Range of `ψ` on `[0, ∞)`: `(upper bound, whether it is attained)`.
    pub fn range_upper(self) -> (f64, bool) {
        match self {
            RadialProfile::GemanMcClure | RadialProfile::Welsh => (1.0, false),
            RadialProfile::Cauchy | RadialProfile::Quadratic => (f64::INFINITY, false),
        }
    }

    pub fn psi_inverse(self, c: f64) -> Result<f64> {
        let (hi, _) = self.range_upper();
        if !(c >= 0.0 && c < hi) {
            return Err(Error::Domain {
                value: c,
                domain: format!("[0, {hi})"),
            });
        }
        Ok(match self {
            RadialProfile::GemanMcClure => (c / (1.0 - c)).sqrt(),
            RadialProfile::Welsh => (-(-c).ln_1p()).sqrt(),
            RadialProfile::Cauchy => c.exp_m1().sqrt(),
            RadialProfile::Quadratic => (2.0 * c).sqrt(),
        })
    }

    /// `K(r) = ∫₀ʳ ψ'(t)/t dt` in closed form.
    pub fn star_integral(self, r: f64) -> f64 {
        match self {
            RadialProfile::GemanMcClure => r / (1.0 + r * r) + r.atan(),
            RadialProfile::Welsh => PI.sqrt() * erf(r),
            RadialProfile::Cauchy => 2.0 * r.atan(),
            RadialProfile::Quadratic => r,
        }
    }

    /// Taylor coefficients `c₁..c₆` of `ψ` as a series in `u = r²`.
    pub fn series(self) -> [f64; 6] {
        match self {
            RadialProfile::GemanMcClure => [1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
            RadialProfile::Welsh => [1.0, -1.0 / 2.0, 1.0 / 6.0, -1.0 / 24.0, 1.0 / 120.0, -1.0 / 720.0],
            RadialProfile::Cauchy => [1.0, -1.0 / 2.0, 1.0 / 3.0, -1.0 / 4.0, 1.0 / 5.0, -1.0 / 6.0],
            RadialProfile::Quadratic => [0.5, 0.0, 0.0, 0.0, 0.0, 0.0],
        }
    }
}

impl fmt::Display for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RadialProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "geman_mcclure" | "gemanmcclure" | "gm" => Ok(RadialProfile::GemanMcClure),
            "welsh" => Ok(RadialProfile::Welsh),
            "cauchy" => Ok(RadialProfile::Cauchy),
            "quadratic" => Ok(RadialProfile::Quadratic),
            other => Err(Error::input(format!("unknown radial profile '{other}'"))),
        }
    }
}

/// `f(x) = ψ(‖x − x*‖)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialLoss {
    profile: RadialProfile,
    center: Vector,
}

pub fn make_radial(profile: RadialProfile, center: Vector) -> RadialLoss {
    RadialLoss { profile, center }
}

/// The one-dimensional version of `radial`, centred at the first coordinate
/// of its centre.
pub fn as_1d_loss(radial: &RadialLoss) -> RadialLoss {
    RadialLoss {
        profile: radial.profile,
        center: Vector::from_element(1, radial.center.get(0).copied().unwrap_or(0.0)),
    }
}

impl RadialLoss {
    pub fn one_dim(profile: RadialProfile) -> Self {
        make_radial(profile, Vector::zeros(1))
    }

    pub fn profile(&self) -> RadialProfile {
        self.profile
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }
}

/// Gradient and Hessian of `x ↦ Ψ(‖x − c‖)` from the radial derivatives.
///
/// `d1_over_r` is `Ψ'(r)/r` and `d2` is `Ψ''(r)`; at `r = 0` the Hessian is
/// `Ψ''(0)·I`.
pub(crate) fn radial_derivatives(offset: &Vector, r: f64, d1_over_r: f64, d2: f64) -> (Vector, Matrix) {
    let d = offset.len();
    let gradient = offset * d1_over_r;
    if r == 0.0 {
        return (gradient, Matrix::identity(d, d) * d2);
    }
    let unit = offset / r;
    let outer = &unit * unit.transpose();
    let hessian = &outer * d2 + (Matrix::identity(d, d) - &outer) * d1_over_r;
    (gradient, hessian)
}

impl SmoothLoss for RadialLoss {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        check_dim(x, self.dim())?;
        Ok(self.profile.psi((x - &self.center).norm()))
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        check_dim(x, self.dim())?;
        let offset = x - &self.center;
        let r = offset.norm();
        let (gradient, hessian) = radial_derivatives(
            &offset,
            r,
            self.profile.psi_prime_over_r(r),
            self.profile.psi_double_prime(r),
        );
        Ok(Evaluation {
            value: self.profile.psi(r),
            gradient,
            hessian,
        })
    }

    fn minimizer(&self) -> Option<Vector> {
        Some(self.center.clone())
    }

    fn min_value(&self) -> Option<f64> {
        Some(0.0)
    }

    fn name(&self) -> String {
        if self.dim() == 1 {
            format!("{}1d", self.profile)
        } else {
            self.profile.to_string()
        }
    }
}
