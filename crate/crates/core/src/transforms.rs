//! Monotone scalar transformations `φ` and composed losses `L = φ ∘ f`.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::losses::{Evaluation, SmoothLoss};

/// Below this magnitude a scaling factor is treated as zero.
pub const SCALING_ZERO_TOL: f64 = 1e-12;

/// `(φ(y), φ'(y), φ''(y))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.d1.is_finite() && self.d2.is_finite()
    }
}

/// A real interval with independently open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_closed: false,
        hi_closed: false,
    };

    pub fn open(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: false,
            hi_closed: false,
        }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval {
            lo,
            hi,
            lo_closed: true,
            hi_closed: true,
        }
    }

    /// `[lo, ∞)`.
    pub fn at_least(lo: f64) -> Self {
        Interval {
            lo,
            hi: f64::INFINITY,
            lo_closed: true,
            hi_closed: false,
        }
    }

    pub fn contains(&self, y: f64) -> bool {
        if y.is_nan() {
            return false;
        }
        let above = if self.lo_closed { y >= self.lo } else { y > self.lo };
        let below = if self.hi_closed { y <= self.hi } else { y < self.hi };
        above && below
    }

    pub fn check(&self, y: f64) -> Result<()> {
        if self.contains(y) {
            Ok(())
        } else {
            Err(Error::Domain {
                value: y,
                domain: self.to_string(),
            })
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let l = if self.lo_closed { '[' } else { '(' };
        let r = if self.hi_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.lo, self.hi)
    }
}

/// A monotone increasing, twice-differentiable map `φ: ℝ → ℝ`.
pub trait ScalarTransform: Send + Sync {
    /// Interval on which `φ' > 0` and the transform may be evaluated.
    fn domain(&self) -> Interval;

    /// The jet at `y`, which the caller guarantees lies in the domain.
    fn raw_jet(&self, y: f64) -> Result<Jet>;

    fn name(&self) -> String;

    fn jet(&self, y: f64) -> Result<Jet> {
        self.domain().check(y)?;
        let jet = self.raw_jet(y)?;
        if !jet.is_finite() {
            return Err(Error::eval(format!("{} is not finite at y = {y}", self.name())));
        }
        if jet.d1 <= 0.0 {
            return Err(Error::eval(format!(
                "{} has φ' = {:e} at y = {y}; the transform is numerically flat",
                self.name(),
                jet.d1
            )));
        }
        Ok(jet)
    }

    /// `φ''(y)/φ'(y)`.
    fn ratio(&self, y: f64) -> Result<f64> {
        let jet = self.jet(y)?;
        Ok(jet.d2 / jet.d1)
    }

    fn phi(&self, y: f64) -> Result<f64> {
        self.jet(y).map(|j| j.value)
    }

    fn phi_prime(&self, y: f64) -> Result<f64> {
        self.jet(y).map(|j| j.d1)
    }

    fn phi_double_prime(&self, y: f64) -> Result<f64> {
        self.jet(y).map(|j| j.d2)
    }
}

impl fmt::Debug for dyn ScalarTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarTransform({})", self.name())
    }
}

/// Parameters of the standard transformations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Table1 {
    /// `a·y + b`, `a > 0`.
    Linear { a: f64, b: f64 },
    /// `yʳ` on `y > 0`, `r > 0`.
    Polynomial { r: f64 },
    /// `exp(a·y)`, `a > 0`.
    Exponential { a: f64 },
    /// `ln(a + y)` on `y > −a`.
    Logarithmic { a: f64 },
    /// `1 / (1 + e^{−y})`.
    Sigmoid,
}

/// A validated [`Table1`] transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Transform {
    kind: Table1,
}

pub fn make_table1(kind: Table1) -> Result<Table1Transform> {
    let finite = |v: f64, what: &str| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::input(format!("{what} must be finite, got {v}")))
        }
    };
    match kind {
        Table1::Linear { a, b } => {
            finite(a, "a")?;
            finite(b, "b")?;
            if a <= 0.0 {
                return Err(Error::input(format!("linear transform needs a > 0, got {a}")));
            }
        }
        Table1::Polynomial { r } => {
            finite(r, "r")?;
            if r <= 0.0 {
                return Err(Error::input(format!("polynomial transform needs r > 0, got {r}")));
            }
        }
        Table1::Exponential { a } => {
            finite(a, "a")?;
            if a <= 0.0 {
                return Err(Error::input(format!("exponential transform needs a > 0, got {a}")));
            }
        }
        Table1::Logarithmic { a } => finite(a, "a")?,
        Table1::Sigmoid => {}
    }
    Ok(Table1Transform { kind })
}

/// `1 / (1 + e^{−y})` without overflow for large `|y|`.
pub fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

impl Table1Transform {
    pub fn kind(&self) -> Table1 {
        self.kind
    }
}

impl ScalarTransform for Table1Transform {
    fn domain(&self) -> Interval {
        match self.kind {
            Table1::Polynomial { .. } => Interval::open(0.0, f64::INFINITY),
            Table1::Logarithmic { a } => Interval::open(-a, f64::INFINITY),
            _ => Interval::REAL,
        }
    }

    fn raw_jet(&self, y: f64) -> Result<Jet> {
        Ok(match self.kind {
            Table1::Linear { a, b } => Jet {
                value: a * y + b,
                d1: a,
                d2: 0.0,
            },
            Table1::Polynomial { r } => {
                let d1 = r * y.powf(r - 1.0);
                Jet {
                    value: y.powf(r),
                    d1,
                    d2: (r - 1.0) * d1 / y,
                }
            }
            Table1::Exponential { a } => {
                let e = (a * y).exp();
                Jet {
                    value: e,
                    d1: a * e,
                    d2: a * a * e,
                }
            }
            Table1::Logarithmic { a } => {
                let s = a + y;
                Jet {
                    value: s.ln(),
                    d1: 1.0 / s,
                    d2: -1.0 / (s * s),
                }
            }
            Table1::Sigmoid => {
                let e = (-y.abs()).exp();
                let d1 = e / ((1.0 + e) * (1.0 + e));
                Jet {
                    value: sigmoid(y),
                    d1,
                    d2: -d1 * (0.5 * y).tanh(),
                }
            }
        })
    }

    fn ratio(&self, y: f64) -> Result<f64> {
        self.domain().check(y)?;
        Ok(match self.kind {
            Table1::Linear { .. } => 0.0,
            Table1::Polynomial { r } => (r - 1.0) / y,
            Table1::Exponential { a } => a,
            Table1::Logarithmic { a } => -1.0 / (a + y),
            Table1::Sigmoid => -(0.5 * y).tanh(),
        })
    }

    fn name(&self) -> String {
        match self.kind {
            Table1::Linear { a, b } => format!("linear(a={a},b={b})"),
            Table1::Polynomial { r } => format!("poly(r={r})"),
            Table1::Exponential { a } => format!("exp(a={a})"),
            Table1::Logarithmic { a } => format!("log(a={a})"),
            Table1::Sigmoid => "sigmoid".to_string(),
        }
    }
}

/// Applies the chain rule to a base evaluation:
/// `∇L = φ'∇f`, `∇²L = φ'∇²f + φ''∇f∇fᵀ`.
pub fn transform_evaluation(t: &dyn ScalarTransform, base: &Evaluation) -> Result<Evaluation> {
    let jet = t.jet(base.value)?;
    let g = &base.gradient;
    let hessian = &base.hessian * jet.d1 + (g * g.transpose()) * jet.d2;
    let out = Evaluation {
        value: jet.value,
        gradient: g * jet.d1,
        hessian,
    };
    if !out.is_finite() {
        return Err(Error::eval(format!(
            "{} produced non-finite derivatives at f = {}",
            t.name(),
            base.value
        )));
    }
    Ok(out)
}

/// `L = φ ∘ f`.
#[derive(Clone)]
pub struct TransformedLoss {
    base: Arc<dyn SmoothLoss>,
    transform: Arc<dyn ScalarTransform>,
}

pub fn compose(base: Arc<dyn SmoothLoss>, transform: Arc<dyn ScalarTransform>) -> TransformedLoss {
    TransformedLoss { base, transform }
}

impl TransformedLoss {
    pub fn base(&self) -> &Arc<dyn SmoothLoss> {
        &self.base
    }

    pub fn transform(&self) -> &Arc<dyn ScalarTransform> {
        &self.transform
    }
}

impl fmt::Debug for TransformedLoss {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransformedLoss")
            .field("base", &self.base.name())
            .field("transform", &self.transform.name())
            .finish()
    }
}

impl SmoothLoss for TransformedLoss {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        let f = self.base.value(x)?;
        self.transform.phi(f)
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        let base = self.base.evaluate(x)?;
        transform_evaluation(self.transform.as_ref(), &base)
    }

    fn minimizer(&self) -> Option<Vector> {
        self.base.minimizer()
    }

    fn min_value(&self) -> Option<f64> {
        self.base.min_value().and_then(|f| self.transform.phi(f).ok())
    }

    fn name(&self) -> String {
        format!("{}∘{}", self.transform.name(), self.base.name())
    }
}

/// `1 + (φ''/φ')(f)·‖∇f‖*²`.
pub fn scaling_factor(t: &dyn ScalarTransform, f_val: f64, dual_sq: f64) -> Result<f64> {
    Ok(1.0 + t.ratio(f_val)? * dual_sq)
}

/// The stepsize on `f` that reproduces stepsize `alpha_on_transformed` on `L`.
pub fn induced_stepsize(alpha_on_transformed: f64, scaling: f64) -> Result<f64> {
    if scaling.is_nan() || scaling.abs() <= SCALING_ZERO_TOL {
        return Err(Error::SingularScaling(scaling));
    }
    Ok(alpha_on_transformed / scaling)
}

/// The stepsize on `L` that reproduces stepsize `alpha_on_base` on `f`.
pub fn forward_stepsize(alpha_on_base: f64, scaling: f64) -> f64 {
    alpha_on_base * scaling
}
