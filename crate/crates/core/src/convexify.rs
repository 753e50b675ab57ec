//! Pseudoconvexity checks, the Schaible coefficient `r(x)`, and monotone
//! transforms that convexify pseudoconvex losses.

use std::fmt;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::losses::SmoothLoss;
use crate::quadrature::adaptive_simpson;
use crate::transforms::{transform_evaluation, Interval, Jet, ScalarTransform};

/// Relative curvature slack below which a tangent direction counts as a violation.
pub const CURVATURE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    /// `vᵀ∇f = 0` but `vᵀ∇²f v` is negative beyond the slack.
    Curvature { direction: Vector, curvature: f64 },
    /// A near-stationary point whose value is above the sampled minimum.
    Stationary { value: f64, sampled_min: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub point: Vector,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PseudoconvexReport {
    pub samples: usize,
    /// Sampled points at which the loss could not be evaluated.
    pub skipped: usize,
    pub violations: Vec<Violation>,
}

impl PseudoconvexReport {
    pub fn is_pseudoconvex(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Samples `n_samples` points uniformly from `sample_box` and tests the
/// second-order pseudoconvexity criterion on `n_tangents` random tangent
/// directions per point.
pub fn check_pseudoconvex(
    loss: &dyn SmoothLoss,
    sample_box: &[(f64, f64)],
    n_samples: usize,
    n_tangents: usize,
    seed: u64,
) -> Result<PseudoconvexReport> {
    if n_samples == 0 || n_tangents == 0 {
        return Err(Error::input("n_samples and n_tangents must be at least 1"));
    }
    if sample_box.len() != loss.dim() {
        return Err(Error::input(format!(
            "sample box has {} axes, loss has dimension {}",
            sample_box.len(),
            loss.dim()
        )));
    }
    let mut axes = Vec::with_capacity(sample_box.len());
    for &(lo, hi) in sample_box {
        axes.push(Uniform::new_inclusive(lo, hi).map_err(|e| Error::input(e.to_string()))?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut evaluated = Vec::with_capacity(n_samples);
    let mut skipped = 0;
    for _ in 0..n_samples {
        let x = Vector::from_iterator(axes.len(), axes.iter().map(|u| u.sample(&mut rng)));
        match loss.evaluate(&x) {
            Ok(e) if e.is_finite() => evaluated.push((x, e)),
            _ => skipped += 1,
        }
    }
    let sampled_min = evaluated.iter().map(|(_, e)| e.value).fold(f64::INFINITY, f64::min);

    let mut violations = Vec::new();
    let d = loss.dim();
    for (x, e) in &evaluated {
        let g = &e.gradient;
        let gnorm = g.norm();
        let h_norm = linalg::spectral_norm(&e.hessian)?;
        for _ in 0..n_tangents {
            let mut v = Vector::from_iterator(d, (0..d).map(|_| StandardNormal.sample(&mut rng)));
            if gnorm > 0.0 {
                let unit = g / gnorm;
                for _ in 0..2 {
                    let c = v.dot(&unit);
                    v.axpy(-c, &unit, 1.0);
                }
            }
            let vnorm = v.norm();
            if vnorm == 0.0 || v.dot(g).abs() > 1e-12 * vnorm * gnorm.max(1.0) {
                continue;
            }
            v /= vnorm;
            let curvature = v.dot(&(&e.hessian * &v));
            if curvature < -CURVATURE_SLACK * h_norm {
                violations.push(Violation {
                    point: x.clone(),
                    kind: ViolationKind::Curvature {
                        direction: v,
                        curvature,
                    },
                });
                break;
            }
        }
        if gnorm < 1e-8 && e.value > sampled_min + 1e-6 {
            violations.push(Violation {
                point: x.clone(),
                kind: ViolationKind::Stationary {
                    value: e.value,
                    sampled_min,
                },
            });
        }
    }
    Ok(PseudoconvexReport {
        samples: n_samples,
        skipped,
        violations,
    })
}

/// `B(x) = [[0, ∇fᵀ], [∇f, ∇²f]]`.
pub fn bordered_hessian(g: &Vector, h: &Matrix) -> Result<Matrix> {
    let d = g.len();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::input("gradient and Hessian dimensions differ"));
    }
    let mut b = Matrix::zeros(d + 1, d + 1);
    for i in 0..d {
        b[(0, i + 1)] = g[i];
        b[(i + 1, 0)] = g[i];
        for j in 0..d {
            b[(i + 1, j + 1)] = h[(i, j)];
        }
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SchaibleMode {
    /// `max{0, −1/(∇fᵀ∇²f∇f)}` when `det ∇²f < 0`.
    Strict,
    /// `max{0, M_I/D_I : D_I < 0}` over all nonempty index sets `I`.
    #[default]
    General,
}

/// `r(x)` from a gradient and Hessian.
///
/// `M_I` is the principal minor of `∇²f` on `I` and `D_I` the principal minor
/// of the bordered Hessian on `{0} ∪ I`.
pub fn schaible_r_from_parts(g: &Vector, h: &Matrix, mode: SchaibleMode) -> Result<f64> {
    let d = g.len();
    if d > linalg::MAX_MINOR_DIM {
        return Err(Error::Capability(format!(
            "Schaible coefficient is limited to dimension {}, got {d}",
            linalg::MAX_MINOR_DIM
        )));
    }
    let h = linalg::symmetrized(h)?;
    match mode {
        SchaibleMode::Strict => {
            let all: Vec<usize> = (0..d).collect();
            if linalg::principal_minor(&h, &all) < 0.0 {
                let q = g.dot(&(&h * g));
                if q != 0.0 {
                    return Ok((-1.0 / q).max(0.0));
                }
            }
            Ok(0.0)
        }
        SchaibleMode::General => {
            let b = bordered_hessian(g, &h)?;
            let mut r: f64 = 0.0;
            for minor in linalg::principal_minors(&h)? {
                let bordered: Vec<usize> = std::iter::once(0).chain(minor.indices.iter().map(|i| i + 1)).collect();
                let det_d = linalg::principal_minor(&b, &bordered);
                if det_d < 0.0 {
                    r = r.max(minor.det / det_d);
                }
            }
            Ok(r)
        }
    }
}

pub fn schaible_r(loss: &dyn SmoothLoss, x: &Vector, mode: SchaibleMode) -> Result<f64> {
    let e = loss.evaluate(x)?;
    schaible_r_from_parts(&e.gradient, &e.hessian, mode)
}

/// A bound on the convexifying ratio `φ''/φ'`.
#[derive(Clone)]
pub enum ConvexifierBound {
    PointwiseR(Vec<(Vector, f64)>),
    CompactConstant(f64),
    GlobalH(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ConvexifierBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConvexifierBound::PointwiseR(v) => write!(f, "PointwiseR({} samples)", v.len()),
            ConvexifierBound::CompactConstant(c) => write!(f, "CompactConstant({c})"),
            ConvexifierBound::GlobalH(_) => f.write_str("GlobalH(..)"),
        }
    }
}

/// `r(x)` at every grid point.
pub fn pointwise_r(loss: &dyn SmoothLoss, grid: &[Vector], mode: SchaibleMode) -> Result<ConvexifierBound> {
    let samples = grid
        .iter()
        .map(|x| schaible_r(loss, x, mode).map(|r| (x.clone(), r)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvexifierBound::PointwiseR(samples))
}

/// `c = max r(x)` over the grid points in the sublevel set `{f ≤ f(x0)}`.
pub fn compact_constant(loss: &dyn SmoothLoss, x0: &Vector, grid: &[Vector], mode: SchaibleMode) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::input("grid must be non-empty"));
    }
    let f0 = loss.value(x0)?;
    let level = f0 + 1e-12 * (1.0 + f0.abs());
    let mut c: f64 = 0.0;
    let mut hits = 0;
    for x in grid {
        let e = loss.evaluate(x)?;
        if e.value <= level {
            hits += 1;
            c = c.max(schaible_r_from_parts(&e.gradient, &e.hessian, mode)?);
        }
    }
    if hits == 0 {
        return Err(Error::Precondition(
            "no grid point lies in the sublevel set of x0".into(),
        ));
    }
    Ok(c)
}

/// `φ(y) = (e^{c(y − f*)} − 1)/c`, or `y − f*` when `c = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpConvexifier {
    c: f64,
    f_star: f64,
}

pub fn exp_convexifier(c: f64, f_star: f64) -> Result<ExpConvexifier> {
    if !(c >= 0.0 && c.is_finite()) || !f_star.is_finite() {
        return Err(Error::input(format!(
            "exp convexifier needs finite c ≥ 0 and f*, got c = {c}, f* = {f_star}"
        )));
    }
    Ok(ExpConvexifier { c, f_star })
}

impl ExpConvexifier {
    pub fn c(&self) -> f64 {
        self.c
    }
}

impl ScalarTransform for ExpConvexifier {
    fn domain(&self) -> Interval {
        Interval::at_least(self.f_star)
    }

    fn raw_jet(&self, y: f64) -> Result<Jet> {
        let s = y - self.f_star;
        if self.c == 0.0 {
            return Ok(Jet {
                value: s,
                d1: 1.0,
                d2: 0.0,
            });
        }
        let d1 = (self.c * s).exp();
        Ok(Jet {
            value: (self.c * s).exp_m1() / self.c,
            d1,
            d2: self.c * d1,
        })
    }

    fn ratio(&self, y: f64) -> Result<f64> {
        self.domain().check(y)?;
        Ok(self.c)
    }

    fn name(&self) -> String {
        format!("expconv(c={},f*={})", self.c, self.f_star)
    }
}

/// Knots in the cumulative tables of [`NestedConvexifier`].
pub const NESTED_KNOTS: usize = 64;
const NESTED_TOL: f64 = 1e-12;

/// `φ'(y) = exp ∫_{f*}^y h`, `φ(y) = ∫_{f*}^y φ'`, built from cumulative
/// quadrature tables on `[f*, y_max]`.
#[derive(Clone)]
pub struct NestedConvexifier {
    h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    f_star: f64,
    y_max: f64,
    knots: Vec<f64>,
    /// `∫_{f*}^{knot} h`.
    log_d1: Vec<f64>,
    /// `φ(knot)`.
    values: Vec<f64>,
}

impl fmt::Debug for NestedConvexifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NestedConvexifier")
            .field("f_star", &self.f_star)
            .field("y_max", &self.y_max)
            .finish()
    }
}

pub fn nested_bound_convexifier(
    h: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    f_star: f64,
    y_max: f64,
) -> Result<NestedConvexifier> {
    if !(f_star.is_finite() && y_max.is_finite() && y_max > f_star) {
        return Err(Error::input(format!("need finite f* < y_max, got [{f_star}, {y_max}]")));
    }
    let step = (y_max - f_star) / NESTED_KNOTS as f64;
    let knots: Vec<f64> = (0..=NESTED_KNOTS)
        .map(|i| {
            if i == NESTED_KNOTS {
                y_max
            } else {
                f_star + i as f64 * step
            }
        })
        .collect();
    let mut log_d1 = vec![0.0];
    let mut values = vec![0.0];
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let base = *log_d1.last().unwrap();
        let h_ref = h.as_ref();
        let inner = |s: f64| -> f64 {
            adaptive_simpson(h_ref, a, s, NESTED_TOL)
                .map(|v| (base + v).exp())
                .unwrap_or(f64::NAN)
        };
        values.push(values.last().unwrap() + adaptive_simpson(inner, a, b, NESTED_TOL)?);
        log_d1.push(base + adaptive_simpson(h_ref, a, b, NESTED_TOL)?);
    }
    Ok(NestedConvexifier {
        h,
        f_star,
        y_max,
        knots,
        log_d1,
        values,
    })
}

impl NestedConvexifier {
    fn segment(&self, y: f64) -> usize {
        let step = (self.y_max - self.f_star) / NESTED_KNOTS as f64;
        (((y - self.f_star) / step).floor() as usize).min(NESTED_KNOTS - 1)
    }
}

impl ScalarTransform for NestedConvexifier {
    fn domain(&self) -> Interval {
        Interval::closed(self.f_star, self.y_max)
    }

    fn raw_jet(&self, y: f64) -> Result<Jet> {
        let i = self.segment(y);
        let a = self.knots[i];
        let base = self.log_d1[i];
        let h = self.h.as_ref();
        let log_d1 = base + adaptive_simpson(h, a, y, NESTED_TOL)?;
        let inner = |s: f64| -> f64 {
            adaptive_simpson(h, a, s, NESTED_TOL)
                .map(|v| (base + v).exp())
                .unwrap_or(f64::NAN)
        };
        let value = self.values[i] + adaptive_simpson(inner, a, y, NESTED_TOL)?;
        let d1 = log_d1.exp();
        Ok(Jet {
            value,
            d1,
            d2: h(y) * d1,
        })
    }

    fn ratio(&self, y: f64) -> Result<f64> {
        self.domain().check(y)?;
        Ok((self.h)(y))
    }

    fn name(&self) -> String {
        format!("nested(f*={},y_max={})", self.f_star, self.y_max)
    }
}

/// Result of checking `∇²(φ ∘ f) ⪰ 0` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexityCheck {
    pub min_eigenvalue: f64,
    pub argmin: Vector,
    pub max_hessian_norm: f64,
    /// Grid points at which `φ ∘ f` could not be evaluated.
    pub skipped: usize,
}

impl ConvexityCheck {
    pub fn threshold(&self) -> f64 {
        -1e-8 * (1.0 + self.max_hessian_norm)
    }

    pub fn passed(&self) -> bool {
        self.min_eigenvalue >= self.threshold()
    }
}

/// Smallest eigenvalue of `∇²(φ ∘ f)` over the grid.
pub fn verify_convexified(loss: &dyn SmoothLoss, t: &dyn ScalarTransform, grid: &[Vector]) -> Result<ConvexityCheck> {
    let mut out = ConvexityCheck {
        min_eigenvalue: f64::INFINITY,
        argmin: Vector::zeros(loss.dim()),
        max_hessian_norm: 0.0,
        skipped: 0,
    };
    for x in grid {
        let l = match loss.evaluate(x).and_then(|e| transform_evaluation(t, &e)) {
            Ok(l) => l,
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        let m = linalg::min_eigenvalue(&l.hessian)?;
        out.max_hessian_norm = out.max_hessian_norm.max(linalg::spectral_norm(&l.hessian)?);
        if m < out.min_eigenvalue {
            out.min_eigenvalue = m;
            out.argmin = x.clone();
        }
    }
    if out.skipped == grid.len() {
        return Err(Error::Precondition(
            "the transformed loss is undefined on every grid point".into(),
        ));
    }
    Ok(out)
}

/// `lo, lo + step, …` up to `hi` inclusive (the last point is snapped to `hi`).
pub fn grid_1d(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::input(format!("invalid grid {lo}:{hi} with step {step}")));
    }
    let n = ((hi - lo) / step).round() as usize;
    Ok((0..=n)
        .map(|i| if i == n { hi } else { lo + i as f64 * step })
        .collect())
}

/// One-dimensional grid as points.
pub fn grid_points_1d(lo: f64, hi: f64, step: f64) -> Result<Vec<Vector>> {
    Ok(grid_1d(lo, hi, step)?
        .into_iter()
        .map(|x| Vector::from_element(1, x))
        .collect())
}

/// Tensor grid of two axes, `x` varying fastest.
pub fn grid_points_2d(x: &[f64], y: &[f64]) -> Vec<Vector> {
    y.iter()
        .flat_map(|&b| x.iter().map(move |&a| Vector::from_column_slice(&[a, b])))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::{make_counterexample, QuadraticLoss, RadialLoss, RadialProfile};
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_column_slice(xs)
    }

    #[test]
    fn quadratic_is_pseudoconvex() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let f = QuadraticLoss::new(a).unwrap();
        let rep = check_pseudoconvex(&f, &[(-1.0, 1.0), (-1.0, 1.0)], 200, 5, 1).unwrap();
        assert!(rep.is_pseudoconvex());
    }

    #[test]
    fn cauchy_is_pseudoconvex() {
        let f = RadialLoss::one_dim(RadialProfile::Cauchy);
        let rep = check_pseudoconvex(&f, &[(-3.0, 3.0)], 300, 3, 2).unwrap();
        assert!(rep.is_pseudoconvex(), "{:?}", rep.violations.first());
    }

    #[test]
    fn saddle_is_not() {
        let f = QuadraticLoss::new(Matrix::from_diagonal(&v(&[2.0, -2.0]))).unwrap();
        let rep = check_pseudoconvex(&f, &[(-1.0, 1.0), (-1.0, 1.0)], 100, 4, 3).unwrap();
        assert!(!rep.is_pseudoconvex());
    }

    #[test]
    fn bordered_layout() {
        let b = bordered_hessian(&v(&[1.0, 2.0]), &Matrix::from_diagonal(&v(&[3.0, 4.0]))).unwrap();
        assert_eq!(b[(0, 0)], 0.0);
        assert_eq!(b[(0, 2)], 2.0);
        assert_eq!(b[(2, 0)], 2.0);
        assert_eq!(b[(2, 2)], 4.0);
    }

    #[test]
    fn cauchy_schaible_values() {
        let f = RadialLoss::one_dim(RadialProfile::Cauchy);
        for mode in [SchaibleMode::Strict, SchaibleMode::General] {
            assert_eq!(schaible_r(&f, &v(&[1.0]), mode).unwrap(), 0.0);
            assert_eq!(schaible_r(&f, &v(&[0.3]), mode).unwrap(), 0.0);
        }
        let strict = schaible_r(&f, &v(&[2.0]), SchaibleMode::Strict).unwrap();
        assert_relative_eq!(strict, 625.0 / 96.0, max_relative = 1e-12);
        let general = schaible_r(&f, &v(&[2.0]), SchaibleMode::General).unwrap();
        assert_relative_eq!(general, 0.375, max_relative = 1e-12);
    }

    #[test]
    fn exp_convexifier_basics() {
        let t = exp_convexifier(1.0, 0.0).unwrap();
        let j = t.jet(0.0).unwrap();
        assert_eq!((j.value, j.d1), (0.0, 1.0));
        assert_relative_eq!(t.phi(1.0).unwrap(), std::f64::consts::E - 1.0, max_relative = 1e-15);
        let small = exp_convexifier(1e-8, 0.5).unwrap();
        assert!((small.phi(2.0).unwrap() - 1.5).abs() < 1e-6);
        let zero = exp_convexifier(0.0, 0.5).unwrap();
        assert_eq!(zero.phi(2.0).unwrap(), 1.5);
        assert!(exp_convexifier(-1.0, 0.0).is_err());
        assert!(t.jet(-0.1).is_err());
    }

    #[test]
    fn nested_constant_zero() {
        let t = nested_bound_convexifier(Arc::new(|_| 0.0), 1.0, 4.0).unwrap();
        for y in [1.0, 1.7, 3.2, 4.0] {
            assert!((t.phi(y).unwrap() - (y - 1.0)).abs() < 1e-12);
        }
        assert!(matches!(t.jet(4.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn nested_reciprocal() {
        let t = nested_bound_convexifier(Arc::new(|s| 1.0 / (1.0 + s)), 0.0, 3.0).unwrap();
        for y in [0.0, 0.4, 1.3, 2.9] {
            let j = t.jet(y).unwrap();
            assert!((j.d1 - (1.0 + y)).abs() < 1e-10);
            assert!((j.value - (y + y * y / 2.0)).abs() < 1e-10);
            assert!((j.d2 - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn counterexample_resists_convexification() {
        let f = make_counterexample();
        let grid = grid_points_1d(-0.5, 1.5, 1e-2).unwrap();
        let t = exp_convexifier(2.0, 0.0).unwrap();
        assert!(!verify_convexified(&f, &t, &grid).unwrap().passed());
    }

    #[test]
    fn grid_endpoints() {
        let g = grid_1d(-2.0, 2.0, 1e-3).unwrap();
        assert_eq!(g.len(), 4001);
        assert_eq!(*g.last().unwrap(), 2.0);
        assert_eq!(g[0], -2.0);
        assert!(grid_1d(0.0, 1.0, 0.0).is_err());
    }
}
