//! Damped Newton iteration `x⁺ = x − α·[∇²f]†∇f`, stepsize schedules, the
//! transformation-equivalence harness and the Levenberg–Marquardt
//! counter-demonstration.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::losses::{Evaluation, SmoothLoss};
use crate::transforms::{
    compose, forward_stepsize, induced_stepsize, scaling_factor, transform_evaluation, ScalarTransform,
    SCALING_ZERO_TOL,
};

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonConfig {
    pub max_iters: usize,
    /// Converged once `‖∇f‖ ≤ gtol`.
    pub gtol: f64,
    /// Converged once `‖x − x*‖ ≤ xtol` (when `x*` is known).
    pub xtol: f64,
    /// Diverged once `‖x‖` exceeds this.
    pub divergence_radius: f64,
    /// Pseudoinverse cutoff passed to [`linalg::newton_direction`].
    pub rel_tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        NewtonConfig {
            max_iters: 100,
            gtol: 1e-10,
            xtol: 1e-10,
            divergence_radius: 1e6,
            rel_tol: linalg::DEFAULT_PINV_REL_TOL,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("gtol", self.gtol),
            ("xtol", self.xtol),
            ("divergence_radius", self.divergence_radius),
            ("rel_tol", self.rel_tol),
        ];
        for (name, v) in positive {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::input(format!("{name} must be positive, got {v}")));
            }
        }
        if self.max_iters == 0 {
            return Err(Error::input("max_iters must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Termination {
    Converged,
    Diverged,
    MaxIters,
    SingularScaling,
    DomainError,
    /// Backtracking found no stepsize satisfying the Armijo condition.
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::Diverged => "diverged",
            Termination::MaxIters => "max_iters",
            Termination::SingularScaling => "singular_scaling",
            Termination::DomainError => "domain_error",
            Termination::LineSearchFailed => "line_search_failed",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// State at iterate `k`. The step fields are `None` on the final record.
#[derive(Debug, Clone, PartialEq)]
pub struct IterateRecord {
    pub k: usize,
    pub x: Vector,
    pub value: f64,
    pub grad_norm: f64,
    pub alpha: Option<f64>,
    pub scaling: Option<f64>,
    pub dual_sq: Option<f64>,
    pub in_range: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateTrace {
    pub records: Vec<IterateRecord>,
    pub termination: Termination,
    pub iterations: usize,
    /// Set when some iterate violated `∇f ∈ Range(∇²f)`; the run continued
    /// with the pseudoinverse step.
    pub range_violation: bool,
    /// Message of the error that ended the run, if any.
    pub error: Option<String>,
}

impl IterateTrace {
    pub fn last(&self) -> &IterateRecord {
        self.records.last().expect("a trace always holds x0")
    }

    pub fn iterates(&self) -> impl Iterator<Item = &Vector> {
        self.records.iter().map(|r| &r.x)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }

    /// Smallest `|scaling|` over recorded steps, if any step recorded one.
    pub fn min_abs_scaling(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.scaling)
            .map(f64::abs)
            .reduce(f64::min)
    }
}

/// Information available to a schedule when choosing `α_k`.
pub struct StepContext<'a> {
    pub loss: &'a dyn SmoothLoss,
    pub x: &'a Vector,
    pub eval: &'a Evaluation,
    /// `[∇²f]†∇f`; the iterate moves by `−α·direction`.
    pub direction: &'a Vector,
    pub dual_sq: f64,
    pub rel_tol: f64,
}

/// A stepsize schedule for the damped Newton method.
#[derive(Clone)]
pub enum StepsizeSchedule {
    Constant(f64),
    /// Runs on `f`: takes the stepsize `inner` would use on `L = φ ∘ f` and
    /// divides by the scaling factor.
    Induced {
        inner: Box<StepsizeSchedule>,
        transform: Arc<dyn ScalarTransform>,
    },
    /// Runs on `L = φ ∘ f`: takes the stepsize `inner` would use on `f` and
    /// multiplies by the scaling factor at the same point.
    Forwarded {
        inner: Box<StepsizeSchedule>,
        transform: Arc<dyn ScalarTransform>,
        base: Arc<dyn SmoothLoss>,
    },
    /// Armijo backtracking from `α = 1` on the driven loss.
    Backtracking {
        beta: f64,
        c1: f64,
    },
}

/// Maximum number of Armijo reductions before giving up.
pub const MAX_BACKTRACKS: usize = 60;

impl StepsizeSchedule {
    pub fn armijo() -> Self {
        StepsizeSchedule::Backtracking { beta: 0.5, c1: 1e-4 }
    }

    pub fn induced(inner: StepsizeSchedule, transform: Arc<dyn ScalarTransform>) -> Self {
        StepsizeSchedule::Induced {
            inner: Box::new(inner),
            transform,
        }
    }

    pub fn forwarded(inner: StepsizeSchedule, transform: Arc<dyn ScalarTransform>, base: Arc<dyn SmoothLoss>) -> Self {
        StepsizeSchedule::Forwarded {
            inner: Box::new(inner),
            transform,
            base,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            StepsizeSchedule::Constant(a) if !a.is_finite() => {
                Err(Error::input(format!("constant stepsize must be finite, got {a}")))
            }
            StepsizeSchedule::Backtracking { beta, c1 } => {
                if !(*beta > 0.0 && *beta < 1.0) || !(*c1 > 0.0 && *c1 < 1.0) {
                    Err(Error::input(format!(
                        "backtracking needs beta, c1 in (0, 1), got {beta}, {c1}"
                    )))
                } else {
                    Ok(())
                }
            }
            StepsizeSchedule::Induced { inner, .. } | StepsizeSchedule::Forwarded { inner, .. } => inner.validate(),
            _ => Ok(()),
        }
    }

    /// Returns `(α_k, scaling factor)`; the factor is `None` for schedules
    /// that do not involve a transform.
    pub fn stepsize(&self, ctx: &StepContext<'_>) -> Result<(f64, Option<f64>)> {
        match self {
            StepsizeSchedule::Constant(a) => Ok((*a, None)),
            StepsizeSchedule::Induced { inner, transform } => {
                let (alpha, _) = inner.stepsize(ctx)?;
                let s = scaling_factor(transform.as_ref(), ctx.eval.value, ctx.dual_sq)?;
                Ok((induced_stepsize(alpha, s)?, Some(s)))
            }
            StepsizeSchedule::Forwarded { inner, transform, base } => {
                let eval = base.evaluate(ctx.x)?;
                let (direction, dual) = linalg::newton_direction(&eval.hessian, &eval.gradient, ctx.rel_tol)?;
                let base_ctx = StepContext {
                    loss: base.as_ref(),
                    x: ctx.x,
                    eval: &eval,
                    direction: &direction,
                    dual_sq: dual.value,
                    rel_tol: ctx.rel_tol,
                };
                let (alpha, _) = inner.stepsize(&base_ctx)?;
                let s = scaling_factor(transform.as_ref(), eval.value, dual.value)?;
                if s.is_nan() || s.abs() <= SCALING_ZERO_TOL {
                    return Err(Error::SingularScaling(s));
                }
                Ok((forward_stepsize(alpha, s), Some(s)))
            }
            StepsizeSchedule::Backtracking { beta, c1 } => {
                let slope = ctx.eval.gradient.dot(ctx.direction);
                let mut alpha = 1.0;
                for _ in 0..MAX_BACKTRACKS {
                    let trial = ctx.x - ctx.direction * alpha;
                    if let Ok(v) = ctx.loss.value(&trial) {
                        if v <= ctx.eval.value - c1 * alpha * slope {
                            return Ok((alpha, None));
                        }
                    }
                    alpha *= beta;
                }
                Err(Error::Numerical(format!(
                    "no Armijo stepsize after {MAX_BACKTRACKS} reductions"
                )))
            }
        }
    }
}

impl fmt::Debug for StepsizeSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepsizeSchedule::Constant(a) => write!(f, "Constant({a})"),
            StepsizeSchedule::Induced { inner, transform } => {
                write!(f, "Induced({inner:?}, {})", transform.name())
            }
            StepsizeSchedule::Forwarded { inner, transform, base } => {
                write!(f, "Forwarded({inner:?}, {}, {})", transform.name(), base.name())
            }
            StepsizeSchedule::Backtracking { beta, c1 } => {
                write!(f, "Backtracking(beta={beta}, c1={c1})")
            }
        }
    }
}

fn termination_for(err: &Error) -> Termination {
    match err {
        Error::SingularScaling(_) => Termination::SingularScaling,
        Error::Numerical(_) => Termination::LineSearchFailed,
        _ => Termination::DomainError,
    }
}

fn blank_record(k: usize, x: Vector) -> IterateRecord {
    IterateRecord {
        k,
        x,
        value: f64::NAN,
        grad_norm: f64::NAN,
        alpha: None,
        scaling: None,
        dual_sq: None,
        in_range: None,
    }
}

/// Runs the damped Newton method from `x0`.
///
/// Failures after the start (domain errors, singular scaling, divergence)
/// are recorded in the trace's termination; only invalid configuration or a
/// malformed `x0` is returned as an error.
pub fn run_newton(
    loss: &dyn SmoothLoss,
    schedule: &StepsizeSchedule,
    x0: &Vector,
    cfg: &NewtonConfig,
) -> Result<IterateTrace> {
    cfg.validate()?;
    schedule.validate()?;
    if x0.len() != loss.dim() || x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::input(format!(
            "x0 must be a finite point of dimension {}",
            loss.dim()
        )));
    }
    let minimizer = loss.minimizer();
    let mut records = Vec::new();
    let mut x = x0.clone();
    let mut range_violation = false;

    let finish = |records: Vec<IterateRecord>, termination, range_violation, error: Option<String>| {
        let iterations = records.len() - 1;
        Ok(IterateTrace {
            records,
            termination,
            iterations,
            range_violation,
            error,
        })
    };

    for k in 0.. {
        if x.iter().any(|v| !v.is_finite()) || x.norm() > cfg.divergence_radius {
            records.push(blank_record(k, x));
            return finish(records, Termination::Diverged, range_violation, None);
        }
        let eval = match loss.evaluate(&x) {
            Ok(e) => e,
            Err(e) => {
                records.push(blank_record(k, x));
                return finish(records, Termination::DomainError, range_violation, Some(e.to_string()));
            }
        };
        let grad_norm = eval.gradient.norm();
        let mut record = IterateRecord {
            value: eval.value,
            grad_norm,
            ..blank_record(k, x.clone())
        };
        if !eval.is_finite() {
            records.push(record);
            return finish(records, Termination::Diverged, range_violation, None);
        }
        let near_min = minimizer.as_ref().is_some_and(|m| (&x - m).norm() <= cfg.xtol);
        if grad_norm <= cfg.gtol || near_min {
            records.push(record);
            return finish(records, Termination::Converged, range_violation, None);
        }
        if k == cfg.max_iters {
            records.push(record);
            return finish(records, Termination::MaxIters, range_violation, None);
        }
        let (direction, dual) = match linalg::newton_direction(&eval.hessian, &eval.gradient, cfg.rel_tol) {
            Ok(v) => v,
            Err(e) => {
                records.push(record);
                return finish(records, Termination::DomainError, range_violation, Some(e.to_string()));
            }
        };
        range_violation |= !dual.in_range;
        record.dual_sq = Some(dual.value);
        record.in_range = Some(dual.in_range);
        let ctx = StepContext {
            loss,
            x: &x,
            eval: &eval,
            direction: &direction,
            dual_sq: dual.value,
            rel_tol: cfg.rel_tol,
        };
        let (alpha, scaling) = match schedule.stepsize(&ctx) {
            Ok(v) => v,
            Err(e) => {
                records.push(record);
                return finish(records, termination_for(&e), range_violation, Some(e.to_string()));
            }
        };
        record.alpha = Some(alpha);
        record.scaling = scaling;
        records.push(record);
        x = &x - direction * alpha;
    }
    unreachable!("the iteration loop only exits by returning")
}

/// Outcome of running Newton on `f` and on `L = φ ∘ f` side by side.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub trace_f: IterateTrace,
    pub trace_l: IterateTrace,
    /// `max_k ‖x_k(f) − x_k(L)‖ / (1 + ‖x_k(f)‖)` over the common prefix.
    pub max_deviation: f64,
    /// Number of iterates in the common prefix.
    pub common: usize,
}

impl EquivalenceReport {
    /// Smallest `|scaling|` along the run on `L`.
    pub fn min_abs_scaling(&self) -> Option<f64> {
        self.trace_l.min_abs_scaling()
    }
}

/// Runs Newton on `loss` with `base_schedule` and on `t ∘ loss` with the
/// forwarded schedule, then compares iterates.
///
/// A singular scaling factor on the `L` run truncates the `f` trace at the
/// same iterate.
pub fn run_equivalence(
    loss: Arc<dyn SmoothLoss>,
    t: Arc<dyn ScalarTransform>,
    base_schedule: &StepsizeSchedule,
    x0: &Vector,
    cfg: &NewtonConfig,
) -> Result<EquivalenceReport> {
    let mut trace_f = run_newton(loss.as_ref(), base_schedule, x0, cfg)?;
    let transformed = compose(loss.clone(), t.clone());
    let forwarded = StepsizeSchedule::forwarded(base_schedule.clone(), t, loss);
    let trace_l = run_newton(&transformed, &forwarded, x0, cfg)?;
    if trace_l.termination == Termination::SingularScaling && trace_f.records.len() > trace_l.records.len() {
        trace_f.records.truncate(trace_l.records.len());
        if let Some(last) = trace_f.records.last_mut() {
            last.alpha = None;
            last.scaling = None;
        }
        trace_f.iterations = trace_f.records.len() - 1;
        trace_f.termination = Termination::SingularScaling;
    }
    let common = trace_f.records.len().min(trace_l.records.len());
    let max_deviation = trace_f
        .iterates()
        .zip(trace_l.iterates())
        .map(|(a, b)| (a - b).norm() / (1.0 + a.norm()))
        .fold(0.0, f64::max);
    Ok(EquivalenceReport {
        trace_f,
        trace_l,
        max_deviation,
        common,
    })
}

/// The Levenberg–Marquardt displacement `(H + λI)⁻¹g`.
pub fn lm_step_from_parts(h: &Matrix, g: &Vector, lambda: f64) -> Result<Vector> {
    let d = g.len();
    let reg = linalg::symmetrized(h)? + Matrix::identity(d, d) * lambda;
    let eig = linalg::eigen(&reg)?;
    let scale = eig.eigenvalues.amax().max(1.0);
    let smallest = eig.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    if smallest <= 1e-14 * scale {
        return Err(Error::Numerical(format!(
            "regularized Hessian is singular at lambda = {lambda}"
        )));
    }
    reg.lu()
        .solve(g)
        .ok_or_else(|| Error::Numerical(format!("regularized Hessian is singular at lambda = {lambda}")))
}

pub fn lm_step(loss: &dyn SmoothLoss, x: &Vector, lambda: f64) -> Result<Vector> {
    let e = loss.evaluate(x)?;
    lm_step_from_parts(&e.hessian, &e.gradient, lambda)
}

/// Best achievable agreement between an LM step on `f` and on `φ ∘ f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmResidual {
    pub residual: f64,
    pub lambda_phi: f64,
}

/// Largest `|λ_φ|` searched by [`lm_invariance_residual`].
pub const LM_LAMBDA_BOUND: f64 = 1e6;

/// Precomputed pieces of the residual `λ_φ ↦ ‖p_f − (∇²L + λ_φ I)⁻¹∇L‖`.
pub struct LmProblem {
    target: Vector,
    h_l: Matrix,
    g_l: Vector,
}

impl LmProblem {
    /// Checks the preconditions and prepares the residual at `x`.
    pub fn new(loss: &dyn SmoothLoss, t: &dyn ScalarTransform, x: &Vector, lambda: f64) -> Result<Self> {
        if loss.dim() < 2 {
            return Err(Error::Precondition(
                "the demonstration needs dimension at least 2".into(),
            ));
        }
        let base = loss.evaluate(x)?;
        let g = &base.gradient;
        let h = linalg::symmetrized(&base.hessian)?;
        let gg = g.norm_squared();
        let hg = &h * g;
        let off = &hg - g * (g.dot(&hg) / gg);
        let h_norm = linalg::spectral_norm(&h)?;
        if gg == 0.0 || off.norm() <= 1e-8 * h_norm.max(f64::MIN_POSITIVE) * gg.sqrt() {
            return Err(Error::Precondition(
                "the gradient is (numerically) an eigenvector of the Hessian".into(),
            ));
        }
        let target = lm_step_from_parts(&h, g, lambda)?;
        let l = transform_evaluation(t, &base)?;
        Ok(LmProblem {
            target,
            h_l: l.hessian,
            g_l: l.gradient,
        })
    }

    /// Residual at `λ_φ`; `+∞` where the regularized Hessian is singular.
    pub fn residual(&self, lambda_phi: f64) -> f64 {
        match lm_step_from_parts(&self.h_l, &self.g_l, lambda_phi) {
            Ok(p) => (&self.target - p).norm(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Candidate `λ_φ` values: zero and `±10^e` for `e` in `[−8, 6]`, 40 per decade.
fn log_bracket() -> Vec<f64> {
    let mut pts = Vec::new();
    let per_decade = 40;
    for i in 0..=(14 * per_decade) {
        let e = -8.0 + i as f64 / per_decade as f64;
        pts.push(10f64.powf(e).min(LM_LAMBDA_BOUND));
    }
    let mut all: Vec<f64> = pts.iter().rev().map(|v| -v).collect();
    all.push(0.0);
    all.extend(pts);
    all
}

fn golden_section<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol * (1.0 + c.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Minimizes `‖lm_step(f, x, λ) − lm_step(φ∘f, x, λ_φ)‖` over scalar
/// `λ_φ ∈ [−10⁶, 10⁶]`.
///
/// A log-spaced scan locates the best few brackets, each of which is then
/// refined by golden-section search to relative width `1e-10`. A clearly
/// positive residual certifies that no scalar regularization on `L`
/// reproduces the step on `f`.
pub fn lm_invariance_residual(
    loss: &dyn SmoothLoss,
    t: &dyn ScalarTransform,
    x: &Vector,
    lambda: f64,
) -> Result<LmResidual> {
    let problem = LmProblem::new(loss, t, x, lambda)?;
    let f = |l: f64| problem.residual(l);
    let grid = log_bracket();
    let values: Vec<f64> = grid.iter().map(|&l| f(l)).collect();
    let mut local: Vec<usize> = (0..grid.len())
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { values[i - 1] };
            let right = values.get(i + 1).copied().unwrap_or(f64::INFINITY);
            values[i].is_finite() && values[i] <= left && values[i] <= right
        })
        .collect();
    local.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    local.truncate(4);
    let mut best = LmResidual {
        residual: f64::INFINITY,
        lambda_phi: f64::NAN,
    };
    for i in local {
        let lo = grid[i.saturating_sub(1)];
        let hi = grid[(i + 1).min(grid.len() - 1)];
        let (l, r) = golden_section(&f, lo, hi, 1e-10);
        let (l, r) = if values[i] < r { (grid[i], values[i]) } else { (l, r) };
        if r < best.residual {
            best = LmResidual {
                residual: r,
                lambda_phi: l,
            };
        }
    }
    if !best.residual.is_finite() {
        return Err(Error::Numerical(
            "LM residual is singular on the whole search bracket".into(),
        ));
    }
    Ok(best)
}
