//! Grid experiments: sign-flip maps, convergence maps and fixed-stepsize
//! sweeps.

use std::sync::Arc;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::losses::SmoothLoss;
use crate::newton::{run_newton, NewtonConfig, StepsizeSchedule, Termination};
use crate::transforms::{compose, scaling_factor, transform_evaluation, ScalarTransform, SCALING_ZERO_TOL};

/// Distance to the minimizer below which a scan run counts as converged.
pub const SCAN_CONVERGENCE_TOL: f64 = 1e-6;
/// Fraction of sign-flip cells cross-checked against actual steps.
pub const CROSS_CHECK_FRACTION: f64 = 0.01;

/// `n` equal cells on `[lo, hi]`, evaluated at their centres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && hi > lo) || n == 0 {
            return Err(Error::input(format!("invalid grid axis {lo}:{hi}:{n}")));
        }
        Ok(GridAxis { lo, hi, n })
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + (i as f64 + 0.5) * (self.hi - self.lo) / self.n as f64
    }
}

/// A 1D grid (`y = None`) or a 2D tensor grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x: GridAxis,
    pub y: Option<GridAxis>,
}

impl GridSpec {
    pub fn dim(&self) -> usize {
        if self.y.is_some() {
            2
        } else {
            1
        }
    }

    pub fn len(&self) -> usize {
        self.x.n * self.y.map_or(1, |y| y.n)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell indices and centres, `x` varying fastest.
    pub fn cells(&self) -> Vec<(usize, usize, Vector)> {
        let ny = self.y.map_or(1, |y| y.n);
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..ny {
            for ix in 0..self.x.n {
                let point = match self.y {
                    Some(y) => Vector::from_column_slice(&[self.x.center(ix), y.center(iy)]),
                    None => Vector::from_element(1, self.x.center(ix)),
                };
                out.push((ix, iy, point));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub ix: usize,
    pub iy: usize,
    pub point: Vector,
    pub scaling: Option<f64>,
    /// −1, 0 or +1.
    pub scaling_sign: Option<i8>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub final_value: Option<f64>,
    pub error: Option<String>,
}

impl Cell {
    fn empty(ix: usize, iy: usize, point: Vector) -> Self {
        Cell {
            ix,
            iy,
            point,
            scaling: None,
            scaling_sign: None,
            converged: None,
            iterations: None,
            final_value: None,
            error: None,
        }
    }
}

/// Comparison of the scaling-factor sign with the actual step directions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepAlignment {
    pub scaling: f64,
    /// `⟨[∇²f]†∇f, [∇²L]†∇L⟩`.
    pub dot: f64,
}

impl StepAlignment {
    pub fn agrees(&self) -> bool {
        (self.scaling > 0.0) == (self.dot > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridScan {
    pub spec: GridSpec,
    pub cells: Vec<Cell>,
    /// Sign cross-checks on sampled cells as `(cell index, alignment)`.
    pub cross_checks: Vec<(usize, StepAlignment)>,
}

impl GridScan {
    pub fn count_sign(&self, sign: i8) -> usize {
        self.cells.iter().filter(|c| c.scaling_sign == Some(sign)).count()
    }

    pub fn count_converged(&self) -> usize {
        self.cells.iter().filter(|c| c.converged == Some(true)).count()
    }

    pub fn count_errors(&self) -> usize {
        self.cells.iter().filter(|c| c.error.is_some()).count()
    }
}

/// Newton directions on `f` and on `t ∘ f` at `x` and the scaling factor.
pub fn step_alignment(
    loss: &dyn SmoothLoss,
    t: &dyn ScalarTransform,
    x: &Vector,
    rel_tol: f64,
) -> Result<StepAlignment> {
    let e = loss.evaluate(x)?;
    let (step_f, dual) = linalg::newton_direction(&e.hessian, &e.gradient, rel_tol)?;
    let scaling = scaling_factor(t, e.value, dual.value)?;
    let l = transform_evaluation(t, &e)?;
    let (step_l, _) = linalg::newton_direction(&l.hessian, &l.gradient, rel_tol)?;
    Ok(StepAlignment {
        scaling,
        dot: step_f.dot(&step_l),
    })
}

fn sign_of(s: f64) -> i8 {
    if s > SCALING_ZERO_TOL {
        1
    } else if s < -SCALING_ZERO_TOL {
        -1
    } else {
        0
    }
}

/// Sign of the scaling factor at every cell centre.
///
/// One percent of the cells (at least one), chosen with `seed`, are
/// cross-checked against the inner product of the actual Newton steps.
pub fn scan_sign_flip(
    loss: &dyn SmoothLoss,
    t: &dyn ScalarTransform,
    grid: &GridSpec,
    rel_tol: f64,
    seed: u64,
) -> Result<GridScan> {
    if grid.dim() != loss.dim() {
        return Err(Error::input(format!(
            "grid is {}-dimensional but the loss has dimension {}",
            grid.dim(),
            loss.dim()
        )));
    }
    let cells: Vec<Cell> = grid
        .cells()
        .into_par_iter()
        .map(|(ix, iy, point)| {
            let mut cell = Cell::empty(ix, iy, point);
            let outcome = loss.evaluate(&cell.point).and_then(|e| {
                let dual = linalg::dual_norm_sq(&e.hessian, &e.gradient, rel_tol)?;
                scaling_factor(t, e.value, dual.value).map(|s| (s, e.value))
            });
            match outcome {
                Ok((s, f)) => {
                    cell.scaling = Some(s);
                    cell.scaling_sign = Some(sign_of(s));
                    cell.final_value = Some(f);
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();

    let n_checks = ((cells.len() as f64 * CROSS_CHECK_FRACTION).ceil() as usize).clamp(1, cells.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, cells.len(), n_checks).into_vec();
    picked.sort_unstable();
    let cross_checks = picked
        .into_iter()
        .filter(|&i| cells[i].error.is_none())
        .filter_map(|i| step_alignment(loss, t, &cells[i].point, rel_tol).ok().map(|a| (i, a)))
        .collect();
    Ok(GridScan {
        spec: *grid,
        cells,
        cross_checks,
    })
}

/// Runs unit-step Newton from every cell centre, on `t ∘ loss` when a
/// transform is given.
///
/// A cell converges when the run terminates as converged within
/// `SCAN_CONVERGENCE_TOL` of the minimizer of `loss`.
pub fn scan_convergence(
    loss: Arc<dyn SmoothLoss>,
    t: Option<Arc<dyn ScalarTransform>>,
    grid: &GridSpec,
    cfg: &NewtonConfig,
) -> Result<GridScan> {
    cfg.validate()?;
    if grid.dim() != loss.dim() {
        return Err(Error::input(format!(
            "grid is {}-dimensional but the loss has dimension {}",
            grid.dim(),
            loss.dim()
        )));
    }
    let center = loss
        .minimizer()
        .ok_or_else(|| Error::Precondition(format!("{} has no known minimizer", loss.name())))?;
    let driven: Arc<dyn SmoothLoss> = match t {
        Some(t) => Arc::new(compose(loss, t)),
        None => loss,
    };
    let schedule = StepsizeSchedule::Constant(1.0);
    let cells = grid
        .cells()
        .into_par_iter()
        .map(|(ix, iy, point)| {
            let mut cell = Cell::empty(ix, iy, point);
            match run_newton(driven.as_ref(), &schedule, &cell.point, cfg) {
                Ok(trace) => {
                    let last = trace.last();
                    cell.converged = Some(
                        trace.termination == Termination::Converged
                            && (&last.x - &center).norm() <= SCAN_CONVERGENCE_TOL,
                    );
                    cell.iterations = Some(trace.iterations);
                    cell.final_value = Some(last.value);
                    cell.error = trace.error;
                }
                Err(e) => cell.error = Some(e.to_string()),
            }
            cell
        })
        .collect();
    Ok(GridScan {
        spec: *grid,
        cells,
        cross_checks: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub alpha: f64,
    pub termination: Termination,
    pub iterations: usize,
    pub final_grad_norm: f64,
}

impl SweepEntry {
    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepsizeSweep {
    pub best_alpha: f64,
    pub iterations: usize,
    pub entries: Vec<SweepEntry>,
}

/// The constant stepsize converging in the fewest iterations from `x0`.
///
/// Ties go to the smaller final gradient norm, then to the smaller stepsize;
/// non-converging stepsizes rank last.
pub fn best_fixed_stepsize(
    loss: &dyn SmoothLoss,
    x0: &Vector,
    alphas: &[f64],
    cfg: &NewtonConfig,
) -> Result<StepsizeSweep> {
    if alphas.is_empty() {
        return Err(Error::input("the stepsize list is empty"));
    }
    let entries = alphas
        .par_iter()
        .map(|&alpha| {
            let trace = run_newton(loss, &StepsizeSchedule::Constant(alpha), x0, cfg)?;
            Ok(SweepEntry {
                alpha,
                termination: trace.termination,
                iterations: trace.iterations,
                final_grad_norm: trace.last().grad_norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = entries
        .iter()
        .min_by(|a, b| {
            b.converged()
                .cmp(&a.converged())
                .then(a.iterations.cmp(&b.iterations))
                .then(a.final_grad_norm.total_cmp(&b.final_grad_norm))
                .then(a.alpha.total_cmp(&b.alpha))
        })
        .expect("entries is non-empty");
    Ok(StepsizeSweep {
        best_alpha: best.alpha,
        iterations: best.iterations,
        entries,
    })
}

/// `lo, lo + step, …, hi` (inclusive within half a step).
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::input(format!("invalid stepsize grid {lo}:{hi}:{step}")));
    }
    let n = ((hi - lo) / step + 0.5).floor() as usize;
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}
