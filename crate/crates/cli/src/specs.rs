//! Parsers for the compact loss, transform, schedule and grid strings.
//!
//! A spec is a name followed by `:`-separated `key=value` parameters, e.g.
//! `polytope:p=3:seed=7` or `linear:a=2:b=1`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use tinv_core::convexify::{exp_convexifier, grid_1d, grid_points_2d};
use tinv_core::losses::PolytopeLoss;
use tinv_core::scans::alpha_grid;
use tinv_core::{
    make_benchmark, make_counterexample, make_polynorm, make_radial, make_table1, star_transform, Benchmark, GridAxis,
    GridSpec, Matrix, QuadraticLoss, RadialLoss, RadialProfile, ScalarTransform, SmoothLoss, StepsizeSchedule, Table1,
    Vector,
};

use crate::error::{CliError, CliResult};

pub const LOSS_HELP: &str = "rosenbrock, beale, goldstein_price, cauchy1d, welsh1d, geman_mcclure1d, \
cauchy2d, welsh2d, geman_mcclure2d, quadratic[:diag=a,b,..], counterexample, \
polytope:p=P[:seed=S][:d=D][:n=N], polynorm:p=P[:diag=a,b,..]";

pub const TRANSFORM_HELP: &str = "none, linear[:a=A][:b=B], poly:r=R, exp[:a=A], log[:a=A], sigmoid, \
star:<geman_mcclure|welsh|cauchy>, expconv:c=C[:fstar=F]";

pub const SCHEDULE_HELP: &str = "const:ALPHA, armijo[:beta=B][:c1=C], induced:<schedule>, forwarded:<schedule>";

struct Params<'a> {
    spec: &'a str,
    values: BTreeMap<&'a str, &'a str>,
}

impl<'a> Params<'a> {
    fn parse(spec: &'a str, tokens: &[&'a str]) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for tok in tokens {
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("expected key=value, got '{tok}' in '{spec}'")))?;
            if values.insert(k, v).is_some() {
                return Err(CliError::usage(format!("duplicate key '{k}' in '{spec}'")));
            }
        }
        Ok(Params { spec, values })
    }

    fn f64(&mut self, key: &str) -> CliResult<Option<f64>> {
        self.values.remove(key).map(|v| parse_f64(v, self.spec)).transpose()
    }

    fn required(&mut self, key: &str) -> CliResult<f64> {
        self.f64(key)?
            .ok_or_else(|| CliError::usage(format!("missing '{key}=' in '{}'", self.spec)))
    }

    fn usize(&mut self, key: &str) -> CliResult<Option<usize>> {
        self.values
            .remove(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::usage(format!("invalid integer '{v}' in '{}'", self.spec)))
            })
            .transpose()
    }

    fn list(&mut self, key: &str) -> CliResult<Option<Vec<f64>>> {
        self.values.remove(key).map(|v| parse_list(v, self.spec)).transpose()
    }

    fn finish(self) -> CliResult<()> {
        match self.values.keys().next() {
            Some(k) => Err(CliError::usage(format!("unknown key '{k}' in '{}'", self.spec))),
            None => Ok(()),
        }
    }
}

pub fn parse_f64(tok: &str, spec: &str) -> CliResult<f64> {
    match tok.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(CliError::usage(format!("invalid number '{tok}' in '{spec}'"))),
    }
}

fn parse_list(tok: &str, spec: &str) -> CliResult<Vec<f64>> {
    tok.split(',').map(|t| parse_f64(t, spec)).collect()
}

fn split(spec: &str) -> (&str, Vec<&str>) {
    let mut parts = spec.split(':');
    let name = parts.next().unwrap_or_default();
    (name, parts.collect())
}

fn normalize(name: &str) -> String {
    name.trim().to_ascii_lowercase().replace('-', "_")
}

/// A loss from the zoo, before construction.
#[derive(Debug, Clone, PartialEq)]
pub enum LossSpec {
    Benchmark(Benchmark),
    Radial { profile: RadialProfile, dim: usize },
    Quadratic { diag: Vec<f64> },
    Counterexample,
    Polytope { p: f64, seed: u64, dim: usize, rows: usize },
    PolyNorm { p: f64, diag: Vec<f64> },
}

impl FromStr for LossSpec {
    type Err = CliError;

    fn from_str(spec: &str) -> CliResult<Self> {
        let (name, rest) = split(spec);
        let name = normalize(name);
        let mut params = Params::parse(spec, &rest)?;
        let out = match name.as_str() {
            "rosenbrock" => LossSpec::Benchmark(Benchmark::Rosenbrock),
            "beale" => LossSpec::Benchmark(Benchmark::Beale),
            "goldstein_price" | "goldsteinprice" => LossSpec::Benchmark(Benchmark::GoldsteinPrice),
            "counterexample" => LossSpec::Counterexample,
            "quadratic" => LossSpec::Quadratic {
                diag: params.list("diag")?.unwrap_or_else(|| vec![1.0, 1.0]),
            },
            "polynorm" => LossSpec::PolyNorm {
                p: params.required("p")?,
                diag: params.list("diag")?.unwrap_or_else(|| vec![1.0, 1.0]),
            },
            "polytope" => LossSpec::Polytope {
                p: params.required("p")?,
                seed: params.usize("seed")?.unwrap_or(7) as u64,
                dim: params.usize("d")?.unwrap_or(10),
                rows: params.usize("n")?.unwrap_or(20),
            },
            other => {
                let radial = other
                    .strip_suffix("1d")
                    .map(|p| (p, 1))
                    .or_else(|| other.strip_suffix("2d").map(|p| (p, 2)));
                match radial {
                    Some((p, dim)) if !p.is_empty() && p != "quadratic" => LossSpec::Radial {
                        profile: p
                            .parse()
                            .map_err(|_| CliError::usage(format!("unknown loss '{spec}'")))?,
                        dim,
                    },
                    _ => return Err(CliError::usage(format!("unknown loss '{spec}'"))),
                }
            }
        };
        params.finish()?;
        Ok(out)
    }
}

impl fmt::Display for LossSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            LossSpec::Benchmark(b) => write!(f, "{b}"),
            LossSpec::Radial { profile, dim } => write!(f, "{profile}{dim}d"),
            LossSpec::Quadratic { diag } => write!(f, "quadratic:diag={}", list(diag)),
            LossSpec::Counterexample => write!(f, "counterexample"),
            LossSpec::Polytope { p, seed, dim, rows } => write!(f, "polytope:p={p}:seed={seed}:d={dim}:n={rows}"),
            LossSpec::PolyNorm { p, diag } => write!(f, "polynorm:p={p}:diag={}", list(diag)),
        }
    }
}

impl LossSpec {
    pub fn build(&self) -> CliResult<Arc<dyn SmoothLoss>> {
        Ok(match self {
            LossSpec::Benchmark(b) => Arc::new(make_benchmark(*b)),
            LossSpec::Radial { .. } => Arc::new(self.radial().expect("radial spec")),
            LossSpec::Quadratic { diag } => Arc::new(QuadraticLoss::new(diagonal(diag))?),
            LossSpec::Counterexample => Arc::new(make_counterexample()),
            LossSpec::Polytope { p, seed, dim, rows } => Arc::new(PolytopeLoss::seeded(*dim, *rows, *p, *seed)?),
            LossSpec::PolyNorm { p, diag } => Arc::new(make_polynorm(diagonal(diag), *p)?),
        })
    }

    /// The radial loss behind a `<profile>1d` or `<profile>2d` spec.
    pub fn radial(&self) -> Option<RadialLoss> {
        match self {
            LossSpec::Radial { profile, dim } => Some(make_radial(*profile, Vector::zeros(*dim))),
            _ => None,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            LossSpec::Benchmark(_) => 2,
            LossSpec::Radial { dim, .. } => *dim,
            LossSpec::Quadratic { diag } | LossSpec::PolyNorm { diag, .. } => diag.len(),
            LossSpec::Counterexample => 1,
            LossSpec::Polytope { dim, .. } => *dim,
        }
    }
}

fn diagonal(diag: &[f64]) -> Matrix {
    Matrix::from_diagonal(&Vector::from_column_slice(diag))
}

/// A monotone scalar transform, or none.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransformSpec {
    None,
    Table1(Table1),
    Star(RadialProfile),
    ExpConv { c: f64, f_star: f64 },
}

impl FromStr for TransformSpec {
    type Err = CliError;

    fn from_str(spec: &str) -> CliResult<Self> {
        let (name, rest) = split(spec);
        let name = normalize(name);
        if name == "star" {
            let [profile] = rest.as_slice() else {
                return Err(CliError::usage(format!("expected star:<profile>, got '{spec}'")));
            };
            let profile: RadialProfile = profile
                .parse()
                .map_err(|_| CliError::usage(format!("unknown profile '{profile}' in '{spec}'")))?;
            if profile == RadialProfile::Quadratic {
                return Err(CliError::usage(format!("no star transform for '{spec}'")));
            }
            return Ok(TransformSpec::Star(profile));
        }
        let mut params = Params::parse(spec, &rest)?;
        let out = match name.as_str() {
            "none" => TransformSpec::None,
            "linear" => TransformSpec::Table1(Table1::Linear {
                a: params.f64("a")?.unwrap_or(1.0),
                b: params.f64("b")?.unwrap_or(0.0),
            }),
            "poly" | "polynomial" => TransformSpec::Table1(Table1::Polynomial {
                r: params.required("r")?,
            }),
            "exp" | "exponential" => TransformSpec::Table1(Table1::Exponential {
                a: params.f64("a")?.unwrap_or(1.0),
            }),
            "log" | "logarithmic" => TransformSpec::Table1(Table1::Logarithmic {
                a: params.f64("a")?.unwrap_or(1.0),
            }),
            "sigmoid" => TransformSpec::Table1(Table1::Sigmoid),
            "expconv" => TransformSpec::ExpConv {
                c: params.required("c")?,
                f_star: params.f64("fstar")?.unwrap_or(0.0),
            },
            _ => return Err(CliError::usage(format!("unknown transform '{spec}'"))),
        };
        params.finish()?;
        out.build()?;
        Ok(out)
    }
}

impl TransformSpec {
    pub fn build(&self) -> CliResult<Option<Arc<dyn ScalarTransform>>> {
        Ok(match *self {
            TransformSpec::None => None,
            TransformSpec::Table1(kind) => Some(Arc::new(make_table1(kind)?)),
            TransformSpec::Star(p) => Some(Arc::new(star_transform(p))),
            TransformSpec::ExpConv { c, f_star } => Some(Arc::new(exp_convexifier(c, f_star)?)),
        })
    }
}

/// A stepsize schedule, before it is bound to a transform.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    Const(f64),
    Armijo {
        beta: f64,
        c1: f64,
    },
    /// Drive `f` with the stepsize the inner schedule would use on `φ ∘ f`.
    Induced(Box<ScheduleSpec>),
    /// Drive `φ ∘ f` with the stepsize the inner schedule would use on `f`.
    Forwarded(Box<ScheduleSpec>),
}

impl FromStr for ScheduleSpec {
    type Err = CliError;

    fn from_str(spec: &str) -> CliResult<Self> {
        let (head, tail) = spec.split_once(':').unwrap_or((spec, ""));
        match normalize(head).as_str() {
            "induced" if !tail.is_empty() => Ok(ScheduleSpec::Induced(Box::new(tail.parse()?))),
            "forwarded" if !tail.is_empty() => Ok(ScheduleSpec::Forwarded(Box::new(tail.parse()?))),
            "const" | "constant" => {
                let tok = tail.strip_prefix("alpha=").unwrap_or(tail);
                if tok.is_empty() {
                    return Err(CliError::usage(format!("missing stepsize in '{spec}'")));
                }
                Ok(ScheduleSpec::Const(parse_f64(tok, spec)?))
            }
            "armijo" => {
                let rest: Vec<&str> = if tail.is_empty() {
                    Vec::new()
                } else {
                    tail.split(':').collect()
                };
                let mut params = Params::parse(spec, &rest)?;
                let out = ScheduleSpec::Armijo {
                    beta: params.f64("beta")?.unwrap_or(0.5),
                    c1: params.f64("c1")?.unwrap_or(1e-4),
                };
                params.finish()?;
                Ok(out)
            }
            _ => Err(CliError::usage(format!("unknown schedule '{spec}'"))),
        }
    }
}

impl ScheduleSpec {
    /// Whether the run iterates on `f` rather than on `φ ∘ f`.
    pub fn drives_base(&self) -> bool {
        matches!(self, ScheduleSpec::Induced(_))
    }

    pub fn build(
        &self,
        transform: Option<&Arc<dyn ScalarTransform>>,
        base: &Arc<dyn SmoothLoss>,
    ) -> CliResult<StepsizeSchedule> {
        let need = |what: &str| {
            transform
                .cloned()
                .ok_or_else(|| CliError::usage(format!("the {what} schedule needs --transform")))
        };
        let schedule = match self {
            ScheduleSpec::Const(a) => StepsizeSchedule::Constant(*a),
            ScheduleSpec::Armijo { beta, c1 } => StepsizeSchedule::Backtracking { beta: *beta, c1: *c1 },
            ScheduleSpec::Induced(inner) => StepsizeSchedule::induced(inner.build(transform, base)?, need("induced")?),
            ScheduleSpec::Forwarded(inner) => {
                StepsizeSchedule::forwarded(inner.build(transform, base)?, need("forwarded")?, base.clone())
            }
        };
        schedule.validate()?;
        Ok(schedule)
    }
}

/// A point such as `0.8` or `-0.5,0.5`.
pub fn parse_point(spec: &str) -> CliResult<Vector> {
    Ok(Vector::from_vec(parse_list(spec, spec)?))
}

fn axis_parts(part: &str, spec: &str) -> CliResult<(f64, f64, String)> {
    let toks: Vec<&str> = part.split(':').collect();
    let [lo, hi, n] = toks.as_slice() else {
        return Err(CliError::usage(format!("expected lo:hi:n, got '{part}' in '{spec}'")));
    };
    Ok((parse_f64(lo, spec)?, parse_f64(hi, spec)?, n.to_string()))
}

/// A cell grid `lo:hi:n` or `lo:hi:nxlo:hi:n`.
pub fn parse_grid(spec: &str) -> CliResult<GridSpec> {
    let axis = |part: &str| -> CliResult<GridAxis> {
        let (lo, hi, n) = axis_parts(part, spec)?;
        let n: usize = n
            .parse()
            .map_err(|_| CliError::usage(format!("invalid cell count '{n}' in '{spec}'")))?;
        Ok(GridAxis::new(lo, hi, n)?)
    };
    match spec.split_once('x') {
        Some((a, b)) => Ok(GridSpec {
            x: axis(a)?,
            y: Some(axis(b)?),
        }),
        None => Ok(GridSpec {
            x: axis(spec)?,
            y: None,
        }),
    }
}

/// A point grid `lo:hi:step` or `lo:hi:stepxlo:hi:step`, endpoints included.
pub fn parse_step_grid(spec: &str) -> CliResult<Vec<Vector>> {
    let axis = |part: &str| -> CliResult<Vec<f64>> {
        let (lo, hi, step) = axis_parts(part, spec)?;
        Ok(grid_1d(lo, hi, parse_f64(&step, spec)?)?)
    };
    match spec.split_once('x') {
        Some((a, b)) => Ok(grid_points_2d(&axis(a)?, &axis(b)?)),
        None => Ok(axis(spec)?.into_iter().map(|v| Vector::from_element(1, v)).collect()),
    }
}

/// A stepsize list `lo:hi:step`.
pub fn parse_alphas(spec: &str) -> CliResult<Vec<f64>> {
    let (lo, hi, step) = axis_parts(spec, spec)?;
    Ok(alpha_grid(lo, hi, parse_f64(&step, spec)?)?)
}
