use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

use super::{check_dim, m2, v2, Evaluation, SmoothLoss};

/// The two-dimensional benchmark objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Benchmark {
    Rosenbrock,
    Beale,
    GoldsteinPrice,
}

impl Benchmark {
    pub const ALL: [Benchmark; 3] = [Benchmark::Rosenbrock, Benchmark::Beale, Benchmark::GoldsteinPrice];

    pub fn minimizer(self) -> (f64, f64) {
        match self {
            Benchmark::Rosenbrock => (1.0, 1.0),
            Benchmark::Beale => (3.0, 0.5),
            Benchmark::GoldsteinPrice => (0.0, -1.0),
        }
    }

    pub fn min_value(self) -> f64 {
        match self {
            Benchmark::Rosenbrock | Benchmark::Beale => 0.0,
            Benchmark::GoldsteinPrice => 3.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Benchmark::Rosenbrock => "rosenbrock",
            Benchmark::Beale => "beale",
            Benchmark::GoldsteinPrice => "goldstein_price",
        }
    }
}

impl fmt::Display for Benchmark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Benchmark {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "rosenbrock" => Ok(Benchmark::Rosenbrock),
            "beale" => Ok(Benchmark::Beale),
            "goldstein_price" | "goldsteinprice" => Ok(Benchmark::GoldsteinPrice),
            other => Err(Error::input(format!("unknown benchmark loss '{other}'"))),
        }
    }
}

/// A benchmark objective with analytic gradient and Hessian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkLoss {
    kind: Benchmark,
}

pub fn make_benchmark(kind: Benchmark) -> BenchmarkLoss {
    BenchmarkLoss { kind }
}

impl BenchmarkLoss {
    pub fn kind(&self) -> Benchmark {
        self.kind
    }
}

fn rosenbrock(x: f64, y: f64) -> (f64, Vector, Matrix) {
    let a = 1.0 - x;
    let b = y - x * x;
    let value = a * a + 100.0 * b * b;
    let grad = v2(-2.0 * a - 400.0 * x * b, 200.0 * b);
    let hess = m2(2.0 - 400.0 * y + 1200.0 * x * x, -400.0 * x, 200.0);
    (value, grad, hess)
}

fn beale(x: f64, y: f64) -> (f64, Vector, Matrix) {
    // f = Σ tᵢ², tᵢ = cᵢ − x + x yⁱ
    const C: [f64; 3] = [1.5, 2.25, 2.625];
    let mut value = 0.0;
    let mut grad = Vector::zeros(2);
    let mut hess = Matrix::zeros(2, 2);
    for (k, c) in C.iter().enumerate() {
        let i = (k + 1) as i32;
        let fi = i as f64;
        let t = c - x + x * y.powi(i);
        let tx = y.powi(i) - 1.0;
        let ty = fi * x * y.powi(i - 1);
        let txy = fi * y.powi(i - 1);
        let tyy = if i >= 2 {
            fi * (fi - 1.0) * x * y.powi(i - 2)
        } else {
            0.0
        };
        value += t * t;
        grad[0] += 2.0 * t * tx;
        grad[1] += 2.0 * t * ty;
        hess[(0, 0)] += 2.0 * tx * tx;
        hess[(0, 1)] += 2.0 * (tx * ty + t * txy);
        hess[(1, 1)] += 2.0 * (ty * ty + t * tyy);
    }
    hess[(1, 0)] = hess[(0, 1)];
    (value, grad, hess)
}

/// `(value, gradient, hessian)` of `1 + u²P` style factors.
struct Factor {
    value: f64,
    grad: Vector,
    hess: Matrix,
}

/// `c + s² q(x, y)` where `s` is affine with gradient `ds` and `q` quadratic.
fn factor(c: f64, s: f64, ds: &Vector, q: f64, dq: &Vector, hq: &Matrix) -> Factor {
    let value = c + s * s * q;
    let grad = ds * (2.0 * s * q) + dq * (s * s);
    let hess = ds * ds.transpose() * (2.0 * q) + (ds * dq.transpose() + dq * ds.transpose()) * (2.0 * s) + hq * (s * s);
    Factor { value, grad, hess }
}

fn goldstein_price(x: f64, y: f64) -> (f64, Vector, Matrix) {
    let u = x + y + 1.0;
    let p = 19.0 - 14.0 * x + 3.0 * x * x - 14.0 * y + 6.0 * x * y + 3.0 * y * y;
    let dp_common = -14.0 + 6.0 * x + 6.0 * y;
    let a = factor(1.0, u, &v2(1.0, 1.0), p, &v2(dp_common, dp_common), &m2(6.0, 6.0, 6.0));

    let w = 2.0 * x - 3.0 * y;
    let q = 18.0 - 32.0 * x + 12.0 * x * x + 48.0 * y - 36.0 * x * y + 27.0 * y * y;
    let b = factor(
        30.0,
        w,
        &v2(2.0, -3.0),
        q,
        &v2(-32.0 + 24.0 * x - 36.0 * y, 48.0 - 36.0 * x + 54.0 * y),
        &m2(24.0, -36.0, 54.0),
    );

    let value = a.value * b.value;
    let grad = &b.grad * a.value + &a.grad * b.value;
    let hess = &b.hess * a.value + &a.hess * b.value + &a.grad * b.grad.transpose() + &b.grad * a.grad.transpose();
    (value, grad, hess)
}

impl BenchmarkLoss {
    fn parts(&self, x: &Vector) -> Result<(f64, Vector, Matrix)> {
        check_dim(x, 2)?;
        let (a, b) = (x[0], x[1]);
        Ok(match self.kind {
            Benchmark::Rosenbrock => rosenbrock(a, b),
            Benchmark::Beale => beale(a, b),
            Benchmark::GoldsteinPrice => goldstein_price(a, b),
        })
    }
}

impl SmoothLoss for BenchmarkLoss {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &Vector) -> Result<f64> {
        self.parts(x).map(|p| p.0)
    }

    fn evaluate(&self, x: &Vector) -> Result<Evaluation> {
        let (value, gradient, hessian) = self.parts(x)?;
        Ok(Evaluation {
            value,
            gradient,
            hessian,
        })
    }

    fn minimizer(&self) -> Option<Vector> {
        let (a, b) = self.kind.minimizer();
        Some(v2(a, b))
    }

    fn min_value(&self) -> Option<f64> {
        Some(self.kind.min_value())
    }

    fn name(&self) -> String {
        self.kind.as_str().into()
    }
}
