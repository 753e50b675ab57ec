//! Fixtures shared by the criterion benches.

use std::sync::Arc;

use tinv_core::{
    make_benchmark, make_table1, Benchmark, GridAxis, GridSpec, Matrix, NewtonConfig, PolytopeLoss, ScalarTransform,
    SmoothLoss, Table1, Vector,
};

pub fn rosenbrock() -> Arc<dyn SmoothLoss> {
    Arc::new(make_benchmark(Benchmark::Rosenbrock))
}

pub fn exp_transform() -> Arc<dyn ScalarTransform> {
    Arc::new(make_table1(Table1::Exponential { a: 0.1 }).expect("valid parameters"))
}

pub fn poly_transform(r: f64) -> Arc<dyn ScalarTransform> {
    Arc::new(make_table1(Table1::Polynomial { r }).expect("valid parameters"))
}

pub fn polytope(p: f64) -> PolytopeLoss {
    PolytopeLoss::seeded(10, 20, p, 7).expect("valid parameters")
}

pub fn config() -> NewtonConfig {
    NewtonConfig::default()
}

pub fn square_grid(n: usize) -> GridSpec {
    let axis = GridAxis::new(-4.0, 4.0, n).expect("valid axis");
    GridSpec { x: axis, y: Some(axis) }
}

/// A well-conditioned symmetric matrix of size `d` with a matching right-hand side.
pub fn spd_system(d: usize) -> (Matrix, Vector) {
    let a = Matrix::from_fn(d, d, |i, j| ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5);
    let h = &a * a.transpose() + Matrix::identity(d, d) * d as f64;
    let g = Vector::from_fn(d, |i, _| (i as f64 + 1.0).sin());
    (h, g)
}
