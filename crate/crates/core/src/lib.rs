//! Damped Newton methods under monotone loss transformations.
//!
//! The crate provides a small loss zoo with analytic derivatives, monotone
//! scalar transforms `φ` and the composed losses `φ ∘ f`, a damped Newton
//! driver whose stepsizes can be converted between `f` and `φ ∘ f` through
//! the scaling factor `1 + (φ''/φ')(f)·‖∇f‖*²`, convexifying and
//! star-convexifying transforms, and grid experiments built on top of them.
//!
//! ```
//! use std::sync::Arc;
//! use tinv_core::{
//!     make_table1, run_equivalence, Benchmark, NewtonConfig, SmoothLoss, StepsizeSchedule,
//!     Table1, Vector, make_benchmark,
//! };
//!
//! let f: Arc<dyn SmoothLoss> = Arc::new(make_benchmark(Benchmark::Rosenbrock));
//! let t = Arc::new(make_table1(Table1::Exponential { a: 0.1 }).unwrap());
//! let x0 = Vector::from_column_slice(&[-0.5, 0.5]);
//! let report = run_equivalence(f, t, &StepsizeSchedule::Constant(0.5), &x0, &NewtonConfig::default()).unwrap();
//! assert!(report.max_deviation < 1e-8);
//! ```

pub mod convexify;
pub mod error;
pub mod fdcheck;
pub mod linalg;
pub mod losses;
pub mod newton;
pub mod quadrature;
pub mod scans;
pub mod starconvex;
pub mod transforms;

pub use convexify::{
    bordered_hessian, check_pseudoconvex, compact_constant, exp_convexifier, nested_bound_convexifier, schaible_r,
    schaible_r_from_parts, verify_convexified, ConvexifierBound, ConvexityCheck, ExpConvexifier, NestedConvexifier,
    PseudoconvexReport, SchaibleMode,
};
pub use error::{Error, Result};
pub use linalg::{
    dual_norm_sq, min_eigenvalue, pinv_solve, principal_minors, DualNormResult, Matrix, PrincipalMinor, Vector,
};
pub use losses::{
    as_1d_loss, make_benchmark, make_counterexample, make_polynorm, make_polytope, make_radial, Benchmark, Evaluation,
    PolytopeLoss, QuadraticLoss, RadialLoss, RadialProfile, SmoothLoss,
};
pub use newton::{
    lm_invariance_residual, lm_step, run_equivalence, run_newton, EquivalenceReport, IterateRecord, IterateTrace,
    LmResidual, NewtonConfig, StepsizeSchedule, Termination,
};
pub use scans::{best_fixed_stepsize, scan_convergence, scan_sign_flip, step_alignment, GridAxis, GridScan, GridSpec};
pub use starconvex::{
    convergence_radius, convexity_neighborhood, convexity_radius, erf, radial_star_loss, star_transform, star_value,
    RadialStarLoss, RadiusEstimate, StarTransform,
};
pub use transforms::{
    compose, forward_stepsize, induced_stepsize, make_table1, scaling_factor, Interval, Jet, ScalarTransform, Table1,
    Table1Transform, TransformedLoss,
};
