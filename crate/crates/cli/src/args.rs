use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tinv_core::{NewtonConfig, SchaibleMode};

use crate::error::CliResult;
use crate::specs::{LossSpec, ScheduleSpec, TransformSpec};

const AFTER_HELP: &str = "\
Losses:
  rosenbrock, beale, goldstein_price, cauchy1d, welsh1d, geman_mcclure1d,
  cauchy2d, welsh2d, geman_mcclure2d, quadratic[:diag=a,b,..], counterexample,
  polytope:p=P[:seed=S][:d=D][:n=N], polynorm:p=P[:diag=a,b,..]

Transforms:
  none, linear[:a=A][:b=B], poly:r=R, exp[:a=A], log[:a=A], sigmoid,
  star:<geman_mcclure|welsh|cauchy>, expconv:c=C[:fstar=F]

Schedules:
  const:ALPHA, armijo[:beta=B][:c1=C], induced:<schedule>, forwarded:<schedule>
  induced runs on the loss itself with the stepsize the inner schedule would
  take on the transformed loss; forwarded runs on the transformed loss.

Recipes:
  fig1, fig2, fig3, fig5, table1_check, table3, polytope_sweep, lemma3_demo

Grids:
  cells lo:hi:n or lo:hi:nxlo:hi:n; point grids lo:hi:step[xlo:hi:step]

Exit codes:
  0 success, 2 usage, 3 numerical failure, 4 I/O";

/// Damped Newton experiments under monotone loss transformations.
#[derive(Debug, Parser)]
#[command(name = "tinv", version, after_help = AFTER_HELP)]
pub struct Cli {
    /// Seed for random instances and sampled cross-checks.
    #[arg(long, global = true, default_value_t = 7)]
    pub seed: u64,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true, env = "TINV_OUT_DIR", default_value = ".")]
    pub out_dir: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct NewtonOpts {
    #[arg(long, default_value_t = 100)]
    pub max_iters: usize,
    /// Gradient-norm tolerance.
    #[arg(long, default_value_t = 1e-10)]
    pub gtol: f64,
    /// Distance-to-minimizer tolerance (when the minimizer is known).
    #[arg(long, default_value_t = 1e-10)]
    pub xtol: f64,
    /// A run diverges once ‖x‖ exceeds this radius.
    #[arg(long, default_value_t = 1e6)]
    pub divergence_radius: f64,
    /// Relative eigenvalue cutoff of the pseudoinverse.
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
}

impl NewtonOpts {
    pub fn config(&self) -> CliResult<NewtonConfig> {
        let cfg = NewtonConfig {
            max_iters: self.max_iters,
            gtol: self.gtol,
            xtol: self.xtol,
            divergence_radius: self.divergence_radius,
            rel_tol: self.rel_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    General,
    Strict,
}

impl From<Mode> for SchaibleMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::General => SchaibleMode::General,
            Mode::Strict => SchaibleMode::Strict,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Recipe {
    /// Cauchy from 0.8: plain Newton, Newton on the star transform, induced stepsizes.
    Fig1,
    /// Sign of the scaling factor under f^r on the three benchmarks.
    Fig2,
    /// Unit-step convergence maps under f^r on Beale and Goldstein–Price.
    Fig3,
    /// Sign of the scaling factor under ln(a + f) on the three benchmarks.
    Fig5,
    /// Equivalence runs for every Table 1 transform.
    Table1Check,
    /// Newton convergence radii of the robust losses and their star transforms.
    Table3,
    /// Best constant stepsize on seeded polytope instances, p = 2..5.
    PolytopeSweep,
    /// Levenberg–Marquardt regularization does not transfer through φ.
    Lemma3Demo,
}

impl Recipe {
    pub fn name(self) -> &'static str {
        match self {
            Recipe::Fig1 => "fig1",
            Recipe::Fig2 => "fig2",
            Recipe::Fig3 => "fig3",
            Recipe::Fig5 => "fig5",
            Recipe::Table1Check => "table1_check",
            Recipe::Table3 => "table3",
            Recipe::PolytopeSweep => "polytope_sweep",
            Recipe::Lemma3Demo => "lemma3_demo",
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run damped Newton and write the iterate trace.
    Run {
        #[arg(long)]
        loss: LossSpec,
        #[arg(long, default_value = "none")]
        transform: TransformSpec,
        #[arg(long, default_value = "const:1")]
        schedule: ScheduleSpec,
        /// Start point, e.g. 0.8 or -0.5,0.5.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        #[command(flatten)]
        newton: NewtonOpts,
        #[arg(long, default_value = "trace.csv")]
        out: PathBuf,
    },
    /// Compute the convexifying constant on the sublevel set of x0.
    Convexify {
        #[arg(long)]
        loss: LossSpec,
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Point grid lo:hi:step (or lo:hi:stepxlo:hi:step in 2D).
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value_t = Mode::General)]
        mode: Mode,
        #[arg(long, default_value = "convexify.csv")]
        out: PathBuf,
    },
    /// Largest |x0| from which unit-step Newton converges on a 1D loss.
    Radius {
        #[arg(long)]
        loss: LossSpec,
        /// Use the star transform of the radial loss.
        #[arg(long)]
        transformed: bool,
        /// Initial bracket for the bisection.
        #[arg(long, default_value_t = 0.5)]
        bracket: f64,
        #[command(flatten)]
        newton: NewtonOpts,
        #[arg(long, default_value = "radius.txt")]
        out: PathBuf,
    },
    /// Check the star transform of a 1D radial loss at sampled points.
    Starcheck {
        #[arg(long)]
        loss: LossSpec,
        #[arg(long, default_value_t = 50)]
        points: usize,
        #[arg(long, default_value = "starcheck.csv")]
        out: PathBuf,
    },
    /// Map the sign of the scaling factor over a grid.
    ScanFlip {
        #[arg(long)]
        loss: LossSpec,
        #[arg(long)]
        transform: TransformSpec,
        #[arg(long, allow_hyphen_values = true, default_value = "-4:4:200x-4:4:200")]
        grid: String,
        #[arg(long, default_value_t = 1e-10)]
        rel_tol: f64,
        #[arg(long, default_value = "flip.csv")]
        out: PathBuf,
    },
    /// Map unit-step Newton convergence over a grid.
    ScanConv {
        #[arg(long)]
        loss: LossSpec,
        #[arg(long, default_value = "none")]
        transform: TransformSpec,
        #[arg(long, allow_hyphen_values = true, default_value = "-4:4:200x-4:4:200")]
        grid: String,
        #[command(flatten)]
        newton: NewtonOpts,
        #[arg(long, default_value = "conv.csv")]
        out: PathBuf,
    },
    /// Iterations to convergence for each constant stepsize.
    SweepAlpha {
        #[arg(long)]
        loss: LossSpec,
        #[arg(long, allow_hyphen_values = true, default_value = "0.1:4.0:0.05")]
        alphas: String,
        /// Start point; defaults to 10 in every coordinate.
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[command(flatten)]
        newton: NewtonOpts,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
    },
    /// Reproduce a figure or table into the output directory.
    Recipe {
        #[arg(value_enum)]
        name: Recipe,
        /// Cells per axis for the grid recipes.
        #[arg(long, default_value_t = 200)]
        resolution: usize,
    },
}
