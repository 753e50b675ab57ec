use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tinv_core::linalg::spectral_norm;
use tinv_core::{
    best_fixed_stepsize, compact_constant, compose, convergence_radius, convexity_radius, min_eigenvalue,
    radial_star_loss, run_newton, scan_convergence, scan_sign_flip, schaible_r, star_value, RadiusEstimate,
    ScalarTransform, SmoothLoss, Vector,
};

use crate::args::{Cli, Command, NewtonOpts};
use crate::error::{CliError, CliResult};
use crate::output::{header, num, opt, write_csv, write_scan, write_sweep, write_text, write_trace, ScanKind};
use crate::recipes;
use crate::specs::{parse_alphas, parse_grid, parse_point, parse_step_grid, LossSpec, ScheduleSpec, TransformSpec};

/// Where relative output paths land, and the seed for sampled checks.
#[derive(Debug, Clone)]
pub struct Context {
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl Context {
    pub fn path(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.out_dir.join(p)
        }
    }
}

/// Runs a parsed command line, passing each summary line to `emit`.
pub fn execute(cli: Cli, emit: &mut dyn FnMut(&str)) -> CliResult<()> {
    let ctx = Context {
        out_dir: cli.out_dir,
        seed: cli.seed,
    };
    let lines = match cli.command {
        Command::Run {
            loss,
            transform,
            schedule,
            x0,
            newton,
            out,
        } => run(&ctx, &loss, transform, &schedule, &x0, &newton, &out),
        Command::Convexify {
            loss,
            x0,
            grid,
            mode,
            out,
        } => convexify(&ctx, &loss, &x0, &grid, mode.into(), &out),
        Command::Radius {
            loss,
            transformed,
            bracket,
            newton,
            out,
        } => radius(&ctx, &loss, transformed, bracket, &newton, &out),
        Command::Starcheck { loss, points, out } => starcheck(&ctx, &loss, points, &out),
        Command::ScanFlip {
            loss,
            transform,
            grid,
            rel_tol,
            out,
        } => scan_flip(&ctx, &loss, transform, &grid, rel_tol, &out),
        Command::ScanConv {
            loss,
            transform,
            grid,
            newton,
            out,
        } => scan_conv(&ctx, &loss, transform, &grid, &newton, &out),
        Command::SweepAlpha {
            loss,
            alphas,
            x0,
            newton,
            out,
        } => sweep_alpha(&ctx, &loss, &alphas, x0.as_deref(), &newton, &out),
        Command::Recipe { name, resolution } => return recipes::run_recipe(&ctx, name, resolution, emit),
    }?;
    for l in &lines {
        emit(l);
    }
    Ok(())
}

fn point_for(loss: &dyn SmoothLoss, spec: &str) -> CliResult<Vector> {
    let x = parse_point(spec)?;
    if x.len() != loss.dim() {
        return Err(CliError::usage(format!(
            "start '{spec}' has {} coordinates but {} is {}-dimensional",
            x.len(),
            loss.name(),
            loss.dim()
        )));
    }
    Ok(x)
}

fn run(
    ctx: &Context,
    loss: &LossSpec,
    transform: TransformSpec,
    schedule: &ScheduleSpec,
    x0: &str,
    newton: &NewtonOpts,
    out: &Path,
) -> CliResult<Vec<String>> {
    let cfg = newton.config()?;
    let base = loss.build()?;
    let t = transform.build()?;
    let x0 = point_for(base.as_ref(), x0)?;
    let sched = schedule.build(t.as_ref(), &base)?;
    let driven: Arc<dyn SmoothLoss> = match (&t, schedule.drives_base()) {
        (Some(t), false) => Arc::new(compose(base.clone(), t.clone())),
        _ => base.clone(),
    };
    let trace = run_newton(driven.as_ref(), &sched, &x0, &cfg)?;
    let path = ctx.path(out);
    write_trace(&path, &trace)?;
    let last = trace.last();
    let mut line = format!(
        "{}: {} after {} iterations, f = {}, x = [{}]",
        driven.name(),
        trace.termination,
        trace.iterations,
        num(last.value),
        last.x.iter().map(|&v| num(v)).collect::<Vec<_>>().join(", ")
    );
    if let Some(e) = &trace.error {
        line.push_str(&format!(" ({e})"));
    }
    Ok(vec![line, format!("wrote {}", path.display())])
}

fn convexify(
    ctx: &Context,
    loss: &LossSpec,
    x0: &str,
    grid: &str,
    mode: tinv_core::SchaibleMode,
    out: &Path,
) -> CliResult<Vec<String>> {
    let f = loss.build()?;
    let x0 = point_for(f.as_ref(), x0)?;
    let points = parse_step_grid(grid)?;
    if points.first().map(|p| p.len()) != Some(f.dim()) {
        return Err(CliError::usage(format!(
            "grid '{grid}' does not match the dimension of {}",
            f.name()
        )));
    }
    let c = compact_constant(f.as_ref(), &x0, &points, mode)?;
    let f0 = f.value(&x0)?;
    let level = f0 + 1e-12 * (1.0 + f0.abs());
    let dim = f.dim();
    let mut cols: Vec<String> = (0..dim).map(|i| format!("x_{i}")).collect();
    cols.extend(header(&[
        "f",
        "r",
        "min_eig_before",
        "min_eig_after",
        "c",
        "in_sublevel",
        "error",
    ]));
    let mut rows = Vec::with_capacity(points.len());
    let mut worst: Option<(f64, Vector)> = None;
    for x in &points {
        let mut row: Vec<String> = x.iter().map(|&v| num(v)).collect();
        let eval = f.evaluate(x).map_err(CliError::from).and_then(|e| {
            let r = schaible_r(f.as_ref(), x, mode)?;
            let before = min_eigenvalue(&e.hessian)?;
            let lifted = &e.hessian + &e.gradient * e.gradient.transpose() * c;
            let after = min_eigenvalue(&lifted)?;
            Ok((e.value, r, before, after, spectral_norm(&e.hessian)?))
        });
        match eval {
            Ok((v, r, before, after, hnorm)) => {
                let inside = v <= level;
                if inside && after < -1e-8 * (1.0 + hnorm) && worst.as_ref().is_none_or(|w| after < w.0) {
                    worst = Some((after, x.clone()));
                }
                row.extend([
                    num(v),
                    num(r),
                    num(before),
                    num(after),
                    num(c),
                    u8::from(inside).to_string(),
                ]);
                row.push(String::new());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), 5));
                row.push(num(c));
                row.push(e.to_string());
            }
        }
        rows.push(row);
    }
    let path = ctx.path(out);
    write_csv(&path, &cols, rows)?;
    if let Some((m, x)) = worst {
        return Err(CliError::numerical(format!(
            "∇²f + c∇f∇fᵀ has eigenvalue {m:e} at [{}] inside the sublevel set; f is not convexifiable there",
            x.iter().map(|&v| num(v)).collect::<Vec<_>>().join(", ")
        )));
    }
    Ok(vec![
        format!(
            "{}: c = {} on the sublevel set of f(x0) = {}",
            f.name(),
            num(c),
            num(f0)
        ),
        format!("wrote {}", path.display()),
    ])
}

fn radius_text(est: &RadiusEstimate) -> String {
    if est.radius.is_infinite() {
        "inf".into()
    } else {
        num(est.radius)
    }
}

fn radius(
    ctx: &Context,
    loss: &LossSpec,
    transformed: bool,
    bracket: f64,
    newton: &NewtonOpts,
    out: &Path,
) -> CliResult<Vec<String>> {
    let cfg = newton.config()?;
    let (est, reference, name) = match (loss.radial(), transformed) {
        (Some(r), true) => {
            let (l, _) = radial_star_loss(&r);
            let est = convergence_radius(&l, bracket, &cfg)?;
            (est, Some(convexity_radius(r.profile(), true)), l.name())
        }
        (None, true) => {
            return Err(CliError::usage(format!(
                "--transformed needs a radial loss, got '{loss}'"
            )))
        }
        (r, false) => {
            let f = loss.build()?;
            let est = convergence_radius(f.as_ref(), bracket, &cfg)?;
            (est, r.map(|r| convexity_radius(r.profile(), false)), f.name())
        }
    };
    let mut text = format!(
        "loss = {name}\nradius = {}\nmonotone = {}\n",
        radius_text(&est),
        est.monotone
    );
    if let Some(c) = reference {
        text.push_str(&format!(
            "convexity_radius = {}\n",
            if c.is_infinite() { "inf".into() } else { num(c) }
        ));
    }
    let path = ctx.path(out);
    write_text(&path, &text)?;
    Ok(vec![
        format!("{name}: radius {} (monotone {})", radius_text(&est), est.monotone),
        format!("wrote {}", path.display()),
    ])
}

fn starcheck(ctx: &Context, loss: &LossSpec, points: usize, out: &Path) -> CliResult<Vec<String>> {
    let base = match loss.radial() {
        Some(r) if r.center().len() == 1 => r,
        _ => {
            return Err(CliError::usage(format!(
                "starcheck needs a 1D radial loss, got '{loss}'"
            )))
        }
    };
    if points == 0 {
        return Err(CliError::usage("--points must be positive"));
    }
    let (l, t) = radial_star_loss(&base);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let cols = header(&["x", "loss", "line_integral", "phi_of_psi", "min_slack"]);
    let mut rows = Vec::with_capacity(points);
    let (mut line_err, mut phi_err, mut slack) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..points {
        let x: f64 = rng.random_range(-3.0..3.0);
        let xv = Vector::from_element(1, x);
        let lx = l.value(&xv)?;
        let line = star_value(&base, &xv, 1e-12)?;
        let via = t.phi(base.profile().psi(x.abs()))?;
        let mut s = f64::INFINITY;
        for i in 1..=9 {
            let lambda = i as f64 / 10.0;
            s = s.min(lambda * lx - l.value(&Vector::from_element(1, lambda * x))?);
        }
        line_err = line_err.max((line - lx).abs());
        phi_err = phi_err.max((via - lx).abs());
        slack = slack.min(s);
        rows.push(vec![num(x), num(lx), num(line), num(via), num(s)]);
    }
    let path = ctx.path(out);
    write_csv(&path, &cols, rows)?;
    let summary = format!(
        "{}: line integral error {line_err:.3e}, φ∘ψ error {phi_err:.3e}, min slack {slack:.3e}",
        l.name()
    );
    if line_err > 1e-6 || phi_err > 1e-8 || slack < -1e-10 {
        return Err(CliError::numerical(summary));
    }
    Ok(vec![summary, format!("wrote {}", path.display())])
}

fn need_transform(t: TransformSpec) -> CliResult<Arc<dyn ScalarTransform>> {
    t.build()?
        .ok_or_else(|| CliError::usage("scan-flip needs a transform other than 'none'"))
}

pub(crate) fn check_grid_dim(loss: &dyn SmoothLoss, dim: usize, grid: &str) -> CliResult<()> {
    if dim != loss.dim() {
        return Err(CliError::usage(format!(
            "grid '{grid}' is {dim}-dimensional but {} is {}-dimensional",
            loss.name(),
            loss.dim()
        )));
    }
    Ok(())
}

fn scan_flip(
    ctx: &Context,
    loss: &LossSpec,
    transform: TransformSpec,
    grid: &str,
    rel_tol: f64,
    out: &Path,
) -> CliResult<Vec<String>> {
    let f = loss.build()?;
    let t = need_transform(transform)?;
    let spec = parse_grid(grid)?;
    check_grid_dim(f.as_ref(), spec.dim(), grid)?;
    let scan = scan_sign_flip(f.as_ref(), t.as_ref(), &spec, rel_tol, ctx.seed)?;
    let path = ctx.path(out);
    write_scan(&path, &scan, ScanKind::SignFlip)?;
    let disagreements = scan
        .cross_checks
        .iter()
        .filter(|(_, a)| a.scaling.abs() > 1e-6 && !a.agrees())
        .count();
    let summary = format!(
        "{} with {}: {} cells, {} negative, {} zero, {} positive, {} errors; {} cross-checks, {disagreements} disagreements",
        f.name(),
        t.name(),
        scan.cells.len(),
        scan.count_sign(-1),
        scan.count_sign(0),
        scan.count_sign(1),
        scan.count_errors(),
        scan.cross_checks.len()
    );
    if disagreements > 0 {
        return Err(CliError::numerical(summary));
    }
    Ok(vec![summary, format!("wrote {}", path.display())])
}

fn scan_conv(
    ctx: &Context,
    loss: &LossSpec,
    transform: TransformSpec,
    grid: &str,
    newton: &NewtonOpts,
    out: &Path,
) -> CliResult<Vec<String>> {
    let cfg = newton.config()?;
    let f = loss.build()?;
    let t = transform.build()?;
    let spec = parse_grid(grid)?;
    check_grid_dim(f.as_ref(), spec.dim(), grid)?;
    let name = match &t {
        Some(t) => format!("{}∘{}", t.name(), f.name()),
        None => f.name(),
    };
    let scan = scan_convergence(f, t, &spec, &cfg)?;
    let path = ctx.path(out);
    write_scan(&path, &scan, ScanKind::Convergence)?;
    Ok(vec![
        format!(
            "{name}: {} of {} cells converge, {} errors",
            scan.count_converged(),
            scan.cells.len(),
            scan.count_errors()
        ),
        format!("wrote {}", path.display()),
    ])
}

fn sweep_alpha(
    ctx: &Context,
    loss: &LossSpec,
    alphas: &str,
    x0: Option<&str>,
    newton: &NewtonOpts,
    out: &Path,
) -> CliResult<Vec<String>> {
    let cfg = newton.config()?;
    let f = loss.build()?;
    let x0 = match x0 {
        Some(s) => point_for(f.as_ref(), s)?,
        None => Vector::from_element(f.dim(), 10.0),
    };
    let alphas = parse_alphas(alphas)?;
    let sweep = best_fixed_stepsize(f.as_ref(), &x0, &alphas, &cfg)?;
    let path = ctx.path(out);
    write_sweep(&path, &sweep)?;
    let converged = sweep.entries.iter().filter(|e| e.converged()).count();
    if converged == 0 {
        return Err(CliError::numerical(format!("{}: no stepsize converged", f.name())));
    }
    Ok(vec![
        format!(
            "{}: best α = {} ({} iterations); {converged} of {} stepsizes converge",
            f.name(),
            opt(Some(sweep.best_alpha)),
            sweep.iterations,
            sweep.entries.len()
        ),
        format!("wrote {}", path.display()),
    ])
}
