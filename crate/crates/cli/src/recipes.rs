//! Named reproductions. Each recipe writes its CSVs into the output
//! directory and fails with a numerical error when its check does not hold.

use std::path::PathBuf;
use std::sync::Arc;

use tinv_core::losses::PolytopeLoss;
use tinv_core::newton::LmProblem;
use tinv_core::scans::alpha_grid;
use tinv_core::{
    best_fixed_stepsize, convergence_radius, convexity_radius, lm_invariance_residual, make_benchmark, make_table1,
    radial_star_loss, run_equivalence, run_newton, scan_convergence, scan_sign_flip, Benchmark, GridAxis, GridScan,
    GridSpec, NewtonConfig, RadialLoss, RadialProfile, ScalarTransform, SmoothLoss, StepsizeSchedule, Table1,
    Termination, Vector,
};

use crate::args::Recipe;
use crate::commands::Context;
use crate::error::{CliError, CliResult};
use crate::output::{header, num, opt, write_csv, write_scan, write_sweep, write_trace, ScanKind};

/// Runs `recipe`, passing each summary line to `emit` as soon as it is known.
pub fn run_recipe(ctx: &Context, recipe: Recipe, resolution: usize, emit: &mut dyn FnMut(&str)) -> CliResult<()> {
    if resolution == 0 {
        return Err(CliError::usage("--resolution must be positive"));
    }
    emit(&format!("recipe {}", recipe.name()));
    let mut out = Emit(emit);
    match recipe {
        Recipe::Fig1 => fig1(ctx, &mut out),
        Recipe::Fig2 => flip_family(ctx, &mut out, "fig2", resolution, &[0.1, 0.25, 0.5], "r", |r| {
            Table1::Polynomial { r }
        }),
        Recipe::Fig3 => fig3(ctx, &mut out, resolution),
        Recipe::Fig5 => flip_family(ctx, &mut out, "fig5", resolution, &[0.1, 1.0, 10.0], "a", |a| {
            Table1::Logarithmic { a }
        }),
        Recipe::Table1Check => table1_check(ctx, &mut out),
        Recipe::Table3 => table3(ctx, &mut out),
        Recipe::PolytopeSweep => polytope_sweep(ctx, &mut out),
        Recipe::Lemma3Demo => lemma3_demo(ctx, &mut out),
    }
}

struct Emit<'a>(&'a mut dyn FnMut(&str));

impl Emit<'_> {
    fn line(&mut self, s: String) {
        (self.0)(&s);
    }
}

fn file(ctx: &Context, name: &str) -> PathBuf {
    ctx.out_dir.join(name)
}

fn square_grid(resolution: usize) -> CliResult<GridSpec> {
    let axis = GridAxis::new(-4.0, 4.0, resolution)?;
    Ok(GridSpec { x: axis, y: Some(axis) })
}

fn fig1(ctx: &Context, out: &mut Emit) -> CliResult<()> {
    let cfg = NewtonConfig::default();
    let f = RadialLoss::one_dim(RadialProfile::Cauchy);
    let x0 = Vector::from_element(1, 0.8);
    let unit = StepsizeSchedule::Constant(1.0);
    let plain = run_newton(&f, &unit, &x0, &cfg)?;
    let (l, t) = radial_star_loss(&f);
    let on_l = run_newton(&l, &unit, &x0, &cfg)?;
    let induced = run_newton(&f, &StepsizeSchedule::induced(unit, Arc::new(t)), &x0, &cfg)?;
    write_trace(&file(ctx, "trace_f_diverges.csv"), &plain)?;
    write_trace(&file(ctx, "trace_L.csv"), &on_l)?;
    write_trace(&file(ctx, "trace_induced.csv"), &induced)?;
    let deviation = on_l
        .iterates()
        .zip(induced.iterates())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let summary = format!(
        "fig1: unit Newton on f {} after {} iterations; on L {} in {}; induced on f {} in {}; max iterate deviation {deviation:.3e}",
        plain.termination, plain.iterations, on_l.termination, on_l.iterations, induced.termination, induced.iterations
    );
    let ok = plain.termination == Termination::Diverged
        && on_l.converged()
        && induced.converged()
        && on_l.records.len() == induced.records.len()
        && deviation <= 1e-8;
    if !ok {
        return Err(CliError::numerical(summary));
    }
    out.line(summary);
    Ok(())
}

fn benchmarks() -> [(Benchmark, Arc<dyn SmoothLoss>); 3] {
    Benchmark::ALL.map(|b| (b, Arc::new(make_benchmark(b)) as Arc<dyn SmoothLoss>))
}

fn flip_family(
    ctx: &Context,
    out: &mut Emit,
    name: &str,
    resolution: usize,
    params: &[f64],
    key: &str,
    kind: impl Fn(f64) -> Table1,
) -> CliResult<()> {
    let grid = square_grid(resolution)?;
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (b, f) in benchmarks() {
        for &v in params {
            let t = make_table1(kind(v))?;
            let scan = scan_sign_flip(f.as_ref(), &t, &grid, 1e-10, ctx.seed)?;
            write_scan(
                &file(ctx, &format!("{name}_{b}_{key}{v}.csv")),
                &scan,
                ScanKind::SignFlip,
            )?;
            let checked = scan.cross_checks.iter().filter(|(_, a)| a.scaling.abs() > 1e-6);
            let disagreements = checked.clone().filter(|(_, a)| !a.agrees()).count();
            if disagreements > 0 {
                bad.push(format!("{b} {key}={v}"));
            }
            out.line(format!(
                "{name}: {b} {key}={v}: {} negative of {} cells",
                scan.count_sign(-1),
                scan.cells.len()
            ));
            rows.push(vec![
                b.to_string(),
                num(v),
                scan.count_sign(-1).to_string(),
                scan.count_sign(0).to_string(),
                scan.count_sign(1).to_string(),
                scan.count_errors().to_string(),
                checked.count().to_string(),
                disagreements.to_string(),
            ]);
        }
    }
    let cols = header(&[
        "loss",
        key,
        "negative",
        "zero",
        "positive",
        "errors",
        "cross_checks",
        "disagreements",
    ]);
    write_csv(&file(ctx, &format!("{name}_summary.csv")), &cols, rows.clone())?;
    if !bad.is_empty() {
        return Err(CliError::numerical(format!(
            "{name}: scaling sign disagrees with the step directions for {}",
            bad.join(", ")
        )));
    }
    out.line(format!("{name}: all sampled cross-checks agree"));
    Ok(())
}

fn fig3(ctx: &Context, out: &mut Emit, resolution: usize) -> CliResult<()> {
    let grid = square_grid(resolution)?;
    // Convergence is judged by the distance to x* alone.
    let cfg = NewtonConfig {
        max_iters: 200,
        gtol: 1e-300,
        ..NewtonConfig::default()
    };
    let mut rows = Vec::new();
    for b in [Benchmark::Beale, Benchmark::GoldsteinPrice] {
        let f: Arc<dyn SmoothLoss> = Arc::new(make_benchmark(b));
        for r in [0.5, 1.0, 2.0, 3.0] {
            let t: Option<Arc<dyn ScalarTransform>> = if r == 1.0 {
                None
            } else {
                Some(Arc::new(make_table1(Table1::Polynomial { r })?))
            };
            let scan: GridScan = scan_convergence(f.clone(), t, &grid, &cfg)?;
            write_scan(&file(ctx, &format!("fig3_{b}_r{r}.csv")), &scan, ScanKind::Convergence)?;
            out.line(format!(
                "fig3: {b} r={r}: {} of {} cells converge",
                scan.count_converged(),
                scan.cells.len()
            ));
            rows.push(vec![
                b.to_string(),
                num(r),
                scan.count_converged().to_string(),
                scan.cells.len().to_string(),
                scan.count_errors().to_string(),
            ]);
        }
    }
    write_csv(
        &file(ctx, "fig3_summary.csv"),
        &header(&["loss", "r", "converged", "cells", "errors"]),
        rows,
    )
}

fn table1_check(ctx: &Context, out: &mut Emit) -> CliResult<()> {
    let cfg = NewtonConfig {
        max_iters: 12,
        gtol: 1e-300,
        xtol: 1e-300,
        ..NewtonConfig::default()
    };
    let starts = [
        (Benchmark::Rosenbrock, [-0.5, 0.5]),
        (Benchmark::Beale, [2.5, 0.3]),
        (Benchmark::GoldsteinPrice, [0.1, -0.9]),
    ];
    let kinds = [
        Table1::Linear { a: 2.0, b: 1.0 },
        Table1::Polynomial { r: 2.0 },
        Table1::Exponential { a: 0.1 },
        Table1::Logarithmic { a: 1.0 },
        Table1::Sigmoid,
    ];
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for kind in kinds {
        let t: Arc<dyn ScalarTransform> = Arc::new(make_table1(kind)?);
        let mut worst: f64 = 0.0;
        let mut qualifying = 0;
        for (b, x0) in &starts {
            let f: Arc<dyn SmoothLoss> = Arc::new(make_benchmark(*b));
            let x0 = Vector::from_column_slice(x0);
            for alpha in [0.25, 0.5, 1.0] {
                let rep = run_equivalence(f.clone(), t.clone(), &StepsizeSchedule::Constant(alpha), &x0, &cfg)?;
                let ok = rep.min_abs_scaling().is_some_and(|s| s > 1e-6) && rep.common > 10;
                if ok {
                    qualifying += 1;
                    worst = worst.max(rep.max_deviation);
                }
                rows.push(vec![
                    t.name(),
                    b.to_string(),
                    num(alpha),
                    rep.common.to_string(),
                    opt(rep.min_abs_scaling()),
                    num(rep.max_deviation),
                    u8::from(ok).to_string(),
                ]);
            }
        }
        if qualifying == 0 || worst > 1e-8 {
            failed.push(t.name());
        }
        out.line(format!(
            "table1_check: {}: {qualifying} qualifying runs, max deviation {worst:.3e}",
            t.name()
        ));
    }
    write_csv(
        &file(ctx, "table1_check.csv"),
        &header(&[
            "transform",
            "loss",
            "alpha",
            "common",
            "min_abs_scaling",
            "max_deviation",
            "qualifying",
        ]),
        rows,
    )?;
    if !failed.is_empty() {
        return Err(CliError::numerical(format!(
            "table1_check: equivalence fails for {}",
            failed.join(", ")
        )));
    }
    Ok(())
}

fn inf_or(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        num(v)
    }
}

fn table3(ctx: &Context, out: &mut Emit) -> CliResult<()> {
    let cfg = NewtonConfig::default();
    let s3 = 1.0 / 3f64.sqrt();
    let cases = [
        (RadialProfile::GemanMcClure, false, s3),
        (RadialProfile::Welsh, false, 0.5f64.sqrt()),
        (RadialProfile::Cauchy, false, 1.0),
        (RadialProfile::GemanMcClure, true, 1.0),
        (RadialProfile::Welsh, true, 1.0),
        (RadialProfile::Cauchy, true, f64::INFINITY),
    ];
    let mut rows = Vec::new();
    let mut misses = 0;
    for (p, transformed, expected) in cases {
        let base = RadialLoss::one_dim(p);
        let est = if transformed {
            convergence_radius(&radial_star_loss(&base).0, 0.5, &cfg)?
        } else {
            convergence_radius(&base, 0.5, &cfg)?
        };
        let hit = if expected.is_infinite() {
            est.radius.is_infinite()
        } else {
            (est.radius - expected).abs() <= 1e-3
        };
        misses += usize::from(!hit);
        rows.push(vec![
            p.to_string(),
            u8::from(transformed).to_string(),
            inf_or(est.radius),
            inf_or(expected),
            inf_or(convexity_radius(p, transformed)),
            u8::from(est.monotone).to_string(),
            u8::from(hit).to_string(),
        ]);
        out.line(format!(
            "table3: {p}{}: newton radius {}, table {}",
            if transformed { " (transformed)" } else { "" },
            inf_or(est.radius),
            inf_or(expected)
        ));
    }
    write_csv(
        &file(ctx, "table3.csv"),
        &header(&[
            "profile",
            "transformed",
            "newton_radius",
            "table_value",
            "convexity_radius",
            "monotone",
            "match",
        ]),
        rows,
    )?;
    if misses > 0 {
        return Err(CliError::numerical(format!(
            "table3: {misses} of 6 Newton radii differ from the table by more than 1e-3"
        )));
    }
    Ok(())
}

fn polytope_sweep(ctx: &Context, out: &mut Emit) -> CliResult<()> {
    let cfg = NewtonConfig::default();
    let alphas = alpha_grid(0.1, 4.0, 0.05)?;
    let x0 = Vector::from_element(10, 10.0);
    let mut rows = Vec::new();
    let mut ok = true;
    let mut prev = f64::NEG_INFINITY;
    for p in [2.0, 3.0, 4.0, 5.0] {
        let f = PolytopeLoss::seeded(10, 20, p, ctx.seed)?;
        let sweep = best_fixed_stepsize(&f, &x0, &alphas, &cfg)?;
        write_sweep(&file(ctx, &format!("polytope_sweep_p{p}.csv")), &sweep)?;
        let below: Vec<f64> = alphas.iter().copied().filter(|&a| a < p - 1.0 - 1e-12).collect();
        let local = best_fixed_stepsize(&f, &x0, &below, &cfg)?;
        let window = sweep.best_alpha >= p - 1.15 - 1e-12 && sweep.best_alpha <= p - 0.9 + 1e-12;
        ok &= window && sweep.best_alpha >= prev;
        prev = sweep.best_alpha;
        rows.push(vec![
            num(p),
            num(sweep.best_alpha),
            sweep.iterations.to_string(),
            num(local.best_alpha),
            local.iterations.to_string(),
            u8::from(window).to_string(),
        ]);
        out.line(format!(
            "polytope_sweep: p={p}: best α {:.2} ({} iterations); best α below p−1 {:.2} ({} iterations)",
            sweep.best_alpha, sweep.iterations, local.best_alpha, local.iterations
        ));
    }
    write_csv(
        &file(ctx, "polytope_sweep.csv"),
        &header(&[
            "p",
            "best_alpha",
            "iterations",
            "best_alpha_below_p_minus_1",
            "iterations_below",
            "in_window",
        ]),
        rows,
    )?;
    if !ok {
        return Err(CliError::numerical(
            "polytope_sweep: best stepsize outside [p−1.15, p−0.9] or not non-decreasing in p",
        ));
    }
    Ok(())
}

fn lemma3_demo(ctx: &Context, out: &mut Emit) -> CliResult<()> {
    let f = make_benchmark(Benchmark::Rosenbrock);
    let t = make_table1(Table1::Exponential { a: 1.0 })?;
    let x = Vector::from_column_slice(&[-0.5, 0.5]);
    let lambda = 0.1;
    let best = lm_invariance_residual(&f, &t, &x, lambda)?;
    let problem = LmProblem::new(&f, &t, &x, lambda)?;
    let mut rows = Vec::new();
    for i in 0..=280 {
        let mag = 10f64.powf(-8.0 + i as f64 / 20.0);
        for l in [-mag, mag] {
            rows.push((l, problem.residual(l)));
        }
    }
    rows.push((0.0, problem.residual(0.0)));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    write_csv(
        &file(ctx, "lemma3_demo.csv"),
        &header(&["lambda_phi", "residual"]),
        rows.into_iter().map(|(l, r)| vec![num(l), num(r)]),
    )?;
    let summary = format!(
        "lemma3_demo: min over λ_φ of ‖p_f − p_L‖ = {} at λ_φ = {} (λ = {lambda})",
        num(best.residual),
        num(best.lambda_phi)
    );
    if best.residual <= 1e-6 {
        return Err(CliError::numerical(summary));
    }
    out.line(summary);
    Ok(())
}
