//! End-to-end acceptance criteria. Each test prints one PASS/FAIL line.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use tinv_core::convexify::{grid_points_1d, SchaibleMode};
use tinv_core::fdcheck::{check_derivatives, check_transform};
use tinv_core::losses::{make_counterexample, CounterexampleLoss, PolytopeLoss};
use tinv_core::newton::LmProblem;
use tinv_core::quadrature::adaptive_simpson;
use tinv_core::scans::alpha_grid;
use tinv_core::*;

fn report(id: u32, title: &str, pass: bool, elapsed: Duration, limit: Duration, detail: &str) {
    let within = elapsed <= limit;
    let verdict = if pass && within { "PASS" } else { "FAIL" };
    // The stdout handle bypasses test capture, so passing verdicts are shown too.
    let _ = writeln!(
        std::io::stdout(),
        "criterion {id:>2} [{title}]: {verdict} ({detail}; {:.3} s of {:.0} s)",
        elapsed.as_secs_f64(),
        limit.as_secs_f64()
    );
    assert!(pass, "criterion {id} failed: {detail}");
    assert!(within, "criterion {id} exceeded its time budget");
}

fn v(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> Matrix {
    let b = Matrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    b.transpose() * &b + Matrix::identity(d, d) * 0.5
}

#[test]
fn criterion_01_one_step_polynomial() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = NewtonConfig::default();
    let mut ok = true;
    let mut worst_contraction: f64 = 0.0;
    for trial in 0..5 {
        let d = 1 + trial % 5;
        let a = random_spd(&mut rng, d);
        let x0 = Vector::from_fn(d, |_, _| rng.random_range(-3.0..3.0));
        for p in [2.0, 3.0, 4.0, 5.0] {
            let f = make_polynorm(a.clone(), p).unwrap();
            let tr = run_newton(&f, &StepsizeSchedule::Constant(p - 1.0), &x0, &cfg).unwrap();
            ok &= tr.iterations == 1 && tr.last().x.norm() <= 1e-10 && tr.converged();
        }
        let f = make_polynorm(a.clone(), 4.0).unwrap();
        let one = StepsizeSchedule::Constant(1.0);
        let mut short = cfg.clone();
        short.max_iters = 1;
        let tr = run_newton(&f, &one, &x0, &short).unwrap();
        let expected = &x0 * (2.0 / 3.0);
        let err = (&tr.records[1].x - &expected).norm() / expected.norm();
        worst_contraction = worst_contraction.max(err);
    }
    ok &= worst_contraction <= 1e-10;
    report(
        1,
        "one-step polynomial convergence",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!("worst p=4 contraction error {worst_contraction:.2e}"),
    );
}

#[test]
fn criterion_02_equivalence_suite() {
    let start = Instant::now();
    let cfg = NewtonConfig {
        max_iters: 12,
        gtol: 1e-300,
        xtol: 1e-300,
        ..NewtonConfig::default()
    };
    let starts = [
        (Benchmark::Rosenbrock, v(&[-0.5, 0.5])),
        (Benchmark::Beale, v(&[2.5, 0.3])),
        (Benchmark::GoldsteinPrice, v(&[0.1, -0.9])),
    ];
    let transforms = [
        Table1::Linear { a: 2.0, b: 1.0 },
        Table1::Polynomial { r: 2.0 },
        Table1::Exponential { a: 0.1 },
        Table1::Logarithmic { a: 1.0 },
        Table1::Sigmoid,
    ];
    let mut qualifying = 0;
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for (kind, x0) in &starts {
        let f: Arc<dyn SmoothLoss> = Arc::new(make_benchmark(*kind));
        for kind_t in transforms {
            let t: Arc<dyn ScalarTransform> = Arc::new(make_table1(kind_t).unwrap());
            for alpha in [0.25, 0.5, 1.0] {
                let rep = run_equivalence(f.clone(), t.clone(), &StepsizeSchedule::Constant(alpha), x0, &cfg).unwrap();
                let scaled_ok = rep.min_abs_scaling().is_some_and(|s| s > 1e-6);
                if scaled_ok && rep.common > 10 {
                    qualifying += 1;
                    worst = worst.max(rep.max_deviation);
                } else {
                    skipped += 1;
                    println!(
                        "  skipped {kind} × {} α={alpha}: common {} min|s| {:?} ({} / {})",
                        t.name(),
                        rep.common,
                        rep.min_abs_scaling(),
                        rep.trace_f.termination,
                        rep.trace_l.termination
                    );
                }
            }
        }
    }
    report(
        2,
        "transformation equivalence",
        worst <= 1e-8 && qualifying >= 30,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("{qualifying} qualifying runs, {skipped} skipped, max deviation {worst:.2e}"),
    );
}

#[test]
fn criterion_03_figure_one() {
    let start = Instant::now();
    let cfg = NewtonConfig::default();
    let f = RadialLoss::one_dim(RadialProfile::Cauchy);
    let x0 = v(&[0.8]);
    let unit = StepsizeSchedule::Constant(1.0);
    let plain = run_newton(&f, &unit, &x0, &cfg).unwrap();
    let first = plain.records[1].x[0];
    let (l, t) = radial_star_loss(&f);
    let on_l = run_newton(&l, &unit, &x0, &cfg).unwrap();
    let induced = StepsizeSchedule::induced(unit.clone(), Arc::new(t));
    let on_f = run_newton(&f, &induced, &x0, &cfg).unwrap();
    let deviation = on_l
        .iterates()
        .zip(on_f.iterates())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    let ok = (first + 2.844).abs() <= 1e-3
        && plain.termination == Termination::Diverged
        && on_l.converged()
        && on_l.last().x[0].abs() <= 1e-8
        && on_f.converged()
        && deviation <= 1e-8;
    report(
        3,
        "figure 1 reproduction",
        ok,
        start.elapsed(),
        Duration::from_secs(1),
        &format!(
            "first step {first:.4}, plain {}, L-run {} in {}, induced {} in {}, deviation {deviation:.2e}",
            plain.termination, on_l.termination, on_l.iterations, on_f.termination, on_f.iterations
        ),
    );
}

#[test]
fn criterion_04_table_three_radii() {
    let start = Instant::now();
    let cfg = NewtonConfig::default();
    let s3 = 1.0 / 3f64.sqrt();
    let s2 = 0.5f64.sqrt();
    let cases = [
        (RadialProfile::GemanMcClure, false, s3),
        (RadialProfile::Welsh, false, s2),
        (RadialProfile::Cauchy, false, 1.0),
        (RadialProfile::GemanMcClure, true, 1.0),
        (RadialProfile::Welsh, true, 1.0),
        (RadialProfile::Cauchy, true, f64::INFINITY),
    ];
    let mut ok = true;
    let mut lines = Vec::new();
    for (p, transformed, expected) in cases {
        let base = RadialLoss::one_dim(p);
        let est = if transformed {
            convergence_radius(&radial_star_loss(&base).0, 0.5, &cfg).unwrap()
        } else {
            convergence_radius(&base, 0.5, &cfg).unwrap()
        };
        let hit = if expected.is_infinite() {
            est.radius.is_infinite()
        } else {
            (est.radius - expected).abs() <= 1e-3
        };
        ok &= hit;
        lines.push(format!(
            "{p}{}: newton {:.4} (expected {expected:.4}, convexity radius {:.4}, monotone {})",
            if transformed { "*" } else { "" },
            est.radius,
            convexity_radius(p, transformed),
            est.monotone
        ));
    }
    for l in &lines {
        println!("  {l}");
    }
    report(
        4,
        "convergence radii",
        ok,
        start.elapsed(),
        Duration::from_secs(5),
        "unit-step Newton basins measured by bisection",
    );
}

#[test]
fn criterion_05_convexification() {
    let start = Instant::now();
    let f = RadialLoss::one_dim(RadialProfile::Cauchy);
    let grid = grid_points_1d(-2.0, 2.0, 1e-3).unwrap();
    let c = compact_constant(&f, &v(&[2.0]), &grid, SchaibleMode::General).unwrap();
    let t = exp_convexifier(c, 0.0).unwrap();
    let check = verify_convexified(&f, &t, &grid).unwrap();
    let mut ok = check.min_eigenvalue >= -1e-8;

    let neg = make_counterexample();
    let neg_grid = grid_points_1d(-0.5, 1.5, 1e-3).unwrap();
    let controls = [
        Table1::Linear { a: 1.0, b: 0.0 },
        Table1::Polynomial { r: 0.5 },
        Table1::Polynomial { r: 2.0 },
        Table1::Exponential { a: 1.0 },
        Table1::Logarithmic { a: 1.0 },
        Table1::Sigmoid,
    ];
    let mut worst_control = f64::NEG_INFINITY;
    for kind in controls {
        let tc = make_table1(kind).unwrap();
        let m = verify_convexified(&neg, &tc, &neg_grid).unwrap().min_eigenvalue;
        worst_control = worst_control.max(m);
        ok &= m < -1e-4;
    }
    let _: &CounterexampleLoss = &neg;
    report(
        5,
        "convexification certificate",
        ok,
        start.elapsed(),
        Duration::from_secs(5),
        &format!(
            "c = {c:.6}, min eigenvalue {:.3e}; counterexample controls all below {worst_control:.3e}",
            check.min_eigenvalue
        ),
    );
}

fn star_closed_form(p: RadialProfile, x: f64) -> f64 {
    match p {
        RadialProfile::Cauchy => 2.0 * x * x.atan(),
        RadialProfile::Welsh => PI.sqrt() * x * erf(x),
        RadialProfile::GemanMcClure => x * x / (x * x + 1.0) + x * x.atan(),
        RadialProfile::Quadratic => x * x,
    }
}

#[test]
fn criterion_06_star_convexity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_slack: f64 = 0.0;
    let mut worst_line: f64 = 0.0;
    let mut worst_phi: f64 = 0.0;
    for p in RadialProfile::ROBUST {
        let base = RadialLoss::one_dim(p);
        let (l, t) = radial_star_loss(&base);
        for _ in 0..50 {
            let x: f64 = rng.random_range(-3.0..3.0);
            let lx = l.value(&v(&[x])).unwrap();
            for i in 1..=9 {
                let lambda = i as f64 / 10.0;
                let lhs = l.value(&v(&[lambda * x])).unwrap();
                worst_slack = worst_slack.min(lambda * lx - lhs);
            }
            let line = star_value(&base, &v(&[x]), 1e-12).unwrap();
            worst_line = worst_line.max((line - star_closed_form(p, x)).abs());
            worst_line = worst_line.max((lx - star_closed_form(p, x)).abs());
            let via_phi = t.phi(p.psi(x.abs())).unwrap();
            worst_phi = worst_phi.max((via_phi - lx).abs());
        }
    }
    report(
        6,
        "star-convexity properties",
        worst_slack >= -1e-10 && worst_line <= 1e-6 && worst_phi <= 1e-8,
        start.elapsed(),
        Duration::from_secs(5),
        &format!("min slack {worst_slack:.2e}, line integral error {worst_line:.2e}, φ∘ψ error {worst_phi:.2e}"),
    );
}

#[test]
fn criterion_07_sign_flip_consistency() {
    let start = Instant::now();
    let f = make_benchmark(Benchmark::Beale);
    let axis = GridAxis::new(-4.0, 4.0, 50).unwrap();
    let grid = GridSpec { x: axis, y: Some(axis) };
    let mut ok = true;
    let mut details = Vec::new();
    for kind in [Table1::Polynomial { r: 0.25 }, Table1::Logarithmic { a: 1.0 }] {
        let t = make_table1(kind).unwrap();
        let scan = scan_sign_flip(&f, &t, &grid, 1e-10, 7).unwrap();
        let mut checked = 0;
        let mut mismatches = 0;
        for cell in &scan.cells {
            let Some(s) = cell.scaling else { continue };
            if s.abs() <= 1e-6 {
                continue;
            }
            let a = step_alignment(&f, &t, &cell.point, 1e-10).unwrap();
            checked += 1;
            if !a.agrees() {
                mismatches += 1;
            }
        }
        let negatives = scan.count_sign(-1);
        ok &= mismatches == 0 && negatives > 0;
        details.push(format!(
            "{}: {checked} cells checked, {mismatches} mismatches, {negatives} negative",
            t.name()
        ));
    }
    report(
        7,
        "sign-flip consistency",
        ok,
        start.elapsed(),
        Duration::from_secs(30),
        &details.join("; "),
    );
}

#[test]
fn criterion_08_polytope_sweep() {
    let start = Instant::now();
    let cfg = NewtonConfig::default();
    let alphas = alpha_grid(0.1, 4.0, 0.05).unwrap();
    let x0 = Vector::from_element(10, 10.0);
    let mut best = Vec::new();
    let mut ok = true;
    for p in [2.0, 3.0, 4.0, 5.0] {
        let f = PolytopeLoss::seeded(10, 20, p, 7).unwrap();
        let sweep = best_fixed_stepsize(&f, &x0, &alphas, &cfg).unwrap();
        ok &= sweep.best_alpha >= p - 1.0 - 0.15 - 1e-12 && sweep.best_alpha <= p - 1.0 + 0.1 + 1e-12;
        best.push((p, sweep.best_alpha, sweep.iterations));
        let below: Vec<f64> = alphas.iter().copied().filter(|&a| a < p - 1.0 - 1e-12).collect();
        let local = best_fixed_stepsize(&f, &x0, &below, &cfg).unwrap();
        println!(
            "  p={p}: best α over the full grid {:.2} ({} it); best α below p−1 {:.2} ({} it)",
            sweep.best_alpha, sweep.iterations, local.best_alpha, local.iterations
        );
    }
    ok &= best.windows(2).all(|w| w[1].1 >= w[0].1);
    let detail = best
        .iter()
        .map(|(p, a, k)| format!("p={p}: α*={a:.2} ({k} it)"))
        .collect::<Vec<_>>()
        .join(", ");
    report(
        8,
        "polytope stepsize sweep",
        ok,
        start.elapsed(),
        Duration::from_secs(60),
        &detail,
    );
}

#[test]
fn criterion_09_lm_non_invariance() {
    let start = Instant::now();
    let f = make_benchmark(Benchmark::Rosenbrock);
    let t = make_table1(Table1::Exponential { a: 1.0 }).unwrap();
    let x = v(&[-0.5, 0.5]);
    let golden = lm_invariance_residual(&f, &t, &x, 0.1).unwrap();

    // Independent oracle: nested dense scans, each zooming 10x around the best point.
    let problem = LmProblem::new(&f, &t, &x, 0.1).unwrap();
    let mut best = (0.0, f64::INFINITY);
    let n = 20_000;
    for i in 0..=n {
        let s = -1.0 + 2.0 * i as f64 / n as f64;
        let l = s.signum() * (10f64.powf(14.0 * s.abs() - 8.0) - 1e-8);
        let r = problem.residual(l);
        if r < best.1 {
            best = (l, r);
        }
    }
    let mut width = best.0.abs().max(1e-6) * 0.01;
    for _ in 0..12 {
        let centre = best.0;
        for i in 0..=200 {
            let l = centre - width + 2.0 * width * i as f64 / 200.0;
            let r = problem.residual(l);
            if r < best.1 {
                best = (l, r);
            }
        }
        width /= 10.0;
    }
    let agree = (best.1 - golden.residual).abs();
    report(
        9,
        "LM non-invariance",
        golden.residual > 1e-6 && agree <= 1e-8,
        start.elapsed(),
        Duration::from_secs(5),
        &format!(
            "residual {:.6e} at λ_φ = {:.6e}; dense scan {:.6e} at {:.6e}",
            golden.residual, golden.lambda_phi, best.1, best.0
        ),
    );
}

#[test]
fn criterion_10_numerical_hygiene() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut losses: Vec<Arc<dyn SmoothLoss>> = vec![
        Arc::new(make_benchmark(Benchmark::Rosenbrock)),
        Arc::new(make_benchmark(Benchmark::Beale)),
        Arc::new(make_benchmark(Benchmark::GoldsteinPrice)),
        Arc::new(QuadraticLoss::new(Matrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, -1.0])).unwrap()),
        Arc::new(make_polynorm(Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]), 3.0).unwrap()),
        Arc::new(make_polynorm(Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]), 1.5).unwrap()),
        Arc::new(PolytopeLoss::seeded(3, 5, 3.0, 7).unwrap()),
        Arc::new(make_counterexample()),
    ];
    for p in RadialProfile::ROBUST {
        losses.push(Arc::new(RadialLoss::one_dim(p)));
        let r2 = make_radial(p, v(&[0.3, -0.2]));
        losses.push(Arc::new(radial_star_loss(&r2).0));
        losses.push(Arc::new(r2));
    }
    let transforms: Vec<Arc<dyn ScalarTransform>> = vec![
        Arc::new(make_table1(Table1::Linear { a: 2.0, b: -1.0 }).unwrap()),
        Arc::new(make_table1(Table1::Polynomial { r: 0.5 }).unwrap()),
        Arc::new(make_table1(Table1::Exponential { a: 0.01 }).unwrap()),
        Arc::new(make_table1(Table1::Logarithmic { a: 1.0 }).unwrap()),
        Arc::new(make_table1(Table1::Sigmoid).unwrap()),
    ];
    let bench_count = 3;
    let mut worst_g: f64 = 0.0;
    let mut worst_h: f64 = 0.0;
    let mut offenders = std::collections::BTreeMap::new();
    let mut record = |name: String, c: tinv_core::fdcheck::FdCheck| {
        if c.gradient_error > 1e-5 || c.hessian_error > 1e-4 {
            let e: &mut (f64, f64) = offenders.entry(name).or_default();
            e.0 = e.0.max(c.gradient_error);
            e.1 = e.1.max(c.hessian_error);
        }
        worst_g = worst_g.max(c.gradient_error);
        worst_h = worst_h.max(c.hessian_error);
    };
    for (i, f) in losses.iter().enumerate() {
        let mut n = 0;
        while n < 100 {
            let x = Vector::from_fn(f.dim(), |_, _| rng.random_range(-2.0..2.0));
            if f.name() == "counterexample" && x[0].abs() < 1e-3 {
                continue;
            }
            n += 1;
            record(f.name(), check_derivatives(f.as_ref(), &x).unwrap());
            if i < bench_count {
                for t in &transforms {
                    let l = compose(f.clone(), t.clone());
                    if let Ok(c) = check_derivatives(&l, &x) {
                        record(l.name(), c);
                    }
                }
            }
        }
    }
    let mut extra: Vec<(Arc<dyn ScalarTransform>, f64, f64)> =
        transforms.iter().map(|t| (t.clone(), 0.1, 5.0)).collect();
    for p in RadialProfile::ROBUST {
        let hi = if p == RadialProfile::Cauchy { 5.0 } else { 0.95 };
        extra.push((Arc::new(star_transform(p)), 1e-4, hi));
    }
    extra.push((Arc::new(exp_convexifier(0.7, 0.0).unwrap()), 0.0, 3.0));
    extra.push((
        Arc::new(nested_bound_convexifier(Arc::new(|s: f64| 1.0 / (1.0 + s)), 0.0, 3.0).unwrap()),
        0.01,
        2.99,
    ));
    for (t, lo, hi) in &extra {
        for _ in 0..50 {
            let y = rng.random_range(*lo..*hi);
            record(t.name(), check_transform(t.as_ref(), y).unwrap());
        }
    }
    for (name, (g, h)) in &offenders {
        println!("  {name}: gradient {g:.2e}, Hessian {h:.2e}");
    }
    let mut worst_erf: f64 = 0.0;
    for i in 0..20 {
        let x = -3.0 + 6.5 * i as f64 / 19.0;
        let reference = 2.0 / PI.sqrt() * adaptive_simpson(|t| (-t * t).exp(), 0.0, x, 1e-15).unwrap();
        worst_erf = worst_erf.max((erf(x) - reference).abs());
    }
    report(
        10,
        "numerical hygiene",
        worst_g <= 1e-5 && worst_h <= 1e-4 && worst_erf <= 1e-12,
        start.elapsed(),
        Duration::from_secs(10),
        &format!("gradient {worst_g:.2e}, Hessian {worst_h:.2e}, erf {worst_erf:.2e}"),
    );
}
