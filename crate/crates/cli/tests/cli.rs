use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tinv(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tinv"))
        .args(args)
        .env("TINV_OUT_DIR", dir)
        .output()
        .expect("spawn tinv")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records()
        .map(|rec| rec.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn last_termination(dir: &Path, name: &str) -> String {
    let text = read(dir, name);
    rows(&text).last().unwrap().last().unwrap().clone()
}

#[test]
fn help_lists_commands_recipes_and_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["--help"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for word in [
        "run",
        "convexify",
        "radius",
        "starcheck",
        "scan-flip",
        "scan-conv",
        "sweep-alpha",
        "recipe",
        "fig1",
        "polytope_sweep",
        "lemma3_demo",
        "star:<geman_mcclure|welsh|cauchy>",
        "3 numerical failure",
    ] {
        assert!(text.contains(word), "help is missing {word}");
    }
}

#[test]
fn unknown_loss_is_a_usage_error_naming_the_token() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["run", "--loss", "bogus", "--x0", "0.8"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"));
}

#[test]
fn bad_transform_parameter_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let out = tinv(
        dir.path(),
        &["run", "--loss", "rosenbrock", "--transform", "poly:q=2", "--x0", "0,0"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("poly:q=2"));
}

#[test]
fn dimension_mismatch_reports_a_machine_readable_line() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["run", "--loss", "rosenbrock", "--x0", "0.8"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.starts_with("error kind=usage code=2 message="), "{err}");
    assert!(err.contains("'0.8'"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let out = tinv(
        dir.path(),
        &["run", "--loss", "cauchy1d", "--x0", "0.8", "--out", "file/trace.csv"],
    );
    assert_eq!(code(&out), 4);
    assert!(stderr(&out).starts_with("error kind=io code=4"));
}

#[test]
fn newton_on_cauchy_diverges_and_the_star_transform_rescues_it() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let plain = tinv(d, &["run", "--loss", "cauchy1d", "--x0", "0.8", "--out", "f.csv"]);
    assert_eq!(code(&plain), 0, "{}", stderr(&plain));
    assert_eq!(last_termination(d, "f.csv"), "diverged");

    let on_l = tinv(
        d,
        &[
            "run",
            "--loss",
            "cauchy1d",
            "--transform",
            "star:cauchy",
            "--x0",
            "0.8",
            "--out",
            "l.csv",
        ],
    );
    assert_eq!(code(&on_l), 0);
    assert_eq!(last_termination(d, "l.csv"), "converged");

    let args = [
        "run",
        "--loss",
        "cauchy1d",
        "--transform",
        "star:cauchy",
        "--schedule",
        "induced:const:1",
        "--x0",
        "0.8",
        "--out",
        "ind.csv",
    ];
    assert_eq!(code(&tinv(d, &args)), 0);
    assert_eq!(last_termination(d, "ind.csv"), "converged");

    let (l, ind) = (rows(&read(d, "l.csv")), rows(&read(d, "ind.csv")));
    assert_eq!(l.len(), ind.len());
    for (a, b) in l.iter().zip(&ind) {
        let (xa, xb): (f64, f64) = (a[1].parse().unwrap(), b[1].parse().unwrap());
        assert!((xa - xb).abs() <= 1e-8, "{xa} vs {xb}");
    }
}

#[test]
fn trace_columns_and_float_format() {
    let dir = TempDir::new().unwrap();
    let out = tinv(
        dir.path(),
        &[
            "run",
            "--loss",
            "rosenbrock",
            "--x0",
            "-0.5,0.5",
            "--transform",
            "exp:a=0.1",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = read(dir.path(), "trace.csv");
    let head = text.lines().next().unwrap();
    assert_eq!(head, "k,x_0,x_1,f,grad_norm,alpha,scaling,dual_sq,termination");
    let second = text.lines().nth(1).unwrap();
    assert!(
        second.starts_with("0,-5.0000000000000000e-1,5.0000000000000000e-1,"),
        "{second}"
    );
}

#[test]
fn scans_are_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    for out in ["a.csv", "b.csv"] {
        let args = [
            "scan-flip",
            "--loss",
            "beale",
            "--transform",
            "poly:r=0.5",
            "--grid",
            "-4:4:12x-4:4:12",
            "--out",
            out,
        ];
        assert_eq!(code(&tinv(d, &args)), 0);
    }
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));
    assert_eq!(rows(&read(d, "a.csv")).len(), 144);
}

#[test]
fn out_dir_flag_overrides_the_environment() {
    let env_dir = TempDir::new().unwrap();
    let flag_dir = TempDir::new().unwrap();
    let flag = flag_dir.path().to_str().unwrap();
    let out = tinv(
        env_dir.path(),
        &["--out-dir", flag, "starcheck", "--loss", "welsh1d", "--points", "5"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(flag_dir.path().join("starcheck.csv").exists());
    assert!(!env_dir.path().join("starcheck.csv").exists());
}

#[test]
fn radius_of_the_star_transform() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["radius", "--loss", "welsh1d", "--transformed"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = read(dir.path(), "radius.txt");
    assert!(text.contains("loss = star(welsh1d)"));
    assert!(text.contains("monotone = true"));
    assert!(text.contains("convexity_radius = "));
}

#[test]
fn convexify_succeeds_on_cauchy_and_fails_where_no_constant_exists() {
    let dir = TempDir::new().unwrap();
    let ok = tinv(
        dir.path(),
        &["convexify", "--loss", "cauchy1d", "--x0", "2", "--grid", "-2:2:0.01"],
    );
    assert_eq!(code(&ok), 0, "{}", stderr(&ok));
    let bad = tinv(
        dir.path(),
        &[
            "convexify",
            "--loss",
            "rosenbrock",
            "--x0",
            "0.5,0.5",
            "--grid",
            "-1:1:0.25x-1:1:0.25",
            "--out",
            "r.csv",
        ],
    );
    assert_eq!(code(&bad), 3);
    assert!(stderr(&bad).starts_with("error kind=numerical code=3"));
    assert!(dir.path().join("r.csv").exists());
}

#[test]
fn sweep_alpha_finds_a_converging_stepsize() {
    let dir = TempDir::new().unwrap();
    let out = tinv(
        dir.path(),
        &["sweep-alpha", "--loss", "polytope:p=2", "--alphas", "0.5:1.5:0.25"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(rows(&read(dir.path(), "sweep.csv")).len(), 5);
}

#[test]
fn fig1_recipe_writes_three_traces() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["recipe", "fig1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(last_termination(dir.path(), "trace_f_diverges.csv"), "diverged");
    assert_eq!(last_termination(dir.path(), "trace_L.csv"), "converged");
    assert_eq!(last_termination(dir.path(), "trace_induced.csv"), "converged");
}

#[test]
fn fig2_recipe_at_low_resolution() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["recipe", "fig2", "--resolution", "8"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let summary = rows(&read(dir.path(), "fig2_summary.csv"));
    assert_eq!(summary.len(), 9);
    for r in &summary {
        let total: usize =
            r[2..5].iter().map(|c| c.parse::<usize>().unwrap()).sum::<usize>() + r[5].parse::<usize>().unwrap();
        assert_eq!(total, 64);
    }
    assert!(dir.path().join("fig2_beale_r0.25.csv").exists());
}

#[test]
fn fig3_recipe_at_low_resolution() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["recipe", "fig3", "--resolution", "6"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(rows(&read(dir.path(), "fig3_summary.csv")).len(), 8);
}

#[test]
fn table1_check_recipe_passes() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["recipe", "table1_check"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(stdout(&out).matches("qualifying runs").count(), 5);
}

#[test]
fn lemma3_recipe_reports_a_positive_residual() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["recipe", "lemma3_demo"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(rows(&read(dir.path(), "lemma3_demo.csv")).len() > 500);
}

#[test]
fn table3_recipe_streams_rows_then_fails_with_exit_3() {
    let dir = TempDir::new().unwrap();
    let out = tinv(dir.path(), &["recipe", "table3"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).starts_with("error kind=numerical code=3 message=\"table3:"));
    assert_eq!(stdout(&out).matches("newton radius").count(), 6);
    assert_eq!(rows(&read(dir.path(), "table3.csv")).len(), 6);
}

#[test]
fn zero_resolution_is_rejected() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&tinv(dir.path(), &["recipe", "fig2", "--resolution", "0"])), 2);
}
