//! CSV and text emission. Floats carry 17 significant digits so that files
//! round-trip exactly and reruns compare byte for byte.

use std::fs;
use std::path::Path;

use tinv_core::scans::StepsizeSweep;
use tinv_core::{GridScan, IterateTrace};

use crate::error::{CliError, CliResult};

pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:.16e}")
    }
}

pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

pub fn write_csv<I>(path: &Path, header: &[String], rows: I) -> CliResult<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    w.write_record(header).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    ensure_parent(path)?;
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|c| c.to_string()).collect()
}

/// One row per iterate; `termination` is filled on the final row only.
pub fn write_trace(path: &Path, trace: &IterateTrace) -> CliResult<()> {
    let dim = trace.records[0].x.len();
    let mut cols = vec!["k".to_string()];
    cols.extend((0..dim).map(|i| format!("x_{i}")));
    cols.extend(header(&[
        "f",
        "grad_norm",
        "alpha",
        "scaling",
        "dual_sq",
        "termination",
    ]));
    let last = trace.records.len() - 1;
    let rows = trace.records.iter().enumerate().map(|(i, r)| {
        let mut row = vec![r.k.to_string()];
        row.extend(r.x.iter().map(|&v| num(v)));
        row.push(num(r.value));
        row.push(num(r.grad_norm));
        row.push(opt(r.alpha));
        row.push(opt(r.scaling));
        row.push(opt(r.dual_sq));
        row.push(if i == last {
            trace.termination.to_string()
        } else {
            String::new()
        });
        row
    });
    write_csv(path, &cols, rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    SignFlip,
    Convergence,
}

/// One row per cell in cell-index order. For sign-flip scans `final_value`
/// is `f` at the cell centre and `iterations` is empty.
pub fn write_scan(path: &Path, scan: &GridScan, kind: ScanKind) -> CliResult<()> {
    let flag = match kind {
        ScanKind::SignFlip => "scaling_sign",
        ScanKind::Convergence => "converged",
    };
    let cols = header(&["ix", "iy", "x", "y", flag, "iterations", "final_value", "error"]);
    let rows = scan.cells.iter().map(|c| {
        let flag = match kind {
            ScanKind::SignFlip => c.scaling_sign.map(|s| s.to_string()),
            ScanKind::Convergence => c.converged.map(|b| u8::from(b).to_string()),
        };
        vec![
            c.ix.to_string(),
            c.iy.to_string(),
            num(c.point[0]),
            c.point.get(1).map(|&v| num(v)).unwrap_or_default(),
            flag.unwrap_or_default(),
            c.iterations.map(|k| k.to_string()).unwrap_or_default(),
            opt(c.final_value),
            c.error.clone().unwrap_or_default(),
        ]
    });
    write_csv(path, &cols, rows)
}

pub fn write_sweep(path: &Path, sweep: &StepsizeSweep) -> CliResult<()> {
    let cols = header(&["alpha", "termination", "iterations", "final_grad_norm"]);
    let rows = sweep.entries.iter().map(|e| {
        vec![
            num(e.alpha),
            e.termination.to_string(),
            e.iterations.to_string(),
            num(e.final_grad_norm),
        ]
    });
    write_csv(path, &cols, rows)
}
