//! CSV and JSON outputs.

use std::fmt::Write as _;
use std::path::Path;

use dlw_core::{Branch, ResidualReport};
use serde::Serialize;

use crate::scenario::{Row, SolutionPath};
use crate::{io_error, CliError, CliResult};

pub const CSV_HEADER: &str = "x,y,t,phi,u,h,res1,res2";

/// 17 significant digits; non-finite values as `nan`, `inf`, `-inf`.
pub fn number(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else {
        format!("{v:.16e}")
    }
}

pub fn csv_string(rows: &[Row]) -> String {
    let mut out = String::with_capacity(32 + rows.len() * 200);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let (u, h, r1, r2) = match r.values {
            Some((f, r1, r2)) => (f.u, f.h, r1, r2),
            None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
        };
        let cols = [r.point.x, r.point.y, r.point.t, r.phi, u, h, r1, r2];
        for (i, c) in cols.into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str(&number(c));
        }
        out.push('\n');
    }
    out
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

pub fn write_csv(path: &Path, rows: &[Row]) -> CliResult<()> {
    write_file(path, &csv_string(rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_file(path, &text)
}

/// Machine-readable outcome of one scenario run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub name: Option<String>,
    pub branch: Branch,
    pub solution_path: SolutionPath,
    pub threshold: f64,
    pub passed: bool,
    pub report: ResidualReport,
}

impl RunSummary {
    pub fn text(&self) -> String {
        let r = &self.report;
        let g = &r.grid;
        let mut s = String::new();
        if let Some(name) = &self.name {
            let _ = writeln!(s, "scenario {name}");
        }
        let _ = writeln!(
            s,
            "branch {}, solution path {}",
            self.branch,
            self.solution_path.name()
        );
        let _ = writeln!(
            s,
            "grid {}x{}x{} ({} points), step {:e}",
            g.nx,
            g.ny,
            g.nt,
            r.total(),
            r.stencil.step
        );
        let _ = writeln!(s, "evaluated {}, skipped {}", r.evaluated, r.skipped);
        let _ = writeln!(
            s,
            "max |r1| = {:.3e}, mean |r1| = {:.3e}",
            r.eq1.max_abs, r.eq1.mean_abs
        );
        let _ = writeln!(
            s,
            "max |r2| = {:.3e}, mean |r2| = {:.3e}",
            r.eq2.max_abs, r.eq2.mean_abs
        );
        if let Some(w) = r.worst {
            let _ = writeln!(
                s,
                "worst at (x, y, t) = ({}, {}, {})",
                w.point.x, w.point.y, w.point.t
            );
        }
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = write!(s, "threshold {:e}: {verdict}", self.threshold);
        s
    }
}

/// Largest `|res1|`, `|res2|` in a CSV produced by [`csv_string`], ignoring `nan` rows.
pub fn csv_max_residual(text: &str) -> CliResult<f64> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(CliError::Input("unexpected CSV header".into()));
    }
    let mut max = 0.0f64;
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(CliError::Input(format!(
                "CSV row {}: expected 8 columns",
                n + 1
            )));
        }
        for c in &cols[6..] {
            let v: f64 = c
                .parse()
                .map_err(|_| CliError::Input(format!("CSV row {}: bad number `{c}`", n + 1)))?;
            if !v.is_nan() {
                max = max.max(v.abs());
            }
        }
    }
    Ok(max)
}
