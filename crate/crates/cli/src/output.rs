//! Report and trace serialization. Floats are printed with 17 significant
//! digits so a written value parses back to the identical bit pattern,
//! and every writer emits rows in a fixed order to keep reports
//! byte-identical across runs.

use std::io::Write;
use std::path::Path;

use gyrostat_core::integrate::{Trajectory, DRIFT_DENOMINATOR_FLOOR};
use gyrostat_core::models::ModelSpec;
use gyrostat_core::phase::ModelKind;
use gyrostat_core::poisson::IntegralFamily;
use gyrostat_core::zhukovskiy::{csv_header, csv_row, ZhTrace};

use crate::checks::CheckRow;
use crate::config::CliError;

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

// Integral labels can contain commas (plane indices), so headers quote
// fields the way every CSV reader expects.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Schema(format!("cannot write {}: {e}", path.display()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(contents.as_bytes()).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Column names for the flat phase coordinates: momentum upper triangle
/// row by row, then the field block.
pub fn coordinate_labels(spec: &ModelSpec) -> Vec<String> {
    let n = spec.n();
    let mut out = Vec::new();
    for i in 1..=n {
        for j in (i + 1)..=n {
            out.push(format!("M_{i}_{j}"));
        }
    }
    match spec.kind() {
        ModelKind::SoSo => {
            for i in 1..=n {
                for j in (i + 1)..=n {
                    out.push(format!("G_{i}_{j}"));
                }
            }
        }
        ModelKind::EN => {
            for i in 1..=n {
                out.push(format!("g_{i}"));
            }
        }
        ModelKind::SoN => {}
    }
    out
}

/// One row per sample: t, then the flat coordinates.
pub fn write_trajectory_csv(
    path: &Path,
    spec: &ModelSpec,
    traj: &Trajectory,
) -> Result<(), CliError> {
    let mut text = String::from("t");
    for label in coordinate_labels(spec) {
        text.push(',');
        text.push_str(&label);
    }
    text.push('\n');
    for (i, x) in traj.points.iter().enumerate() {
        text.push_str(&num(traj.time(i)));
        for c in x.to_coords() {
            text.push(',');
            text.push_str(&num(c));
        }
        text.push('\n');
    }
    write_file(path, &text)
}

/// One row per sample: t, then the relative deviation of every family
/// member from its starting value, with the same denominator floor the
/// drift summary uses.
pub fn write_drift_csv(
    path: &Path,
    fam: &IntegralFamily,
    traj: &Trajectory,
) -> Result<(), CliError> {
    let labels = fam.labels();
    let mut text = String::from("t");
    for label in &labels {
        text.push(',');
        text.push_str(&csv_field(label));
    }
    text.push('\n');
    let reference = fam.eval_all(&traj.points[0]);
    let denoms: Vec<f64> = reference
        .iter()
        .map(|v| v.abs().max(DRIFT_DENOMINATOR_FLOOR))
        .collect();
    for (i, x) in traj.points.iter().enumerate() {
        text.push_str(&num(traj.time(i)));
        let values = fam.eval_all(x);
        for (j, v) in values.iter().enumerate() {
            text.push(',');
            text.push_str(&num((v - reference[j]).abs() / denoms[j]));
        }
        text.push('\n');
    }
    write_file(path, &text)
}

pub fn write_zh_csv(path: &Path, trace: &ZhTrace) -> Result<(), CliError> {
    let mut text = csv_header();
    text.push('\n');
    for (t, geom) in trace.times.iter().zip(&trace.samples) {
        text.push_str(&csv_row(*t, geom));
        text.push('\n');
    }
    write_file(path, &text)
}

#[derive(serde::Serialize)]
struct Report<'a> {
    checks: &'a [CheckRow],
}

/// The canonical report body; also returned so callers can print it.
pub fn write_report(path: &Path, rows: &[CheckRow]) -> Result<String, CliError> {
    let report = Report { checks: rows };
    let mut text = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Schema(format!("report serialization failed: {e}")))?;
    text.push('\n');
    write_file(path, &text)?;
    Ok(text)
}
