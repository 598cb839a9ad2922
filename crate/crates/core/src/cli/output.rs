//! Run reports and CSV series.

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::accessibility::{ManeuverResult, ZeroWorkTrace};
use crate::auxiliary::{AuxiliaryRun, AuxiliarySeries};
use crate::dynamics::Trajectory;
use crate::types::Dim;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub value: Value,
    pub expected: Value,
    pub passed: bool,
}

impl Assertion {
    /// `value ≤ bound`
    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
            expected: Value::String(format!("<= {bound:e}")),
            passed: value <= bound,
        }
    }

    /// `|value − target| ≤ tol`
    pub fn near(name: &str, value: f64, target: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
            expected: Value::String(format!("{target} +/- {tol:e}")),
            passed: (value - target).abs() <= tol,
        }
    }

    pub fn equals(name: &str, value: &str, expected: &str) -> Self {
        Self {
            name: name.into(),
            value: value.into(),
            expected: expected.into(),
            passed: value == expected,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub inputs_digest: String,
    pub results: Value,
    pub assertions: Vec<Assertion>,
    pub tool_version: String,
    /// Seconds since the Unix epoch; not part of the digest.
    pub timestamp: u64,
}

/// Seventeen significant digits, which round-trips every `f64`.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes a CSV file with a header row and LF line endings.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<f64>]) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|v| fmt_num(*v)))?;
    }
    w.flush()
}

fn axes(dim: Dim) -> &'static [&'static str] {
    &["x", "y", "z"][..dim.n()]
}

fn cols(prefix: &str, dim: Dim) -> Vec<String> {
    axes(dim).iter().map(|a| format!("{prefix}{a}")).collect()
}

fn coords(v: &crate::types::Vec3, dim: Dim) -> impl Iterator<Item = f64> + '_ {
    v.iter().take(dim.n()).copied()
}

/// Header `t,x,y,vx,vy,K,Wcum` (2D).
pub fn trajectory_series(traj: &Trajectory) -> (Vec<String>, Vec<Vec<f64>>) {
    let d = traj.dim;
    let mut header = vec!["t".to_string()];
    header.extend(cols("", d));
    header.extend(cols("v", d));
    header.extend(["K".to_string(), "Wcum".to_string()]);
    let rows = traj
        .states
        .iter()
        .map(|s| {
            let mut r = vec![s.t];
            r.extend(coords(&s.x, d));
            r.extend(coords(&s.v, d));
            r.extend([s.kinetic, s.work]);
            r
        })
        .collect();
    (header, rows)
}

/// Header `t,x,y,vx,vy,H` (2D).
pub fn auxiliary_run_series(run: &AuxiliaryRun) -> (Vec<String>, Vec<Vec<f64>>) {
    let d = run.trajectory.dim;
    let mut header = vec!["t".to_string()];
    header.extend(cols("", d));
    header.extend(cols("v", d));
    header.push("H".into());
    let rows = run
        .trajectory
        .states
        .iter()
        .zip(&run.hamiltonian)
        .map(|(s, h)| {
            let mut r = vec![s.t];
            r.extend(coords(&s.x, d));
            r.extend(coords(&s.v, d));
            r.push(*h);
            r
        })
        .collect();
    (header, rows)
}

/// Header `t,pbar_x,pbar_y,xbar_x,xbar_y,H` (2D).
pub fn nonlocal_series(series: &AuxiliarySeries) -> (Vec<String>, Vec<Vec<f64>>) {
    let d = series.dim;
    let mut header = vec!["t".to_string()];
    header.extend(cols("pbar_", d));
    header.extend(cols("xbar_", d));
    header.push("H".into());
    let rows = (0..series.t.len())
        .map(|k| {
            let mut r = vec![series.t[k]];
            r.extend(coords(&series.pbar[k], d));
            r.extend(coords(&series.xbar[k], d));
            r.push(series.h[k]);
            r
        })
        .collect();
    (header, rows)
}

/// Header `sigma,x,y`: signed arclength from the base point.
pub fn trace_series(trace: &ZeroWorkTrace) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut header = vec!["sigma".to_string()];
    header.extend(cols("", Dim::Two));
    let rows = trace
        .nodes
        .iter()
        .map(|(s, x)| vec![*s, x.x, x.y])
        .collect();
    (header, rows)
}

/// Header `x,y,z`.
pub fn maneuver_series(result: &ManeuverResult) -> (Vec<String>, Vec<Vec<f64>>) {
    let header = cols("", Dim::Three);
    let rows = result.path.iter().map(|p| vec![p.x, p.y, p.z]).collect();
    (header, rows)
}

pub fn write_report(path: Option<&Path>, report: &RunReport) -> std::io::Result<()> {
    let text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    match path {
        Some(p) => {
            let mut f = std::fs::File::create(p)?;
            f.write_all(text.as_bytes())?;
            f.write_all(b"\n")
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.write_all(b"\n")
        }
    }
}
