//! Artifact writers: trajectory CSV (17 significant digits), diagnostics
//! JSON and the convergence table.

use std::fs;
use std::io::Write;
use std::path::Path;

use lions_core::evolution::{ConvergenceTable, DiscreteSolution};
use serde::Serialize;

/// Diagnostics emitted by `solve`; field names and types are the published
/// schema.
#[derive(Debug, Serialize)]
pub struct SolveDiagnostics {
    pub n: usize,
    pub steps: usize,
    pub theta: f64,
    pub boundary_residual: f64,
    pub stepping_residual: f64,
    pub w_norm: f64,
    pub propagator_norm: f64,
    pub stability_constant: f64,
    pub wall_time_s: f64,
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trajectory(path: &Path, solution: &DiscreteSolution) -> std::io::Result<()> {
    let n = solution.values.first().map_or(0, |v| v.len());
    let mut out = String::new();
    out.push('t');
    for i in 1..=n {
        out.push_str(&format!(",u_{i}"));
    }
    out.push('\n');
    for (t, u) in solution.times.iter().zip(&solution.values) {
        out.push_str(&fmt(*t));
        for i in 0..n {
            out.push(',');
            out.push_str(&fmt(u[i].re));
        }
        out.push('\n');
    }
    let mut file = fs::File::create(path)?;
    file.write_all(out.as_bytes())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text)
}

pub fn write_convergence(path: &Path, table: &ConvergenceTable) -> std::io::Result<()> {
    let mut out = String::from("N,theta,error,order\n");
    for row in &table.rows {
        let order = match row.order {
            Some(o) => fmt(o),
            None => "na".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.steps,
            row.theta,
            fmt(row.error),
            order
        ));
    }
    fs::write(path, out)
}
