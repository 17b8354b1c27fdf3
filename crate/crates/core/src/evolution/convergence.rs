use crate::error::{Error, Result};

use super::problem::EvolutionProblem;
use super::scheme::solve_all_at_once;

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceRow {
    pub steps: usize,
    pub theta: f64,
    /// Largest pivot-norm error against the exact trajectory over the grid.
    pub error: f64,
    /// Observed order against the previous row of the same theta block;
    /// absent for the first row and when the errors sit at machine noise.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ConvergenceTable {
    pub rows: Vec<ConvergenceRow>,
}

impl ConvergenceTable {
    /// Observed orders within one theta block.
    pub fn orders_for(&self, theta: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.theta == theta)
            .filter_map(|r| r.order)
            .collect()
    }

    pub fn errors_for(&self, theta: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.theta == theta)
            .map(|r| r.error)
            .collect()
    }
}

/// Error floor below which order estimates stop meaning anything.
const NOISE_FLOOR: f64 = 1e-12;

/// Runs the all-at-once solver over the grid refinements and reports the
/// max-over-grid errors with observed orders. Requires a manufactured
/// problem (the error needs an exact trajectory).
pub fn convergence_study(
    p: &EvolutionProblem,
    steps_list: &[usize],
    thetas: &[f64],
) -> Result<ConvergenceTable> {
    if !p.is_manufactured() {
        return Err(Error::Invalid {
            what: "convergence studies need a manufactured problem preset".into(),
        });
    }
    let mut rows = Vec::new();
    for &theta in thetas {
        let mut previous: Option<(usize, f64)> = None;
        for &steps in steps_list {
            let solution = solve_all_at_once(p, steps, theta)?;
            let error =
                solution.max_h_error(p, |t| p.exact_solution(t).expect("manufactured problem"));
            let order = previous.and_then(|(prev_steps, prev_error)| {
                if error <= NOISE_FLOOR || prev_error <= NOISE_FLOOR {
                    None
                } else {
                    let ratio = steps as f64 / prev_steps as f64;
                    Some((prev_error / error).ln() / ratio.ln())
                }
            });
            rows.push(ConvergenceRow {
                steps,
                theta,
                error,
                order,
            });
            previous = Some((steps, error));
        }
    }
    Ok(ConvergenceTable { rows })
}
