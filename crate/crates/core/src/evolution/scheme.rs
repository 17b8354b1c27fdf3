use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::hilbert::LinearMap;
use crate::linalg::{self, C64};

use super::problem::EvolutionProblem;

/// Solver diagnostics attached to every discrete solution.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Diagnostics {
    /// `|u_0 - Phi^* u_N - y0|_H`.
    pub boundary_residual: f64,
    /// Largest per-step equation residual in the pivot norm.
    pub stepping_residual: f64,
    /// Graph norm of the trajectory: `(|u|_V^2 + |Du|_{V'}^2)^(1/2)`.
    pub w_norm: f64,
    /// Pivot-space operator norm of the discrete fundamental map.
    pub propagator_norm: f64,
}

/// A grid trajectory produced by one of the solvers.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub times: Vec<f64>,
    pub values: Vec<DVector<C64>>,
    pub theta: f64,
    pub diagnostics: Diagnostics,
}

impl DiscreteSolution {
    pub fn final_value(&self) -> &DVector<C64> {
        self.values.last().expect("nonempty trajectory")
    }

    /// Largest pivot-norm distance to a reference trajectory over the grid.
    pub fn max_h_error(
        &self,
        p: &EvolutionProblem,
        reference: impl Fn(f64) -> DVector<C64>,
    ) -> f64 {
        let h = p.triple().h_space();
        self.times
            .iter()
            .zip(&self.values)
            .map(|(&t, u)| h.norm(&(u - reference(t))))
            .fold(0.0, f64::max)
    }

    /// Largest relative pivot-norm gap to another trajectory.
    pub fn max_relative_gap(&self, p: &EvolutionProblem, other: &DiscreteSolution) -> f64 {
        let h = p.triple().h_space();
        let scale = self
            .values
            .iter()
            .map(|u| h.norm(u))
            .fold(0.0, f64::max)
            .max(1e-14);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| h.norm(&(a - b)))
            .fold(0.0, f64::max)
            / scale
    }
}

pub(super) fn validate_theta(theta: f64) -> Result<()> {
    if !(0.5..=1.0).contains(&theta) {
        return Err(Error::Invalid {
            what: format!("theta must lie in [1/2, 1], got {theta}"),
        });
    }
    Ok(())
}

/// One-step data of the theta scheme on cell `k`:
/// `(G_H + dt theta M_k) u_(k+1) = (G_H - dt (1-theta) M_k) u_k + dt G_H f_k`
/// with `M_k = M(t_(k+theta))`, `f_k = f(t_(k+theta))`.
struct StepData {
    implicit: DMatrix<C64>,
    explicit: DMatrix<C64>,
    load: DVector<C64>,
}

fn step_data(p: &EvolutionProblem, n_steps: usize, theta: f64, k: usize) -> StepData {
    let dt = p.horizon() / n_steps as f64;
    let t_eval = (k as f64 + theta) * dt;
    let gh = p.triple().h_space().gram();
    let m = p.form().pairing(t_eval);
    StepData {
        implicit: gh + &m * linalg::c(dt * theta),
        explicit: gh - &m * linalg::c(dt * (1.0 - theta)),
        load: gh * p.source_value(t_eval) * linalg::c(dt),
    }
}

fn validate_form_on_grid(p: &EvolutionProblem, n_steps: usize, theta: f64) -> Result<()> {
    let dt = p.horizon() / n_steps as f64;
    let mut samples = Vec::with_capacity(2 * n_steps + 1);
    for k in 0..=n_steps {
        samples.push(k as f64 * dt);
        if k < n_steps {
            samples.push((k as f64 + theta) * dt);
        }
    }
    p.form().validate_on(p.triple(), &samples)
}

/// The discrete fundamental map: `n_steps` applications of the one-step
/// scheme to the identity.
pub(super) fn fundamental_map(
    p: &EvolutionProblem,
    n_steps: usize,
    theta: f64,
) -> Result<DMatrix<C64>> {
    let n = p.n();
    let mut s = DMatrix::identity(n, n);
    for k in 0..n_steps {
        let data = step_data(p, n_steps, theta, k);
        let lu = data.implicit.lu();
        s = lu
            .solve(&(&data.explicit * s))
            .ok_or(Error::SingularSystem {
                what: "implicit step",
                smallest_singular_value: 0.0,
            })?;
    }
    Ok(s)
}

/// Pivot-norm operator norm of the discrete fundamental map. For a
/// coercive form and `theta >= 1/2` the step family is nonexpansive, and
/// strictly contractive when the coercivity constant is positive.
pub fn propagator_contraction(p: &EvolutionProblem, n_steps: usize, theta: f64) -> Result<f64> {
    validate_theta(theta)?;
    let s = fundamental_map(p, n_steps, theta)?;
    let h = p.triple().h_space();
    Ok(LinearMap::new(h.clone(), h.clone(), s)?.operator_norm())
}

fn diagnostics_for(
    p: &EvolutionProblem,
    n_steps: usize,
    theta: f64,
    values: &[DVector<C64>],
) -> Result<Diagnostics> {
    let h = p.triple().h_space();
    let u_sp = p.triple().u_space();
    let dt = p.horizon() / n_steps as f64;

    let boundary = h.norm(&(&values[0] - p.phi_adjoint() * values[n_steps].clone() - p.y0()));

    let mut stepping: f64 = 0.0;
    for k in 0..n_steps {
        let data = step_data(p, n_steps, theta, k);
        let residual = &data.implicit * &values[k + 1] - &data.explicit * &values[k] - &data.load;
        let back = h.apply_gram_inverse_vec(&residual);
        stepping = stepping.max(h.norm(&back) / dt);
    }

    // |u|_V^2 with trapezoid weights, |Du|_(V')^2 through the pairing rows
    let mut v_norm_sq = 0.0;
    for (k, u) in values.iter().enumerate() {
        let weight = if k == 0 || k == n_steps { dt / 2.0 } else { dt };
        v_norm_sq += weight * u_sp.norm(u).powi(2);
    }
    let gh = h.gram();
    let mut dual_sq = 0.0;
    for j in 0..=n_steps {
        let mut row = DVector::zeros(p.n());
        if j > 0 {
            row += gh * (&values[j] - &values[j - 1]) * linalg::c(0.5);
        }
        if j < n_steps {
            row += gh * (&values[j + 1] - &values[j]) * linalg::c(0.5);
        }
        let weight = if j == 0 || j == n_steps { dt / 2.0 } else { dt };
        let back = u_sp.apply_gram_inverse_vec(&row);
        dual_sq += (row.adjoint() * back)[(0, 0)].re / weight;
    }
    let w_norm = (v_norm_sq + dual_sq).sqrt();

    let propagator_norm = propagator_contraction(p, n_steps, theta)?;
    Ok(Diagnostics {
        boundary_residual: boundary,
        stepping_residual: stepping,
        w_norm,
        propagator_norm,
    })
}

fn package(
    p: &EvolutionProblem,
    n_steps: usize,
    theta: f64,
    values: Vec<DVector<C64>>,
) -> Result<DiscreteSolution> {
    let dt = p.horizon() / n_steps as f64;
    let times = (0..=n_steps).map(|k| k as f64 * dt).collect();
    let diagnostics = diagnostics_for(p, n_steps, theta, &values)?;
    if diagnostics.boundary_residual > crate::tol::BOUNDARY_RESIDUAL {
        return Err(Error::SingularSystem {
            what: "boundary coupling after the solve",
            smallest_singular_value: diagnostics.boundary_residual,
        });
    }
    Ok(DiscreteSolution {
        times,
        values,
        theta,
        diagnostics,
    })
}

/// Assembles the full space-time system: `n_steps` blocks of stepping rows
/// plus the coupling row `u_0 - Phi^* u_N = y0`, solved densely in one shot.
pub fn solve_all_at_once(
    p: &EvolutionProblem,
    n_steps: usize,
    theta: f64,
) -> Result<DiscreteSolution> {
    validate_theta(theta)?;
    if n_steps < 1 {
        return Err(Error::Invalid {
            what: "need at least one time step".into(),
        });
    }
    validate_form_on_grid(p, n_steps, theta)?;
    let n = p.n();
    let m = (n_steps + 1) * n;
    let mut system = DMatrix::zeros(m, m);
    let mut rhs = DVector::zeros(m);
    for k in 0..n_steps {
        let data = step_data(p, n_steps, theta, k);
        system
            .view_mut((k * n, k * n), (n, n))
            .copy_from(&(-&data.explicit));
        system
            .view_mut((k * n, (k + 1) * n), (n, n))
            .copy_from(&data.implicit);
        rhs.rows_mut(k * n, n).copy_from(&data.load);
    }
    let last = n_steps * n;
    system
        .view_mut((last, 0), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    system
        .view_mut((last, n_steps * n), (n, n))
        .copy_from(&(-p.phi_adjoint()));
    rhs.rows_mut(last, n).copy_from(p.y0());

    let lu = system.lu();
    let flat = lu.solve(&rhs).ok_or(Error::SingularSystem {
        what: "space-time system",
        smallest_singular_value: 0.0,
    })?;
    let values: Vec<DVector<C64>> = (0..=n_steps)
        .map(|k| flat.rows(k * n, n).into_owned())
        .collect();
    package(p, n_steps, theta, values)
}

/// Propagates the fundamental map and a zero-start particular solution,
/// then solves the coupling equation `(I - Phi^* S) u_0 = Phi^* w_N + y0`
/// and replays the stepping. Agrees with the all-at-once route.
pub fn solve_shooting(
    p: &EvolutionProblem,
    n_steps: usize,
    theta: f64,
) -> Result<DiscreteSolution> {
    validate_theta(theta)?;
    if n_steps < 1 {
        return Err(Error::Invalid {
            what: "need at least one time step".into(),
        });
    }
    validate_form_on_grid(p, n_steps, theta)?;
    let n = p.n();
    let mut fundamental = DMatrix::identity(n, n);
    let mut particular = DVector::zeros(n);
    for k in 0..n_steps {
        let data = step_data(p, n_steps, theta, k);
        let lu = data.implicit.lu();
        fundamental = lu
            .solve(&(&data.explicit * fundamental))
            .ok_or(Error::SingularSystem {
                what: "implicit step",
                smallest_singular_value: 0.0,
            })?;
        particular = lu
            .solve(&(&data.explicit * particular + &data.load))
            .ok_or(Error::SingularSystem {
                what: "implicit step",
                smallest_singular_value: 0.0,
            })?;
    }

    let coupling = DMatrix::identity(n, n) - p.phi_adjoint() * &fundamental;
    let (_, sigma, _) = linalg::svd_desc(&coupling);
    let smin = sigma.last().copied().unwrap_or(0.0);
    let smax = sigma.first().copied().unwrap_or(0.0);
    if smin <= 1e-12 * smax.max(1.0) {
        // coercivity plus contraction keeps |S|_H < 1, so this flags
        // invalid input rather than an unlucky grid
        return Err(Error::SingularSystem {
            what: "shooting coupling",
            smallest_singular_value: smin,
        });
    }
    let rhs = p.phi_adjoint() * &particular + p.y0();
    let u0 = coupling.lu().solve(&rhs).ok_or(Error::SingularSystem {
        what: "shooting coupling",
        smallest_singular_value: smin,
    })?;

    let mut values = Vec::with_capacity(n_steps + 1);
    values.push(u0);
    for k in 0..n_steps {
        let data = step_data(p, n_steps, theta, k);
        let next = data
            .implicit
            .lu()
            .solve(&(&data.explicit * &values[k] + &data.load))
            .ok_or(Error::SingularSystem {
                what: "implicit step",
                smallest_singular_value: 0.0,
            })?;
        values.push(next);
    }
    package(p, n_steps, theta, values)
}
