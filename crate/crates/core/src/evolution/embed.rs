use std::ops::{AddAssign, SubAssign};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::derivation::{BoundaryStructure, ContractionBC, DerivationInstance};
use crate::error::{Error, Result};
use crate::hilbert::{InnerSpace, LinearMap};
use crate::linalg::{self, C64};
use crate::randgen;

use super::problem::EvolutionProblem;

/// The evolution problem recast as a derivation instance: grid functions
/// with the trapezoid-weighted norm, the summed difference pairing
/// `<Du, w> = sum_k <u_(k+1) - u_k, (w_k + w_(k+1))/2>_H`, interior grid
/// functions as the test space, and endpoint evaluations as traces. The
/// boundary form telescopes exactly to
/// `b(u, w) = <u_N, w_N>_H - <u_0, w_0>_H`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub instance: DerivationInstance,
    pub structure: Arc<BoundaryStructure>,
    pub grid: Vec<f64>,
    n: usize,
    n_steps: usize,
}

impl Discretization {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Split a stacked space-time coordinate vector into grid values.
    pub fn unstack(&self, flat: &DVector<C64>) -> Vec<DVector<C64>> {
        (0..=self.n_steps)
            .map(|k| flat.rows(k * self.n, self.n).into_owned())
            .collect()
    }

    pub fn stack(&self, values: &[DVector<C64>]) -> DVector<C64> {
        let mut flat = DVector::zeros((self.n_steps + 1) * self.n);
        for (k, v) in values.iter().enumerate() {
            flat.rows_mut(k * self.n, self.n).copy_from(v);
        }
        flat
    }
}

pub fn discretize(p: &EvolutionProblem, n_steps: usize) -> Result<Discretization> {
    if n_steps < 2 {
        return Err(Error::Invalid {
            what: "discretization needs at least two steps".into(),
        });
    }
    let n = p.n();
    let m = (n_steps + 1) * n;
    let dt = p.horizon() / n_steps as f64;
    let gram_u = p.triple().u_space().gram();
    let gram_h = p.triple().h_space().gram();

    let mut gram_v = DMatrix::zeros(m, m);
    for k in 0..=n_steps {
        let weight = if k == 0 || k == n_steps { dt / 2.0 } else { dt };
        gram_v
            .view_mut((k * n, k * n), (n, n))
            .copy_from(&(gram_u * linalg::c(weight)));
    }
    let v_space = InnerSpace::new(gram_v, p.triple().u_space().field())?;

    let mut pairing = DMatrix::zeros(m, m);
    let half = gram_h * linalg::c(0.5);
    for k in 0..n_steps {
        let (col0, col1) = (k * n, (k + 1) * n);
        for row in [col0, col1] {
            pairing.view_mut((row, col0), (n, n)).sub_assign(&half);
            pairing.view_mut((row, col1), (n, n)).add_assign(&half);
        }
    }
    let d_coeffs = v_space.apply_gram_inverse(&pairing);

    let interior = n_steps.saturating_sub(1) * n;
    let mut r_span = DMatrix::zeros(m, interior);
    for j in 0..interior {
        r_span[(n + j, j)] = linalg::c(1.0);
    }
    let instance = DerivationInstance::new(v_space, d_coeffs, &r_span)?;

    let h_space = p.triple().h_space().clone();
    let mut b0_coeffs = DMatrix::zeros(n, m);
    b0_coeffs
        .view_mut((0, 0), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    let mut b1_coeffs = DMatrix::zeros(n, m);
    b1_coeffs
        .view_mut((0, n_steps * n), (n, n))
        .copy_from(&DMatrix::identity(n, n));
    let b0 = LinearMap::new(instance.w_space().clone(), h_space.clone(), b0_coeffs)?;
    let b1 = LinearMap::new(instance.w_space().clone(), h_space.clone(), b1_coeffs)?;
    let structure = BoundaryStructure::new(&instance, h_space, b0, b1)?;

    let grid = (0..=n_steps).map(|k| k as f64 * dt).collect();
    Ok(Discretization {
        instance,
        structure,
        grid,
        n,
        n_steps,
    })
}

/// Operator, source and boundary data assembled on the discretization so
/// that the antidual equation rows are exactly the theta-scheme stepping
/// rows in disguise: every quadrature runs over cells against the averaged
/// test values `(w_k + w_(k+1))/2`, matching the difference pairing. The
/// assembled operator is positive semidefinite but not strictly coercive
/// on the grid space (the alternating mode is quadrature-invisible), which
/// is exactly why the strong-problem solver accepts degenerate operators.
#[derive(Debug, Clone)]
pub struct SdpEmbedding {
    pub a_op: LinearMap,
    pub f_rep: DVector<C64>,
    pub y0: DVector<C64>,
    pub cbc: ContractionBC,
}

pub fn sdp_embedding(
    p: &EvolutionProblem,
    disc: &Discretization,
    theta: f64,
) -> Result<SdpEmbedding> {
    super::scheme::validate_theta(theta)?;
    let n = disc.n();
    let n_steps = disc.n_steps();
    let m = (n_steps + 1) * n;
    let dt = p.horizon() / n_steps as f64;
    let gh = p.triple().h_space().gram();
    let v_space = disc.instance.v_space();

    let mut a_pairing = DMatrix::zeros(m, m);
    let mut load = DVector::zeros(m);
    for k in 0..n_steps {
        let t_eval = (k as f64 + theta) * dt;
        let m_k = p.form().pairing(t_eval);
        let lower = &m_k * linalg::c(dt / 2.0 * (1.0 - theta));
        let upper = &m_k * linalg::c(dt / 2.0 * theta);
        let f_val = gh * p.source_value(t_eval) * linalg::c(dt / 2.0);
        for row in [k * n, (k + 1) * n] {
            a_pairing.view_mut((row, k * n), (n, n)).add_assign(&lower);
            a_pairing
                .view_mut((row, (k + 1) * n), (n, n))
                .add_assign(&upper);
            load.rows_mut(row, n).add_assign(&f_val);
        }
    }
    let a_coeffs = v_space.apply_gram_inverse(&a_pairing);
    let a_op = LinearMap::new(v_space.clone(), v_space.clone(), a_coeffs)?;
    let f_rep = v_space.apply_gram_inverse_vec(&load);
    let cbc = ContractionBC::new(disc.structure.clone(), p.phi())?;
    Ok(SdpEmbedding {
        a_op,
        f_rep,
        y0: p.y0().clone(),
        cbc,
    })
}

/// Randomized check of the discrete integration-by-parts identity: the
/// difference pairing, summed both ways, telescopes to the endpoint inner
/// products. Both sides are evaluated independently (term sums against
/// endpoint products); the defect is measured relative to the total term
/// magnitude.
#[derive(Debug, Clone)]
pub struct IbpReport {
    pub trials: usize,
    pub max_relative_defect: f64,
    pub pass: bool,
}

pub fn discrete_ibp_check(
    p: &EvolutionProblem,
    n_steps: usize,
    trials: usize,
    seed: u64,
    tolerance: f64,
) -> IbpReport {
    let h = p.triple().h_space();
    let n = p.n();
    let mut rng = randgen::rng(seed);
    let mut max_defect: f64 = 0.0;
    for _ in 0..trials {
        let v: Vec<DVector<C64>> = (0..=n_steps)
            .map(|_| randgen::vector(&mut rng, n, h.field()))
            .collect();
        let w: Vec<DVector<C64>> = (0..=n_steps)
            .map(|_| randgen::vector(&mut rng, n, h.field()))
            .collect();
        let mut lhs = linalg::c(0.0);
        let mut magnitude = 1.0;
        for k in 0..n_steps {
            let dv = &v[k + 1] - &v[k];
            let aw = (&w[k] + &w[k + 1]) * linalg::c(0.5);
            let term_v = h.inner(&dv, &aw);
            let dw = &w[k + 1] - &w[k];
            let av = (&v[k] + &v[k + 1]) * linalg::c(0.5);
            let term_w = h.inner(&dw, &av);
            lhs += term_v + term_w.conj();
            magnitude += term_v.norm() + term_w.norm();
        }
        let rhs = h.inner(&v[n_steps], &w[n_steps]) - h.inner(&v[0], &w[0]);
        let defect = (lhs - rhs).norm() / magnitude;
        max_defect = max_defect.max(defect);
    }
    IbpReport {
        trials,
        max_relative_defect: max_defect,
        pass: max_defect < tolerance,
    }
}
