//! Weighted Lasso by cyclic coordinate descent.
//!
//! Minimizes `½‖y − Xβ‖² + λ Σ w_i |β_i|`, where a weight of `0` leaves a
//! coefficient unpenalized and an infinite weight pins it to zero. The solver
//! works on the Gram form (`XᵀX`, `Xᵀy`, `yᵀy`), which is also how the
//! neighborhood and graphical Lasso call it with covariance matrices.

use nalgebra::{DMatrix, DVector};

use super::UgmsError;

/// Largest coordinate change below which the sweeps stop.
pub const LASSO_TOLERANCE: f64 = 1e-8;
/// Sweep budget before giving up with `converged = false`.
pub const LASSO_MAX_SWEEPS: usize = 10_000;

/// A weighted Lasso problem in design-matrix form.
#[derive(Debug, Clone)]
pub struct LassoProblem {
    pub design: DMatrix<f64>,
    pub response: DVector<f64>,
    pub penalty_weights: Vec<f64>,
    pub lambda: f64,
}

/// Solver output.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoFit {
    pub beta: DVector<f64>,
    /// `false` if the sweep budget ran out first.
    pub converged: bool,
    pub sweeps: usize,
    /// Objective value after each sweep.
    pub objective: Vec<f64>,
}

/// `sign(z)·max(|z| − t, 0)`.
pub fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Solves a [`LassoProblem`].
pub fn solve_lasso(prob: &LassoProblem) -> Result<LassoFit, UgmsError> {
    let (n, q) = prob.design.shape();
    if prob.response.len() != n || prob.penalty_weights.len() != q {
        return Err(UgmsError::Dimension(format!(
            "design is {n}x{q}, response has {} entries, {} penalty weights",
            prob.response.len(),
            prob.penalty_weights.len()
        )));
    }
    if prob.penalty_weights.iter().any(|w| w.is_nan() || *w < 0.0) || !(prob.lambda >= 0.0) {
        return Err(UgmsError::Dimension("penalty weights and lambda must be >= 0".into()));
    }
    let gram = prob.design.transpose() * &prob.design;
    let b = prob.design.transpose() * &prob.response;
    let c = prob.response.dot(&prob.response);
    Ok(lasso_gram(&gram, &b, c, &prob.penalty_weights, prob.lambda, None, LASSO_TOLERANCE))
}

/// Coordinate descent on `½ c − bᵀβ + ½ βᵀGβ + λ Σ w_i|β_i|`.
pub(crate) fn lasso_gram(
    gram: &DMatrix<f64>,
    b: &DVector<f64>,
    c: f64,
    weights: &[f64],
    lambda: f64,
    warm: Option<&DVector<f64>>,
    tol: f64,
) -> LassoFit {
    let q = b.len();
    let penalty = |j: usize| if weights[j] == 0.0 { 0.0 } else { lambda * weights[j] };
    let mut beta = match warm {
        Some(w) => DVector::from_fn(q, |j, _| if weights[j].is_infinite() { 0.0 } else { w[j] }),
        None => DVector::zeros(q),
    };
    let mut g_beta = gram * &beta;
    let objective_of = |beta: &DVector<f64>, g_beta: &DVector<f64>| {
        let l1: f64 = (0..q)
            .filter(|&j| beta[j] != 0.0)
            .map(|j| penalty(j) * beta[j].abs())
            .sum();
        0.5 * c - b.dot(beta) + 0.5 * beta.dot(g_beta) + l1
    };
    let mut objective = Vec::new();
    let mut converged = q == 0;
    let mut sweeps = 0;
    while !converged && sweeps < LASSO_MAX_SWEEPS {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..q {
            if weights[j].is_infinite() {
                continue;
            }
            let gjj = gram[(j, j)];
            let new = if gjj > 0.0 {
                let r = b[j] - g_beta[j] + gjj * beta[j];
                soft_threshold(r, penalty(j)) / gjj
            } else {
                0.0
            };
            let delta = new - beta[j];
            if delta != 0.0 {
                beta[j] = new;
                g_beta.axpy(delta, &gram.column(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        objective.push(objective_of(&beta, &g_beta));
        converged = max_change < tol;
    }
    LassoFit {
        beta,
        converged,
        sweeps,
        objective,
    }
}
