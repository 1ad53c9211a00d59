//! Graphical Lasso with hard zero constraints and a partial penalty.
//!
//! Maximizes `log det Θ − tr(ŜΘ) − λ Σ |Θ_ij|` where the sum runs over the
//! penalized edges (both orientations), subject to `Θ_ij = 0` for every pair
//! outside the constraint graph. Solved by block coordinate descent on the
//! covariance estimate `W`: each column update is a Lasso in Gram form whose
//! forbidden coordinates are pinned to zero.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use super::lasso::lasso_gram;
use super::UgmsError;
use crate::gaussian::{check_symmetric, min_eigenvalue};
use crate::graph::{Edge, Graph, Vertex};

/// Entries of `Θ̂` with magnitude above this count as selected edges.
pub const EDGE_THRESHOLD: f64 = 1e-6;
const MAX_SWEEPS: usize = 2_000;
const TOLERANCE: f64 = 1e-10;

/// Solver output. Matrix rows follow the constraint graph's vertices in
/// ascending order.
#[derive(Debug, Clone)]
pub struct GlassoFit {
    pub theta: DMatrix<f64>,
    /// The covariance iterate `W` (equal to `Θ̂⁻¹` at convergence).
    pub sigma: DMatrix<f64>,
    /// Penalized edges with `|Θ̂_ij| > 10⁻⁶`, in vertex ids.
    pub edges: BTreeSet<Edge>,
    pub converged: bool,
    pub sweeps: usize,
}

/// Solves the constrained, partially penalized graphical Lasso.
///
/// `s_hat` is indexed by the vertices of `constraint` in ascending order;
/// `penalized` must be a subgraph of `constraint`.
pub fn glasso(s_hat: &DMatrix<f64>, constraint: &Graph, penalized: &Graph, lambda: f64) -> Result<GlassoFit, UgmsError> {
    let verts: Vec<Vertex> = constraint.vertices().collect();
    let p = verts.len();
    if s_hat.nrows() != p || s_hat.ncols() != p {
        return Err(UgmsError::Dimension(format!(
            "covariance is {}x{}, constraint graph has {p} vertices",
            s_hat.nrows(),
            s_hat.ncols()
        )));
    }
    if let Some(e) = penalized.edges().find(|e| !constraint.has_edge(e.u(), e.v())) {
        return Err(UgmsError::Dimension(format!("penalized edge {e} is not in the constraint graph")));
    }
    check_symmetric(s_hat, 1e-9).map_err(|_| UgmsError::NotSymmetric)?;
    let scale = (0..p).map(|i| s_hat[(i, i)]).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let min_eig = min_eigenvalue(s_hat);
    if min_eig < -1e-8 * scale {
        return Err(UgmsError::NotPsd(min_eig));
    }

    let index = |v: Vertex| verts.binary_search(&v).expect("vertex of constraint graph");
    // For each column: the admissible coordinates (local indices) and their
    // penalty weights.
    let columns: Vec<(Vec<usize>, Vec<f64>)> = verts
        .iter()
        .map(|&v| {
            let coords: Vec<usize> = constraint.neighbors(v).iter().map(|&u| index(u)).collect();
            let weights = coords
                .iter()
                .map(|&c| if penalized.has_edge(v, verts[c]) { 1.0 } else { 0.0 })
                .collect();
            (coords, weights)
        })
        .collect();

    let mut w = s_hat.clone();
    let mut betas: Vec<DVector<f64>> = columns.iter().map(|(c, _)| DVector::zeros(c.len())).collect();
    let mut converged = false;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let (coords, weights) = &columns[j];
            if coords.is_empty() {
                continue;
            }
            let gram = DMatrix::from_fn(coords.len(), coords.len(), |a, b| w[(coords[a], coords[b])]);
            let rhs = DVector::from_fn(coords.len(), |a, _| s_hat[(coords[a], j)]);
            let fit = lasso_gram(&gram, &rhs, s_hat[(j, j)], weights, lambda, Some(&betas[j]), 1e-12);
            betas[j] = fit.beta;
            for i in (0..p).filter(|&i| i != j) {
                let new: f64 = coords.iter().zip(betas[j].iter()).map(|(&c, b)| w[(i, c)] * b).sum();
                max_change = max_change.max((new - w[(i, j)]).abs());
                w[(i, j)] = new;
                w[(j, i)] = new;
            }
        }
        converged = max_change < TOLERANCE * scale;
    }

    let mut theta = DMatrix::zeros(p, p);
    for j in 0..p {
        let (coords, _) = &columns[j];
        let w12_beta: f64 = coords.iter().zip(betas[j].iter()).map(|(&c, b)| w[(c, j)] * b).sum();
        let tjj = 1.0 / (w[(j, j)] - w12_beta);
        theta[(j, j)] = tjj;
        for (&c, b) in coords.iter().zip(betas[j].iter()) {
            theta[(c, j)] = -b * tjj;
        }
    }
    let theta = (&theta + theta.transpose()) * 0.5;
    let edges = penalized
        .edges()
        .filter(|e| theta[(index(e.u()), index(e.v()))].abs() > EDGE_THRESHOLD)
        .collect();
    Ok(GlassoFit {
        theta,
        sigma: w,
        edges,
        converged,
        sweeps,
    })
}
