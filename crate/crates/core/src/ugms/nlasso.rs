//! Neighborhood selection with per-node Lasso regressions.
//!
//! For each vertex `k` that touches an edge to be decided, `X_k` is regressed
//! on the other variables of the closure `R̄`. Coefficients of marginal-graph
//! non-neighbors are forced to zero, coefficients of the edges being decided
//! are penalized, and the remaining allowed coefficients are left free. The
//! per-node supports are then combined edge by edge.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::lasso::{lasso_gram, LASSO_TOLERANCE};
use super::UgmsError;
use crate::gaussian::Dataset;
use crate::graph::{Edge, Graph, Vertex, VertexSet};

/// How two per-node neighborhood estimates are combined into an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineRule {
    /// Keep `(i, j)` if either regression selects the other endpoint.
    Union,
    /// Keep `(i, j)` only if both regressions select each other.
    Intersection,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NLassoOptions {
    pub rule: CombineRule,
    /// Two-stage adaptive reweighting `w_i = 1/(|β̂_i| + 10⁻⁶)`.
    pub adaptive: bool,
}

impl Default for NLassoOptions {
    fn default() -> Self {
        NLassoOptions {
            rule: CombineRule::Intersection,
            adaptive: false,
        }
    }
}

/// Result of a neighborhood-selection run.
#[derive(Debug, Clone, PartialEq)]
pub struct NLassoFit {
    pub edges: BTreeSet<Edge>,
    /// Number of node regressions that hit the sweep budget.
    pub unconverged: usize,
}

/// Neighborhood Lasso on data: `h` is the current superset graph, whose
/// marginal over `rbar` bounds the allowed coefficients, and `h_prime` holds
/// the penalized edges to decide.
pub fn nlasso(
    data: &Dataset,
    rbar: &VertexSet,
    h: &Graph,
    h_prime: &Graph,
    lambda: f64,
    opts: NLassoOptions,
) -> Result<NLassoFit, UgmsError> {
    if let Some(e) = h_prime.edges().find(|e| !e.within(rbar)) {
        return Err(UgmsError::Dimension(format!("edge {e} lies outside the closure")));
    }
    let allowed = h.union(h_prime).marginal_graph(rbar)?;
    let cov = data.covariance(false)?;
    Ok(nlasso_cov(&cov, &allowed, h_prime, lambda, opts))
}

/// Neighborhood Lasso on a covariance matrix indexed by vertex id. `allowed`
/// is the graph of admissible neighbors (the marginal graph over the closure);
/// `h_prime ⊆ allowed` holds the penalized edges.
pub fn nlasso_cov(cov: &DMatrix<f64>, allowed: &Graph, h_prime: &Graph, lambda: f64, opts: NLassoOptions) -> NLassoFit {
    let mut selected: BTreeMap<Vertex, VertexSet> = BTreeMap::new();
    let mut unconverged = 0;
    for k in h_prime.vertices().filter(|&k| h_prime.degree(k) > 0) {
        let penalized = h_prime.neighbors(k);
        let coords: Vec<Vertex> = allowed.neighbors(k).union(penalized).copied().collect();
        let gram = DMatrix::from_fn(coords.len(), coords.len(), |a, b| cov[(coords[a], coords[b])]);
        let rhs = DVector::from_fn(coords.len(), |a, _| cov[(coords[a], k)]);
        let mut weights: Vec<f64> = coords
            .iter()
            .map(|v| if penalized.contains(v) { 1.0 } else { 0.0 })
            .collect();
        let mut fit = lasso_gram(&gram, &rhs, cov[(k, k)], &weights, lambda, None, LASSO_TOLERANCE);
        if opts.adaptive {
            for (w, b) in weights.iter_mut().zip(fit.beta.iter()) {
                if *w > 0.0 {
                    *w = 1.0 / (b.abs() + 1e-6);
                }
            }
            fit = lasso_gram(&gram, &rhs, cov[(k, k)], &weights, lambda, Some(&fit.beta), LASSO_TOLERANCE);
        }
        if !fit.converged {
            unconverged += 1;
        }
        let support: VertexSet = coords
            .iter()
            .zip(fit.beta.iter())
            .filter(|(v, b)| penalized.contains(v) && **b != 0.0)
            .map(|(v, _)| *v)
            .collect();
        selected.insert(k, support);
    }
    let picks = |a: Vertex, b: Vertex| selected.get(&a).is_some_and(|s| s.contains(&b));
    let edges = h_prime
        .edges()
        .filter(|e| {
            let (x, y) = (picks(e.u(), e.v()), picks(e.v(), e.u()));
            match opts.rule {
                CombineRule::Union => x || y,
                CombineRule::Intersection => x && y,
            }
        })
        .collect();
    NLassoFit { edges, unconverged }
}
