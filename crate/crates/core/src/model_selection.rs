//! Regularization selection: EBIC scores, grid search, constrained maximum
//! likelihood refits, and edge-count matching between estimators.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{Cholesky, DMatrix, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Edge, Graph, Vertex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("precision estimate is not positive definite")]
    NotPositiveDefinite,
    #[error("invalid selection config: {0}")]
    Config(String),
    #[error("every grid point failed: {}", .0.iter().map(|(l, e)| format!("lambda={l}: {e}")).collect::<Vec<_>>().join("; "))]
    AllFailed(Vec<(f64, String)>),
    #[error("refit did not reach a positive definite estimate: {0}")]
    Refit(String),
}

/// EBIC sparsity parameter and the descending regularization grid it scans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EbicConfig {
    pub gamma: f64,
    pub lambda_grid: Vec<f64>,
}

impl EbicConfig {
    pub fn validate(&self) -> Result<(), SelectionError> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(SelectionError::Config(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        if self.lambda_grid.is_empty() {
            return Err(SelectionError::Config("lambda grid is empty".into()));
        }
        if self.lambda_grid.iter().any(|l| !(*l > 0.0)) {
            return Err(SelectionError::Config("lambda grid values must be > 0".into()));
        }
        if self.lambda_grid.windows(2).any(|w| w[0] <= w[1]) {
            return Err(SelectionError::Config("lambda grid must be strictly descending".into()));
        }
        Ok(())
    }
}

/// `k` log-spaced values from `hi` down to `lo`.
pub fn log_grid(hi: f64, lo: f64, k: usize) -> Vec<f64> {
    if k <= 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..k).map(|t| (a + (b - a) * t as f64 / (k - 1) as f64).exp()).collect()
}

/// `log det` of a positive definite matrix via Cholesky.
pub fn log_det(m: &DMatrix<f64>) -> Option<f64> {
    let chol = Cholesky::new(m.clone())?;
    let l = chol.l_dirty();
    Some((0..m.nrows()).map(|k| 2.0 * l[(k, k)].ln()).sum())
}

/// `−n[log det Θ̂ − tr(ŜΘ̂)] + |E| log n + 4γ|E| log p_eff` (smaller is better).
pub fn ebic_score(
    s_hat: &DMatrix<f64>,
    theta_hat: &DMatrix<f64>,
    edge_count: usize,
    n: usize,
    p_eff: usize,
    gamma: f64,
) -> Result<f64, SelectionError> {
    let ld = log_det(theta_hat).ok_or(SelectionError::NotPositiveDefinite)?;
    let trace = (s_hat * theta_hat).trace();
    let e = edge_count as f64;
    let n = n as f64;
    Ok(-n * (ld - trace) + e * n.ln() + 4.0 * gamma * e * (p_eff as f64).ln())
}

/// Maximum-likelihood precision matrix subject to zeros outside `structure`,
/// by iterative proportional scaling over the edges.
///
/// `s_hat` is indexed by the vertices of `structure` in ascending order.
/// Iterates until every fitted entry (edges and diagonal) of the implied
/// covariance is within `10⁻⁶` (relative) of `Ŝ`.
pub fn refit_mle(s_hat: &DMatrix<f64>, structure: &Graph) -> Result<DMatrix<f64>, SelectionError> {
    let verts: Vec<Vertex> = structure.vertices().collect();
    let p = verts.len();
    if s_hat.nrows() != p {
        return Err(SelectionError::Refit(format!("{p} vertices but a {}x{} covariance", s_hat.nrows(), s_hat.ncols())));
    }
    let index: BTreeMap<Vertex, usize> = verts.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let pairs: Vec<(usize, usize)> = structure.edges().map(|e| (index[&e.u()], index[&e.v()])).collect();
    if (0..p).any(|i| !(s_hat[(i, i)] > 0.0)) {
        return Err(SelectionError::Refit("nonpositive variance".into()));
    }
    let mut theta = DMatrix::from_fn(p, p, |i, j| if i == j { 1.0 / s_hat[(i, i)] } else { 0.0 });
    let mut sigma = DMatrix::from_fn(p, p, |i, j| if i == j { s_hat[(i, i)] } else { 0.0 });
    let scale = (0..p).map(|i| s_hat[(i, i)]).fold(0.0, f64::max);
    let tol = 1e-6 * scale.max(f64::MIN_POSITIVE);
    for _ in 0..10_000 {
        let worst = pairs
            .iter()
            .flat_map(|&(i, j)| [(i, j), (i, i), (j, j)])
            .map(|(a, b)| (sigma[(a, b)] - s_hat[(a, b)]).abs())
            .fold(0.0, f64::max);
        if worst < tol {
            return Ok(theta);
        }
        for &(i, j) in &pairs {
            let s_cc = Matrix2::new(s_hat[(i, i)], s_hat[(i, j)], s_hat[(j, i)], s_hat[(j, j)]);
            let sig_cc = Matrix2::new(sigma[(i, i)], sigma[(i, j)], sigma[(j, i)], sigma[(j, j)]);
            let (Some(s_inv), Some(sig_inv)) = (s_cc.try_inverse(), sig_cc.try_inverse()) else {
                return Err(SelectionError::Refit(format!("singular 2x2 block at ({}, {})", verts[i], verts[j])));
            };
            let dt = s_inv - sig_inv;
            let c = [i, j];
            for a in 0..2 {
                for b in 0..2 {
                    theta[(c[a], c[b])] += dt[(a, b)];
                }
            }
            // Σ ← Σ + Σ_{·C} Σ_CC⁻¹ (S_CC − Σ_CC) Σ_CC⁻¹ Σ_{C·}
            let middle = sig_inv * (s_cc - sig_cc) * sig_inv;
            let cols = DMatrix::from_fn(p, 2, |r, k| sigma[(r, c[k])]);
            let m = DMatrix::from_fn(2, 2, |a, b| middle[(a, b)]);
            sigma += &cols * m * cols.transpose();
        }
    }
    if Cholesky::new(theta.clone()).is_some() {
        Ok(theta)
    } else {
        Err(SelectionError::Refit("iterative scaling did not converge".into()))
    }
}

/// One λ's contribution to a selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPoint {
    pub lambda: f64,
    pub edges: usize,
    /// `None` if the estimator failed at this λ.
    pub score: Option<f64>,
}

/// A candidate produced by an estimator at one λ: the selected edges and
/// the precision estimate scored by EBIC.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub edges: BTreeSet<Edge>,
    pub theta: DMatrix<f64>,
}

/// The outcome of an EBIC grid search.
#[derive(Debug, Clone)]
pub struct Selection {
    pub lambda: f64,
    pub edges: BTreeSet<Edge>,
    pub trace: Vec<SelectionPoint>,
}

/// Scores every grid point with EBIC and returns the minimizer; ties go to
/// the larger λ. `s_hat` must match the candidates' `theta` dimensions.
pub fn select_lambda_ebic<F>(
    s_hat: &DMatrix<f64>,
    n: usize,
    p_eff: usize,
    cfg: &EbicConfig,
    estimator: F,
) -> Result<Selection, SelectionError>
where
    F: Fn(f64) -> Result<Candidate, String> + Sync,
{
    cfg.validate()?;
    let results: Vec<Result<(Candidate, f64), String>> = cfg
        .lambda_grid
        .par_iter()
        .map(|&lambda| {
            let cand = estimator(lambda)?;
            let score = ebic_score(s_hat, &cand.theta, cand.edges.len(), n, p_eff, cfg.gamma).map_err(|e| e.to_string())?;
            Ok((cand, score))
        })
        .collect();
    let mut trace = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    let mut best: Option<(f64, f64, &BTreeSet<Edge>)> = None;
    for (&lambda, r) in cfg.lambda_grid.iter().zip(&results) {
        match r {
            Ok((cand, score)) => {
                trace.push(SelectionPoint {
                    lambda,
                    edges: cand.edges.len(),
                    score: Some(*score),
                });
                if best.is_none_or(|(s, _, _)| *score < s) {
                    best = Some((*score, lambda, &cand.edges));
                }
            }
            Err(e) => {
                trace.push(SelectionPoint {
                    lambda,
                    edges: 0,
                    score: None,
                });
                failures.push((lambda, e.clone()));
            }
        }
    }
    match best {
        Some((_, lambda, edges)) => Ok(Selection {
            lambda,
            edges: edges.clone(),
            trace,
        }),
        None => Err(SelectionError::AllFailed(failures)),
    }
}

/// Finds the grid point whose estimate has an edge count closest to
/// `target` (ties to fewer edges, then to the larger λ).
///
/// Bisects on the grid assuming counts grow as λ decreases, then compares
/// every estimate evaluated along the way, so a non-monotone estimator still
/// gets a sensible answer.
pub fn match_edge_count<F>(estimator: F, target: usize, grid: &[f64]) -> (f64, Graph)
where
    F: Fn(f64) -> Graph,
{
    assert!(!grid.is_empty(), "empty grid");
    let mut memo: BTreeMap<usize, Graph> = BTreeMap::new();
    let mut eval = |k: usize| -> usize {
        memo.entry(k).or_insert_with(|| estimator(grid[k])).num_edges()
    };
    // First index whose count reaches the target.
    let (mut lo, mut hi) = (0usize, grid.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if eval(mid) >= target {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    for k in [lo.saturating_sub(1), lo.min(grid.len() - 1)] {
        eval(k);
    }
    let (k, g) = memo
        .into_iter()
        .min_by_key(|(k, g)| (g.num_edges().abs_diff(target), g.num_edges(), *k))
        .expect("at least one evaluation");
    (grid[k], g)
}
