//! Gaussian graphical-model machinery: precision-matrix models, sampling,
//! empirical covariances, partial correlations and conditional-independence
//! tests.
//!
//! A CI test answers "is `X_i ⊥ X_j | X_S`?"; `true` means independent, i.e.
//! the edge `(i, j)` may be deleted. Sample tests threshold the empirical
//! partial correlation (raw threshold or Fisher z); the oracle test uses the
//! exact covariance of a known model.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::OnceLock;

use nalgebra::{Cholesky, DMatrix, Matrix2, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::graph::{Graph, Vertex, VertexSet};

/// Entries of an oracle partial correlation below this are treated as zero.
pub const ORACLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GaussianError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric: entry ({i}, {j}) differs from ({j}, {i})")]
    NotSymmetric { i: usize, j: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix contains a non-finite entry at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("conditioning covariance over {0:?} is singular")]
    Singular(Vec<Vertex>),
    #[error("at least {needed} observations required, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("variable {index} out of range for {p} variables")]
    OutOfRange { index: usize, p: usize },
}

/// Checks that `m` is square, finite and symmetric up to a relative `tol`.
pub fn check_symmetric(m: &DMatrix<f64>, tol: f64) -> Result<(), GaussianError> {
    if m.nrows() != m.ncols() {
        return Err(GaussianError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    let scale = m.amax().max(1.0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if !m[(i, j)].is_finite() {
                return Err(GaussianError::NonFinite(i, j));
            }
            if (m[(i, j)] - m[(j, i)]).abs() > tol * scale {
                return Err(GaussianError::NotSymmetric { i: i.min(j), j: i.max(j) });
            }
        }
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

/// A zero-mean Gaussian model given by its precision matrix.
#[derive(Debug, Clone)]
pub struct GaussianModel {
    precision: DMatrix<f64>,
    covariance: OnceLock<DMatrix<f64>>,
}

impl GaussianModel {
    /// Validates symmetry and positive definiteness.
    pub fn new(precision: DMatrix<f64>) -> Result<Self, GaussianError> {
        check_symmetric(&precision, 1e-10)?;
        if Cholesky::new(precision.clone()).is_none() || min_eigenvalue(&precision) <= 0.0 {
            return Err(GaussianError::NotPositiveDefinite);
        }
        Ok(GaussianModel {
            precision,
            covariance: OnceLock::new(),
        })
    }

    pub fn p(&self) -> usize {
        self.precision.nrows()
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// `Σ = Θ⁻¹`, computed on first use.
    pub fn covariance(&self) -> &DMatrix<f64> {
        self.covariance.get_or_init(|| {
            Cholesky::new(self.precision.clone())
                .expect("validated positive definite")
                .inverse()
        })
    }

    /// The graph of nonzero off-diagonal precision entries (`|Θ_ij| > tol`).
    pub fn graph(&self, tol: f64) -> Graph {
        let p = self.p();
        let mut g = Graph::empty(p);
        for i in 0..p {
            for j in i + 1..p {
                if self.precision[(i, j)].abs() > tol {
                    g.add_edge(i, j);
                }
            }
        }
        g
    }

    /// Draws `n` i.i.d. rows from `N(0, Θ⁻¹)`: with `Θ = L Lᵀ`, each row is
    /// the solution `x` of `Lᵀ x = z` for standard normal `z`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Dataset, GaussianError> {
        let p = self.p();
        let chol = Cholesky::new(self.precision.clone()).ok_or(GaussianError::NotPositiveDefinite)?;
        let upper = chol.l().transpose();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(p, n, |_, _| StandardNormal.sample(&mut rng));
        let x = upper
            .solve_upper_triangular(&z)
            .ok_or(GaussianError::NotPositiveDefinite)?;
        Dataset::new(x.transpose())
    }
}

/// An `n × p` matrix of observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    data: DMatrix<f64>,
}

impl Dataset {
    /// Wraps an observation matrix; requires at least one row and finite entries.
    pub fn new(data: DMatrix<f64>) -> Result<Self, GaussianError> {
        if data.nrows() == 0 {
            return Err(GaussianError::TooFewSamples { needed: 1, got: 0 });
        }
        if let Some(k) = data.iter().position(|x| !x.is_finite()) {
            return Err(GaussianError::NonFinite(k % data.nrows(), k / data.nrows()));
        }
        Ok(Dataset { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn observations(&self) -> &DMatrix<f64> {
        &self.data
    }

    /// `Ŝ_A = (1/n) Σ_k x_A⁽ᵏ⁾ x_A⁽ᵏ⁾ᵀ` over the variables `a` (in the given
    /// order). With `center`, column means are subtracted first.
    pub fn empirical_covariance(&self, a: &[Vertex], center: bool) -> Result<DMatrix<f64>, GaussianError> {
        let n = self.n();
        if n < 2 {
            return Err(GaussianError::TooFewSamples { needed: 2, got: n });
        }
        if let Some(&index) = a.iter().find(|&&v| v >= self.p()) {
            return Err(GaussianError::OutOfRange { index, p: self.p() });
        }
        let mut x = self.data.select_columns(a);
        if center {
            for mut col in x.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
        }
        Ok(x.transpose() * &x / n as f64)
    }

    /// Empirical covariance over all variables.
    pub fn covariance(&self, center: bool) -> Result<DMatrix<f64>, GaussianError> {
        let all: Vec<Vertex> = (0..self.p()).collect();
        self.empirical_covariance(&all, center)
    }
}

/// Partial correlation `ρ_{ij|S}` from a covariance matrix, computed from the
/// conditional covariance of `(i, j)` given `S` via a Cholesky solve on
/// `Σ_SS`. An empty `S` gives the plain correlation.
pub fn partial_correlation(sigma: &DMatrix<f64>, i: Vertex, j: Vertex, s: &[Vertex]) -> Result<f64, GaussianError> {
    let c = conditional_covariance(sigma, i, j, s)?;
    let denom = (c[(0, 0)] * c[(1, 1)]).sqrt();
    if !(denom > 0.0) || !denom.is_finite() {
        return Err(GaussianError::Singular(s.to_vec()));
    }
    Ok((c[(0, 1)] / denom).clamp(-1.0, 1.0))
}

/// The 2×2 covariance of `(X_i, X_j)` given `X_S`.
fn conditional_covariance(sigma: &DMatrix<f64>, i: Vertex, j: Vertex, s: &[Vertex]) -> Result<Matrix2<f64>, GaussianError> {
    let pair = [i, j];
    let mut c = Matrix2::from_fn(|a, b| sigma[(pair[a], pair[b])]);
    if s.is_empty() {
        return Ok(c);
    }
    let sss = DMatrix::from_fn(s.len(), s.len(), |a, b| sigma[(s[a], s[b])]);
    let chol = Cholesky::new(sss).ok_or_else(|| GaussianError::Singular(s.to_vec()))?;
    // Reject numerically singular conditioning blocks.
    let l = chol.l_dirty();
    let diag_min = (0..s.len()).map(|k| l[(k, k)]).fold(f64::INFINITY, f64::min);
    let diag_max = (0..s.len()).map(|k| l[(k, k)]).fold(0.0, f64::max);
    if !(diag_min > 1e-8 * diag_max.max(f64::MIN_POSITIVE)) {
        return Err(GaussianError::Singular(s.to_vec()));
    }
    let b = DMatrix::from_fn(s.len(), 2, |a, k| sigma[(s[a], pair[k])]);
    let x = chol.solve(&b);
    let correction = b.transpose() * x;
    for a in 0..2 {
        for k in 0..2 {
            c[(a, k)] -= correction[(a, k)];
        }
    }
    Ok(c)
}

/// How a sample CI test turns a partial correlation into a decision.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TestConfig {
    /// Independent iff `|ρ̂| < lambda`.
    RawThreshold { lambda: f64 },
    /// Independent unless `√(n − |S| − 3)·|atanh ρ̂| > Φ⁻¹(1 − α/2)`.
    FisherZ { alpha: f64 },
}

/// Two-sided standard normal critical value `Φ⁻¹(1 − α/2)`.
pub fn normal_critical_value(alpha: f64) -> f64 {
    Normal::standard().inverse_cdf(1.0 - alpha / 2.0)
}

/// The `|ρ̂|` at which the Fisher test with level `alpha` flips, for `n`
/// samples and a conditioning set of size `s_len`.
pub fn fisher_cutoff(n: usize, s_len: usize, alpha: f64) -> f64 {
    let dof = n as f64 - s_len as f64 - 3.0;
    if dof <= 0.0 {
        return 1.0;
    }
    (normal_critical_value(alpha) / dof.sqrt()).tanh()
}

impl TestConfig {
    /// The decision for an observed partial correlation; `true` = independent.
    ///
    /// A Fisher test without residual degrees of freedom (`n − |S| − 3 ≤ 0`)
    /// cannot reject anything and keeps the edge.
    pub fn decide(&self, rho: f64, n: usize, s_len: usize) -> bool {
        match *self {
            TestConfig::RawThreshold { lambda } => rho.abs() < lambda,
            TestConfig::FisherZ { alpha } => {
                let dof = n as f64 - s_len as f64 - 3.0;
                if dof <= 0.0 {
                    return false;
                }
                let r = rho.clamp(-1.0 + 1e-15, 1.0 - 1e-15);
                dof.sqrt() * r.atanh().abs() <= normal_critical_value(alpha)
            }
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match *self {
            TestConfig::RawThreshold { lambda } if !(lambda >= 0.0) => {
                Err(format!("raw-threshold lambda must be >= 0, got {lambda}"))
            }
            TestConfig::FisherZ { alpha } if !(alpha > 0.0 && alpha < 1.0) => {
                Err(format!("fisher-z alpha must lie in (0, 1), got {alpha}"))
            }
            _ => Ok(()),
        }
    }
}

/// A conditional-independence oracle or test. `true` means independent.
pub trait CiTest: Sync {
    fn independent(&self, i: Vertex, j: Vertex, s: &[Vertex]) -> bool;

    /// Number of tests answered "dependent" because the conditioning
    /// covariance was singular.
    fn singular_count(&self) -> usize {
        0
    }
}

/// Sample CI test on a precomputed empirical covariance.
#[derive(Debug)]
pub struct SampleCi {
    cov: DMatrix<f64>,
    n: usize,
    cfg: TestConfig,
    singular: AtomicUsize,
}

impl SampleCi {
    pub fn new(cov: DMatrix<f64>, n: usize, cfg: TestConfig) -> Self {
        SampleCi {
            cov,
            n,
            cfg,
            singular: AtomicUsize::new(0),
        }
    }

    pub fn from_dataset(data: &Dataset, cfg: TestConfig) -> Result<Self, GaussianError> {
        Ok(SampleCi::new(data.covariance(false)?, data.n(), cfg))
    }

    pub fn with_config(&self, cfg: TestConfig) -> Self {
        SampleCi::new(self.cov.clone(), self.n, cfg)
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

impl CiTest for SampleCi {
    fn independent(&self, i: Vertex, j: Vertex, s: &[Vertex]) -> bool {
        match partial_correlation(&self.cov, i, j, s) {
            Ok(rho) => self.cfg.decide(rho, self.n, s.len()),
            Err(_) => {
                self.singular.fetch_add(1, Ordering::Relaxed);
                false
            }
        }
    }

    fn singular_count(&self) -> usize {
        self.singular.load(Ordering::Relaxed)
    }
}

/// Exact CI test from a model's covariance.
#[derive(Debug, Clone)]
pub struct OracleCi {
    cov: DMatrix<f64>,
}

impl OracleCi {
    pub fn new(model: &GaussianModel) -> Self {
        OracleCi {
            cov: model.covariance().clone(),
        }
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }
}

impl CiTest for OracleCi {
    fn independent(&self, i: Vertex, j: Vertex, s: &[Vertex]) -> bool {
        partial_correlation(&self.cov, i, j, s).is_ok_and(|rho| rho.abs() < ORACLE_TOLERANCE)
    }
}

/// One-off sample CI test computed directly from the data.
pub fn ci_test(data: &Dataset, i: Vertex, j: Vertex, s: &VertexSet, cfg: TestConfig) -> Result<bool, GaussianError> {
    let mut vars = vec![i, j];
    vars.extend(s.iter().copied());
    let cov = data.empirical_covariance(&vars, false)?;
    let local: Vec<Vertex> = (2..vars.len()).collect();
    Ok(match partial_correlation(&cov, 0, 1, &local) {
        Ok(rho) => cfg.decide(rho, data.n(), s.len()),
        Err(GaussianError::Singular(_)) => false,
        Err(e) => return Err(e),
    })
}

/// Exact CI query on a model: `|ρ_{ij|S}| < 10⁻¹⁰`.
pub fn oracle_ci(model: &GaussianModel, i: Vertex, j: Vertex, s: &VertexSet) -> Result<bool, GaussianError> {
    let s: Vec<Vertex> = s.iter().copied().collect();
    Ok(partial_correlation(model.covariance(), i, j, &s)?.abs() < ORACLE_TOLERANCE)
}
