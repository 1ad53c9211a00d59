//! Pluggable graphical model selection algorithms.
//!
//! Every algorithm works under the same restriction interface: it is given a
//! graph `H` known to contain the true edges and a graph `L ⊆ H` of edges to
//! decide, and only ever returns a subset of `L`.

pub mod glasso;
pub mod lasso;
pub mod nlasso;
pub mod pc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use glasso::{glasso, GlassoFit};
pub use lasso::{solve_lasso, soft_threshold, LassoFit, LassoProblem};
pub use nlasso::{nlasso, nlasso_cov, CombineRule, NLassoOptions};
pub use pc::pc;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UgmsError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:e})")]
    NotPsd(f64),
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error(transparent)]
    Graph(#[from] crate::graph::GraphError),
    #[error(transparent)]
    Gaussian(#[from] crate::gaussian::GaussianError),
}

/// The algorithm applied to each subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Pc,
    Nlasso,
    Glasso,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Pc => "pc",
            Algorithm::Nlasso => "nlasso",
            Algorithm::Glasso => "glasso",
        }
    }

    /// Short label of the flat variant (`PC`, `nL`, `gL`); the decomposed
    /// variant prefixes a `J`.
    pub fn label(&self) -> &'static str {
        match self {
            Algorithm::Pc => "PC",
            Algorithm::Nlasso => "nL",
            Algorithm::Glasso => "gL",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pc" => Ok(Algorithm::Pc),
            "nlasso" => Ok(Algorithm::Nlasso),
            "glasso" => Ok(Algorithm::Glasso),
            other => Err(format!("unknown algorithm `{other}` (expected pc, nlasso or glasso)")),
        }
    }
}
