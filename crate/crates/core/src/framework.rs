//! The junction-tree framework: screening a superset graph `H`, estimating
//! the edges of each region of its region graph on the region's closure,
//! and the iterative estimate-and-rebuild loop.
//!
//! Each iteration builds a junction tree of `Ĝ ∪ H` (merging clusters whose
//! separators exceed the cap), builds its region graph, picks the first row
//! holding a region with edges left to decide, decides those edges
//! (`H′_R`) for every region of that row, moves them out of `H`, and adds
//! the accepted ones to `Ĝ`. The loop ends when `H` is empty.

use std::collections::BTreeSet;
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaussian::{CiTest, Dataset, GaussianError, GaussianModel, SampleCi, TestConfig};
use crate::graph::{Edge, Graph, GraphError, Vertex, VertexSet};
use crate::junction_tree::{build_junction_tree, merge_by_separator_cap, JunctionTree};
use crate::model_selection::{log_grid, refit_mle, select_lambda_ebic, Candidate, EbicConfig, SelectionError, SelectionPoint};
use crate::region_graph::{build_region_graph, RegionGraph};
use crate::ugms::{glasso, nlasso_cov, pc, Algorithm, NLassoOptions, UgmsError};

/// Largest screening κ accepted; higher values make the first pass too costly.
pub const MAX_SCREEN_KAPPA: usize = 3;

#[derive(Debug, Error)]
pub enum FrameworkError {
    #[error("invalid framework config: {0}")]
    Config(String),
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Ugms(#[from] UgmsError),
}

/// Where conditional-independence information comes from.
#[derive(Debug, Clone)]
pub enum Backend {
    /// Empirical covariance (no centering) of `n` observations.
    Sample { cov: DMatrix<f64>, n: usize },
    /// Exact covariance of a known model.
    Oracle { cov: DMatrix<f64> },
}

impl Backend {
    pub fn from_dataset(data: &Dataset) -> Result<Self, GaussianError> {
        Ok(Backend::Sample {
            cov: data.covariance(false)?,
            n: data.n(),
        })
    }

    pub fn oracle(model: &GaussianModel) -> Self {
        Backend::Oracle {
            cov: model.covariance().clone(),
        }
    }

    pub fn p(&self) -> usize {
        match self {
            Backend::Sample { cov, .. } | Backend::Oracle { cov } => cov.nrows(),
        }
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        match self {
            Backend::Sample { cov, .. } | Backend::Oracle { cov } => cov,
        }
    }

    /// Sample size; `None` for the oracle.
    pub fn n(&self) -> Option<usize> {
        match self {
            Backend::Sample { n, .. } => Some(*n),
            Backend::Oracle { .. } => None,
        }
    }

    pub fn is_oracle(&self) -> bool {
        matches!(self, Backend::Oracle { .. })
    }

    /// A CI test: the sample backend applies `cfg`, the oracle ignores it.
    pub fn ci(&self, cfg: TestConfig) -> Box<dyn CiTest + '_> {
        match self {
            Backend::Sample { cov, n } => Box::new(SampleCi::new(cov.clone(), *n, cfg)),
            Backend::Oracle { cov } => Box::new(OracleFromCov(cov)),
        }
    }

    fn sub_covariance(&self, vertices: &VertexSet) -> DMatrix<f64> {
        let idx: Vec<Vertex> = vertices.iter().copied().collect();
        let cov = self.covariance();
        DMatrix::from_fn(idx.len(), idx.len(), |a, b| cov[(idx[a], idx[b])])
    }
}

struct OracleFromCov<'a>(&'a DMatrix<f64>);

impl CiTest for OracleFromCov<'_> {
    fn independent(&self, i: Vertex, j: Vertex, s: &[Vertex]) -> bool {
        crate::gaussian::partial_correlation(self.0, i, j, s)
            .is_ok_and(|rho| rho.abs() < crate::gaussian::ORACLE_TOLERANCE)
    }
}

/// Settings of the decomposition and of the per-subproblem algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameworkConfig {
    pub algorithm: Algorithm,
    /// Largest conditioning-set size for PC on subproblems.
    pub kappa: usize,
    /// EBIC γ and the λ grid searched on each subproblem (raw partial
    /// correlation thresholds for PC, penalty levels for the Lasso variants).
    pub ebic: EbicConfig,
    #[serde(default)]
    pub nlasso: NLassoOptions,
    /// Screening κ for [`screen_graph_h`].
    pub kappa_screen: usize,
    /// Screening test (a liberal Fisher level by default).
    pub screen_test: TestConfig,
    /// Merge junction-tree clusters until no separator exceeds this size.
    pub separator_cap: usize,
    /// Closures smaller than this are decided by per-edge hypothesis tests.
    pub small_subproblem_size: usize,
    /// Fisher level of the per-edge tests on small closures.
    pub small_alpha: f64,
    /// Run a final pruning pass over `Ĝ`.
    pub prune: bool,
    /// Fisher level of the pruning tests.
    pub prune_alpha: f64,
}

impl FrameworkConfig {
    /// Defaults for an algorithm.
    pub fn new(algorithm: Algorithm) -> Self {
        let lambda_grid = match algorithm {
            Algorithm::Pc => log_grid(0.5, 0.02, 30),
            Algorithm::Nlasso | Algorithm::Glasso => log_grid(0.5, 0.005, 30),
        };
        FrameworkConfig {
            algorithm,
            kappa: 1,
            ebic: EbicConfig { gamma: 0.5, lambda_grid },
            nlasso: NLassoOptions::default(),
            kappa_screen: 0,
            screen_test: TestConfig::FisherZ { alpha: 0.25 },
            separator_cap: 1,
            small_subproblem_size: 8,
            small_alpha: 0.05,
            prune: true,
            prune_alpha: 0.05,
        }
    }

    pub fn validate(&self) -> Result<(), FrameworkError> {
        let bad = |m: String| Err(FrameworkError::Config(m));
        if self.separator_cap < 1 {
            return bad("separator_cap must be >= 1".into());
        }
        if self.small_subproblem_size < 2 {
            return bad("small_subproblem_size must be >= 2".into());
        }
        if self.kappa_screen > MAX_SCREEN_KAPPA {
            return bad(format!("kappa_screen must be <= {MAX_SCREEN_KAPPA}, got {}", self.kappa_screen));
        }
        for (name, a) in [("small_alpha", self.small_alpha), ("prune_alpha", self.prune_alpha)] {
            if !(a > 0.0 && a < 1.0) {
                return bad(format!("{name} must lie in (0, 1), got {a}"));
            }
        }
        self.screen_test.validate().map_err(FrameworkError::Config)?;
        self.ebic.validate()?;
        Ok(())
    }
}

/// How a region's edges were decided.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Per-edge tests conditioning on the rest of a small closure.
    HypothesisTest,
    /// The configured algorithm with EBIC-selected λ.
    Selected { lambda: f64 },
    /// The configured algorithm under the oracle (no λ).
    Oracle,
}

/// The decision for one region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionEstimate {
    pub region: VertexSet,
    pub row: usize,
    pub closure: VertexSet,
    pub tested: Vec<Edge>,
    pub accepted: Vec<Edge>,
    pub method: Method,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub selection: Vec<SelectionPoint>,
}

/// One pass of the estimate-and-rebuild loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub row: usize,
    pub clusters: usize,
    pub max_cluster_size: usize,
    pub max_separator_size: usize,
    /// Regions still holding edges of `H` (edgeless regions are dropped).
    pub active_regions: usize,
    pub regions: Vec<RegionEstimate>,
    /// Edges that entered `Ĝ`.
    pub added: Vec<Edge>,
    /// Edges removed from `H` (every tested edge).
    pub removed: Vec<Edge>,
    pub seconds: f64,
    #[serde(skip)]
    pub junction_tree: Option<JunctionTree>,
    #[serde(skip)]
    pub region_graph: Option<RegionGraph>,
}

/// Everything the loop did.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FrameworkTrace {
    pub iterations: Vec<IterationRecord>,
    /// Edges removed by the final pruning pass.
    pub pruned: Vec<Edge>,
    pub notes: Vec<String>,
}

impl FrameworkTrace {
    /// Checks that every edge of `initial_h` was tested exactly once, and
    /// that all added edges were tested edges.
    pub fn covers_disjointly(&self, initial_h: &Graph) -> bool {
        let mut seen = BTreeSet::new();
        for it in &self.iterations {
            for e in &it.removed {
                if !seen.insert(*e) {
                    return false;
                }
            }
            if !it.added.iter().all(|e| it.removed.contains(e)) {
                return false;
            }
        }
        seen == *initial_h.edge_set()
    }
}

/// Runs the configured algorithm on the closure `rbar`, deciding the edges of
/// `h_prime` with `marginal` (a superset graph over `rbar`) as the structure
/// of everything else. Under the sample backend λ is chosen by EBIC.
fn run_algorithm(
    backend: &Backend,
    rbar: &VertexSet,
    marginal: &Graph,
    h_prime: &Graph,
    cfg: &FrameworkConfig,
) -> Result<(BTreeSet<Edge>, Method, Vec<SelectionPoint>), FrameworkError> {
    match backend {
        Backend::Oracle { .. } => match cfg.algorithm {
            Algorithm::Pc => {
                let test = backend.ci(TestConfig::RawThreshold { lambda: 0.0 });
                let g = pc(cfg.kappa, test.as_ref(), marginal, h_prime);
                Ok((g.edge_set().clone(), Method::Oracle, Vec::new()))
            }
            other => Err(FrameworkError::Unsupported(format!(
                "the oracle backend only drives pc, not {}",
                other.name()
            ))),
        },
        Backend::Sample { n, .. } => {
            let s_r = backend.sub_covariance(rbar);
            let sel = select_lambda_ebic(&s_r, *n, rbar.len(), &cfg.ebic, |lambda| {
                candidate_at(backend, rbar, &s_r, marginal, h_prime, cfg, lambda)
            })?;
            Ok((sel.edges, Method::Selected { lambda: sel.lambda }, sel.trace))
        }
    }
}

/// The algorithm's estimate at a fixed λ with its EBIC precision estimate.
fn candidate_at(
    backend: &Backend,
    rbar: &VertexSet,
    s_r: &DMatrix<f64>,
    marginal: &Graph,
    h_prime: &Graph,
    cfg: &FrameworkConfig,
    lambda: f64,
) -> Result<Candidate, String> {
    let refit = |edges: &BTreeSet<Edge>| -> Result<DMatrix<f64>, String> {
        let mut structure = marginal.difference(h_prime);
        for e in edges {
            structure.add_edge(e.u(), e.v());
        }
        refit_mle(s_r, &structure).map_err(|e| e.to_string())
    };
    match cfg.algorithm {
        Algorithm::Pc | Algorithm::Nlasso => {
            let edges = estimate_at(backend, rbar, marginal, h_prime, cfg, lambda).map_err(|e| e.to_string())?;
            let theta = refit(&edges)?;
            Ok(Candidate { edges, theta })
        }
        Algorithm::Glasso => {
            let fit = glasso(s_r, marginal, h_prime, lambda).map_err(|e| e.to_string())?;
            Ok(Candidate {
                edges: fit.edges,
                theta: fit.theta,
            })
        }
    }
}

/// The algorithm's edge estimate at a fixed λ (sample backend) or under the
/// oracle (λ ignored).
pub fn estimate_at(
    backend: &Backend,
    rbar: &VertexSet,
    marginal: &Graph,
    h_prime: &Graph,
    cfg: &FrameworkConfig,
    lambda: f64,
) -> Result<BTreeSet<Edge>, FrameworkError> {
    match cfg.algorithm {
        Algorithm::Pc => {
            let test = backend.ci(TestConfig::RawThreshold { lambda });
            Ok(pc(cfg.kappa, test.as_ref(), marginal, h_prime).edge_set().clone())
        }
        Algorithm::Nlasso => {
            if backend.is_oracle() {
                return Err(FrameworkError::Unsupported("the oracle backend only drives pc".into()));
            }
            Ok(nlasso_cov(backend.covariance(), marginal, h_prime, lambda, cfg.nlasso).edges)
        }
        Algorithm::Glasso => {
            if backend.is_oracle() {
                return Err(FrameworkError::Unsupported("the oracle backend only drives pc".into()));
            }
            let s_r = backend.sub_covariance(rbar);
            Ok(glasso(&s_r, marginal, h_prime, lambda)?.edges)
        }
    }
}

/// Decides the edges `H′_R` of region `id`.
///
/// `h` is the graph of edges still undecided and `g_hat` the edges accepted
/// so far; the region graph must come from a junction tree of `Ĝ ∪ H`.
pub fn estimate_region(
    rg: &RegionGraph,
    id: usize,
    backend: &Backend,
    h: &Graph,
    g_hat: &Graph,
    cfg: &FrameworkConfig,
) -> Result<RegionEstimate, FrameworkError> {
    let region = rg.region(id);
    let h_prime = rg.estimable_subgraph(h, id);
    let closure = rg.closure(id);
    let mut out = RegionEstimate {
        region: region.vertices.clone(),
        row: region.row,
        closure: closure.clone(),
        tested: h_prime.edges().collect(),
        accepted: Vec::new(),
        method: Method::HypothesisTest,
        selection: Vec::new(),
    };
    if h_prime.num_edges() == 0 {
        return Ok(out);
    }
    if closure.len() < cfg.small_subproblem_size {
        let test = backend.ci(TestConfig::FisherZ { alpha: cfg.small_alpha });
        out.accepted = h_prime
            .edges()
            .filter(|e| {
                let s: Vec<Vertex> = closure.iter().copied().filter(|&v| !e.contains(v)).collect();
                !test.independent(e.u(), e.v(), &s)
            })
            .collect();
        return Ok(out);
    }
    let marginal = g_hat.union(h).marginal_graph(&closure)?;
    let (edges, method, selection) = run_algorithm(backend, &closure, &marginal, &h_prime, cfg)?;
    out.accepted = edges.into_iter().collect();
    out.method = method;
    out.selection = selection;
    Ok(out)
}

/// Rejects algorithm/backend pairs that cannot run, before any work is done
/// (small subproblems would otherwise hide the mismatch behind CI tests).
fn check_backend(backend: &Backend, cfg: &FrameworkConfig) -> Result<(), FrameworkError> {
    if backend.is_oracle() && cfg.algorithm != Algorithm::Pc {
        return Err(FrameworkError::Unsupported(format!(
            "the oracle backend only drives pc, not {}",
            cfg.algorithm.name()
        )));
    }
    Ok(())
}

/// The junction tree and region graph the loop uses for `Ĝ ∪ H`.
pub fn decomposition(union: &Graph, separator_cap: usize) -> (JunctionTree, RegionGraph) {
    let jt = merge_by_separator_cap(&build_junction_tree(union), separator_cap);
    let rg = build_region_graph(&jt);
    (jt, rg)
}

/// Runs the estimate-and-rebuild loop on the superset graph `h0`.
pub fn jt_framework(backend: &Backend, h0: &Graph, cfg: &FrameworkConfig) -> Result<(Graph, FrameworkTrace), FrameworkError> {
    cfg.validate()?;
    check_backend(backend, cfg)?;
    let mut g_hat = Graph::new(h0.vertices());
    let mut h = h0.clone();
    let mut trace = FrameworkTrace::default();
    while h.num_edges() > 0 {
        let start = Instant::now();
        let union = g_hat.union(&h);
        let (jt, rg) = decomposition(&union, cfg.separator_cap);
        let active: Vec<usize> = (0..rg.num_regions())
            .filter(|&id| {
                let r = &rg.region(id).vertices;
                h.edges().any(|e| e.within(r))
            })
            .collect();
        let chosen: Vec<usize> = rg
            .rows()
            .iter()
            .map(|row| {
                row.iter()
                    .copied()
                    .filter(|&id| active.contains(&id) && rg.estimable_subgraph(&h, id).num_edges() > 0)
                    .collect::<Vec<_>>()
            })
            .find(|ids| !ids.is_empty())
            .expect("every undecided edge is estimable in some region");
        let row = rg.region(chosen[0]).row;
        let regions: Vec<RegionEstimate> = chosen
            .par_iter()
            .map(|&id| estimate_region(&rg, id, backend, &h, &g_hat, cfg))
            .collect::<Result<_, _>>()?;
        let mut added = Vec::new();
        let mut removed = Vec::new();
        for r in &regions {
            for e in &r.tested {
                h.remove_edge(e.u(), e.v());
                removed.push(*e);
            }
            for e in &r.accepted {
                g_hat.add_edge(e.u(), e.v());
                added.push(*e);
            }
        }
        added.sort();
        removed.sort();
        trace.iterations.push(IterationRecord {
            iteration: trace.iterations.len() + 1,
            row,
            clusters: jt.clusters.len(),
            max_cluster_size: jt.max_cluster_size(),
            max_separator_size: jt.max_separator_size(),
            active_regions: active.len(),
            regions,
            added,
            removed,
            seconds: start.elapsed().as_secs_f64(),
            junction_tree: Some(jt),
            region_graph: Some(rg),
        });
    }
    if cfg.prune {
        let before = g_hat.clone();
        g_hat = prune_edges(backend, &g_hat, TestConfig::FisherZ { alpha: cfg.prune_alpha });
        trace.pruned = before.difference(&g_hat).edges().collect();
    }
    Ok((g_hat, trace))
}

/// Runs the configured algorithm once on all variables, deciding the edges
/// of `l` with `h ⊇ l` as the superset graph; λ by EBIC under the sample
/// backend.
pub fn estimate_flat(backend: &Backend, h: &Graph, l: &Graph, cfg: &FrameworkConfig) -> Result<(Graph, Method), FrameworkError> {
    cfg.validate()?;
    check_backend(backend, cfg)?;
    let all = h.vertex_set();
    let (edges, method, _) = run_algorithm(backend, &all, h, l, cfg)?;
    let mut g = Graph::new(h.vertices());
    for e in edges {
        g.add_edge(e.u(), e.v());
    }
    Ok((g, method))
}

/// Re-tests every edge of `g_hat` given the other neighbors of each endpoint
/// (at most `min(n − 4, 20)` of them, lowest ids first) and drops edges found
/// independent. Neighborhoods are those of the input graph.
pub fn prune_edges(backend: &Backend, g_hat: &Graph, test: TestConfig) -> Graph {
    let cap = backend.n().map_or(20, |n| n.saturating_sub(4).min(20));
    let ci = backend.ci(test);
    let mut out = g_hat.clone();
    for e in g_hat.edges() {
        let (i, j) = (e.u(), e.v());
        let cond = |a: Vertex, b: Vertex| -> Vec<Vertex> {
            g_hat.neighbors(a).iter().copied().filter(|&v| v != b).take(cap).collect()
        };
        if ci.independent(i, j, &cond(i, j)) || ci.independent(i, j, &cond(j, i)) {
            out.remove_edge(i, j);
        }
    }
    out
}

/// Screening pass: PC with conditioning sets up to `kappa` on the complete graph.
pub fn screen_graph_h(backend: &Backend, kappa: usize, test: TestConfig) -> Result<Graph, FrameworkError> {
    if kappa > MAX_SCREEN_KAPPA {
        return Err(FrameworkError::Config(format!(
            "screening kappa must be <= {MAX_SCREEN_KAPPA}, got {kappa}"
        )));
    }
    test.validate().map_err(FrameworkError::Config)?;
    let all: VertexSet = (0..backend.p()).collect();
    let k = Graph::complete(&all);
    let ci = backend.ci(test);
    Ok(pc(kappa, ci.as_ref(), &k, &k))
}

/// Settings of the two-cluster pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoClusterConfig {
    /// Screening κ (set it to the expected separator size).
    pub kappa_screen: usize,
    pub screen_test: TestConfig,
    /// PC κ for the block and separator estimates.
    pub eta: usize,
    pub test_v1: TestConfig,
    pub test_v2: TestConfig,
    pub test_t: TestConfig,
    /// Used when the screened graph has a single cluster.
    pub fallback: FrameworkConfig,
}

/// The split found by the two-cluster pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoClusterSplit {
    pub v1: VertexSet,
    pub v2: VertexSet,
    pub t: VertexSet,
}

/// Outcome of [`estimate_two_cluster`].
#[derive(Debug, Clone)]
pub struct TwoClusterResult {
    pub graph: Graph,
    pub screened: Graph,
    /// `None` when the pipeline fell back to the iterative framework.
    pub split: Option<TwoClusterSplit>,
    pub notes: Vec<String>,
}

/// Splits a junction tree in two at its smallest separator (ties: most
/// balanced split, then lowest cluster indices). A forest splits at a
/// component boundary with an empty separator.
pub fn two_cluster_split(jt: &JunctionTree) -> Option<TwoClusterSplit> {
    let m = jt.clusters.len();
    if m < 2 {
        return None;
    }
    let side_of = |skip: Option<usize>| -> Vec<bool> {
        // clusters reachable from cluster 0 without using tree edge `skip`
        let mut mark = vec![false; m];
        let mut stack = vec![0];
        mark[0] = true;
        while let Some(c) = stack.pop() {
            for (k, e) in jt.edges.iter().enumerate() {
                if Some(k) == skip {
                    continue;
                }
                let other = if e.a == c {
                    e.b
                } else if e.b == c {
                    e.a
                } else {
                    continue;
                };
                if !mark[other] {
                    mark[other] = true;
                    stack.push(other);
                }
            }
        }
        mark
    };
    let split_from = |mark: &[bool], t: VertexSet| {
        let v1: VertexSet = (0..m).filter(|&c| mark[c]).flat_map(|c| jt.clusters[c].iter().copied()).collect();
        let v2: VertexSet = (0..m).filter(|&c| !mark[c]).flat_map(|c| jt.clusters[c].iter().copied()).collect();
        TwoClusterSplit {
            v1: v1.difference(&t).copied().collect(),
            v2: v2.difference(&t).copied().collect(),
            t,
        }
    };
    let whole = side_of(None);
    if whole.iter().any(|&x| !x) {
        return Some(split_from(&whole, VertexSet::new()));
    }
    jt.edges
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let mark = side_of(Some(k));
            let s = split_from(&mark, e.separator.clone());
            let imbalance = s.v1.len().abs_diff(s.v2.len());
            ((e.separator.len(), imbalance, e.a, e.b), s)
        })
        .min_by(|x, y| x.0.cmp(&y.0))
        .map(|(_, s)| s)
}

/// The four-step two-cluster pipeline: screen `H`, split it at a small
/// separator `T` into `V₁ ∪ T` and `V₂ ∪ T`, run PC on each side with its own
/// test, estimate the edges inside `T` conditioning on `T` and its estimated
/// neighbors, and take the union.
pub fn estimate_two_cluster(backend: &Backend, cfg: &TwoClusterConfig) -> Result<TwoClusterResult, FrameworkError> {
    let h = screen_graph_h(backend, cfg.kappa_screen, cfg.screen_test)?;
    let jt = build_junction_tree(&h);
    let Some(split) = two_cluster_split(&jt) else {
        let (graph, _) = jt_framework(backend, &h, &cfg.fallback)?;
        return Ok(TwoClusterResult {
            graph,
            screened: h,
            split: None,
            notes: vec!["screened graph has a single cluster; fell back to the iterative framework".into()],
        });
    };
    let kt = Graph::complete(&split.t);
    let block = |v: &VertexSet, test: TestConfig| -> Result<Graph, FrameworkError> {
        let vt: VertexSet = v.union(&split.t).copied().collect();
        let hv = h.induced_subgraph(&vt)?;
        let ci = backend.ci(test);
        Ok(pc(cfg.eta, ci.as_ref(), &hv.union(&kt), &hv.difference(&kt)))
    };
    let g1 = block(&split.v1, cfg.test_v1)?;
    let g2 = block(&split.v2, cfg.test_v2)?;
    let both = g1.union(&g2);
    let mut cond = split.t.clone();
    for &t in &split.t {
        cond.extend(both.neighbors(t).iter().copied());
    }
    let ht = h.induced_subgraph(&cond)?;
    let ci = backend.ci(cfg.test_t);
    let gt = pc(cfg.eta, ci.as_ref(), &ht, &h.induced_subgraph(&split.t)?);
    let mut graph = Graph::new(h.vertices());
    for g in [&g1, &g2, &gt] {
        for e in g.edges() {
            graph.add_edge(e.u(), e.v());
        }
    }
    Ok(TwoClusterResult {
        graph,
        screened: h,
        split: Some(split),
        notes: Vec::new(),
    })
}
