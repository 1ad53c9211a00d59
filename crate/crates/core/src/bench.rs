//! Synthetic model families with weak edges, recovery metrics, and the
//! experiment runner comparing junction-tree and flat estimators.
//!
//! Every family sets `Θ_ii = 1`. Edges whose precision entry uses the weak
//! parameter are recorded as weak at generation time.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Mutex;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::framework::{estimate_at, jt_framework, screen_graph_h, Backend, FrameworkConfig};
use crate::gaussian::{min_eigenvalue, GaussianError, GaussianModel, OracleCi, TestConfig};
use crate::graph::{Edge, Graph, Vertex, VertexSet};
use crate::model_selection::{log_grid, match_edge_count, EbicConfig};
use crate::ugms::{pc, Algorithm, NLassoOptions};

/// Off-diagonals are shrunk by this factor until the smallest eigenvalue
/// exceeds [`PD_MARGIN`].
pub const SHRINK_FACTOR: f64 = 0.95;
pub const PD_MARGIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid synthetic spec: {0}")]
    Spec(String),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
}

/// The four synthetic families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Chain,
    Cycle,
    Hub,
    Neighborhood,
}

impl Family {
    /// PC's κ on this family.
    pub fn default_kappa(self) -> usize {
        match self {
            Family::Chain => 1,
            Family::Cycle => 2,
            Family::Hub => 1,
            Family::Neighborhood => 3,
        }
    }

    /// κ of the screening pass on this family.
    pub fn default_kappa_screen(self) -> usize {
        match self {
            Family::Chain => 0,
            Family::Cycle => 1,
            Family::Hub => 0,
            Family::Neighborhood => 2,
        }
    }
}

/// Parameters of a synthetic model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub family: Family,
    pub p: usize,
    /// Number of leading vertices carrying the weak edges.
    pub p1: usize,
    #[serde(default)]
    pub rho1: f64,
    #[serde(default)]
    pub rho2: f64,
    #[serde(default)]
    pub d1: usize,
    #[serde(default)]
    pub d2: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn chain(p: usize, p1: usize, rho1: f64, rho2: f64) -> Self {
        Self::with(Family::Chain, p, p1, rho1, rho2, 0, 0)
    }

    pub fn cycle(p: usize, p1: usize, rho1: f64, rho2: f64) -> Self {
        Self::with(Family::Cycle, p, p1, rho1, rho2, 0, 0)
    }

    pub fn hub(p: usize, p1: usize, d1: usize, d2: usize) -> Self {
        Self::with(Family::Hub, p, p1, 0.0, 0.0, d1, d2)
    }

    pub fn neighborhood(p: usize, p1: usize, rho1: f64, rho2: f64, d1: usize, d2: usize, seed: u64) -> Self {
        SyntheticSpec {
            seed,
            ..Self::with(Family::Neighborhood, p, p1, rho1, rho2, d1, d2)
        }
    }

    fn with(family: Family, p: usize, p1: usize, rho1: f64, rho2: f64, d1: usize, d2: usize) -> Self {
        SyntheticSpec {
            family,
            p,
            p1,
            rho1,
            rho2,
            d1,
            d2,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Spec(m));
        if self.p < 2 {
            return bad(format!("p must be >= 2, got {}", self.p));
        }
        if self.p1 > self.p {
            return bad(format!("p1 = {} exceeds p = {}", self.p1, self.p));
        }
        match self.family {
            Family::Hub => {
                if self.d1 < 2 || self.d2 < 2 {
                    return bad("hub star sizes d1 and d2 must be >= 2".into());
                }
                if self.d1 > self.p1 {
                    return bad(format!("hub star size d1 = {} exceeds p1 = {}", self.d1, self.p1));
                }
            }
            _ => {
                for (name, r) in [("rho1", self.rho1), ("rho2", self.rho2)] {
                    if !r.is_finite() || r == 0.0 || r.abs() >= 1.0 {
                        return bad(format!("{name} must be nonzero with |{name}| < 1, got {r}"));
                    }
                }
                if self.family == Family::Neighborhood {
                    if self.d1 == 0 || self.d2 == 0 {
                        return bad("neighborhood degree caps d1 and d2 must be >= 1".into());
                    }
                    if self.p1 == 0 || self.p1 == self.p {
                        return bad("neighborhood family needs 0 < p1 < p for its cross edges".into());
                    }
                }
            }
        }
        Ok(())
    }
}

/// A generated model with its graph and weak edges.
#[derive(Debug, Clone)]
pub struct SyntheticModel {
    pub model: GaussianModel,
    pub truth: Graph,
    pub weak: BTreeSet<Edge>,
}

/// Precision entries being assembled: value and weak flag per edge.
struct Builder {
    p: usize,
    entries: Vec<(Edge, f64, bool)>,
}

impl Builder {
    fn new(p: usize) -> Self {
        Builder { p, entries: Vec::new() }
    }

    fn add(&mut self, a: Vertex, b: Vertex, value: f64, weak: bool) {
        let e = Edge::new(a, b);
        if !self.entries.iter().any(|(x, _, _)| *x == e) {
            self.entries.push((e, value, weak));
        }
    }

    fn finish(self) -> Result<SyntheticModel, BenchError> {
        let mut theta = DMatrix::identity(self.p, self.p);
        for (e, value, _) in &self.entries {
            theta[(e.u(), e.v())] = *value;
            theta[(e.v(), e.u())] = *value;
        }
        while min_eigenvalue(&theta) <= PD_MARGIN {
            for i in 0..self.p {
                for j in 0..self.p {
                    if i != j {
                        theta[(i, j)] *= SHRINK_FACTOR;
                    }
                }
            }
        }
        let truth = Graph::from_edges(self.p, self.entries.iter().map(|(e, _, _)| (e.u(), e.v())));
        let weak = self.entries.iter().filter(|(_, _, w)| *w).map(|(e, _, _)| *e).collect();
        Ok(SyntheticModel {
            model: GaussianModel::new(theta)?,
            truth,
            weak,
        })
    }
}

/// Chain: `Θ_{i,i+1} = ρ₁` (weak) while both endpoints are among the first
/// `p₁` vertices, `ρ₂` afterwards.
pub fn gen_chain(spec: &SyntheticSpec) -> Result<SyntheticModel, BenchError> {
    expect_family(spec, Family::Chain)?;
    let mut b = Builder::new(spec.p);
    chain_edges(&mut b, spec);
    b.finish()
}

/// Cycle: the chain plus `Θ_{i,i+3}`, weak (`ρ₁`) within the first `p₁`
/// vertices and `ρ₂` from vertex `p₁` (1-based) on.
pub fn gen_cycle(spec: &SyntheticSpec) -> Result<SyntheticModel, BenchError> {
    expect_family(spec, Family::Cycle)?;
    let mut b = Builder::new(spec.p);
    chain_edges(&mut b, spec);
    for i in 0..spec.p.saturating_sub(3) {
        if i + 3 < spec.p1 {
            b.add(i, i + 3, spec.rho1, true);
        } else if i + 1 >= spec.p1 {
            b.add(i, i + 3, spec.rho2, false);
        }
    }
    b.finish()
}

fn chain_edges(b: &mut Builder, spec: &SyntheticSpec) {
    for i in 0..spec.p - 1 {
        if i + 1 < spec.p1 {
            b.add(i, i + 1, spec.rho1, true);
        } else {
            b.add(i, i + 1, spec.rho2, false);
        }
    }
}

/// Hub: as many `d₁`-vertex stars as fit in the first `p₁` vertices, then
/// `d₂`-vertex stars over the rest (the last may be smaller). Edges with both
/// endpoints among the first `p₁` get `1/d₁` and are weak; others `1/d₂`.
pub fn gen_hub(spec: &SyntheticSpec) -> Result<SyntheticModel, BenchError> {
    expect_family(spec, Family::Hub)?;
    let mut b = Builder::new(spec.p);
    let weak_stars = spec.p1 / spec.d1;
    let add_star = |vs: &[Vertex], b: &mut Builder| {
        for &leaf in &vs[1..] {
            let weak = vs[0] < spec.p1 && leaf < spec.p1;
            let value = if weak { 1.0 / spec.d1 as f64 } else { 1.0 / spec.d2 as f64 };
            b.add(vs[0], leaf, value, weak);
        }
    };
    let vertices: Vec<Vertex> = (0..spec.p).collect();
    for star in vertices[..weak_stars * spec.d1].chunks(spec.d1) {
        add_star(star, &mut b);
    }
    for star in vertices[weak_stars * spec.d1..].chunks(spec.d2) {
        add_star(star, &mut b);
    }
    b.finish()
}

/// Neighborhood: vertices placed uniformly on the unit square, joined with
/// probability `exp(−4‖y_i − y_j‖²)/√(2π)` within the first `p₁` vertices
/// (value `ρ₁`, weak) and within the rest (value `ρ₂`); degrees are capped at
/// `d₁` and `d₂` by dropping each vertex's highest-index edges; finally four
/// random weak cross edges (`ρ₁`) join the two groups.
pub fn gen_neighborhood(spec: &SyntheticSpec) -> Result<SyntheticModel, BenchError> {
    expect_family(spec, Family::Neighborhood)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pos: Vec<(f64, f64)> = (0..spec.p).map(|_| (rng.random(), rng.random())).collect();
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let mut g = Graph::empty(spec.p);
    for i in 0..spec.p {
        for j in 0..i {
            let same_group = (i < spec.p1) == (j < spec.p1);
            let d2 = (pos[i].0 - pos[j].0).powi(2) + (pos[i].1 - pos[j].1).powi(2);
            let draw: f64 = rng.random();
            if same_group && draw < (-4.0 * d2).exp() / norm {
                g.add_edge(i, j);
            }
        }
    }
    for v in 0..spec.p {
        let cap = if v < spec.p1 { spec.d1 } else { spec.d2 };
        while g.degree(v) > cap {
            let last = *g.neighbors(v).iter().next_back().expect("degree > 0");
            g.remove_edge(v, last);
        }
    }
    let mut b = Builder::new(spec.p);
    for e in g.edges() {
        let weak = e.v() < spec.p1;
        b.add(e.u(), e.v(), if weak { spec.rho1 } else { spec.rho2 }, weak);
    }
    let mut cross = 0;
    while cross < 4 {
        let a = rng.random_range(0..spec.p1);
        let c = rng.random_range(spec.p1..spec.p);
        if !g.has_edge(a, c) {
            g.add_edge(a, c);
            b.add(a, c, spec.rho1, true);
            cross += 1;
        }
    }
    b.finish()
}

/// Dispatches on `spec.family`.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticModel, BenchError> {
    spec.validate()?;
    match spec.family {
        Family::Chain => gen_chain(spec),
        Family::Cycle => gen_cycle(spec),
        Family::Hub => gen_hub(spec),
        Family::Neighborhood => gen_neighborhood(spec),
    }
}

fn expect_family(spec: &SyntheticSpec, family: Family) -> Result<(), BenchError> {
    if spec.family != family {
        return Err(BenchError::Spec(format!("expected a {family:?} spec, got {:?}", spec.family)));
    }
    spec.validate()
}

/// Recovery metrics of one estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Fraction of weak edges recovered (1 if there are none).
    pub wedr: f64,
    /// Fraction of estimated edges that are false (0 for an empty estimate).
    pub fdr: f64,
    pub tpr: f64,
    /// Edit distance `|Ĝ \ G*| + |G* \ Ĝ|`.
    pub ed: usize,
    pub edges: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

/// Computes WEDR, FDR, TPR and ED of `g_hat` against `truth`.
pub fn compute_metrics(g_hat: &Graph, truth: &Graph, weak: &BTreeSet<Edge>) -> Metrics {
    let est = g_hat.edge_set();
    let tru = truth.edge_set();
    let tp = est.intersection(tru).count();
    let fp = est.len() - tp;
    let fn_ = tru.len() - tp;
    let ratio = |num: usize, den: usize, empty: f64| if den == 0 { empty } else { num as f64 / den as f64 };
    Metrics {
        wedr: ratio(weak.iter().filter(|e| est.contains(e)).count(), weak.len(), 1.0),
        fdr: ratio(fp, est.len(), 0.0),
        tpr: ratio(tp, tru.len(), 1.0),
        ed: fp + fn_,
        edges: est.len(),
        false_positives: fp,
        false_negatives: fn_,
    }
}

/// Mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let k = values.len();
        if k == 0 {
            return Summary { mean: f64::NAN, se: f64::NAN };
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        let se = if k < 2 {
            0.0
        } else {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
            (var / k as f64).sqrt()
        };
        Summary { mean, se }
    }
}

/// Per-trial metrics of one report cell with their summaries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub trials: Vec<Metrics>,
    pub wedr: Summary,
    pub fdr: Summary,
    pub tpr: Summary,
    pub ed: Summary,
    pub edges_mean: f64,
}

impl MetricsReport {
    pub fn aggregate(trials: Vec<Metrics>) -> Self {
        let col = |f: fn(&Metrics) -> f64| Summary::of(&trials.iter().map(f).collect::<Vec<_>>());
        MetricsReport {
            wedr: col(|m| m.wedr),
            fdr: col(|m| m.fdr),
            tpr: col(|m| m.tpr),
            ed: col(|m| m.ed as f64),
            edges_mean: col(|m| m.edges as f64).mean,
            trials,
        }
    }
}

/// One family in an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub label: String,
    pub spec: SyntheticSpec,
    /// PC κ; the family default when absent.
    #[serde(default)]
    pub kappa: Option<usize>,
    /// Screening κ; the family default when absent.
    #[serde(default)]
    pub kappa_screen: Option<usize>,
}

/// A full experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub families: Vec<FamilyConfig>,
    pub n: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub trials: usize,
    pub seed: u64,
    /// Use exact covariances instead of samples (PC only).
    #[serde(default)]
    pub oracle: bool,
    /// Fisher level of the screening pass.
    #[serde(default = "default_screen_alpha")]
    pub screen_alpha: f64,
    /// EBIC γ for the junction-tree variants.
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// Separator cap; `κ_screen + 1` when absent.
    #[serde(default)]
    pub separator_cap: Option<usize>,
    #[serde(default = "default_small")]
    pub small_subproblem_size: usize,
    #[serde(default = "default_alpha")]
    pub small_alpha: f64,
    #[serde(default = "default_true")]
    pub prune: bool,
    #[serde(default = "default_alpha")]
    pub prune_alpha: f64,
    #[serde(default)]
    pub nlasso: NLassoOptions,
    /// EBIC grid per algorithm; the framework defaults when absent.
    #[serde(default)]
    pub lambda_grid: Option<Vec<f64>>,
    /// Grid used to match the flat estimators' edge counts.
    #[serde(default)]
    pub match_grid: Option<Vec<f64>>,
}

fn default_screen_alpha() -> f64 {
    0.25
}
fn default_gamma() -> f64 {
    0.5
}
fn default_small() -> usize {
    8
}
fn default_alpha() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.families.is_empty() || self.n.is_empty() || self.algorithms.is_empty() {
            return bad("families, n and algorithms must be nonempty".into());
        }
        if self.trials == 0 {
            return bad("trials must be >= 1".into());
        }
        if self.oracle && self.algorithms.iter().any(|a| *a != Algorithm::Pc) {
            return bad("oracle experiments support only the pc algorithm".into());
        }
        if let Some(&n) = self.n.iter().find(|&&n| n < 5) {
            return bad(format!("sample sizes must be >= 5, got {n}"));
        }
        for f in &self.families {
            f.spec.validate().map_err(|e| BenchError::Config(format!("family {}: {e}", f.label)))?;
        }
        for algo in &self.algorithms {
            self.framework_config(&self.families[0], *algo)
                .validate()
                .map_err(|e| BenchError::Config(e.to_string()))?;
        }
        if let Some(g) = &self.match_grid {
            if g.is_empty() || g.windows(2).any(|w| w[0] <= w[1]) || g.iter().any(|l| !(*l > 0.0)) {
                return bad("match_grid must be nonempty, positive and strictly descending".into());
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        crate::io::config_hash(self)
    }

    /// The framework settings for one family and algorithm.
    pub fn framework_config(&self, family: &FamilyConfig, algorithm: Algorithm) -> FrameworkConfig {
        let mut cfg = FrameworkConfig::new(algorithm);
        let kappa_screen = family.kappa_screen.unwrap_or(family.spec.family.default_kappa_screen());
        cfg.kappa = if self.oracle {
            family.spec.p.saturating_sub(2)
        } else {
            family.kappa.unwrap_or(family.spec.family.default_kappa())
        };
        cfg.kappa_screen = kappa_screen;
        cfg.screen_test = TestConfig::FisherZ { alpha: self.screen_alpha };
        cfg.separator_cap = self.separator_cap.unwrap_or(kappa_screen + 1);
        cfg.small_subproblem_size = self.small_subproblem_size;
        cfg.small_alpha = self.small_alpha;
        cfg.prune = self.prune;
        cfg.prune_alpha = self.prune_alpha;
        cfg.nlasso = self.nlasso;
        cfg.ebic = EbicConfig {
            gamma: self.gamma,
            lambda_grid: self.lambda_grid.clone().unwrap_or(cfg.ebic.lambda_grid),
        };
        cfg
    }

    fn match_grid(&self, algorithm: Algorithm) -> Vec<f64> {
        self.match_grid.clone().unwrap_or_else(|| match algorithm {
            Algorithm::Pc => log_grid(0.6, 0.01, 60),
            Algorithm::Nlasso | Algorithm::Glasso => log_grid(0.6, 0.002, 60),
        })
    }
}

/// A report cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub family: String,
    pub n: usize,
    /// `J<algo>` for the junction-tree variant, `<algo>` for the flat one.
    pub algorithm: String,
    pub metrics: MetricsReport,
}

/// A failed trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub family: String,
    pub n: usize,
    pub trial: usize,
    pub algorithm: String,
    pub error: String,
}

/// The outcome of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub seed: u64,
    pub screening: String,
    pub rows: Vec<ReportRow>,
    pub failures: Vec<TrialFailure>,
}

/// Column order of the CSV report.
pub const REPORT_COLUMNS: [&str; 12] = [
    "family", "n", "algorithm", "wedr_mean", "wedr_se", "fdr_mean", "fdr_se", "tpr_mean", "tpr_se", "ed_mean", "ed_se",
    "edges_mean",
];

impl ExperimentReport {
    /// CSV with a leading `#` provenance line.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# config_hash={} seed={}\n{}\n", self.config_hash, self.seed, REPORT_COLUMNS.join(","));
        for r in &self.rows {
            let m = &r.metrics;
            let _ = writeln!(
                out,
                "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
                r.family, r.n, r.algorithm, m.wedr.mean, m.wedr.se, m.fdr.mean, m.fdr.se, m.tpr.mean, m.tpr.se, m.ed.mean,
                m.ed.se, m.edges_mean
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn row(&self, family: &str, n: usize, algorithm: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.family == family && r.n == n && r.algorithm == algorithm)
    }
}

/// Deterministic per-trial seed from the master seed and cell coordinates.
pub fn derive_seed(master: u64, coords: &[u64]) -> u64 {
    // SplitMix64 finalizer over a running state.
    let mix = |mut z: u64| {
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    };
    coords.iter().fold(mix(master), |acc, &c| mix(acc ^ mix(c.wrapping_add(0x9e37_79b9_7f4a_7c15))))
}

/// Outcome of one trial: per algorithm, the junction-tree and flat metrics.
type TrialOutcome = Vec<(Algorithm, Result<(Metrics, Metrics), String>)>;

/// Runs one trial of one (family, n) cell.
pub fn run_trial(cfg: &ExperimentConfig, family: &FamilyConfig, n: usize, seed: u64) -> Result<TrialOutcome, String> {
    let mut spec = family.spec.clone();
    spec.seed = seed;
    let gen = generate(&spec).map_err(|e| e.to_string())?;
    let backend = if cfg.oracle {
        Backend::oracle(&gen.model)
    } else {
        let data = gen.model.sample(n, seed.wrapping_add(1)).map_err(|e| e.to_string())?;
        Backend::from_dataset(&data).map_err(|e| e.to_string())?
    };
    let base = cfg.framework_config(family, cfg.algorithms[0]);
    let h = screen_graph_h(&backend, base.kappa_screen, base.screen_test).map_err(|e| e.to_string())?;
    let all: VertexSet = (0..spec.p).collect();
    let complete = Graph::complete(&all);
    Ok(cfg
        .algorithms
        .iter()
        .map(|&algo| {
            let fc = cfg.framework_config(family, algo);
            let run = || -> Result<(Metrics, Metrics), String> {
                let (g_jt, _) = jt_framework(&backend, &h, &fc).map_err(|e| e.to_string())?;
                let flat = if cfg.oracle {
                    pc(fc.kappa, &OracleCi::new(&gen.model), &complete, &complete)
                } else {
                    let failure = Mutex::new(None);
                    let (_, g) = match_edge_count(
                        |lambda| match estimate_at(&backend, &all, &complete, &complete, &fc, lambda) {
                            Ok(edges) => Graph::from_edges(spec.p, edges.iter().map(|e| (e.u(), e.v()))),
                            Err(e) => {
                                *failure.lock().expect("unpoisoned") = Some(e.to_string());
                                Graph::empty(spec.p)
                            }
                        },
                        g_jt.num_edges(),
                        &cfg.match_grid(algo),
                    );
                    if let Some(e) = failure.into_inner().expect("unpoisoned") {
                        return Err(e);
                    }
                    g
                };
                Ok((
                    compute_metrics(&g_jt, &gen.truth, &gen.weak),
                    compute_metrics(&flat, &gen.truth, &gen.weak),
                ))
            };
            (algo, run())
        })
        .collect())
}

/// Runs every (family, n, trial) in parallel and aggregates per variant.
/// Failed trials are recorded and left out of the summaries.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, BenchError> {
    cfg.validate()?;
    let cells: Vec<(usize, usize, usize)> = (0..cfg.families.len())
        .flat_map(|f| (0..cfg.n.len()).flat_map(move |k| (0..cfg.trials).map(move |t| (f, k, t))))
        .collect();
    let outcomes: Vec<Result<TrialOutcome, String>> = cells
        .par_iter()
        .map(|&(f, k, t)| {
            let seed = derive_seed(cfg.seed, &[f as u64, k as u64, t as u64]);
            run_trial(cfg, &cfg.families[f], cfg.n[k], seed)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (f, fam) in cfg.families.iter().enumerate() {
        for (k, &n) in cfg.n.iter().enumerate() {
            for &algo in &cfg.algorithms {
                let mut jt = Vec::new();
                let mut flat = Vec::new();
                for (cell, outcome) in cells.iter().zip(&outcomes) {
                    if (cell.0, cell.1) != (f, k) {
                        continue;
                    }
                    let fail = |error: String| TrialFailure {
                        family: fam.label.clone(),
                        n,
                        trial: cell.2,
                        algorithm: algo.label().to_string(),
                        error,
                    };
                    match outcome {
                        Err(e) => failures.push(fail(e.clone())),
                        Ok(per_algo) => match per_algo.iter().find(|(a, _)| *a == algo).map(|(_, r)| r) {
                            Some(Ok((m_jt, m_flat))) => {
                                jt.push(*m_jt);
                                flat.push(*m_flat);
                            }
                            Some(Err(e)) => failures.push(fail(e.clone())),
                            None => {}
                        },
                    }
                }
                for (name, trials) in [(format!("J{}", algo.label()), jt), (algo.label().to_string(), flat)] {
                    rows.push(ReportRow {
                        family: fam.label.clone(),
                        n,
                        algorithm: name,
                        metrics: MetricsReport::aggregate(trials),
                    });
                }
            }
        }
    }
    // A failure shared by all algorithms of a trial is reported once per algorithm.
    failures.dedup();
    Ok(ExperimentReport {
        config: cfg.clone(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        screening: format!(
            "PC screen with Fisher z at alpha={} (replaces cross-validated thresholds)",
            cfg.screen_alpha
        ),
        rows,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_counts() {
        let m = generate(&SyntheticSpec::chain(100, 20, 0.15, 0.245)).unwrap();
        assert_eq!(m.truth.num_edges(), 99);
        assert_eq!(m.weak.len(), 19);
    }

    #[test]
    fn hub_weak_entries() {
        let m = generate(&SyntheticSpec::hub(40, 20, 8, 5)).unwrap();
        for e in &m.weak {
            assert!((m.model.precision()[(e.u(), e.v())] - 1.0 / 8.0).abs() < 1e-15);
        }
        // Two full 8-stars, plus the leftover vertices 16..19 whose 5-star
        // hub (16) and leaves 17..19 all lie among the first 20.
        assert_eq!(m.weak.len(), 2 * 7 + 3);
    }

    #[test]
    fn hub_rejects_oversized_star() {
        assert!(generate(&SyntheticSpec::hub(40, 5, 8, 5)).is_err());
    }

    #[test]
    fn seeds_differ_per_coordinate() {
        assert_ne!(derive_seed(1, &[0, 0, 0]), derive_seed(1, &[0, 0, 1]));
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
    }

    #[test]
    fn summary_of_constant_values() {
        let s = Summary::of(&[2.0, 2.0, 2.0]);
        assert_eq!((s.mean, s.se), (2.0, 0.0));
    }
}
