//! The `jtugms` command line: `generate`, `estimate`, `benchmark` and
//! `export-dot`.
//!
//! Exit codes: 0 on success, 1 when estimation fails, 2 for usage, config
//! or input errors.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::bench::{generate, run_experiment, ExperimentConfig, Family, SyntheticSpec};
use crate::framework::{
    estimate_flat, jt_framework, screen_graph_h, Backend, FrameworkConfig, FrameworkTrace,
};
use crate::gaussian::TestConfig;
use crate::graph::{Edge, Graph};
use crate::io::{self, config_hash, IoError, Provenance};
use crate::junction_tree::{build_junction_tree, merge_by_separator_cap};
use crate::region_graph::build_region_graph;
use crate::ugms::Algorithm;

#[derive(Debug, Parser)]
#[command(name = "jtugms", version, about = "Junction-tree decomposition for Gaussian graphical model selection")]
pub struct Cli {
    /// Worker threads for the parallel stages (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic model, its graph, weak edges and a sample.
    Generate(GenerateArgs),
    /// Estimate a graph from data (or an oracle precision matrix).
    Estimate(EstimateArgs),
    /// Run a benchmark described by a JSON config.
    Benchmark(BenchmarkArgs),
    /// Export an edge list as a DOT graph, junction tree or region graph.
    ExportDot(ExportDotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyArg {
    Chain,
    Cycle,
    Hub,
    Neighborhood,
}

impl From<FamilyArg> for Family {
    fn from(f: FamilyArg) -> Self {
        match f {
            FamilyArg::Chain => Family::Chain,
            FamilyArg::Cycle => Family::Cycle,
            FamilyArg::Hub => Family::Hub,
            FamilyArg::Neighborhood => Family::Neighborhood,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub family: FamilyArg,
    /// Number of vertices.
    #[arg(long)]
    pub p: usize,
    /// Size of the weakly connected block (the first `p1` vertices).
    #[arg(long, default_value_t = 0)]
    pub p1: usize,
    /// Precision entry of edges inside the weak block.
    #[arg(long, default_value_t = 0.15)]
    pub rho1: f64,
    /// Precision entry of the remaining edges.
    #[arg(long, default_value_t = 0.245)]
    pub rho2: f64,
    /// Star/degree size inside the weak block (hub and neighborhood families).
    #[arg(long, default_value_t = 8)]
    pub d1: usize,
    /// Star/degree size outside the weak block (hub and neighborhood families).
    #[arg(long, default_value_t = 5)]
    pub d2: usize,
    /// Number of observations to sample (0 skips the dataset).
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    /// Seed for the graph (neighborhood family) and the sample.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoArg {
    Pc,
    Nlasso,
    Glasso,
}

impl From<AlgoArg> for Algorithm {
    fn from(a: AlgoArg) -> Self {
        match a {
            AlgoArg::Pc => Algorithm::Pc,
            AlgoArg::Nlasso => Algorithm::Nlasso,
            AlgoArg::Glasso => Algorithm::Glasso,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Observations CSV (rows are samples).
    #[arg(long, required_unless_present = "oracle", conflicts_with = "oracle")]
    pub data: Option<PathBuf>,
    /// Precision-matrix CSV; uses exact conditional independences.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Superset graph H as an edge list; screened from the input when absent.
    #[arg(long, conflicts_with = "screen")]
    pub h: Option<PathBuf>,
    /// Screen H from the input (the default without --h).
    #[arg(long)]
    pub screen: bool,
    /// UGMS algorithm run on each region.
    #[arg(long, value_enum, default_value = "pc")]
    pub algo: AlgoArg,
    /// Maximum conditioning-set size for PC on each region [default: 1].
    #[arg(long)]
    pub kappa: Option<usize>,
    /// Maximum conditioning-set size of the screening pass [default: 0].
    #[arg(long)]
    pub kappa_screen: Option<usize>,
    /// Merge junction-tree clusters whose separator exceeds this size [default: kappa-screen + 1].
    #[arg(long)]
    pub separator_cap: Option<usize>,
    /// EBIC gamma in [0, 1]; 0 is plain BIC [default: 0.5].
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Fisher-test level of the screening pass [default: 0.25].
    #[arg(long)]
    pub screen_alpha: Option<f64>,
    /// Fisher-test level on regions with fewer than 8 closure vertices [default: 0.05].
    #[arg(long)]
    pub small_alpha: Option<f64>,
    /// Fisher-test level of the final pruning pass [default: 0.05].
    #[arg(long)]
    pub prune_alpha: Option<f64>,
    /// Skip the final pruning pass.
    #[arg(long)]
    pub no_prune: bool,
    /// Run the algorithm once on H instead of decomposing.
    #[arg(long)]
    pub no_decompose: bool,
    /// Seed recorded in the provenance headers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    /// JSON experiment config.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory for report.csv and report.json.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DotKind {
    Graph,
    JunctionTree,
    RegionGraph,
}

#[derive(Debug, Clone, Args)]
pub struct ExportDotArgs {
    /// Edge list to export.
    #[arg(long)]
    pub graph: PathBuf,
    /// What to render.
    #[arg(long, value_enum, default_value = "graph")]
    pub kind: DotKind,
    /// Separator cap applied before export of junction trees / region graphs.
    #[arg(long)]
    pub separator_cap: Option<usize>,
    /// Output DOT file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Input(#[from] IoError),
    #[error("estimation failed: {0}")]
    Estimation(String),
    #[error("writing output: {0}")]
    Output(IoError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Estimation(_) | CliError::Output(_) => 1,
            CliError::Usage(_) | CliError::Input(_) => 2,
        }
    }
}

fn out_file(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    io::write_atomic(path, contents).map_err(CliError::Output)
}

/// Writes `precision.csv`, `graph.tsv`, `weak.tsv` and (for `n > 0`) `data.csv`.
pub fn cmd_generate(args: &GenerateArgs) -> Result<Vec<PathBuf>, CliError> {
    let spec = SyntheticSpec {
        family: args.family.into(),
        p: args.p,
        p1: args.p1,
        rho1: args.rho1,
        rho2: args.rho2,
        d1: args.d1,
        d2: args.d2,
        seed: args.seed,
    };
    let gen = generate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let prov = Provenance {
        config_hash: config_hash(args),
        seed: args.seed,
    };
    let mut written = Vec::new();
    let mut emit = |name: &str, contents: String| -> Result<(), CliError> {
        let path = out_file(&args.out, name);
        write(&path, &contents)?;
        written.push(path);
        Ok(())
    };
    emit("precision.csv", io::format_matrix_csv(gen.model.precision(), &prov))?;
    emit("graph.tsv", io::format_edge_list(&gen.truth, &prov))?;
    let weak = Graph::from_edges(args.p, gen.weak.iter().map(|e| (e.u(), e.v())));
    emit("weak.tsv", io::format_edge_list(&weak, &prov))?;
    if args.n > 0 {
        let data = gen
            .model
            .sample(args.n, args.seed.wrapping_add(1))
            .map_err(|e| CliError::Estimation(e.to_string()))?;
        emit("data.csv", io::format_matrix_csv(data.observations(), &prov))?;
    }
    Ok(written)
}

/// The settings of an `estimate` run, echoed into its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub oracle: Option<PathBuf>,
    pub h: Option<PathBuf>,
    pub decompose: bool,
    pub seed: u64,
    pub framework: FrameworkConfig,
}

#[derive(Debug, Serialize)]
struct StageTimes {
    load_seconds: f64,
    screen_seconds: f64,
    estimate_seconds: f64,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    config: &'a RunConfig,
    config_hash: String,
    seed: u64,
    screening: String,
    h_edges: usize,
    edges: Vec<Edge>,
    trace: &'a FrameworkTrace,
    stages: StageTimes,
}

fn framework_config(args: &EstimateArgs) -> FrameworkConfig {
    let mut cfg = FrameworkConfig::new(args.algo.into());
    if let Some(k) = args.kappa {
        cfg.kappa = k;
    }
    if let Some(k) = args.kappa_screen {
        cfg.kappa_screen = k;
    }
    cfg.separator_cap = args.separator_cap.unwrap_or(cfg.kappa_screen + 1);
    if let Some(g) = args.gamma {
        cfg.ebic.gamma = g;
    }
    if let Some(a) = args.screen_alpha {
        cfg.screen_test = TestConfig::FisherZ { alpha: a };
    }
    if let Some(a) = args.small_alpha {
        cfg.small_alpha = a;
    }
    if let Some(a) = args.prune_alpha {
        cfg.prune_alpha = a;
    }
    cfg.prune = !args.no_prune;
    cfg
}

/// Estimates a graph and writes `graph.tsv`, `trace.json` and DOT files of
/// H, Ĝ, and each iteration's junction tree and region graph.
pub fn cmd_estimate(args: &EstimateArgs) -> Result<Graph, CliError> {
    let cfg = framework_config(args);
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let run = RunConfig {
        data: args.data.clone(),
        oracle: args.oracle.clone(),
        h: args.h.clone(),
        decompose: !args.no_decompose,
        seed: args.seed,
        framework: cfg.clone(),
    };
    let prov = Provenance {
        config_hash: config_hash(&run),
        seed: args.seed,
    };

    let t0 = Instant::now();
    let backend = match (&args.data, &args.oracle) {
        (_, Some(path)) => Backend::oracle(&io::read_precision(path)?),
        (Some(path), None) => {
            let data = io::read_dataset(path)?;
            Backend::from_dataset(&data).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        (None, None) => return Err(CliError::Usage("one of --data or --oracle is required".into())),
    };
    let load_seconds = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let h = match &args.h {
        Some(path) => {
            let h = io::read_edge_list(path)?;
            if h.id_bound() > backend.p() {
                return Err(CliError::Usage(format!(
                    "{}: graph has {} vertices but the input has {} variables",
                    path.display(),
                    h.id_bound(),
                    backend.p()
                )));
            }
            let mut full = Graph::empty(backend.p());
            for e in h.edges() {
                full.add_edge(e.u(), e.v());
            }
            full
        }
        None => screen_graph_h(&backend, cfg.kappa_screen, cfg.screen_test)
            .map_err(|e| CliError::Estimation(e.to_string()))?,
    };
    let screen_seconds = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let (g_hat, trace) = if args.no_decompose {
        let (g, method) = estimate_flat(&backend, &h, &h, &cfg).map_err(|e| CliError::Estimation(e.to_string()))?;
        let trace = FrameworkTrace {
            notes: vec![format!("no decomposition: one {} run on H ({method:?})", cfg.algorithm.name())],
            ..FrameworkTrace::default()
        };
        (g, trace)
    } else {
        jt_framework(&backend, &h, &cfg).map_err(|e| CliError::Estimation(e.to_string()))?
    };
    let estimate_seconds = t2.elapsed().as_secs_f64();

    let dir = &args.out;
    write(&out_file(dir, "graph.tsv"), &io::format_edge_list(&g_hat, &prov))?;
    write(&out_file(dir, "h.dot"), &io::graph_to_dot(&h, "H", Some(&prov)))?;
    write(&out_file(dir, "g_hat.dot"), &io::graph_to_dot(&g_hat, "G_hat", Some(&prov)))?;
    for it in &trace.iterations {
        if let Some(jt) = &it.junction_tree {
            let name = format!("junction_tree_{}", it.iteration);
            write(&out_file(dir, &format!("{name}.dot")), &io::junction_tree_to_dot(jt, &name, Some(&prov)))?;
        }
        if let Some(rg) = &it.region_graph {
            let name = format!("region_graph_{}", it.iteration);
            write(&out_file(dir, &format!("{name}.dot")), &io::region_graph_to_dot(rg, &name, Some(&prov)))?;
        }
    }
    let report = RunReport {
        config: &run,
        config_hash: prov.config_hash.clone(),
        seed: args.seed,
        screening: match &args.h {
            Some(p) => format!("H read from {}", p.display()),
            None => format!("PC screen (kappa={}) with {:?} (replaces cross-validated thresholds)", cfg.kappa_screen, cfg.screen_test),
        },
        h_edges: h.num_edges(),
        edges: g_hat.edges().collect(),
        trace: &trace,
        stages: StageTimes {
            load_seconds,
            screen_seconds,
            estimate_seconds,
        },
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    write(&out_file(dir, "trace.json"), &json)?;
    Ok(g_hat)
}

/// Parses an experiment config, with serde's field-level messages.
pub fn load_experiment_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let cfg: ExperimentConfig =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    cfg.validate().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    Ok(cfg)
}

/// Runs an experiment and writes `report.csv` and `report.json`.
pub fn cmd_benchmark(args: &BenchmarkArgs) -> Result<Vec<PathBuf>, CliError> {
    let cfg = load_experiment_config(&args.config)?;
    let report = run_experiment(&cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    for f in &report.failures {
        eprintln!(
            "trial failed: family={} n={} trial={} algorithm={}: {}",
            f.family, f.n, f.trial, f.algorithm, f.error
        );
    }
    let csv = out_file(&args.out, "report.csv");
    let json = out_file(&args.out, "report.json");
    write(&csv, &report.to_csv())?;
    write(&json, &report.to_json())?;
    if report.rows.iter().all(|r| r.metrics.trials.is_empty()) {
        return Err(CliError::Estimation("every trial failed".into()));
    }
    Ok(vec![csv, json])
}

/// Writes one DOT file for an edge list.
pub fn cmd_export_dot(args: &ExportDotArgs) -> Result<(), CliError> {
    let g = io::read_edge_list(&args.graph)?;
    let name = args.graph.file_stem().map_or("graph".into(), |s| s.to_string_lossy().into_owned());
    let jt = || {
        let jt = build_junction_tree(&g);
        match args.separator_cap {
            Some(0) => Err(CliError::Usage("--separator-cap must be >= 1".into())),
            Some(cap) => Ok(merge_by_separator_cap(&jt, cap)),
            None => Ok(jt),
        }
    };
    let dot = match args.kind {
        DotKind::Graph => io::graph_to_dot(&g, &name, None),
        DotKind::JunctionTree => io::junction_tree_to_dot(&jt()?, &name, None),
        DotKind::RegionGraph => io::region_graph_to_dot(&build_region_graph(&jt()?), &name, None),
    };
    write(&args.out, &dot)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    if let Some(threads) = cli.threads {
        if threads == 0 {
            eprintln!("error: --threads must be >= 1");
            return 2;
        }
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let result = match &cli.command {
        Command::Generate(a) => cmd_generate(a).map(|_| ()),
        Command::Estimate(a) => cmd_estimate(a).map(|_| ()),
        Command::Benchmark(a) => cmd_benchmark(a).map(|_| ()),
        Command::ExportDot(a) => cmd_export_dot(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
