//! Command-line workflows: generate, estimate, benchmark and export-dot.

use std::path::{Path, PathBuf};
use std::process::Command;

use jtugms::cli::run;
use jtugms::io::{read_edge_list, read_precision};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/seven_vertex").join(name)
}

fn cli(args: &[&str]) -> i32 {
    run(std::iter::once("jtugms").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

fn edge_lines(text: &str) -> usize {
    text.lines().filter(|l| !l.starts_with('#') && !l.starts_with("p=") && !l.is_empty()).count()
}

#[test]
fn generate_chain_writes_nine_edges_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let code = cli(&["generate", "--family", "chain", "--p", "10", "--p1", "4", "--n", "50", "--seed", "3", "--out", s(out)]);
        assert_eq!(code, 0);
    }
    let graph = std::fs::read_to_string(a.join("graph.tsv")).unwrap();
    assert_eq!(edge_lines(&graph), 9);
    assert_eq!(edge_lines(&std::fs::read_to_string(a.join("weak.tsv")).unwrap()), 3);
    for f in ["precision.csv", "graph.tsv", "weak.tsv", "data.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
    // The precision matrix loads back as a positive definite model with the same graph.
    let model = read_precision(&a.join("precision.csv")).unwrap();
    assert_eq!(model.graph(1e-12).edge_set(), read_edge_list(&a.join("graph.tsv")).unwrap().edge_set());
    // Provenance travels with every artifact.
    assert!(graph.starts_with("# config_hash="));
}

#[test]
fn oracle_estimate_on_seven_vertex_fixture_recovers_truth() {
    let dir = tempfile::tempdir().unwrap();
    let code = cli(&[
        "estimate",
        "--oracle",
        s(&fixture("precision.csv")),
        "--h",
        s(&fixture("h.tsv")),
        "--kappa",
        "5",
        "--separator-cap",
        "10",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 0);
    let est = read_edge_list(&dir.path().join("graph.tsv")).unwrap();
    let truth = read_edge_list(&fixture("graph.tsv")).unwrap();
    assert_eq!(est.edge_set(), truth.edge_set());
    for f in ["trace.json", "h.dot", "g_hat.dot", "junction_tree_1.dot", "region_graph_1.dot"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let trace: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("trace.json")).unwrap()).unwrap();
    assert!(trace.get("config_hash").is_some());
}

#[test]
fn no_decompose_keeps_the_output_schema() {
    let dir = tempfile::tempdir().unwrap();
    let code = cli(&[
        "estimate",
        "--oracle",
        s(&fixture("precision.csv")),
        "--h",
        s(&fixture("h.tsv")),
        "--kappa",
        "5",
        "--no-decompose",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code, 0);
    let est = read_edge_list(&dir.path().join("graph.tsv")).unwrap();
    assert_eq!(est.edge_set(), read_edge_list(&fixture("graph.tsv")).unwrap().edge_set());
    assert!(dir.path().join("trace.json").exists());
}

#[test]
fn sample_estimate_from_generated_data() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("gen");
    assert_eq!(cli(&["generate", "--family", "cycle", "--p", "20", "--p1", "5", "--n", "200", "--seed", "1", "--out", s(&gen)]), 0);
    for algo in ["pc", "nlasso", "glasso"] {
        let out = dir.path().join(algo);
        let code = cli(&[
            "estimate",
            "--data",
            s(&gen.join("data.csv")),
            "--algo",
            algo,
            "--kappa-screen",
            "1",
            "--out",
            s(&out),
        ]);
        assert_eq!(code, 0, "{algo}");
        let est = read_edge_list(&out.join("graph.tsv")).unwrap();
        assert_eq!(est.num_vertices(), 20);
    }
}

#[test]
fn missing_input_exits_nonzero_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = Command::new(env!("CARGO_BIN_EXE_jtugms"))
        .args(["estimate", "--data", s(&missing), "--out", s(&dir.path().join("o"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.csv"));
}

#[test]
fn malformed_edge_list_reports_line_number() {
    let dir = tempfile::tempdir().unwrap();
    let h = dir.path().join("h.tsv");
    std::fs::write(&h, "p=7\n0\t1\n2\tx\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_jtugms"))
        .args(["estimate", "--oracle", s(&fixture("precision.csv")), "--h", s(&h), "--out", s(&dir.path().join("o"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("h.tsv") && err.contains('3'), "{err}");
}

#[test]
fn oracle_with_lasso_is_an_estimation_error() {
    let dir = tempfile::tempdir().unwrap();
    let code = cli(&["estimate", "--oracle", s(&fixture("precision.csv")), "--algo", "glasso", "--out", s(dir.path())]);
    assert_eq!(code, 1);
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.json");
    std::fs::write(&path, body).unwrap();
    path
}

const SMOKE_CONFIG: &str = r#"{
  "families": [{"label": "CH", "spec": {"family": "chain", "p": 12, "p1": 4, "rho1": 0.15, "rho2": 0.245}}],
  "n": [100],
  "algorithms": ["pc"],
  "trials": 1,
  "seed": 4
}"#;

#[test]
fn benchmark_smoke_config_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMOKE_CONFIG);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(cli(&["benchmark", "--config", s(&config), "--out", s(&a)]), 0);
    assert_eq!(cli(&["benchmark", "--config", s(&config), "--out", s(&b)]), 0);
    let csv = std::fs::read_to_string(a.join("report.csv")).unwrap();
    // Header comment, column names, then the JPC and PC rows of the one cell.
    assert_eq!(csv.lines().count(), 4);
    for f in ["report.csv", "report.json"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
    }
}

#[test]
fn malformed_config_exits_two_with_field_message() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMOKE_CONFIG.replace("\"trials\"", "\"trails\""));
    let out = Command::new(env!("CARGO_BIN_EXE_jtugms"))
        .args(["benchmark", "--config", s(&config), "--out", s(&dir.path().join("o"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trails"));
}

#[test]
fn export_dot_variants() {
    let dir = tempfile::tempdir().unwrap();
    for (kind, marker) in [("graph", "--"), ("junction-tree", "label"), ("region-graph", "rank=same")] {
        let out = dir.path().join(format!("{kind}.dot"));
        assert_eq!(cli(&["export-dot", "--graph", s(&fixture("h.tsv")), "--kind", kind, "--out", s(&out)]), 0);
        let dot = std::fs::read_to_string(&out).unwrap();
        assert!(dot.contains(marker), "{kind}: {dot}");
    }
}

#[test]
fn unknown_flag_is_a_usage_error() {
    assert_eq!(cli(&["estimate", "--bogus"]), 2);
}
