//! Synthetic generators, recovery metrics and the experiment runner.

mod common;

use std::collections::BTreeSet;

use common::*;
use jtugms::bench::*;
use jtugms::gaussian::min_eigenvalue;
use jtugms::graph::{Edge, Graph};
use jtugms::ugms::Algorithm;

fn families(p: usize, seed: u64) -> Vec<SyntheticSpec> {
    vec![
        SyntheticSpec::chain(p, p / 3, 0.15, 0.245),
        SyntheticSpec::cycle(p, p / 3, 0.15, 0.245),
        SyntheticSpec::hub(p, p / 2, 5, 4),
        SyntheticSpec::neighborhood(p, p / 3, 0.15, 0.245, 4, 3, seed),
    ]
}

// ---------------------------------------------------------------- metrics

#[test]
fn perfect_estimate_metrics() {
    let truth = random_graph(10, 0.3, 1);
    let weak: BTreeSet<Edge> = truth.edges().take(3).collect();
    let m = compute_metrics(&truth, &truth, &weak);
    assert_eq!((m.wedr, m.fdr, m.tpr, m.ed), (1.0, 0.0, 1.0, 0));
}

#[test]
fn metrics_of_two_false_edges_and_one_missed_weak_edge() {
    // Ten true edges (a path), four of them weak.
    let truth = Graph::from_edges(11, (0..10).map(|k| (k, k + 1)));
    let weak: BTreeSet<Edge> = (0..4).map(|k| e(k, k + 1)).collect();
    let mut est = truth.clone();
    est.remove_edge(0, 1);
    est.add_edge(0, 5);
    est.add_edge(2, 9);
    let m = compute_metrics(&est, &truth, &weak);
    // Set arithmetic: 11 estimated edges, 2 false; 9 of 10 true; 3 of 4 weak.
    assert!((m.fdr - 2.0 / 11.0).abs() < 1e-12);
    assert!((m.tpr - 9.0 / 10.0).abs() < 1e-12);
    assert!((m.wedr - 3.0 / 4.0).abs() < 1e-12);
    assert_eq!(m.ed, 3);
    assert_eq!((m.false_positives, m.false_negatives, m.edges), (2, 1, 11));
}

#[test]
fn empty_estimate_and_no_weak_edges_conventions() {
    let truth = Graph::from_edges(4, [(0, 1), (2, 3)]);
    let m = compute_metrics(&Graph::empty(4), &truth, &BTreeSet::new());
    assert_eq!((m.fdr, m.tpr, m.wedr, m.ed), (0.0, 0.0, 1.0, 2));
}

#[test]
fn all_weak_makes_wedr_equal_tpr() {
    let spec = SyntheticSpec::chain(12, 12, 0.15, 0.245);
    let model = generate(&spec).unwrap();
    assert_eq!(&model.weak, model.truth.edge_set());
    for seed in 0..5 {
        let est = random_graph(12, 0.2, seed).union(&Graph::from_edges(12, (0..5).map(|k| (k, k + 1))));
        let m = compute_metrics(&est, &model.truth, &model.weak);
        assert_eq!(m.wedr, m.tpr);
    }
}

#[test]
fn summary_standard_error() {
    let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]);
    assert_eq!(s.mean, 2.5);
    // Sample standard deviation √(5/3), divided by √4.
    assert!((s.se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-12);
}

// ------------------------------------------------------------- generators

#[test]
fn generated_models_are_pd_with_the_true_support() {
    for spec in families(30, 3) {
        let m = generate(&spec).unwrap();
        let theta = m.model.precision();
        assert!(min_eigenvalue(theta) > PD_MARGIN * 0.999, "{:?}", spec.family);
        for i in 0..spec.p {
            for j in i + 1..spec.p {
                assert_eq!(theta[(i, j)] != 0.0, m.truth.has_edge(i, j), "{:?} ({i},{j})", spec.family);
            }
        }
        assert!(m.weak.iter().all(|w| m.truth.has_edge(w.u(), w.v())));
        assert!(!m.weak.is_empty());
    }
}

#[test]
fn generators_are_deterministic() {
    for spec in families(25, 9) {
        let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
        assert_eq!(a.model.precision(), b.model.precision());
        assert_eq!(a.weak, b.weak);
    }
}

#[test]
fn family_edge_counts() {
    let chain = generate(&SyntheticSpec::chain(40, 10, 0.15, 0.245)).unwrap();
    assert_eq!((chain.truth.num_edges(), chain.weak.len()), (39, 9));
    let cycle = generate(&SyntheticSpec::cycle(40, 10, 0.15, 0.245)).unwrap();
    // The chain plus (i, i+3) edges: 7 inside the first ten vertices, 28 from
    // vertex 10 (1-based) on, and none straddling the boundary.
    assert_eq!(cycle.truth.num_edges(), 39 + 7 + 28);
    assert_eq!(cycle.weak.len(), 9 + 7);
    assert!(chain.truth.edges().all(|e| cycle.truth.has_edge(e.u(), e.v())));
}

#[test]
fn neighborhood_degrees_respect_caps() {
    let spec = SyntheticSpec::neighborhood(40, 10, 0.15, 0.245, 4, 3, 17);
    let m = generate(&spec).unwrap();
    let cap = spec.d1.max(spec.d2);
    assert!(m.truth.vertices().all(|v| m.truth.degree(v) <= cap + spec.d1));
    // Different seeds give different graphs.
    let other = generate(&SyntheticSpec::neighborhood(40, 10, 0.15, 0.245, 4, 3, 18)).unwrap();
    assert_ne!(m.truth.edge_set(), other.truth.edge_set());
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(generate(&SyntheticSpec::chain(10, 11, 0.15, 0.245)).is_err());
    assert!(generate(&SyntheticSpec::chain(10, 3, 0.0, 0.245)).is_err());
    assert!(generate(&SyntheticSpec::hub(10, 3, 5, 2)).is_err());
}

// ------------------------------------------------------------------ runner

fn small_config(oracle: bool) -> ExperimentConfig {
    ExperimentConfig {
        families: vec![
            FamilyConfig {
                label: "CH".into(),
                spec: SyntheticSpec::chain(16, 5, 0.15, 0.245),
                kappa: None,
                kappa_screen: None,
            },
            FamilyConfig {
                label: "CY".into(),
                spec: SyntheticSpec::cycle(16, 5, 0.15, 0.245),
                kappa: None,
                kappa_screen: None,
            },
        ],
        n: vec![80, 150],
        algorithms: if oracle { vec![Algorithm::Pc] } else { vec![Algorithm::Pc, Algorithm::Glasso] },
        trials: 2,
        seed: 5,
        oracle,
        screen_alpha: 0.25,
        gamma: 0.5,
        separator_cap: None,
        small_subproblem_size: 8,
        small_alpha: 0.05,
        prune: true,
        prune_alpha: 0.05,
        nlasso: Default::default(),
        lambda_grid: None,
        match_grid: None,
    }
}

#[test]
fn report_has_a_junction_tree_and_a_flat_row_per_cell() {
    let cfg = small_config(false);
    let report = run_experiment(&cfg).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    assert_eq!(report.rows.len(), cfg.families.len() * cfg.n.len() * cfg.algorithms.len() * 2);
    for label in ["JPC", "PC", "JgL", "gL"] {
        let row = report.row("CY", 150, label).unwrap();
        assert_eq!(row.metrics.trials.len(), cfg.trials);
    }
    let csv = report.to_csv();
    assert!(csv.starts_with(&format!("# config_hash={} seed=5\n", cfg.hash())));
    assert_eq!(csv.lines().count(), 2 + report.rows.len());
}

#[test]
fn oracle_experiments_recover_every_family_exactly() {
    let mut cfg = small_config(true);
    cfg.families.push(FamilyConfig {
        label: "HB".into(),
        spec: SyntheticSpec::hub(18, 9, 4, 4),
        kappa: None,
        kappa_screen: None,
    });
    cfg.families.push(FamilyConfig {
        label: "NB".into(),
        spec: SyntheticSpec::neighborhood(18, 6, 0.15, 0.245, 4, 3, 0),
        kappa: None,
        kappa_screen: None,
    });
    let report = run_experiment(&cfg).unwrap();
    assert!(report.failures.is_empty(), "{:?}", report.failures);
    for row in &report.rows {
        assert_eq!(row.metrics.ed.mean, 0.0, "{} {}", row.family, row.algorithm);
    }
}

#[test]
fn oracle_mode_rejects_lasso_algorithms() {
    let mut cfg = small_config(true);
    cfg.algorithms.push(Algorithm::Nlasso);
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn same_config_same_report_and_hash_tracks_changes() {
    let cfg = small_config(false);
    let a = run_experiment(&cfg).unwrap();
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.to_json(), b.to_json());
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(other.hash(), cfg.hash());
}

#[test]
fn config_json_rejects_unknown_fields() {
    let json = serde_json::to_value(small_config(false)).unwrap();
    let mut obj = json.as_object().unwrap().clone();
    obj.insert("trails".into(), serde_json::json!(3));
    assert!(serde_json::from_value::<ExperimentConfig>(serde_json::Value::Object(obj)).is_err());
}
