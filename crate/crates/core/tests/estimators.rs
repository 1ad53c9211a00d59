//! Gaussian primitives, the three UGMS algorithms and EBIC selection,
//! checked against independent oracles.

mod common;

use common::*;
use jtugms::gaussian::{
    fisher_cutoff, oracle_ci, partial_correlation, Dataset, GaussianModel, OracleCi, SampleCi, TestConfig,
};
use jtugms::graph::{Graph, Vertex, VertexSet};
use jtugms::model_selection::{ebic_score, log_grid, match_edge_count, refit_mle, select_lambda_ebic, Candidate, EbicConfig};
use jtugms::ugms::{glasso, nlasso_cov, pc, solve_lasso, LassoProblem, NLassoOptions};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_spd(p: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(p, p + 2, |_, _| rng.random_range(-1.0..1.0));
    &a * a.transpose() / (p + 2) as f64 + DMatrix::identity(p, p) * 0.2
}

// --------------------------------------------------------------- gaussian

#[test]
fn sample_covariance_approaches_the_model() {
    let truth = one_based(4, &[(1, 2), (2, 3), (3, 4)]);
    let model = model_for(&truth, 1);
    let data = model.sample(40_000, 2).unwrap();
    let s = data.covariance(true).unwrap();
    let err = (&s - model.covariance()).abs().max();
    assert!(err < 0.05, "max deviation {err}");
}

#[test]
fn dataset_rejects_non_finite_values() {
    let mut m = DMatrix::from_element(5, 2, 1.0);
    m[(2, 1)] = f64::NAN;
    assert!(Dataset::new(m).is_err());
}

#[test]
fn oracle_independence_matches_graph_separation() {
    // Faithful random models: ρ_{ij|S} = 0 exactly when S separates i and j.
    for seed in 0..8 {
        let g = random_graph(6, 0.4, 40 + seed);
        let model = model_for(&g, 50 + seed);
        for i in 0..6 {
            for j in i + 1..6 {
                let rest: Vec<Vertex> = (0..6).filter(|&v| v != i && v != j).collect();
                for s in subsets(&rest) {
                    let sep = separated_by_paths(&g, i, j, &s);
                    assert_eq!(oracle_ci(&model, i, j, &s).unwrap(), sep, "seed {seed}: ({i},{j}) | {s:?}");
                }
            }
        }
    }
}

#[test]
fn fisher_decision_flips_at_the_cutoff() {
    let (n, alpha) = (200, 0.05);
    for s_len in [0, 1, 3] {
        let c = fisher_cutoff(n, s_len, alpha);
        let t = TestConfig::FisherZ { alpha };
        assert!(t.decide(c * 0.999, n, s_len));
        assert!(!t.decide(c * 1.001, n, s_len));
        assert!(!t.decide(-c * 1.001, n, s_len));
    }
    // No residual degrees of freedom: never independent.
    assert!(!TestConfig::FisherZ { alpha }.decide(0.0, 4, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn partial_correlation_is_symmetric_and_bounded(seed in any::<u64>(), i in 0usize..6, j in 0usize..6, mask in any::<u8>()) {
        prop_assume!(i != j);
        let sigma = random_spd(6, seed);
        let s: Vec<Vertex> = (0..6).filter(|&v| v != i && v != j && mask >> v & 1 == 1).collect();
        let a = partial_correlation(&sigma, i, j, &s).unwrap();
        let b = partial_correlation(&sigma, j, i, &s).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a.abs() <= 1.0);
    }
}

// --------------------------------------------------------------------- PC

#[test]
fn pc_three_chain_keeps_marginally_dependent_edges_at_level_zero() {
    let truth = Graph::from_edges(3, [(0, 1), (1, 2)]);
    let model = GaussianModel::new(DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.0, 0.4, 1.0, 0.4, 0.0, 0.4, 1.0])).unwrap();
    let k = Graph::complete(&truth.vertex_set());
    let ci = OracleCi::new(&model);
    // κ = 0: (0,2) is marginally dependent, so nothing is removed.
    assert_eq!(pc(0, &ci, &k, &k).num_edges(), 3);
    assert_eq!(pc(1, &ci, &k, &k).edge_set(), truth.edge_set());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// With exact CI queries, PC on a candidate set `L ⊆ H ⊇ G*` returns
    /// exactly the true edges among `L`.
    #[test]
    fn oracle_pc_returns_true_edges_of_candidate_set(p in 3usize..=8, seed in any::<u64>(), keep in any::<u64>()) {
        let truth = random_graph(p, 0.35, seed);
        let model = model_for(&truth, seed ^ 0x5a5a);
        let h = truth.union(&random_graph(p, 0.4, seed.wrapping_add(1)));
        let l = Graph::from_edges(p, h.edges().enumerate().filter(|(k, _)| keep >> (k % 64) & 1 == 1).map(|(_, e)| (e.u(), e.v())));
        let out = pc(p - 2, &OracleCi::new(&model), &h, &l);
        let expected: Vec<_> = l.edges().filter(|e| truth.has_edge(e.u(), e.v())).collect();
        prop_assert_eq!(out.edges().collect::<Vec<_>>(), expected);
    }
}

#[test]
fn raw_threshold_pc_is_deterministic_and_sparser_for_larger_lambda() {
    let truth = random_graph(10, 0.3, 70);
    let data = model_for(&truth, 71).sample(200, 72).unwrap();
    let cov = data.covariance(false).unwrap();
    let k = Graph::complete(&(0..10).collect());
    let run = |lambda| pc(2, &SampleCi::new(cov.clone(), 200, TestConfig::RawThreshold { lambda }), &k, &k);
    assert_eq!(run(0.1).edge_set(), run(0.1).edge_set());
    // At level 0 alone a larger threshold can only delete more.
    let level0 = |lambda| pc(0, &SampleCi::new(cov.clone(), 200, TestConfig::RawThreshold { lambda }), &k, &k);
    let (loose, tight) = (level0(0.05), level0(0.2));
    assert!(tight.edges().all(|e| loose.has_edge(e.u(), e.v())));
}

// ------------------------------------------------------------------ Lasso

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Optimality: every coordinate satisfies the subgradient condition.
    #[test]
    fn lasso_solution_satisfies_kkt(seed in any::<u64>(), lambda in 0.01f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (n, q) = (30, 6);
        let x = DMatrix::from_fn(n, q, |_, _| rng.random_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.random_range(-2.0..2.0));
        let w: Vec<f64> = (0..q).map(|_| rng.random_range(0.0..1.5)).collect();
        let fit = solve_lasso(&LassoProblem { design: x.clone(), response: y.clone(), penalty_weights: w.clone(), lambda }).unwrap();
        prop_assert!(fit.converged);
        let grad = x.transpose() * (&y - &x * &fit.beta);
        for k in 0..q {
            let t = lambda * w[k];
            if fit.beta[k].abs() > 1e-9 {
                prop_assert!((grad[k] - t * fit.beta[k].signum()).abs() < 1e-5, "active coordinate {}", k);
            } else {
                prop_assert!(grad[k].abs() <= t + 1e-5, "inactive coordinate {}", k);
            }
        }
        // The objective never increases across sweeps.
        prop_assert!(fit.objective.windows(2).all(|o| o[1] <= o[0] + 1e-9));
    }
}

// ----------------------------------------------------------------- gLasso

#[test]
fn glasso_with_hard_zeros_satisfies_kkt() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for t in 0..10 {
        let p = 6;
        let s = random_spd(p, 90 + t);
        let constraint = random_graph(p, 0.7, 100 + t);
        let penalized = Graph::from_edges(p, constraint.edges().filter(|_| rng.random::<bool>()).map(|e| (e.u(), e.v())));
        let lambda = rng.random_range(0.01..0.2);
        let fit = glasso(&s, &constraint, &penalized, lambda).unwrap();
        let w = fit.theta.clone().try_inverse().unwrap();
        for i in 0..p {
            for j in 0..p {
                let grad = w[(i, j)] - s[(i, j)];
                if i == j || (constraint.has_edge(i, j) && !penalized.has_edge(i, j)) {
                    assert!(grad.abs() < 1e-4, "unpenalized ({i},{j}): {grad}");
                } else if penalized.has_edge(i, j) {
                    let th = fit.theta[(i, j)];
                    if th.abs() > 1e-6 {
                        assert!((grad - lambda * th.signum()).abs() < 1e-4);
                    } else {
                        assert!(grad.abs() <= lambda + 1e-4);
                    }
                } else {
                    assert_eq!(fit.theta[(i, j)], 0.0, "forbidden entry ({i},{j})");
                }
            }
        }
    }
}

#[test]
fn glasso_with_no_penalty_equals_constrained_mle() {
    // Unpenalized glasso under a structure is the constrained MLE, which the
    // iterative-scaling refit also computes.
    for t in 0..5 {
        let p = 5;
        let s = random_spd(p, 200 + t);
        let structure = random_graph(p, 0.5, 210 + t);
        let empty = Graph::new(0..p);
        let fit = glasso(&s, &structure, &empty, 0.0).unwrap();
        let mle = refit_mle(&s, &structure).unwrap();
        let rel = (&fit.theta - &mle).norm() / mle.norm();
        assert!(rel < 1e-5, "relative gap {rel:e}");
    }
}

// ----------------------------------------------------------------- nLasso

#[test]
fn nlasso_recovers_population_graph_at_small_lambda() {
    let truth = one_based(5, &[(1, 2), (2, 3), (3, 4), (4, 5), (1, 5)]);
    let model = model_for(&truth, 300);
    let k = Graph::complete(&(0..5).collect());
    let fit = nlasso_cov(model.covariance(), &k, &k, 1e-4, NLassoOptions::default());
    assert_eq!(&fit.edges, truth.edge_set());
    assert_eq!(fit.unconverged, 0);
}

// -------------------------------------------------------------- selection

#[test]
fn refit_mle_matches_covariance_on_structure_and_zeros_elsewhere() {
    for t in 0..8 {
        let p = 6;
        let s = random_spd(p, 400 + t);
        let structure = random_graph(p, 0.4, 410 + t);
        let theta = refit_mle(&s, &structure).unwrap();
        let sigma = theta.clone().try_inverse().unwrap();
        for i in 0..p {
            for j in i..p {
                if i == j || structure.has_edge(i, j) {
                    assert!((sigma[(i, j)] - s[(i, j)]).abs() < 1e-5, "fitted entry ({i},{j})");
                } else {
                    assert_eq!(theta[(i, j)], 0.0);
                }
            }
        }
    }
}

#[test]
fn ebic_gamma_zero_is_bic() {
    let s = random_spd(4, 500);
    let theta = random_spd(4, 501);
    let (n, e) = (150usize, 3usize);
    let score = ebic_score(&s, &theta, e, n, 4, 0.0).unwrap();
    let log_det = theta.determinant().ln();
    let bic = -(n as f64) * (log_det - (&s * &theta).trace()) + e as f64 * (n as f64).ln();
    assert!((score - bic).abs() < 1e-9 * bic.abs());
    // Each extra edge costs 4γ log p more.
    let with_gamma = ebic_score(&s, &theta, e, n, 4, 0.5).unwrap();
    assert!((with_gamma - score - 4.0 * 0.5 * e as f64 * 4f64.ln()).abs() < 1e-9);
}

#[test]
fn ebic_ties_go_to_the_larger_lambda() {
    let s = DMatrix::identity(3, 3);
    let cfg = EbicConfig {
        gamma: 0.5,
        lambda_grid: vec![0.5, 0.3, 0.1],
    };
    let sel = select_lambda_ebic(&s, 50, 3, &cfg, |_| {
        Ok(Candidate {
            edges: Default::default(),
            theta: DMatrix::identity(3, 3),
        })
    })
    .unwrap();
    assert_eq!(sel.lambda, 0.5);
    assert_eq!(sel.trace.len(), 3);
}

#[test]
fn edge_count_matching_finds_the_closest_count() {
    // Counts grow as λ falls: λ ↦ ⌊10·(1 − λ)⌋ edges on a path.
    let grid = log_grid(0.9, 0.01, 40);
    let path = |m: usize| Graph::from_edges(12, (0..m).map(|k| (k, k + 1)));
    let est = |lambda: f64| path((10.0 * (1.0 - lambda)).floor() as usize);
    for target in [0usize, 3, 7, 9] {
        let (lambda, g) = match_edge_count(est, target, &grid);
        let best = grid.iter().map(|&l| est(l).num_edges().abs_diff(target)).min().unwrap();
        assert_eq!(g.num_edges().abs_diff(target), best, "target {target}");
        assert_eq!(est(lambda).num_edges(), g.num_edges());
    }
}

#[test]
fn larger_gamma_never_selects_more_edges() {
    let truth = random_graph(8, 0.35, 600);
    let model = model_for(&truth, 601);
    let data = model.sample(60, 602).unwrap();
    let cov = data.covariance(false).unwrap();
    let k = Graph::complete(&(0..8).collect::<VertexSet>());
    let estimator = |lambda: f64| -> Result<Candidate, String> {
        let g = pc(2, &SampleCi::new(cov.clone(), 60, TestConfig::RawThreshold { lambda }), &k, &k);
        let theta = refit_mle(&cov, &g).map_err(|e| e.to_string())?;
        Ok(Candidate {
            edges: g.edge_set().clone(),
            theta,
        })
    };
    let counts: Vec<usize> = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
        .iter()
        .map(|&gamma| {
            let cfg = EbicConfig {
                gamma,
                lambda_grid: log_grid(0.7, 0.02, 30),
            };
            select_lambda_ebic(&cov, 60, 8, &cfg, estimator).unwrap().edges.len()
        })
        .collect();
    assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{counts:?}");
}
