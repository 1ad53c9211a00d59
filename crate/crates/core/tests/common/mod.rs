//! Shared fixtures and independent oracles for the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use jtugms::gaussian::GaussianModel;
use jtugms::graph::{Edge, Graph, Vertex, VertexSet};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn e(a: Vertex, b: Vertex) -> Edge {
    Edge::new(a, b)
}

pub fn edge_set(pairs: &[(Vertex, Vertex)]) -> BTreeSet<Edge> {
    pairs.iter().map(|&(a, b)| e(a, b)).collect()
}

pub fn set(vs: &[Vertex]) -> VertexSet {
    vs.iter().copied().collect()
}

/// Converts 1-based pairs to a 0-based graph on `p` vertices.
pub fn one_based(p: usize, pairs: &[(Vertex, Vertex)]) -> Graph {
    Graph::from_edges(p, pairs.iter().map(|&(a, b)| (a - 1, b - 1)))
}

/// One-based vertex labels to a 0-based set.
pub fn set1(vs: &[Vertex]) -> VertexSet {
    vs.iter().map(|v| v - 1).collect()
}

/// True graph of the seven-vertex example.
pub fn seven_vertex_truth() -> Graph {
    one_based(7, &[(1, 2), (1, 3), (1, 4), (3, 5), (4, 6), (5, 7), (6, 7)])
}

/// Superset graph `H` of the seven-vertex example.
pub fn seven_vertex_h() -> Graph {
    one_based(
        7,
        &[
            (1, 2), (1, 3), (1, 4), (1, 5), (2, 3), (2, 5), (3, 4), (3, 5),
            (3, 6), (4, 5), (4, 6), (4, 7), (5, 6), (5, 7), (6, 7),
        ],
    )
}

/// The nine-vertex graph whose junction tree has clusters
/// {5,6,8,9}, {3,5,6,8}, {1,3,5}, {2,3,5,6}, {2,3,4,6}, {3,4,6,7} (1-based):
/// the union of the cluster cliques.
pub fn nine_vertex_clusters() -> Vec<VertexSet> {
    [
        &[5, 6, 8, 9][..],
        &[3, 5, 6, 8],
        &[1, 3, 5],
        &[2, 3, 5, 6],
        &[2, 3, 4, 6],
        &[3, 4, 6, 7],
    ]
    .iter()
    .map(|c| set1(c))
    .collect()
}

/// Erdős–Rényi graph on `p` vertices.
pub fn random_graph(p: usize, prob: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(p);
    for i in 0..p {
        for j in i + 1..p {
            if rng.random::<f64>() < prob {
                g.add_edge(i, j);
            }
        }
    }
    g
}

/// A diagonally dominant (hence PD) precision matrix with the support of `g`
/// and random-magnitude, random-sign off-diagonals (faithful with probability one).
pub fn model_for(g: &Graph, seed: u64) -> GaussianModel {
    let p = g.id_bound();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut theta = DMatrix::identity(p, p);
    for ed in g.edges() {
        let d = g.degree(ed.u()).max(g.degree(ed.v())) as f64;
        let mag = rng.random_range(0.5..1.0) / (1.0 + d);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        theta[(ed.u(), ed.v())] = sign * mag;
        theta[(ed.v(), ed.u())] = sign * mag;
    }
    GaussianModel::new(theta).expect("diagonally dominant")
}

/// Whether `s` separates `i` and `j` in `g`, by exhaustive path search
/// (no BFS shortcut: every simple path is enumerated).
pub fn separated_by_paths(g: &Graph, i: Vertex, j: Vertex, s: &VertexSet) -> bool {
    fn dfs(g: &Graph, at: Vertex, target: Vertex, s: &VertexSet, seen: &mut Vec<Vertex>) -> bool {
        if at == target {
            return true;
        }
        for &n in g.neighbors(at) {
            if seen.contains(&n) || (s.contains(&n) && n != target) {
                continue;
            }
            seen.push(n);
            if dfs(g, n, target, s, seen) {
                return true;
            }
            seen.pop();
        }
        false
    }
    !dfs(g, i, j, s, &mut vec![i])
}

/// All subsets of `pool`.
pub fn subsets(pool: &[Vertex]) -> Vec<VertexSet> {
    (0..1usize << pool.len())
        .map(|mask| (0..pool.len()).filter(|b| mask >> b & 1 == 1).map(|b| pool[b]).collect())
        .collect()
}
