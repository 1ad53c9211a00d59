//! The PC algorithm restricted to a candidate edge set.

use itertools::Itertools;

use crate::gaussian::CiTest;
use crate::graph::{Graph, Vertex};

/// Runs PC with conditioning sets of size at most `kappa`.
///
/// Starts from `Ĝ = L`. For `k = 0..=kappa`, every surviving edge `(i, j)` of
/// `Ĝ` is visited in ascending order; its candidate conditioning pool is the
/// neighborhood of `i` or of `j` in the current `H` (the smaller one, ties to
/// `i`), minus `{i, j}`. When that pool has fewer than `k` vertices the other
/// endpoint's neighborhood is used instead, so an edge is never left untested
/// at a level just because the smaller side shrank below it. If some size-`k`
/// subset of the pool makes `i` and `j` independent, the edge is deleted from
/// both `Ĝ` and `H` at once, so later edges in the same level already see the
/// smaller `H`.
///
/// The search stops early once no surviving edge has a pool of size `k`,
/// since pools only shrink.
pub fn pc(kappa: usize, test: &dyn CiTest, h: &Graph, l: &Graph) -> Graph {
    debug_assert!(l.edges().all(|e| h.has_edge(e.u(), e.v())), "L must be a subgraph of H");
    let mut g = l.clone();
    let mut h = h.clone();
    for k in 0..=kappa {
        let mut testable = false;
        let edges: Vec<_> = g.edges().collect();
        for e in edges {
            let (i, j) = (e.u(), e.v());
            let (ni, nj) = (h.neighbors(i), h.neighbors(j));
            let (small, large) = if ni.len() <= nj.len() { (ni, nj) } else { (nj, ni) };
            let without_ends = |side: &crate::graph::VertexSet| -> Vec<Vertex> {
                side.iter().copied().filter(|&v| v != i && v != j).collect()
            };
            let mut pool = without_ends(small);
            if pool.len() < k {
                pool = without_ends(large);
            }
            if pool.len() < k {
                continue;
            }
            testable = true;
            let separated = pool.into_iter().combinations(k).any(|s| test.independent(i, j, &s));
            if separated {
                g.remove_edge(i, j);
                h.remove_edge(i, j);
            }
        }
        if !testable {
            break;
        }
    }
    g
}
