//! Min-fill triangulation, junction-tree construction and separator-cap
//! merging.
//!
//! A junction tree is built in three steps: triangulate the graph greedily
//! (the vertex whose elimination adds the fewest fill edges goes first), read
//! the maximal cliques off the elimination order, and connect the cliques with
//! a maximum-weight spanning forest where the weight of a pair of cliques is
//! the size of their intersection.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, Vertex, VertexSet};

/// An edge of a junction tree between clusters `a < b`, labeled with the
/// separator `C_a ∩ C_b`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeEdge {
    pub a: usize,
    pub b: usize,
    pub separator: VertexSet,
}

/// A forest of vertex clusters with separator-labeled edges.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JunctionTree {
    pub clusters: Vec<VertexSet>,
    pub edges: Vec<TreeEdge>,
}

impl JunctionTree {
    /// Builds a tree from clusters and cluster-index pairs, computing the
    /// separators as intersections.
    pub fn from_parts(clusters: Vec<VertexSet>, pairs: &[(usize, usize)]) -> Self {
        let mut edges: Vec<TreeEdge> = pairs
            .iter()
            .map(|&(x, y)| {
                let (a, b) = (x.min(y), x.max(y));
                TreeEdge {
                    a,
                    b,
                    separator: clusters[a].intersection(&clusters[b]).copied().collect(),
                }
            })
            .collect();
        edges.sort_by_key(|e| (e.a, e.b));
        JunctionTree { clusters, edges }
    }

    /// Separators in tree-edge order.
    pub fn separators(&self) -> impl Iterator<Item = &VertexSet> {
        self.edges.iter().map(|e| &e.separator)
    }

    /// Size of the largest separator (0 without edges).
    pub fn max_separator_size(&self) -> usize {
        self.separators().map(|s| s.len()).max().unwrap_or(0)
    }

    /// Size of the largest cluster.
    pub fn max_cluster_size(&self) -> usize {
        self.clusters.iter().map(|c| c.len()).max().unwrap_or(0)
    }

    /// Cluster indices adjacent to cluster `c`.
    pub fn tree_neighbors(&self, c: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|e| match (e.a == c, e.b == c) {
                (true, _) => Some(e.b),
                (_, true) => Some(e.a),
                _ => None,
            })
            .collect();
        out.sort_unstable();
        out
    }
}

/// Number of fill edges created by eliminating `v` from `g`.
fn fill_count(g: &Graph, v: Vertex) -> usize {
    let nb: Vec<Vertex> = g.neighbors(v).iter().copied().collect();
    let mut fill = 0;
    for (k, &a) in nb.iter().enumerate() {
        for &b in &nb[k + 1..] {
            if !g.has_edge(a, b) {
                fill += 1;
            }
        }
    }
    fill
}

/// Greedy min-fill triangulation.
///
/// Returns the chordal supergraph and the elimination order. Ties in fill
/// count go to the lowest vertex id.
pub fn triangulate_min_fill(g: &Graph) -> (Graph, Vec<Vertex>) {
    let mut chordal = g.clone();
    let mut work = g.clone();
    let mut order = Vec::with_capacity(g.num_vertices());
    let mut remaining: VertexSet = g.vertex_set();
    while !remaining.is_empty() {
        let v = remaining
            .iter()
            .copied()
            .min_by_key(|&v| (fill_count(&work, v), v))
            .expect("nonempty");
        let nb: Vec<Vertex> = work.neighbors(v).iter().copied().collect();
        for (k, &a) in nb.iter().enumerate() {
            for &b in &nb[k + 1..] {
                work.add_edge(a, b);
                chordal.add_edge(a, b);
            }
        }
        for &a in &nb {
            work.remove_edge(v, a);
        }
        remaining.remove(&v);
        order.push(v);
    }
    (chordal, order)
}

/// Maximal cliques of a chordal graph given a perfect elimination order,
/// sorted lexicographically.
fn maximal_cliques(chordal: &Graph, order: &[Vertex]) -> Vec<VertexSet> {
    let pos: std::collections::BTreeMap<Vertex, usize> =
        order.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let candidates: BTreeSet<VertexSet> = order
        .iter()
        .map(|&v| {
            let mut c: VertexSet = chordal
                .neighbors(v)
                .iter()
                .copied()
                .filter(|w| pos[w] > pos[&v])
                .collect();
            c.insert(v);
            c
        })
        .collect();
    let all: Vec<VertexSet> = candidates.into_iter().collect();
    all.iter()
        .filter(|c| !all.iter().any(|d| d != *c && c.is_subset(d)))
        .cloned()
        .collect()
}

struct DisjointSets(Vec<usize>);

impl DisjointSets {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut y = x;
        while self.0[y] != r {
            let next = self.0[y];
            self.0[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Builds a junction tree (a forest for disconnected graphs) of `g`.
///
/// Clusters are the maximal cliques of the min-fill triangulation, sorted
/// lexicographically; the tree is a maximum-weight spanning forest (Kruskal)
/// over cluster pairs weighted by intersection size, ties broken by the
/// lexicographically smaller pair.
pub fn build_junction_tree(g: &Graph) -> JunctionTree {
    let (chordal, order) = triangulate_min_fill(g);
    let clusters = maximal_cliques(&chordal, &order);
    let mut candidates = Vec::new();
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            let w = clusters[a].intersection(&clusters[b]).count();
            if w > 0 {
                candidates.push((w, a, b));
            }
        }
    }
    candidates.sort_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut sets = DisjointSets((0..clusters.len()).collect());
    let pairs: Vec<(usize, usize)> = candidates
        .into_iter()
        .filter(|&(_, a, b)| sets.union(a, b))
        .map(|(_, a, b)| (a, b))
        .collect();
    let jt = JunctionTree::from_parts(clusters, &pairs);
    debug_assert!(validate_junction_tree(&jt, g));
    jt
}

/// Checks that `jt` is a junction tree of `g`: the tree edges form a forest
/// with correct separator labels, every vertex and every edge of `g` is
/// covered by a cluster, clusters only use vertices of `g`, and the clusters
/// containing any given vertex form a connected subtree (running
/// intersection).
pub fn validate_junction_tree(jt: &JunctionTree, g: &Graph) -> bool {
    let m = jt.clusters.len();
    let mut sets = DisjointSets((0..m).collect());
    for e in &jt.edges {
        if e.a >= m || e.b >= m || e.a == e.b || !sets.union(e.a, e.b) {
            return false;
        }
        let sep: VertexSet = jt.clusters[e.a].intersection(&jt.clusters[e.b]).copied().collect();
        if sep != e.separator {
            return false;
        }
    }
    let covered: VertexSet = jt.clusters.iter().flatten().copied().collect();
    if covered != g.vertex_set() {
        return false;
    }
    if !g.edges().all(|e| jt.clusters.iter().any(|c| e.within(c))) {
        return false;
    }
    // Running intersection: the clusters holding v, with the tree edges whose
    // separator holds v, must form a single connected piece.
    for v in g.vertices() {
        let holders: Vec<usize> = (0..m).filter(|&c| jt.clusters[c].contains(&v)).collect();
        let mut sets = DisjointSets((0..m).collect());
        let mut joined = 0;
        for e in &jt.edges {
            if e.separator.contains(&v) && sets.union(e.a, e.b) {
                joined += 1;
            }
        }
        if joined + 1 != holders.len() {
            return false;
        }
    }
    true
}

/// Merges adjacent clusters until no separator is larger than `cap`.
///
/// The largest offending separator is merged first; ties go to the edge
/// with the smallest cluster indices. The merged cluster takes the smaller
/// index and later clusters shift down by one.
///
/// # Panics
/// Panics if `cap == 0`.
pub fn merge_by_separator_cap(jt: &JunctionTree, cap: usize) -> JunctionTree {
    assert!(cap >= 1, "separator cap must be at least 1");
    let mut clusters = jt.clusters.clone();
    let mut pairs: Vec<(usize, usize)> = jt.edges.iter().map(|e| (e.a, e.b)).collect();
    loop {
        let pick = pairs
            .iter()
            .copied()
            .map(|(a, b)| (clusters[a].intersection(&clusters[b]).count(), a, b))
            .filter(|&(s, _, _)| s > cap)
            .min_by(|x, y| y.0.cmp(&x.0).then((x.1, x.2).cmp(&(y.1, y.2))));
        let Some((_, a, b)) = pick else { break };
        let absorbed = clusters.remove(b);
        clusters[a].extend(absorbed);
        let remap = |c: usize| {
            if c == b {
                a
            } else if c > b {
                c - 1
            } else {
                c
            }
        };
        pairs = pairs
            .into_iter()
            .filter(|&p| p != (a, b))
            .map(|(x, y)| {
                let (x, y) = (remap(x), remap(y));
                (x.min(y), x.max(y))
            })
            .collect();
    }
    JunctionTree::from_parts(clusters, &pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[Vertex]) -> VertexSet {
        v.iter().copied().collect()
    }

    #[test]
    fn four_cycle_gets_one_chord() {
        let c4 = Graph::from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)]);
        let (chordal, order) = triangulate_min_fill(&c4);
        assert_eq!(chordal.num_edges(), 5);
        assert_eq!(order.len(), 4);
    }

    #[test]
    fn empty_graph_needs_no_fill() {
        let g = Graph::empty(5);
        let (chordal, order) = triangulate_min_fill(&g);
        assert_eq!(chordal, g);
        assert_eq!(order, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn tree_graph_clusters_are_its_edges() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (1, 3), (3, 4), (3, 5)]);
        let jt = build_junction_tree(&g);
        let want: Vec<VertexSet> = g.edges().map(|e| set(&[e.u(), e.v()])).collect();
        assert_eq!(jt.clusters, want);
        assert_eq!(jt.edges.len(), 4);
        assert!(validate_junction_tree(&jt, &g));
    }

    #[test]
    fn isolated_vertices_become_singletons() {
        let g = Graph::from_edges(4, [(1, 2)]);
        let jt = build_junction_tree(&g);
        assert_eq!(jt.clusters, vec![set(&[0]), set(&[1, 2]), set(&[3])]);
        assert!(jt.edges.is_empty());
        assert!(validate_junction_tree(&jt, &g));
    }

    #[test]
    fn invalid_and_valid_clusterings_of_four_cycle() {
        // Cycle 0-1-3-2-0.
        let c4 = Graph::from_edges(4, [(0, 1), (1, 3), (3, 2), (2, 0)]);
        let chain = JunctionTree::from_parts(
            vec![set(&[0, 2]), set(&[0, 1]), set(&[1, 3]), set(&[2, 3])],
            &[(0, 1), (1, 2), (2, 3)],
        );
        assert!(!validate_junction_tree(&chain, &c4));
        let pair = JunctionTree::from_parts(vec![set(&[0, 1, 2]), set(&[1, 2, 3])], &[(0, 1)]);
        assert!(validate_junction_tree(&pair, &c4));
        let whole = JunctionTree::from_parts(vec![set(&[0, 1, 2, 3])], &[]);
        assert!(validate_junction_tree(&whole, &c4));
    }

    #[test]
    fn merge_is_noop_under_cap() {
        let g = Graph::from_edges(5, [(0, 1), (1, 2), (2, 3), (3, 4)]);
        let jt = build_junction_tree(&g);
        assert_eq!(merge_by_separator_cap(&jt, 1), jt);
    }

    #[test]
    fn merge_collapses_chain_of_large_separators() {
        let clusters = vec![set(&[0, 1, 2, 3]), set(&[1, 2, 3, 4]), set(&[2, 3, 4, 5])];
        let jt = JunctionTree::from_parts(clusters, &[(0, 1), (1, 2)]);
        let merged = merge_by_separator_cap(&jt, 2);
        assert_eq!(merged.clusters, vec![set(&[0, 1, 2, 3, 4, 5])]);
        assert!(merged.edges.is_empty());
    }
}
