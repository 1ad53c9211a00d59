//! Undirected simple graphs over integer vertex ids, the set algebra used by
//! the decomposition (induced subgraphs, unions, differences, complete
//! graphs), separation queries and marginal graphs.
//!
//! Vertex ids are plain `usize` values. A graph owns an explicit vertex set,
//! so an induced subgraph `G[A]` keeps the original ids of `A`. All iteration
//! is in ascending id order, which keeps every downstream algorithm
//! deterministic.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A vertex id.
pub type Vertex = usize;

/// A sorted set of vertex ids (a cluster, separator, region or conditioning set).
pub type VertexSet = BTreeSet<Vertex>;

static EMPTY: VertexSet = BTreeSet::new();

/// Errors raised by graph queries whose arguments do not fit the graph.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("vertex {0} is not in the graph")]
    VertexNotFound(Vertex),
    #[error("invalid separation query: {0}")]
    InvalidQuery(String),
}

/// An unordered vertex pair, stored with the smaller endpoint first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(Vertex, Vertex);

impl Edge {
    /// Builds the edge `{a, b}`.
    ///
    /// # Panics
    /// Panics if `a == b`; self-loops are not representable.
    pub fn new(a: Vertex, b: Vertex) -> Self {
        assert_ne!(a, b, "self-loop ({a}, {a}) is not a valid edge");
        if a < b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }

    /// The smaller endpoint.
    pub fn u(&self) -> Vertex {
        self.0
    }

    /// The larger endpoint.
    pub fn v(&self) -> Vertex {
        self.1
    }

    /// Whether `x` is an endpoint.
    pub fn contains(&self, x: Vertex) -> bool {
        self.0 == x || self.1 == x
    }

    /// Whether both endpoints lie in `set`.
    pub fn within(&self, set: &VertexSet) -> bool {
        set.contains(&self.0) && set.contains(&self.1)
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.0, self.1)
    }
}

/// An undirected simple graph.
///
/// Adjacency is kept both as sorted neighbor sets and as an edge set, so that
/// neighborhood lookups and ordered edge iteration are both cheap.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Graph {
    adj: BTreeMap<Vertex, VertexSet>,
    edges: BTreeSet<Edge>,
}

impl Graph {
    /// An edgeless graph on the given vertices.
    pub fn new<I: IntoIterator<Item = Vertex>>(vertices: I) -> Self {
        let adj = vertices.into_iter().map(|v| (v, VertexSet::new())).collect();
        Graph {
            adj,
            edges: BTreeSet::new(),
        }
    }

    /// An edgeless graph on `0..p`.
    pub fn empty(p: usize) -> Self {
        Graph::new(0..p)
    }

    /// A graph on `0..p` with the given edges.
    ///
    /// # Panics
    /// Panics if an edge endpoint is `>= p`.
    pub fn from_edges<I: IntoIterator<Item = (Vertex, Vertex)>>(p: usize, edges: I) -> Self {
        let mut g = Graph::empty(p);
        for (a, b) in edges {
            assert!(a < p && b < p, "edge ({a}, {b}) out of range for p = {p}");
            g.add_edge(a, b);
        }
        g
    }

    /// The complete graph `K_A`.
    pub fn complete(vertices: &VertexSet) -> Self {
        let mut g = Graph::new(vertices.iter().copied());
        let vs: Vec<Vertex> = vertices.iter().copied().collect();
        for (k, &a) in vs.iter().enumerate() {
            for &b in &vs[k + 1..] {
                g.add_edge(a, b);
            }
        }
        g
    }

    /// Adds `v` to the vertex set (no-op if present).
    pub fn add_vertex(&mut self, v: Vertex) {
        self.adj.entry(v).or_default();
    }

    /// Adds the edge `{a, b}`, inserting missing endpoints into the vertex
    /// set. Returns `true` if the edge was new.
    ///
    /// # Panics
    /// Panics if `a == b`.
    pub fn add_edge(&mut self, a: Vertex, b: Vertex) -> bool {
        let e = Edge::new(a, b);
        if !self.edges.insert(e) {
            return false;
        }
        self.adj.entry(a).or_default().insert(b);
        self.adj.entry(b).or_default().insert(a);
        true
    }

    /// Removes the edge `{a, b}` if present. Returns `true` if it was present.
    pub fn remove_edge(&mut self, a: Vertex, b: Vertex) -> bool {
        if a == b || !self.edges.remove(&Edge::new(a, b)) {
            return false;
        }
        if let Some(n) = self.adj.get_mut(&a) {
            n.remove(&b);
        }
        if let Some(n) = self.adj.get_mut(&b) {
            n.remove(&a);
        }
        true
    }

    pub fn contains_vertex(&self, v: Vertex) -> bool {
        self.adj.contains_key(&v)
    }

    pub fn has_edge(&self, a: Vertex, b: Vertex) -> bool {
        a != b && self.edges.contains(&Edge::new(a, b))
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Vertices in ascending order.
    pub fn vertices(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.adj.keys().copied()
    }

    pub fn vertex_set(&self) -> VertexSet {
        self.adj.keys().copied().collect()
    }

    /// Edges in ascending lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_set(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Neighbors of `v` (empty if `v` is not a vertex).
    pub fn neighbors(&self, v: Vertex) -> &VertexSet {
        self.adj.get(&v).unwrap_or(&EMPTY)
    }

    pub fn degree(&self, v: Vertex) -> usize {
        self.neighbors(v).len()
    }

    /// Largest vertex id plus one (0 for a graph without vertices).
    pub fn id_bound(&self) -> usize {
        self.adj.keys().next_back().map_or(0, |v| v + 1)
    }

    fn check_subset(&self, a: &VertexSet) -> Result<(), GraphError> {
        match a.iter().find(|v| !self.contains_vertex(**v)) {
            Some(&v) => Err(GraphError::VertexNotFound(v)),
            None => Ok(()),
        }
    }

    /// The induced subgraph `G[A]`.
    pub fn induced_subgraph(&self, a: &VertexSet) -> Result<Graph, GraphError> {
        self.check_subset(a)?;
        let mut g = Graph::new(a.iter().copied());
        for &x in a {
            for &y in self.neighbors(x).range(x + 1..) {
                if a.contains(&y) {
                    g.add_edge(x, y);
                }
            }
        }
        Ok(g)
    }

    /// `(V₁ ∪ V₂, E₁ ∪ E₂)`.
    pub fn union(&self, other: &Graph) -> Graph {
        let mut g = self.clone();
        for v in other.vertices() {
            g.add_vertex(v);
        }
        for e in other.edges() {
            g.add_edge(e.u(), e.v());
        }
        g
    }

    /// `(V₁, E₁ \ E₂)`.
    pub fn difference(&self, other: &Graph) -> Graph {
        let mut g = self.clone();
        for e in other.edges() {
            g.remove_edge(e.u(), e.v());
        }
        g
    }

    /// Whether every path from `i` to `j` meets `s`. Also true when `i` and
    /// `j` are disconnected.
    pub fn is_separator(&self, s: &VertexSet, i: Vertex, j: Vertex) -> Result<bool, GraphError> {
        for v in [i, j] {
            if !self.contains_vertex(v) {
                return Err(GraphError::VertexNotFound(v));
            }
        }
        if i == j {
            return Err(GraphError::InvalidQuery(format!("endpoints coincide ({i})")));
        }
        if s.contains(&i) || s.contains(&j) {
            return Err(GraphError::InvalidQuery(format!(
                "endpoint {i} or {j} lies in the separating set"
            )));
        }
        let mut seen = VertexSet::new();
        let mut queue = VecDeque::from([i]);
        seen.insert(i);
        while let Some(x) = queue.pop_front() {
            for &y in self.neighbors(x) {
                if y == j {
                    return Ok(false);
                }
                if !s.contains(&y) && seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Ok(true)
    }

    /// Connected components, each as a vertex set, ordered by smallest member.
    pub fn connected_components(&self) -> Vec<VertexSet> {
        let mut seen = VertexSet::new();
        let mut out = Vec::new();
        for v in self.vertices() {
            if seen.contains(&v) {
                continue;
            }
            let mut comp = VertexSet::new();
            let mut queue = VecDeque::from([v]);
            seen.insert(v);
            while let Some(x) = queue.pop_front() {
                comp.insert(x);
                for &y in self.neighbors(x) {
                    if seen.insert(y) {
                        queue.push_back(y);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    /// The marginal graph over `A`: the edges of `G[A]`, plus `(i, j)` for
    /// every pair of `A` joined by a path whose interior avoids `A`.
    ///
    /// Such pairs are exactly the pairs of `A` that both touch a common
    /// connected component of `G[V \ A]`, which is how they are found here.
    pub fn marginal_graph(&self, a: &VertexSet) -> Result<Graph, GraphError> {
        let mut g = self.induced_subgraph(a)?;
        let outside: VertexSet = self.vertices().filter(|v| !a.contains(v)).collect();
        let rest = self.induced_subgraph(&outside)?;
        for comp in rest.connected_components() {
            let attached: Vec<Vertex> = comp
                .iter()
                .flat_map(|&x| self.neighbors(x).iter().copied())
                .filter(|y| a.contains(y))
                .collect::<VertexSet>()
                .into_iter()
                .collect();
            for (k, &x) in attached.iter().enumerate() {
                for &y in &attached[k + 1..] {
                    g.add_edge(x, y);
                }
            }
        }
        Ok(g)
    }
}
