//! Region graphs built from junction trees.
//!
//! Row 1 holds the clusters of a junction tree and row 2 its separators.
//! Each further row holds the distinct pairwise intersections (of size > 1)
//! of the regions in the previous row. A region in row `ℓ` points to every
//! region of row `ℓ + 1` that it contains. Equal vertex sets may appear in
//! several rows; each occurrence is its own region.
//!
//! The queries here drive subproblem selection: the children and ancestors
//! of a region, its closure `R̄` (the region together with all its
//! ancestors' vertices), and `H′_R`, the edges of `H[R]` not inside any child.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::graph::{Graph, VertexSet};
use crate::junction_tree::JunctionTree;

/// A node of a region graph.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub id: usize,
    pub vertices: VertexSet,
    /// 1-based row label.
    pub row: usize,
}

/// A layered DAG of regions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionGraph {
    regions: Vec<Region>,
    rows: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

fn distinct_sorted(sets: impl IntoIterator<Item = VertexSet>) -> Vec<VertexSet> {
    sets.into_iter()
        .filter(|s| !s.is_empty())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Builds the region graph of a junction tree.
pub fn build_region_graph(jt: &JunctionTree) -> RegionGraph {
    let mut layers: Vec<Vec<VertexSet>> = vec![distinct_sorted(jt.clusters.iter().cloned())];
    let separators = distinct_sorted(jt.separators().cloned());
    if !separators.is_empty() {
        layers.push(separators);
        loop {
            let last = layers.last().expect("nonempty");
            let mut next = Vec::new();
            for (k, r) in last.iter().enumerate() {
                for s in &last[k + 1..] {
                    let x: VertexSet = r.intersection(s).copied().collect();
                    if x.len() > 1 {
                        next.push(x);
                    }
                }
            }
            let next = distinct_sorted(next);
            if next.is_empty() {
                break;
            }
            layers.push(next);
        }
    }
    RegionGraph::from_layers(layers)
}

impl RegionGraph {
    /// Assembles a region graph from explicit rows, adding an edge from each
    /// region to every region of the next row that it contains.
    pub fn from_layers(layers: Vec<Vec<VertexSet>>) -> Self {
        let mut regions = Vec::new();
        let mut rows = Vec::new();
        for (l, layer) in layers.into_iter().enumerate() {
            let mut row = Vec::new();
            for vertices in layer {
                let id = regions.len();
                regions.push(Region {
                    id,
                    vertices,
                    row: l + 1,
                });
                row.push(id);
            }
            rows.push(row);
        }
        let mut children = vec![Vec::new(); regions.len()];
        let mut parents = vec![Vec::new(); regions.len()];
        for pair in rows.windows(2) {
            for &r in &pair[0] {
                for &s in &pair[1] {
                    if regions[s].vertices.is_subset(&regions[r].vertices) {
                        children[r].push(s);
                        parents[s].push(r);
                    }
                }
            }
        }
        RegionGraph {
            regions,
            rows,
            children,
            parents,
        }
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn region(&self, id: usize) -> &Region {
        &self.regions[id]
    }

    pub fn num_regions(&self) -> usize {
        self.regions.len()
    }

    /// Region ids by row; `rows()[0]` is row 1.
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    /// All directed edges `(parent, child)` in ascending order.
    pub fn directed_edges(&self) -> Vec<(usize, usize)> {
        self.children
            .iter()
            .enumerate()
            .flat_map(|(r, ch)| ch.iter().map(move |&s| (r, s)))
            .collect()
    }

    /// The id of the region with these vertices in this (1-based) row.
    pub fn find(&self, row: usize, vertices: &VertexSet) -> Option<usize> {
        self.rows
            .get(row.checked_sub(1)?)?
            .iter()
            .copied()
            .find(|&id| &self.regions[id].vertices == vertices)
    }

    /// Out-neighbors of `id`.
    pub fn children(&self, id: usize) -> &[usize] {
        &self.children[id]
    }

    /// In-neighbors of `id`.
    pub fn parents(&self, id: usize) -> &[usize] {
        &self.parents[id]
    }

    /// Every region with a directed path to `id`.
    pub fn ancestors(&self, id: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut queue: VecDeque<usize> = self.parents[id].iter().copied().collect();
        while let Some(r) = queue.pop_front() {
            if seen.insert(r) {
                queue.extend(self.parents[r].iter().copied());
            }
        }
        seen
    }

    /// `R̄`: the vertices of `id` and of all its ancestors.
    pub fn closure(&self, id: usize) -> VertexSet {
        let mut out = self.regions[id].vertices.clone();
        for a in self.ancestors(id) {
            out.extend(self.regions[a].vertices.iter().copied());
        }
        out
    }

    /// `H′_R`: the edges of `H` inside region `id` that do not lie inside any
    /// child region. The result is a graph on the region's vertices.
    pub fn estimable_subgraph(&self, h: &Graph, id: usize) -> Graph {
        let r = &self.regions[id].vertices;
        let mut out = Graph::new(r.iter().copied());
        for &x in r {
            for &y in h.neighbors(x).range(x + 1..) {
                if r.contains(&y)
                    && !self.children[id]
                        .iter()
                        .any(|&c| self.regions[c].vertices.contains(&x) && self.regions[c].vertices.contains(&y))
                {
                    out.add_edge(x, y);
                }
            }
        }
        out
    }
}
