//! Junction-tree decomposition for learning undirected Gaussian graphical
//! models.
//!
//! A screening graph is triangulated into a junction tree, turned into a
//! layered region graph, and each region's edges are estimated from a small
//! closure of vertices with a pluggable algorithm (PC, neighborhood Lasso or
//! graphical Lasso). The crate also ships synthetic generators, recovery
//! metrics, a benchmark runner and the `jtugms` command-line tool.

// Negated comparisons such as `!(x > 0.0)` are used on purpose: they also
// reject NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod gaussian;
pub mod graph;
pub mod junction_tree;
pub mod region_graph;
pub mod ugms;
pub mod model_selection;
pub mod framework;
pub mod bench;
pub mod io;
pub mod cli;
