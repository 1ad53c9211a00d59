//! Python bindings for `jtugms`: graphs, junction trees, region graphs, the
//! synthetic generators, the estimators and the recovery metrics.
//!
//! Matrices cross the boundary as lists of row lists and edges as `(u, v)`
//! tuples with 0-based vertex ids.

use std::collections::BTreeSet;

use jtugms::bench::{compute_metrics, generate as gen_model, Family, SyntheticSpec};
use jtugms::framework::{estimate_flat, jt_framework, screen_graph_h, Backend, FrameworkConfig};
use jtugms::gaussian::{Dataset, GaussianModel, TestConfig};
use jtugms::graph::{Edge, Graph as CoreGraph, VertexSet};
use jtugms::junction_tree::{build_junction_tree, merge_by_separator_cap, validate_junction_tree, JunctionTree};
use jtugms::region_graph::build_region_graph;
use jtugms::ugms::{glasso as core_glasso, Algorithm};
use nalgebra::DMatrix;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_matrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 || rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("expected a nonempty rectangular list of rows"));
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn edge_list(edges: impl IntoIterator<Item = Edge>) -> Vec<(usize, usize)> {
    edges.into_iter().map(|e| (e.u(), e.v())).collect()
}

fn set_list(s: &VertexSet) -> Vec<usize> {
    s.iter().copied().collect()
}

/// An undirected graph on vertices `0..p`.
#[pyclass(name = "Graph", module = "jtugms_py", from_py_object)]
#[derive(Clone)]
pub struct PyGraph {
    inner: CoreGraph,
}

#[pymethods]
impl PyGraph {
    #[new]
    #[pyo3(signature = (p, edges = Vec::new()))]
    fn new(p: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| a == b || *a >= p || *b >= p) {
            return Err(PyValueError::new_err(format!("invalid edge ({a}, {b}) for p={p}")));
        }
        Ok(PyGraph {
            inner: CoreGraph::from_edges(p, edges),
        })
    }

    /// The complete graph on `0..p`.
    #[staticmethod]
    fn complete(p: usize) -> Self {
        PyGraph {
            inner: CoreGraph::complete(&(0..p).collect()),
        }
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        edge_list(self.inner.edges())
    }

    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn has_edge(&self, u: usize, v: usize) -> bool {
        self.inner.has_edge(u, v)
    }

    fn neighbors(&self, v: usize) -> Vec<usize> {
        set_list(self.inner.neighbors(v))
    }

    /// Whether `s` separates `i` and `j`.
    fn is_separator(&self, s: Vec<usize>, i: usize, j: usize) -> PyResult<bool> {
        self.inner.is_separator(&s.into_iter().collect(), i, j).map_err(value_err)
    }

    /// The marginal graph over `a`.
    fn marginal_graph(&self, a: Vec<usize>) -> PyResult<PyGraph> {
        let inner = self.inner.marginal_graph(&a.into_iter().collect()).map_err(value_err)?;
        Ok(PyGraph { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.num_edges()
    }

    fn __repr__(&self) -> String {
        format!("Graph(p={}, edges={})", self.inner.num_vertices(), self.inner.num_edges())
    }
}

fn tree_of(graph: &PyGraph, separator_cap: Option<usize>) -> PyResult<JunctionTree> {
    let jt = build_junction_tree(&graph.inner);
    match separator_cap {
        Some(0) => Err(PyValueError::new_err("separator_cap must be >= 1")),
        Some(cap) => Ok(merge_by_separator_cap(&jt, cap)),
        None => Ok(jt),
    }
}

/// Python-facing matrix: a list of rows.
type Rows = Vec<Vec<f64>>;
/// Python-facing edge list of `(u, v)` pairs with `u < v`.
type EdgeList = Vec<(usize, usize)>;
/// Junction tree as `(clusters, [(a, b, separator)])`.
type TreeLists = (Vec<Vec<usize>>, Vec<(usize, usize, Vec<usize>)>);
/// Region graph as `(rows of vertex sets, [(parent, child)])`.
type RegionLists = (Vec<Vec<Vec<usize>>>, EdgeList);

/// Junction tree of `graph`: `(clusters, [(a, b, separator)])`.
#[pyfunction]
#[pyo3(signature = (graph, separator_cap = None))]
fn junction_tree(graph: &PyGraph, separator_cap: Option<usize>) -> PyResult<TreeLists> {
    let jt = tree_of(graph, separator_cap)?;
    debug_assert!(validate_junction_tree(&jt, &graph.inner));
    Ok((
        jt.clusters.iter().map(set_list).collect(),
        jt.edges.iter().map(|e| (e.a, e.b, set_list(&e.separator))).collect(),
    ))
}

/// Region graph of the junction tree of `graph`: `(rows, [(parent, child)])`
/// where `rows[k]` lists the vertex sets of row `k + 1` and regions are
/// numbered row by row.
#[pyfunction]
#[pyo3(signature = (graph, separator_cap = None))]
fn region_graph(graph: &PyGraph, separator_cap: Option<usize>) -> PyResult<RegionLists> {
    let rg = build_region_graph(&tree_of(graph, separator_cap)?);
    let rows = rg
        .rows()
        .iter()
        .map(|row| row.iter().map(|&id| set_list(&rg.region(id).vertices)).collect())
        .collect();
    Ok((rows, rg.directed_edges()))
}

/// Generates a synthetic model: `(precision, true_edges, weak_edges)`.
#[pyfunction]
#[pyo3(signature = (family, p, p1, rho1 = 0.15, rho2 = 0.245, d1 = 8, d2 = 5, seed = 0))]
#[allow(clippy::too_many_arguments)]
fn generate(
    family: &str,
    p: usize,
    p1: usize,
    rho1: f64,
    rho2: f64,
    d1: usize,
    d2: usize,
    seed: u64,
) -> PyResult<(Rows, EdgeList, EdgeList)> {
    let family = match family {
        "chain" => Family::Chain,
        "cycle" => Family::Cycle,
        "hub" => Family::Hub,
        "neighborhood" => Family::Neighborhood,
        other => return Err(PyValueError::new_err(format!("unknown family {other:?}"))),
    };
    let spec = SyntheticSpec {
        family,
        p,
        p1,
        rho1,
        rho2,
        d1,
        d2,
        seed,
    };
    let m = gen_model(&spec).map_err(value_err)?;
    Ok((to_rows(m.model.precision()), edge_list(m.truth.edges()), edge_list(m.weak)))
}

/// Draws `n` samples (rows) from the zero-mean Gaussian with this precision.
#[pyfunction]
fn sample(precision: Vec<Vec<f64>>, n: usize, seed: u64) -> PyResult<Vec<Vec<f64>>> {
    let model = GaussianModel::new(to_matrix(&precision)?).map_err(value_err)?;
    let data = model.sample(n, seed).map_err(value_err)?;
    Ok(to_rows(data.observations()))
}

fn backend(data: Option<Vec<Vec<f64>>>, precision: Option<Vec<Vec<f64>>>) -> PyResult<Backend> {
    match (data, precision) {
        (Some(d), None) => {
            let ds = Dataset::new(to_matrix(&d)?).map_err(value_err)?;
            Backend::from_dataset(&ds).map_err(value_err)
        }
        (None, Some(p)) => Ok(Backend::oracle(&GaussianModel::new(to_matrix(&p)?).map_err(value_err)?)),
        _ => Err(PyValueError::new_err("pass exactly one of data= or precision=")),
    }
}

/// Estimates a graph with the junction-tree framework (or one flat run when
/// `decompose=False`). Passing `precision=` uses exact conditional
/// independences (PC only). Without `h`, H is screened first.
#[pyfunction]
#[pyo3(signature = (
    data = None, precision = None, h = None, algo = "pc", kappa = 1, kappa_screen = 0,
    screen_alpha = 0.25, separator_cap = None, gamma = 0.5, prune = true, decompose = true
))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    data: Option<Vec<Vec<f64>>>,
    precision: Option<Vec<Vec<f64>>>,
    h: Option<PyGraph>,
    algo: &str,
    kappa: usize,
    kappa_screen: usize,
    screen_alpha: f64,
    separator_cap: Option<usize>,
    gamma: f64,
    prune: bool,
    decompose: bool,
) -> PyResult<PyGraph> {
    let algorithm: Algorithm = algo.parse().map_err(PyValueError::new_err)?;
    let backend = backend(data, precision)?;
    let mut cfg = FrameworkConfig::new(algorithm);
    cfg.kappa = kappa;
    cfg.kappa_screen = kappa_screen;
    cfg.screen_test = TestConfig::FisherZ { alpha: screen_alpha };
    cfg.separator_cap = separator_cap.unwrap_or(kappa_screen + 1);
    cfg.ebic.gamma = gamma;
    cfg.prune = prune;
    let h = match h {
        Some(g) => g.inner,
        None => screen_graph_h(&backend, kappa_screen, cfg.screen_test).map_err(value_err)?,
    };
    let inner = if decompose {
        jt_framework(&backend, &h, &cfg).map_err(value_err)?.0
    } else {
        estimate_flat(&backend, &h, &h, &cfg).map_err(value_err)?.0
    };
    Ok(PyGraph { inner })
}

/// Graphical Lasso on a covariance matrix: `(theta, edges)`.
#[pyfunction]
fn glasso(covariance: Vec<Vec<f64>>, lam: f64) -> PyResult<(Rows, EdgeList)> {
    let s = to_matrix(&covariance)?;
    let k = CoreGraph::complete(&(0..s.nrows()).collect());
    let fit = core_glasso(&s, &k, &k, lam).map_err(value_err)?;
    Ok((to_rows(&fit.theta), edge_list(fit.edges)))
}

/// WEDR, FDR, TPR, ED and edge count of an estimate.
#[pyfunction]
fn metrics(
    estimate: &PyGraph,
    truth: &PyGraph,
    weak: Vec<(usize, usize)>,
) -> PyResult<std::collections::BTreeMap<&'static str, f64>> {
    if let Some(&(a, b)) = weak.iter().find(|(a, b)| a == b) {
        return Err(PyValueError::new_err(format!("invalid weak edge ({a}, {b})")));
    }
    let weak: BTreeSet<Edge> = weak.into_iter().map(|(a, b)| Edge::new(a, b)).collect();
    let m = compute_metrics(&estimate.inner, &truth.inner, &weak);
    Ok([
        ("wedr", m.wedr),
        ("fdr", m.fdr),
        ("tpr", m.tpr),
        ("ed", m.ed as f64),
        ("edges", m.edges as f64),
    ]
    .into_iter()
    .collect())
}

#[pymodule]
fn jtugms_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_function(wrap_pyfunction!(junction_tree, m)?)?;
    m.add_function(wrap_pyfunction!(region_graph, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(glasso, m)?)?;
    m.add_function(wrap_pyfunction!(metrics, m)?)?;
    Ok(())
}
