//! Text serialization: edge lists, numeric CSV matrices, DOT exports, and
//! atomic file writes.
//!
//! Edge lists look like
//!
//! ```text
//! # config_hash=<hex> seed=<u64>
//! p=7
//! 0    1
//! 0    2
//! ```
//!
//! with 0-based vertex ids. Lines starting with `#` and blank lines are
//! ignored by every reader, so all artifacts can carry a provenance header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gaussian::{Dataset, GaussianError, GaussianModel};
use crate::graph::{Graph, Vertex};
use crate::junction_tree::JunctionTree;
use crate::region_graph::RegionGraph;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: GaussianError,
    },
}

/// Config hash and seed stamped into every artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    /// The header line, without a comment marker.
    pub fn tag(&self) -> String {
        format!("config_hash={} seed={}", self.config_hash, self.seed)
    }
}

/// SHA-256 hex digest of the compact JSON form of a config.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    Sha256::digest(json.as_bytes()).iter().fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoError> {
    let wrap = |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(wrap)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(wrap)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        wrap(e)
    })
}

fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// Renders an edge list.
pub fn format_edge_list(g: &Graph, prov: &Provenance) -> String {
    let mut out = format!("# {}\np={}\n", prov.tag(), g.id_bound());
    for e in g.edges() {
        let _ = writeln!(out, "{}\t{}", e.u(), e.v());
    }
    out
}

/// Parses an edge list; `path` only labels error messages.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<Graph, IoError> {
    let err = |line: usize, message: String| IoError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| err(1, "missing `p=<count>` header".into()))?;
    let p: usize = header
        .strip_prefix("p=")
        .ok_or_else(|| err(line, format!("expected `p=<count>`, found `{header}`")))?
        .trim()
        .parse()
        .map_err(|e| err(line, format!("bad vertex count: {e}")))?;
    let mut g = Graph::empty(p);
    for (line, l) in lines {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(err(line, format!("expected two vertex ids, found `{l}`")));
        }
        let parse = |s: &str| -> Result<Vertex, IoError> {
            let v: Vertex = s.parse().map_err(|e| err(line, format!("bad vertex id `{s}`: {e}")))?;
            if v >= p {
                return Err(err(line, format!("vertex {v} out of range for p={p}")));
            }
            Ok(v)
        };
        let (a, b) = (parse(fields[0])?, parse(fields[1])?);
        if a == b {
            return Err(err(line, format!("self-loop on vertex {a}")));
        }
        g.add_edge(a, b);
    }
    Ok(g)
}

pub fn read_edge_list(path: &Path) -> Result<Graph, IoError> {
    parse_edge_list(&read_text(path)?, path)
}

pub fn write_edge_list(path: &Path, g: &Graph, prov: &Provenance) -> Result<(), IoError> {
    write_atomic(path, &format_edge_list(g, prov))
}

/// Renders a matrix as CSV with full round-trip precision.
pub fn format_matrix_csv(m: &DMatrix<f64>, prov: &Provenance) -> String {
    let mut out = format!("# {}\n", prov.tag());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:?}", m[(i, j)])).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parses a numeric CSV. A first row that does not parse as numbers is
/// taken as a header and skipped.
pub fn parse_matrix_csv(text: &str, path: &Path) -> Result<DMatrix<f64>, IoError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IoError::Parse {
            path: path.to_path_buf(),
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parsed: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => {
                if let Some(first) = rows.first() {
                    if first.len() != row.len() {
                        return Err(IoError::Parse {
                            path: path.to_path_buf(),
                            line,
                            message: format!("expected {} columns, found {}", first.len(), row.len()),
                        });
                    }
                }
                rows.push(row);
            }
            Err(_) if k == 0 => continue,
            Err(e) => {
                return Err(IoError::Parse {
                    path: path.to_path_buf(),
                    line,
                    message: format!("non-numeric entry: {e}"),
                })
            }
        }
    }
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(IoError::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "no numeric rows".into(),
        });
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// Loads observations (rows) × variables (columns).
pub fn read_dataset(path: &Path) -> Result<Dataset, IoError> {
    let m = parse_matrix_csv(&read_text(path)?, path)?;
    Dataset::new(m).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

/// Loads a precision matrix and checks it is symmetric positive definite.
pub fn read_precision(path: &Path) -> Result<GaussianModel, IoError> {
    let m = parse_matrix_csv(&read_text(path)?, path)?;
    GaussianModel::new(m).map_err(|source| IoError::Invalid {
        path: path.to_path_buf(),
        source,
    })
}

fn dot_header(kind: &str, name: &str, prov: Option<&Provenance>) -> String {
    let mut out = String::new();
    if let Some(p) = prov {
        let _ = writeln!(out, "// {}", p.tag());
    }
    let _ = writeln!(out, "{kind} \"{name}\" {{");
    out
}

fn set_label(vs: &crate::graph::VertexSet) -> String {
    let items: Vec<String> = vs.iter().map(ToString::to_string).collect();
    format!("{{{}}}", items.join(","))
}

/// An undirected graph in DOT.
pub fn graph_to_dot(g: &Graph, name: &str, prov: Option<&Provenance>) -> String {
    let mut out = dot_header("graph", name, prov);
    for v in g.vertices() {
        let _ = writeln!(out, "  {v};");
    }
    for e in g.edges() {
        let _ = writeln!(out, "  {} -- {};", e.u(), e.v());
    }
    out.push_str("}\n");
    out
}

/// A junction tree in DOT: one node per cluster, edges labeled by separators.
pub fn junction_tree_to_dot(jt: &JunctionTree, name: &str, prov: Option<&Provenance>) -> String {
    let mut out = dot_header("graph", name, prov);
    for (k, c) in jt.clusters.iter().enumerate() {
        let _ = writeln!(out, "  c{k} [shape=box, label=\"{}\"];", set_label(c));
    }
    for e in &jt.edges {
        let _ = writeln!(out, "  c{} -- c{} [label=\"{}\"];", e.a, e.b, set_label(&e.separator));
    }
    out.push_str("}\n");
    out
}

/// A region graph in DOT with one `rank=same` group per row.
pub fn region_graph_to_dot(rg: &RegionGraph, name: &str, prov: Option<&Provenance>) -> String {
    let mut out = dot_header("digraph", name, prov);
    for (k, row) in rg.rows().iter().enumerate() {
        let _ = writeln!(out, "  subgraph row{} {{\n    rank=same;", k + 1);
        for &id in row {
            let _ = writeln!(out, "    r{id} [shape=box, label=\"{}\"];", set_label(&rg.region(id).vertices));
        }
        out.push_str("  }\n");
    }
    for (a, b) in rg.directed_edges() {
        let _ = writeln!(out, "  r{a} -> r{b};");
    }
    out.push_str("}\n");
    out
}
