//! Plain-text dataset files.
//!
//! * edges: one `u v` pair of node ids per line, `#` comments allowed
//! * features: line `i` holds the whitespace-separated features of node `i`
//! * labels: one integer class id per line

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hetlink_autodiff::Tensor;
use log::{info, warn};

use super::attributed::{AttributedGraph, CleanupReport};
use crate::error::{Error, Result};

/// Standard file names inside a dataset directory.
#[derive(Clone, Debug)]
pub struct DatasetFiles {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: Option<PathBuf>,
}

impl DatasetFiles {
    /// `edges.txt`, `features.txt` and, when present, `labels.txt`.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        let labels = dir.join("labels.txt");
        Self {
            edges: dir.join("edges.txt"),
            features: dir.join("features.txt"),
            labels: labels.exists().then_some(labels),
        }
    }
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| {
        std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))
    })?))
}

fn read_features(path: &Path) -> Result<Tensor> {
    let mut data = Vec::new();
    let mut width = None;
    let mut rows = 0;
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let before = data.len();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("non-numeric feature {tok:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, lineno, format!("non-finite feature {tok:?}")));
            }
            data.push(v);
        }
        let count = data.len() - before;
        match width {
            None => width = Some(count),
            Some(w) if w != count => {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected {w} feature values, found {count}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    let cols = width.unwrap_or(0);
    if cols == 0 {
        return Err(parse_err(path, rows.max(1), "feature file has no values"));
    }
    Ok(Tensor::matrix(rows, cols, data)?)
}

fn read_edges(path: &Path, num_nodes: usize) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut parts = trimmed.split_whitespace();
        let mut next = || -> Result<usize> {
            let tok = parts
                .next()
                .ok_or_else(|| parse_err(path, lineno, "expected two node ids"))?;
            tok.parse()
                .map_err(|_| parse_err(path, lineno, format!("bad node id {tok:?}")))
        };
        let (u, v) = (next()?, next()?);
        if parts.next().is_some() {
            return Err(parse_err(path, lineno, "expected exactly two node ids"));
        }
        if u.max(v) >= num_nodes {
            return Err(Error::DimensionMismatch {
                path: path.to_path_buf(),
                line: lineno,
                node: u.max(v),
                num_nodes,
            });
        }
        edges.push((u, v));
    }
    Ok(edges)
}

fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let mut labels = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line?;
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        labels.push(
            tok.parse()
                .map_err(|_| parse_err(path, i + 1, format!("bad label {tok:?}")))?,
        );
    }
    Ok(labels)
}

/// Loads and validates a graph. Directed input is symmetrized; self-loops and
/// duplicate edges are dropped and counted in the returned report.
pub fn load_graph(
    edges_path: &Path,
    features_path: &Path,
    labels_path: Option<&Path>,
) -> Result<(AttributedGraph, CleanupReport)> {
    let features = read_features(features_path)?;
    let num_nodes = features.shape()[0];
    let raw = read_edges(edges_path, num_nodes)?;
    let labels = labels_path.map(read_labels).transpose()?;
    let (graph, report) =
        AttributedGraph::from_edges(raw, Arc::new(features), labels.map(Arc::new))?;
    if report.self_loops > 0 || report.duplicates > 0 {
        warn!(
            "{}: dropped {} self-loops and {} duplicate edges",
            edges_path.display(),
            report.self_loops,
            report.duplicates
        );
    }
    info!(
        "loaded {} nodes, {} edges, {} features",
        graph.num_nodes(),
        graph.num_edges(),
        graph.feature_dim()
    );
    Ok((graph, report))
}

/// Loads `edges.txt`, `features.txt` and optional `labels.txt` from `dir`.
pub fn load_dataset_dir(dir: impl AsRef<Path>) -> Result<(AttributedGraph, CleanupReport)> {
    let files = DatasetFiles::in_dir(dir);
    load_graph(&files.edges, &files.features, files.labels.as_deref())
}

/// Writes a graph in the same layout `load_dataset_dir` reads.
pub fn write_graph(graph: &AttributedGraph, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut out = BufWriter::new(File::create(dir.join("edges.txt"))?);
    for &(u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()?;

    let mut out = BufWriter::new(File::create(dir.join("features.txt"))?);
    let feats = graph.features();
    for r in 0..graph.num_nodes() {
        let row: Vec<String> = feats.row(r).iter().map(f64::to_string).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    out.flush()?;

    if let Some(labels) = graph.labels() {
        let mut out = BufWriter::new(File::create(dir.join("labels.txt"))?);
        for l in labels {
            writeln!(out, "{l}")?;
        }
        out.flush()?;
    }
    Ok(())
}
