use std::sync::Arc;

use hetlink_autodiff::Tensor;

use crate::error::{Error, Result};

/// Undirected edge in canonical `(u, v)` form with `u < v`.
pub type Edge = (usize, usize);

/// What was discarded while canonicalizing raw input edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CleanupReport {
    pub self_loops: usize,
    pub duplicates: usize,
}

/// Undirected simple graph with a dense `N x F` feature matrix.
#[derive(Clone, Debug)]
pub struct AttributedGraph {
    num_nodes: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<usize>>,
    features: Arc<Tensor>,
    labels: Option<Arc<Vec<usize>>>,
}

impl AttributedGraph {
    /// Symmetrizes, drops self-loops and duplicates. The node count is the
    /// number of feature rows.
    pub fn from_edges(
        raw_edges: impl IntoIterator<Item = (usize, usize)>,
        features: Arc<Tensor>,
        labels: Option<Arc<Vec<usize>>>,
    ) -> Result<(Self, CleanupReport)> {
        let (num_nodes, _) = features.dims2()?;
        if let Some(l) = &labels {
            if l.len() != num_nodes {
                return Err(Error::LabelCount {
                    expected: num_nodes,
                    found: l.len(),
                });
            }
        }
        let mut report = CleanupReport::default();
        let mut edges = Vec::new();
        for (a, b) in raw_edges {
            let bad = a.max(b);
            if bad >= num_nodes {
                return Err(Error::DimensionMismatch {
                    path: "<edges>".into(),
                    line: 0,
                    node: bad,
                    num_nodes,
                });
            }
            if a == b {
                report.self_loops += 1;
                continue;
            }
            edges.push((a.min(b), a.max(b)));
        }
        let before = edges.len();
        edges.sort_unstable();
        edges.dedup();
        report.duplicates = before - edges.len();
        Ok((Self::from_canonical(num_nodes, edges, features, labels), report))
    }

    /// `edges` must already be canonical, sorted and unique.
    fn from_canonical(
        num_nodes: usize,
        edges: Vec<Edge>,
        features: Arc<Tensor>,
        labels: Option<Arc<Vec<usize>>>,
    ) -> Self {
        let mut adjacency = vec![Vec::new(); num_nodes];
        for &(u, v) in &edges {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            num_nodes,
            edges,
            adjacency,
            features,
            labels,
        }
    }

    /// Same nodes, features and labels with a different edge set, e.g. the
    /// training subgraph of a split.
    pub fn with_edges(&self, edges: &[Edge]) -> Result<Self> {
        let (g, _) = Self::from_edges(
            edges.iter().copied(),
            Arc::clone(&self.features),
            self.labels.clone(),
        )?;
        Ok(g)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adjacency[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adjacency[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u].binary_search(&v).is_ok()
    }

    pub fn features(&self) -> &Arc<Tensor> {
        &self.features
    }

    pub fn feature_dim(&self) -> usize {
        self.features.shape()[1]
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref().map(Vec::as_slice)
    }

    /// Both orientations of every edge, ordered by source then target.
    pub fn directed_edges(&self) -> Vec<Edge> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(s, list)| list.iter().map(move |&t| (s, t)))
            .collect()
    }

    /// Replaces the feature matrix with its row-L2-normalized version.
    pub fn normalize_features(&mut self) -> Result<()> {
        self.features = Arc::new(self.features.l2_normalize_rows()?);
        Ok(())
    }
}

/// Fraction of edges whose endpoints share a label. Graphs without edges give 0.
pub fn edge_homophily(graph: &AttributedGraph) -> Result<f64> {
    let labels = graph.labels().ok_or(Error::MissingLabels)?;
    if graph.num_edges() == 0 {
        return Ok(0.0);
    }
    let same = graph
        .edges()
        .iter()
        .filter(|&&(u, v)| labels[u] == labels[v])
        .count();
    Ok(same as f64 / graph.num_edges() as f64)
}
