//! Neighborhood-overlap link scores.

use crate::eval::LinkScorer;
use crate::graph::AttributedGraph;

/// Count of shared neighbors, computed by merging sorted adjacency lists.
pub fn common_neighbors(graph: &AttributedGraph, s: usize, t: usize) -> f64 {
    let mut count = 0usize;
    merge_common(graph.neighbors(s), graph.neighbors(t), |_| count += 1);
    count as f64
}

/// Sum of `1 / ln(deg(w))` over shared neighbors `w`. Degree-one neighbors
/// (possible only when `s == t`) are skipped.
pub fn adamic_adar(graph: &AttributedGraph, s: usize, t: usize) -> f64 {
    let mut total = 0.0;
    merge_common(graph.neighbors(s), graph.neighbors(t), |w| {
        let deg = graph.degree(w);
        if deg > 1 {
            total += 1.0 / (deg as f64).ln();
        }
    });
    total
}

fn merge_common(a: &[usize], b: &[usize], mut f: impl FnMut(usize)) {
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                f(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heuristic {
    CommonNeighbors,
    AdamicAdar,
}

impl Heuristic {
    pub const ALL: [Heuristic; 2] = [Heuristic::CommonNeighbors, Heuristic::AdamicAdar];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::CommonNeighbors => "cn",
            Heuristic::AdamicAdar => "aa",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|h| h.name() == name)
    }

    pub fn scorer(self, graph: &AttributedGraph) -> HeuristicScorer<'_> {
        HeuristicScorer { kind: self, graph }
    }
}

/// A heuristic bound to the graph whose neighborhoods it reads.
pub struct HeuristicScorer<'a> {
    kind: Heuristic,
    graph: &'a AttributedGraph,
}

impl LinkScorer for HeuristicScorer<'_> {
    fn score(&self, s: usize, t: usize) -> f64 {
        match self.kind {
            Heuristic::CommonNeighbors => common_neighbors(self.graph, s, t),
            Heuristic::AdamicAdar => adamic_adar(self.graph, s, t),
        }
    }
}
