#![allow(dead_code)]

pub mod reference;

use std::collections::HashSet;
use std::sync::Arc;

use hetlink::graph::AttributedGraph;
use hetlink_autodiff::Tensor;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Seven nodes, nine edges, small dense features drawn away from zero.
pub fn toy_graph(seed: u64) -> AttributedGraph {
    let edges = [
        (0, 1),
        (0, 2),
        (1, 2),
        (1, 3),
        (2, 4),
        (3, 4),
        (3, 5),
        (4, 6),
        (5, 6),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = 4;
    let data = (0..7 * f).map(|_| rng.random_range(0.1..0.5)).collect();
    let x = Arc::new(Tensor::matrix(7, f, data).unwrap());
    AttributedGraph::from_edges(edges, x, None).unwrap().0
}

/// A graph whose edges come from `factors` hidden groupings.
///
/// Each node gets one of `groups` types per factor. An edge is planted by
/// picking a factor and joining two random nodes of the same type under it.
/// Features are the one-hot types of every factor followed by `noise_dims`
/// sparse random bits. Labels are drawn independently of everything else, so
/// label homophily sits near `1 / classes`.
pub struct Planted {
    pub graph: AttributedGraph,
    /// `types[k][node]`
    pub types: Vec<Vec<usize>>,
}

pub fn planted_factor_graph(
    nodes: usize,
    factors: usize,
    groups: usize,
    edges_per_factor: usize,
    noise_dims: usize,
    seed: u64,
) -> Planted {
    let classes = 5;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let types: Vec<Vec<usize>> = (0..factors)
        .map(|_| (0..nodes).map(|_| rng.random_range(0..groups)).collect())
        .collect();
    let mut edges = HashSet::new();
    for k in 0..factors {
        let mut members = vec![Vec::new(); groups];
        for (v, &t) in types[k].iter().enumerate() {
            members[t].push(v);
        }
        let mut placed = 0;
        let mut attempts = 0;
        while placed < edges_per_factor && attempts < edges_per_factor * 50 {
            attempts += 1;
            let g = &members[rng.random_range(0..groups)];
            if g.len() < 2 {
                continue;
            }
            let pair: Vec<&usize> = g.choose_multiple(&mut rng, 2).collect();
            let (u, v) = (*pair[0].min(pair[1]), *pair[0].max(pair[1]));
            if edges.insert((u, v)) {
                placed += 1;
            }
        }
    }
    let width = factors * groups + noise_dims;
    let mut x = vec![0.0; nodes * width];
    for v in 0..nodes {
        for k in 0..factors {
            x[v * width + k * groups + types[k][v]] = 1.0;
        }
        for j in 0..noise_dims {
            if rng.random_bool(0.1) {
                x[v * width + factors * groups + j] = 1.0;
            }
        }
    }
    let labels: Vec<usize> = (0..nodes).map(|_| rng.random_range(0..classes)).collect();
    let mut edges: Vec<_> = edges.into_iter().collect();
    edges.sort_unstable();
    let graph = AttributedGraph::from_edges(
        edges,
        Arc::new(Tensor::matrix(nodes, width, x).unwrap()),
        Some(Arc::new(labels)),
    )
    .unwrap()
    .0;
    Planted { graph, types }
}

/// The default smoke-test instance: 240 nodes, 3 factors of 8 groups.
pub fn planted_default(seed: u64) -> Planted {
    planted_factor_graph(240, 3, 8, 160, 16, seed)
}

use hetlink::model::FactorDiagnostics;
use std::collections::HashMap;

/// Checks every structural property of one forward pass: importance rows
/// are distributions, selection follows the lowest-index argmax rule,
/// factor neighborhoods partition each node's neighbors with
/// `A = sum_k A^k`, and attention inside every nonempty factor
/// neighborhood sums to one.
pub fn check_structure(
    diag: &FactorDiagnostics,
    graph: &AttributedGraph,
    selects: bool,
) -> Result<(), String> {
    let hoods = &diag.neighborhoods;
    let k_count = hoods.factors();
    if let Some(alpha) = &diag.alpha {
        for e in 0..alpha.shape()[0] {
            let row = alpha.row(e);
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("alpha row {e} sums to {sum}"));
            }
            if row.iter().any(|&a| a < 0.0) {
                return Err(format!("negative alpha on edge {e}"));
            }
            if selects {
                let mut best = 0;
                for k in 1..k_count {
                    if row[k] > row[best] {
                        best = k;
                    }
                }
                if hoods.selection.as_ref().map(|s| s[e]) != Some(best) {
                    return Err(format!("edge {e} not routed to factor {best}"));
                }
            }
        }
    }

    if selects {
        let mut per_pair: HashMap<(usize, usize), usize> = HashMap::new();
        for members in &hoods.members {
            for &e in members.iter() {
                *per_pair.entry((hoods.src[e], hoods.dst[e])).or_default() += 1;
            }
        }
        let directed = graph.directed_edges();
        if per_pair.len() != directed.len() {
            return Err(format!(
                "factor adjacency covers {} pairs, graph has {}",
                per_pair.len(),
                directed.len()
            ));
        }
        for (s, t) in directed {
            if per_pair.get(&(s, t)) != Some(&1) {
                return Err(format!("sum_k A^k != A at ({s}, {t})"));
            }
        }
        for s in 0..graph.num_nodes() {
            let mut union: Vec<usize> = (0..k_count).flat_map(|k| hoods.neighbors(k, s)).collect();
            union.sort_unstable();
            if union != graph.neighbors(s) {
                return Err(format!("neighborhoods of {s} do not partition N(s)"));
            }
        }
    } else {
        for k in 0..k_count {
            if hoods.members[k].len() != hoods.src.len() {
                return Err(format!("factor {k} does not see the full neighborhood"));
            }
        }
    }

    for (k, weights) in diag.alpha_bar.iter().enumerate() {
        let Some(w) = weights else {
            if !hoods.members[k].is_empty() {
                return Err(format!("factor {k} has edges but no attention"));
            }
            continue;
        };
        let mut sums: HashMap<usize, f64> = HashMap::new();
        for (i, &e) in hoods.members[k].iter().enumerate() {
            let v = w.data()[i];
            if v < 0.0 {
                return Err(format!("negative attention in factor {k}"));
            }
            *sums.entry(hoods.src[e]).or_default() += v;
        }
        if let Some((s, sum)) = sums.iter().find(|(_, &sum)| (sum - 1.0).abs() > 1e-9) {
            return Err(format!("attention of node {s} in factor {k} sums to {sum}"));
        }
    }
    Ok(())
}
