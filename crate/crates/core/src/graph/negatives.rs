use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::attributed::{AttributedGraph, Edge};

/// Corrupted targets for each training positive `(s, t)`: pairs `(s, m)`
/// with `m != s` and no edge `s - m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainingNegatives {
    /// `targets[i]` holds the `m` nodes drawn for `positives[i]`; empty when
    /// the source had no valid partner.
    pub targets: Vec<Vec<usize>>,
    pub skipped: usize,
}

/// Draws `m` uniform non-neighbors of each positive's source. The generator
/// is keyed by `(seed, epoch)` so every epoch gets a fresh, reproducible set.
pub fn sample_training_negatives(
    graph: &AttributedGraph,
    positives: &[Edge],
    m: usize,
    seed: u64,
    epoch: u64,
) -> TrainingNegatives {
    assert!(m >= 1, "need at least one negative per positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(epoch.wrapping_add(1));
    let n = graph.num_nodes();
    let mut skipped = 0;
    let targets = positives
        .iter()
        .map(|&(s, _)| {
            if graph.degree(s) + 1 >= n {
                skipped += 1;
                return Vec::new();
            }
            let mut drawn = Vec::with_capacity(m);
            while drawn.len() < m {
                let cand = rng.random_range(0..n);
                if cand != s && !graph.has_edge(s, cand) {
                    drawn.push(cand);
                }
            }
            drawn
        })
        .collect();
    if skipped > 0 {
        warn!("{skipped} positives skipped: source adjacent to every other node");
    }
    TrainingNegatives { targets, skipped }
}
