//! Reproducible train/validation/test edge splits with sampled non-edges.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::attributed::{AttributedGraph, Edge};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.85,
            valid: 0.05,
            test: 0.10,
        }
    }
}

impl SplitRatios {
    pub fn validate(&self) -> Result<()> {
        let all = [self.train, self.valid, self.test];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::InvalidRatios(format!("{self:?} must all be positive")));
        }
        let total: f64 = all.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidRatios(format!("{self:?} sum to {total}, not 1")));
        }
        Ok(())
    }
}

/// Which held-out part of a split to evaluate on.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Which {
    Valid,
    Test,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::Valid => "valid",
            Which::Test => "test",
        })
    }
}

impl FromStr for Which {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "valid" => Ok(Which::Valid),
            "test" => Ok(Which::Test),
            other => Err(Error::SplitFormat(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSplit {
    pub train_pos: Vec<Edge>,
    pub valid_pos: Vec<Edge>,
    pub test_pos: Vec<Edge>,
    pub valid_neg: Vec<Edge>,
    pub test_neg: Vec<Edge>,
    pub seed: u64,
    pub ratios: SplitRatios,
}

/// Number of items a fraction selects; values within 1e-9 of an integer
/// round to it so that e.g. `100 * 0.05` gives 5.
fn portion(total: usize, fraction: f64) -> usize {
    (total as f64 * fraction + 1e-9).floor() as usize
}

fn canonical(u: usize, v: usize) -> Edge {
    (u.min(v), u.max(v))
}

/// Draws `count` distinct non-edges of `graph` that are not in `taken`.
fn sample_non_edges(
    graph: &AttributedGraph,
    count: usize,
    taken: &mut HashSet<Edge>,
    rng: &mut ChaCha8Rng,
) -> Vec<Edge> {
    let n = graph.num_nodes();
    let mut out = Vec::with_capacity(count);
    let pool = n * n.saturating_sub(1) / 2 - graph.num_edges() - taken.len();
    if count * 2 > pool {
        // dense regime: enumerate the remaining pool instead of rejecting
        let mut candidates: Vec<Edge> = (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|&(u, v)| !graph.has_edge(u, v) && !taken.contains(&(u, v)))
            .collect();
        let (chosen, _) = candidates.partial_shuffle(rng, count);
        out.extend_from_slice(chosen);
        taken.extend(out.iter().copied());
        return out;
    }
    while out.len() < count {
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        if u == v || graph.has_edge(u, v) {
            continue;
        }
        let e = canonical(u, v);
        if taken.insert(e) {
            out.push(e);
        }
    }
    out
}

/// Shuffles the edge set under `seed` and partitions it by `ratios`;
/// rounding remainders go to training. Validation and test negatives are
/// distinct uniform non-edges, `neg_multiplier` per positive.
pub fn split_edges(
    graph: &AttributedGraph,
    ratios: SplitRatios,
    neg_multiplier: usize,
    seed: u64,
) -> Result<EdgeSplit> {
    ratios.validate()?;
    if neg_multiplier == 0 {
        return Err(Error::InvalidRatios("negative multiplier must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = graph.edges().to_vec();
    edges.shuffle(&mut rng);

    let total = edges.len();
    let n_valid = portion(total, ratios.valid);
    let n_test = portion(total, ratios.test);
    let valid_pos = edges[..n_valid].to_vec();
    let test_pos = edges[n_valid..n_valid + n_test].to_vec();
    let train_pos = edges[n_valid + n_test..].to_vec();

    let n = graph.num_nodes();
    let available = n * n.saturating_sub(1) / 2 - graph.num_edges();
    let needed = neg_multiplier * (n_valid + n_test);
    if needed > available {
        return Err(Error::NonEdgePoolExhausted { needed, available });
    }
    let mut taken = HashSet::with_capacity(needed);
    let valid_neg = sample_non_edges(graph, neg_multiplier * n_valid, &mut taken, &mut rng);
    let test_neg = sample_non_edges(graph, neg_multiplier * n_test, &mut taken, &mut rng);

    Ok(EdgeSplit {
        train_pos,
        valid_pos,
        test_pos,
        valid_neg,
        test_neg,
        seed,
        ratios,
    })
}

const SECTIONS: [&str; 5] = ["train_pos", "valid_pos", "valid_neg", "test_pos", "test_neg"];

impl EdgeSplit {
    pub fn positives(&self, which: Which) -> &[Edge] {
        match which {
            Which::Valid => &self.valid_pos,
            Which::Test => &self.test_pos,
        }
    }

    pub fn negatives(&self, which: Which) -> &[Edge] {
        match which {
            Which::Valid => &self.valid_neg,
            Which::Test => &self.test_neg,
        }
    }

    fn section(&self, name: &str) -> &[Edge] {
        match name {
            "train_pos" => &self.train_pos,
            "valid_pos" => &self.valid_pos,
            "valid_neg" => &self.valid_neg,
            "test_pos" => &self.test_pos,
            _ => &self.test_neg,
        }
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# seed {}", self.seed)?;
        let r = self.ratios;
        writeln!(out, "# ratios {} {} {}", r.train, r.valid, r.test)?;
        for name in SECTIONS {
            writeln!(out, "[{name}]")?;
            for (u, v) in self.section(name) {
                writeln!(out, "{u} {v}")?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut split = EdgeSplit {
            train_pos: Vec::new(),
            valid_pos: Vec::new(),
            test_pos: Vec::new(),
            valid_neg: Vec::new(),
            test_neg: Vec::new(),
            seed: 0,
            ratios: SplitRatios::default(),
        };
        let mut current: Option<&str> = None;
        let bad = |line: usize, msg: &str| Error::SplitFormat(format!("line {line}: {msg}"));
        for (i, line) in input.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            let lineno = i + 1;
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let fields: Vec<&str> = rest.split_whitespace().collect();
                match fields.as_slice() {
                    ["seed", s] => split.seed = s.parse().map_err(|_| bad(lineno, "bad seed"))?,
                    ["ratios", a, b, c] => {
                        let p = |x: &str| x.parse::<f64>().map_err(|_| bad(lineno, "bad ratio"));
                        split.ratios = SplitRatios {
                            train: p(a)?,
                            valid: p(b)?,
                            test: p(c)?,
                        };
                    }
                    _ => {}
                }
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                current = Some(
                    SECTIONS
                        .iter()
                        .copied()
                        .find(|s| *s == name)
                        .ok_or_else(|| bad(lineno, "unknown section"))?,
                );
                continue;
            }
            let section = current.ok_or_else(|| bad(lineno, "edge before any section"))?;
            let ids: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(lineno, "bad node id"))?;
            let [u, v] = ids[..] else {
                return Err(bad(lineno, "expected two node ids"));
            };
            let target = match section {
                "train_pos" => &mut split.train_pos,
                "valid_pos" => &mut split.valid_pos,
                "valid_neg" => &mut split.valid_neg,
                "test_pos" => &mut split.test_pos,
                _ => &mut split.test_neg,
            };
            target.push((u, v));
        }
        Ok(split)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }

    /// Checks that every referenced node exists in `graph`.
    pub fn check_against(&self, graph: &AttributedGraph) -> Result<()> {
        let n = graph.num_nodes();
        for name in SECTIONS {
            if let Some(&(u, v)) = self.section(name).iter().find(|(u, v)| *u.max(v) >= n) {
                return Err(Error::SplitFormat(format!(
                    "[{name}] edge ({u}, {v}) out of range for {n} nodes"
                )));
            }
        }
        Ok(())
    }
}
