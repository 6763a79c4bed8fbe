use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph::{EdgeSplit, Which};

use super::auc::auc;

/// Anything that scores a node pair; higher means more likely linked.
pub trait LinkScorer {
    fn score(&self, s: usize, t: usize) -> f64;

    fn score_pairs(&self, pairs: &[(usize, usize)]) -> Vec<f64> {
        pairs.iter().map(|&(s, t)| self.score(s, t)).collect()
    }
}

/// AUC of `scorer` on one held-out split.
pub fn evaluate<S: LinkScorer + ?Sized>(scorer: &S, split: &EdgeSplit, which: Which) -> Result<f64> {
    auc(
        &scorer.score_pairs(split.positives(which)),
        &scorer.score_pairs(split.negatives(which)),
    )
}

pub const METRICS_HEADER: [&str; 12] = [
    "dataset", "method", "variant", "seed", "K", "d", "tau", "beta", "M", "auc", "split", "wall_ms",
];

/// One line of the metrics table. Model-only columns are blank for heuristics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub dataset: String,
    pub method: String,
    pub variant: String,
    pub seed: u64,
    #[serde(rename = "K")]
    pub factors: Option<usize>,
    #[serde(rename = "d")]
    pub dim: Option<usize>,
    pub tau: Option<f64>,
    pub beta: Option<f64>,
    #[serde(rename = "M")]
    pub neg_m: Option<usize>,
    pub auc: f64,
    pub split: String,
    pub wall_ms: u64,
}

/// Writes the header followed by `rows`; the header is present even when
/// `rows` is empty.
pub fn write_metrics_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricsRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
