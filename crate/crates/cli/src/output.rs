//! Output naming and config snapshots.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hetlink::eval::{write_metrics_csv, MetricsRow};
use hetlink::model::Hyperparams;
use serde::Serialize;

use crate::config::RunConfig;

pub const MODEL_METHOD: &str = "hetlink";

/// `<out>/<dataset>_<method>_<variant>_seed<seed>.<ext>`
pub fn run_path(out: &Path, dataset: &str, method: &str, variant: &str, seed: u64, ext: &str) -> PathBuf {
    out.join(format!("{dataset}_{method}_{variant}_seed{seed}.{ext}"))
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn write_rows(path: &Path, rows: &[MetricsRow]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    write_metrics_csv(rows, BufWriter::new(file))?;
    Ok(())
}

/// Everything needed to replay a run.
#[derive(Serialize)]
pub struct Snapshot<'a> {
    pub version: &'static str,
    pub command: &'a str,
    pub dataset: String,
    pub dataset_dir: Option<&'a Path>,
    pub split_file: Option<&'a Path>,
    pub checkpoint: Option<&'a Path>,
    pub seeds: Vec<u64>,
    pub hyperparams: &'a Hyperparams,
    pub ratios: [f64; 3],
    pub neg_multiplier: usize,
    pub normalize_features: bool,
    pub record_timing: bool,
}

impl<'a> Snapshot<'a> {
    pub fn new(command: &'a str, cfg: &'a RunConfig, seeds: Vec<u64>) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION"),
            command,
            dataset: cfg.dataset_name(),
            dataset_dir: cfg.dataset_dir.as_deref(),
            split_file: None,
            checkpoint: None,
            seeds,
            hyperparams: &cfg.hp,
            ratios: cfg.ratios,
            neg_multiplier: cfg.neg_multiplier,
            normalize_features: cfg.normalize_features,
            record_timing: cfg.record_timing,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
