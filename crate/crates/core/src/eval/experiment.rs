use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{split_edges, AttributedGraph, EdgeSplit, SplitRatios, Which};
use crate::heuristics::Heuristic;
use crate::model::{train, Hyperparams, TrainOptions};

use super::metrics::evaluate;

/// Settings shared by every run of a repeated experiment.
#[derive(Clone, Copy, Debug)]
pub struct ExperimentConfig {
    pub ratios: SplitRatios,
    /// Held-out negatives per held-out positive.
    pub neg_multiplier: usize,
    pub train: TrainOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            ratios: SplitRatios::default(),
            neg_multiplier: 5,
            train: TrainOptions::default(),
        }
    }
}

/// Outcome of one seed. The seed drives both the edge split and model initialization.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub valid_auc: Option<f64>,
    pub test_auc: f64,
    pub best_epoch: Option<usize>,
    pub epochs_run: usize,
    pub wall_ms: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepeatSummary {
    pub runs: Vec<SeedRun>,
    pub mean: f64,
    /// Sample standard deviation; 0 for a single run.
    pub std: f64,
}

impl RepeatSummary {
    fn from_runs(runs: Vec<SeedRun>) -> Self {
        let aucs: Vec<f64> = runs.iter().map(|r| r.test_auc).collect();
        let (mean, std) = mean_std(&aucs);
        Self { runs, mean, std }
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

fn elapsed_ms(start: Instant, cfg: &ExperimentConfig) -> u64 {
    if cfg.train.record_timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

/// Splits with `seed`, trains, and scores the test split.
pub fn run_seed(
    graph: &AttributedGraph,
    hp: &Hyperparams,
    seed: u64,
    cfg: &ExperimentConfig,
) -> Result<SeedRun> {
    let start = Instant::now();
    let split = split_edges(graph, cfg.ratios, cfg.neg_multiplier, seed)?;
    run_on_split(graph, &split, &Hyperparams { seed, ..hp.clone() }, cfg, start)
}

fn run_on_split(
    graph: &AttributedGraph,
    split: &EdgeSplit,
    hp: &Hyperparams,
    cfg: &ExperimentConfig,
    start: Instant,
) -> Result<SeedRun> {
    let outcome = train(graph, split, hp, &cfg.train)?;
    let emb = outcome.embeddings()?;
    let test_auc = evaluate(&emb, split, Which::Test)?;
    Ok(SeedRun {
        seed: hp.seed,
        valid_auc: outcome.best_valid_auc,
        test_auc,
        best_epoch: outcome.best_epoch,
        epochs_run: outcome.trace.len(),
        wall_ms: elapsed_ms(start, cfg),
    })
}

/// Trains one model per seed in parallel; results keep the order of `seeds`.
pub fn repeat_experiment(
    graph: &AttributedGraph,
    hp: &Hyperparams,
    seeds: &[u64],
    cfg: &ExperimentConfig,
) -> Result<RepeatSummary> {
    let runs = seeds
        .par_iter()
        .map(|&seed| run_seed(graph, hp, seed, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(RepeatSummary::from_runs(runs))
}

/// Scores each seed's test split with a heuristic over that seed's training edges.
pub fn repeat_heuristic(
    graph: &AttributedGraph,
    heuristic: Heuristic,
    seeds: &[u64],
    cfg: &ExperimentConfig,
) -> Result<RepeatSummary> {
    let runs = seeds
        .iter()
        .map(|&seed| {
            let start = Instant::now();
            let split = split_edges(graph, cfg.ratios, cfg.neg_multiplier, seed)?;
            let train_graph = graph.with_edges(&split.train_pos)?;
            let scorer = heuristic.scorer(&train_graph);
            Ok(SeedRun {
                seed,
                valid_auc: Some(evaluate(&scorer, &split, Which::Valid)?),
                test_auc: evaluate(&scorer, &split, Which::Test)?,
                best_epoch: None,
                epochs_run: 0,
                wall_ms: elapsed_ms(start, cfg),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RepeatSummary::from_runs(runs))
}

/// Values for a one-dimensional hyperparameter sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum SweepValues {
    Factors(Vec<usize>),
    Beta(Vec<f64>),
    Tau(Vec<f64>),
}

impl SweepValues {
    pub fn axis(&self) -> &'static str {
        match self {
            SweepValues::Factors(_) => "K",
            SweepValues::Beta(_) => "beta",
            SweepValues::Tau(_) => "tau",
        }
    }

    fn points(&self, base: &Hyperparams) -> Vec<(f64, Hyperparams)> {
        match self {
            SweepValues::Factors(v) => v
                .iter()
                .map(|&k| (k as f64, Hyperparams { factors: k, ..base.clone() }))
                .collect(),
            SweepValues::Beta(v) => v
                .iter()
                .map(|&b| (b, Hyperparams { beta: b, ..base.clone() }))
                .collect(),
            SweepValues::Tau(v) => v
                .iter()
                .map(|&t| (t, Hyperparams { tau: t, ..base.clone() }))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub axis: &'static str,
    pub value: f64,
    pub summary: RepeatSummary,
}

/// Repeats the experiment at every sweep value. `beta = 0` is accepted here.
pub fn sweep(
    graph: &AttributedGraph,
    base: &Hyperparams,
    values: &SweepValues,
    seeds: &[u64],
    cfg: &ExperimentConfig,
) -> Result<Vec<SweepPoint>> {
    let points = values.points(base);
    if points.is_empty() {
        return Err(Error::InvalidHyperparams("sweep needs at least one value".into()));
    }
    for (_, hp) in &points {
        hp.validate_for_sweep()?;
    }
    points
        .into_iter()
        .map(|(value, hp)| {
            Ok(SweepPoint {
                axis: values.axis(),
                value,
                summary: repeat_experiment(graph, &hp, seeds, cfg)?,
            })
        })
        .collect()
}

#[derive(Serialize)]
struct SweepCsvRow {
    axis: &'static str,
    value: f64,
    mean_auc: f64,
    std_auc: f64,
    seeds: usize,
}

/// Writes `axis,value,mean_auc,std_auc,seeds` rows.
pub fn write_sweep_csv<W: Write>(points: &[SweepPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(SweepCsvRow {
            axis: p.axis,
            value: p.value,
            mean_auc: p.summary.mean,
            std_auc: p.summary.std,
            seeds: p.summary.runs.len(),
        })?;
    }
    w.flush()?;
    Ok(())
}
