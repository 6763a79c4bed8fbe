//! Ranking metrics, repeated-seed experiments and embedding diagnostics.

mod auc;
mod correlation;
mod experiment;
mod metrics;

pub use auc::auc;
pub use correlation::{block_contrast, correlation_matrix, write_correlation_csv, BlockContrast};
pub use experiment::{
    mean_std, repeat_experiment, repeat_heuristic, run_seed, sweep, write_sweep_csv,
    ExperimentConfig, RepeatSummary, SeedRun, SweepPoint, SweepValues,
};
pub use metrics::{
    evaluate, read_metrics_csv, write_metrics_csv, LinkScorer, MetricsRow, METRICS_HEADER,
};
