//! Factorized link prediction model: per-factor projections, factor-routed
//! message passing and factor-weighted reconstruction.

mod config;
pub mod layers;
mod params;
mod train;

pub use config::{AttentionMode, Hyperparams, Reconstruction, Variant};
pub use layers::{
    encode, predict_link, Encoded, FactorAttention, FactorNeighborhoods, MessageGraph, PairScores,
    LOGIT_CLAMP,
};
pub use params::{ModelParams, ParamVars};
pub use train::{
    train, train_with_observer, training_loss, write_trace_csv, Embeddings, EpochRecord,
    FactorDiagnostics, ModelState, PairBatch, TrainOptions, TrainOutcome,
};
