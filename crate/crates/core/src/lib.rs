//! Link prediction on attributed graphs with disentangled, factor-routed
//! node embeddings, plus overlap heuristics and evaluation tooling.

pub mod error;
pub mod eval;
pub mod graph;
pub mod heuristics;
pub mod model;

pub use error::{Error, Result};
