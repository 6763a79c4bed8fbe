//! Attributed undirected graphs, file loading, edge splits and negative sampling.

mod attributed;
mod io;
mod negatives;
mod split;

pub use attributed::{edge_homophily, AttributedGraph, CleanupReport, Edge};
pub use io::{load_dataset_dir, load_graph, write_graph, DatasetFiles};
pub use negatives::{sample_training_negatives, TrainingNegatives};
pub use split::{split_edges, EdgeSplit, SplitRatios, Which};
