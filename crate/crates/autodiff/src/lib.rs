//! Dense reverse-mode differentiation for small graph models.
//!
//! A [`Tape`] records tensor operations during a forward pass and replays
//! them backwards to produce gradients. [`Adam`] updates parameter tensors,
//! [`glorot_uniform`] initializes them, and [`finite_difference_check`]
//! verifies tape gradients numerically.

pub mod adam;
pub mod checkpoint;
pub mod error;
pub mod gradcheck;
pub mod init;
pub mod tape;
pub mod tensor;

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, CheckpointHeader};
pub use error::{AutodiffError, Result};
pub use gradcheck::{finite_difference_check, relative_error, GradCheckReport};
pub use init::{glorot_bound, glorot_init, glorot_uniform};
pub use tape::{Gradients, Tape, Var};
pub use tensor::Tensor;
