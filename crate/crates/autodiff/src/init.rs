use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::tensor::Tensor;

/// Half-width of the Glorot/Xavier uniform interval for a `rows x cols` weight.
pub fn glorot_bound(rows: usize, cols: usize) -> f64 {
    (6.0 / (rows + cols) as f64).sqrt()
}

/// Glorot-uniform matrix drawn from a caller-owned generator.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    assert!(rows > 0 && cols > 0, "glorot_uniform needs positive dimensions");
    let bound = glorot_bound(rows, cols);
    let data = (0..rows * cols)
        .map(|_| rng.random_range(-bound..=bound))
        .collect();
    Tensor::matrix(rows, cols, data).expect("length matches")
}

/// Glorot-uniform matrix from a fresh generator seeded with `seed`.
pub fn glorot_init(shape: (usize, usize), seed: u64) -> Tensor {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    glorot_uniform(shape.0, shape.1, &mut rng)
}
