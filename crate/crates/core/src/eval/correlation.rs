use std::io::Write;

use hetlink_autodiff::Tensor;

use crate::error::{Error, Result};

/// Absolute Pearson correlation between every pair of columns of `h`.
/// Columns with zero variance correlate 0 with everything, themselves included.
pub fn correlation_matrix(h: &Tensor) -> Result<Tensor> {
    let (n, c) = h.dims2()?;
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let mut centered = vec![vec![0.0; n]; c];
    let mut norms = vec![0.0; c];
    for j in 0..c {
        let mean = (0..n).map(|r| h.get(r, j)).sum::<f64>() / n as f64;
        for r in 0..n {
            centered[j][r] = h.get(r, j) - mean;
        }
        norms[j] = centered[j].iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let mut out = vec![0.0; c * c];
    for i in 0..c {
        for j in i..c {
            let v = if norms[i] == 0.0 || norms[j] == 0.0 {
                0.0
            } else if i == j {
                1.0
            } else {
                let cov: f64 = centered[i].iter().zip(&centered[j]).map(|(a, b)| a * b).sum();
                (cov / (norms[i] * norms[j])).abs().min(1.0)
            };
            out[i * c + j] = v;
            out[j * c + i] = v;
        }
    }
    Ok(Tensor::matrix(c, c, out)?)
}

/// Mean correlation inside factor blocks versus across them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockContrast {
    /// Mean over off-diagonal pairs within the same `d x d` block; `None` when `d = 1`.
    pub within: Option<f64>,
    /// Mean over pairs from different blocks; `None` when `K = 1`.
    pub cross: Option<f64>,
}

pub fn block_contrast(corr: &Tensor, factors: usize, dim: usize) -> Result<BlockContrast> {
    let (r, c) = corr.dims2()?;
    if r != c || r != factors * dim {
        return Err(Error::Autodiff(hetlink_autodiff::AutodiffError::ShapeMismatch {
            op: "block_contrast",
            lhs: vec![r, c],
            rhs: vec![factors * dim, factors * dim],
        }));
    }
    let (mut w_sum, mut w_n, mut x_sum, mut x_n) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..r {
        for j in 0..c {
            if i == j {
                continue;
            }
            if i / dim == j / dim {
                w_sum += corr.get(i, j);
                w_n += 1;
            } else {
                x_sum += corr.get(i, j);
                x_n += 1;
            }
        }
    }
    let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
    Ok(BlockContrast {
        within: mean(w_sum, w_n),
        cross: mean(x_sum, x_n),
    })
}

/// Writes the matrix with a leading row-index column.
pub fn write_correlation_csv<W: Write>(corr: &Tensor, out: W) -> Result<()> {
    let (r, c) = corr.dims2()?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string()];
    header.extend((0..c).map(|j| j.to_string()));
    w.write_record(&header)?;
    for i in 0..r {
        let mut rec = vec![i.to_string()];
        rec.extend(corr.row(i).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
