//! Central finite-difference verification of tape gradients.

use crate::error::AutodiffError;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Largest `|analytic - numeric| / max(|analytic|, |numeric|, 1e-8)`.
    pub max_rel_error: f64,
    /// `(parameter index, element index)` of the largest error.
    pub worst: Option<(usize, usize)>,
    pub analytic: Vec<Tensor>,
    pub numeric: Vec<Tensor>,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

fn evaluate<F, E>(loss_fn: &mut F, params: &[Tensor]) -> Result<(Tape, Vec<Var>, Var), E>
where
    F: FnMut(&mut Tape, &[Var]) -> Result<Var, E>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param(p.clone())).collect();
    let loss = loss_fn(&mut tape, &vars)?;
    Ok((tape, vars, loss))
}

/// Compares tape gradients of `loss_fn` against `(f(θ+h) - f(θ-h)) / 2h`
/// for every element of every parameter.
pub fn finite_difference_check<F, E>(
    mut loss_fn: F,
    params: &[Tensor],
    h: f64,
) -> Result<GradCheckReport, E>
where
    F: FnMut(&mut Tape, &[Var]) -> Result<Var, E>,
    E: From<AutodiffError>,
{
    assert!(h > 0.0, "finite difference step must be positive");
    let (tape, vars, loss) = evaluate(&mut loss_fn, params)?;
    let grads = tape.backward(loss)?;
    let analytic: Vec<Tensor> = vars
        .iter()
        .map(|&v| grads.get(v).cloned().expect("param gradient"))
        .collect();
    drop(tape);

    let mut numeric = Vec::with_capacity(params.len());
    let mut max_rel_error = 0.0f64;
    let mut worst = None;
    let mut probe = params.to_vec();
    for (pi, param) in params.iter().enumerate() {
        let mut num = Tensor::zeros(param.shape());
        for j in 0..param.len() {
            let original = param.data()[j];
            probe[pi].data_mut()[j] = original + h;
            let (t, _, l) = evaluate(&mut loss_fn, &probe)?;
            let plus = t.value(l).item();
            probe[pi].data_mut()[j] = original - h;
            let (t, _, l) = evaluate(&mut loss_fn, &probe)?;
            let minus = t.value(l).item();
            probe[pi].data_mut()[j] = original;

            let estimate = (plus - minus) / (2.0 * h);
            num.data_mut()[j] = estimate;
            let err = relative_error(analytic[pi].data()[j], estimate);
            if err > max_rel_error || worst.is_none() {
                max_rel_error = max_rel_error.max(err);
                worst = Some((pi, j));
            }
        }
        numeric.push(num);
    }
    Ok(GradCheckReport {
        max_rel_error,
        worst,
        analytic,
        numeric,
    })
}
