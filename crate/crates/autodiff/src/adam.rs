//! Adam with bias correction and coupled (L2-style) weight decay.

use crate::error::{AutodiffError, Result};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

/// Optimizer moments for a fixed, ordered list of parameters.
#[derive(Clone, Debug)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &[Tensor]) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn moments(&self) -> (&[Tensor], &[Tensor]) {
        (&self.first, &self.second)
    }

    /// One update. `grad += weight_decay * param` is applied before the moment
    /// update. A non-finite gradient leaves parameters and state untouched.
    pub fn step(&mut self, params: &mut [Tensor], grads: &[Tensor]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != params.len() {
            return Err(AutodiffError::ShapeMismatch {
                op: "adam_step",
                lhs: vec![self.first.len()],
                rhs: vec![params.len(), grads.len()],
            });
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.shape() != g.shape() || p.shape() != self.first[i].shape() {
                return Err(AutodiffError::ShapeMismatch {
                    op: "adam_step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            if !g.all_finite() {
                return Err(AutodiffError::NonFinite(format!("gradient of parameter {i}")));
            }
        }

        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.config;
        let t = self.step as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);

        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            let pd = p.data_mut();
            for (j, &gj) in g.data().iter().enumerate() {
                let grad = gj + weight_decay * pd[j];
                let mj = &mut m.data_mut()[j];
                *mj = beta1 * *mj + (1.0 - beta1) * grad;
                let vj = &mut v.data_mut()[j];
                *vj = beta2 * *vj + (1.0 - beta2) * grad * grad;
                if lr != 0.0 {
                    let m_hat = m.data()[j] / c1;
                    let v_hat = v.data()[j] / c2;
                    pd[j] -= lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(lr: f64, wd: f64) -> AdamConfig {
        AdamConfig {
            lr,
            weight_decay: wd,
            ..AdamConfig::default()
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = vec![Tensor::column(vec![1.5, -2.0])];
        let before = p.clone();
        let mut adam = Adam::new(cfg(0.1, 0.0), &p);
        adam.step(&mut p, &[Tensor::zeros(&[2, 1])]).unwrap();
        assert_eq!(p, before);
        assert_eq!(adam.steps(), 1);
    }

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
        let mut p = vec![Tensor::column(vec![0.0, 0.0])];
        let mut adam = Adam::new(cfg(0.01, 0.0), &p);
        adam.step(&mut p, &[Tensor::column(vec![3.0, -0.5])]).unwrap();
        let expected = [-0.01 * 3.0 / (3.0 + 1e-8), 0.01 * 0.5 / (0.5 + 1e-8)];
        for (got, want) in p[0].data().iter().zip(expected) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn minimizes_shifted_quadratic() {
        let mut p = vec![Tensor::scalar(0.0)];
        let mut adam = Adam::new(cfg(0.1, 0.0), &p);
        for _ in 0..100 {
            let w = p[0].item();
            adam.step(&mut p, &[Tensor::scalar(2.0 * (w - 3.0))]).unwrap();
        }
        assert!((p[0].item() - 3.0).abs() < 0.5, "w = {}", p[0].item());
    }

    #[test]
    fn zero_learning_rate_is_bit_exact() {
        let mut p = vec![Tensor::column(vec![0.1, -7.25, 3.0e-9])];
        let before = p.clone();
        let mut adam = Adam::new(cfg(0.0, 5e-4), &p);
        for k in 0..10 {
            let g = Tensor::column(vec![k as f64, -1.0, 1e6]);
            adam.step(&mut p, &[g]).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(adam.steps(), 10);
    }

    #[test]
    fn non_finite_gradient_aborts_step() {
        let mut p = vec![Tensor::scalar(1.0)];
        let mut adam = Adam::new(cfg(0.1, 0.0), &p);
        let err = adam.step(&mut p, &[Tensor::scalar(f64::NAN)]);
        assert!(matches!(err, Err(AutodiffError::NonFinite(_))));
        assert_eq!(adam.steps(), 0);
        assert_eq!(p[0].item(), 1.0);
    }

    #[test]
    fn weight_decay_pulls_towards_zero() {
        let mut p = vec![Tensor::scalar(2.0)];
        let mut adam = Adam::new(cfg(0.01, 0.5), &p);
        adam.step(&mut p, &[Tensor::scalar(0.0)]).unwrap();
        assert!(p[0].item() < 2.0);
    }
}
