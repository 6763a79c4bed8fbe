use hetlink_autodiff::{glorot_uniform, Tape, Tensor, Var};
use rand::Rng;

use super::config::Hyperparams;

/// Flat, ordered parameter list: for each factor `k`, `W1_k` (hidden x F),
/// `W2_k` (d x hidden) and, with biases on, `b1_k` (1 x hidden), `b2_k` (1 x d).
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub names: Vec<String>,
    pub tensors: Vec<Tensor>,
    factors: usize,
    bias: bool,
}

fn stride(bias: bool) -> usize {
    if bias {
        4
    } else {
        2
    }
}

pub(crate) fn param_names(factors: usize, bias: bool) -> Vec<String> {
    (0..factors)
        .flat_map(|k| {
            let mut names = vec![format!("W1_{k}"), format!("W2_{k}")];
            if bias {
                names.push(format!("b1_{k}"));
                names.push(format!("b2_{k}"));
            }
            names
        })
        .collect()
}

impl ModelParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(hp: &Hyperparams, feature_dim: usize, rng: &mut R) -> Self {
        let mut tensors = Vec::new();
        for _ in 0..hp.factors {
            tensors.push(glorot_uniform(hp.hidden, feature_dim, rng));
            tensors.push(glorot_uniform(hp.dim, hp.hidden, rng));
            if hp.bias {
                tensors.push(Tensor::zeros(&[1, hp.hidden]));
                tensors.push(Tensor::zeros(&[1, hp.dim]));
            }
        }
        Self {
            names: param_names(hp.factors, hp.bias),
            tensors,
            factors: hp.factors,
            bias: hp.bias,
        }
    }

    /// Wraps tensors already in canonical order.
    ///
    /// # Panics
    /// If the count does not match `factors` and `bias`.
    pub fn from_tensors(tensors: Vec<Tensor>, factors: usize, bias: bool) -> Self {
        assert_eq!(tensors.len(), factors * stride(bias), "parameter count");
        Self {
            names: param_names(factors, bias),
            tensors,
            factors,
            bias,
        }
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn w1(&self, k: usize) -> &Tensor {
        &self.tensors[k * stride(self.bias)]
    }

    pub fn w2(&self, k: usize) -> &Tensor {
        &self.tensors[k * stride(self.bias) + 1]
    }

    /// Records every tensor on `tape`, as trainable leaves or as constants.
    pub fn record(&self, tape: &mut Tape, trainable: bool) -> ParamVars {
        let vars = self
            .tensors
            .iter()
            .map(|t| {
                if trainable {
                    tape.param(t.clone())
                } else {
                    tape.constant(t.clone())
                }
            })
            .collect();
        ParamVars {
            vars,
            factors: self.factors,
            bias: self.bias,
        }
    }
}

/// Tape handles for a [`ModelParams`] list, in the same order.
#[derive(Clone, Debug)]
pub struct ParamVars {
    pub vars: Vec<Var>,
    factors: usize,
    bias: bool,
}

impl ParamVars {
    pub fn new(vars: Vec<Var>, factors: usize, bias: bool) -> Self {
        assert_eq!(vars.len(), factors * stride(bias), "parameter count");
        Self { vars, factors, bias }
    }

    pub fn factors(&self) -> usize {
        self.factors
    }

    pub fn w1(&self, k: usize) -> Var {
        self.vars[k * stride(self.bias)]
    }

    pub fn w2(&self, k: usize) -> Var {
        self.vars[k * stride(self.bias) + 1]
    }

    pub fn b1(&self, k: usize) -> Option<Var> {
        self.bias.then(|| self.vars[k * 4 + 2])
    }

    pub fn b2(&self, k: usize) -> Option<Var> {
        self.bias.then(|| self.vars[k * 4 + 3])
    }
}
