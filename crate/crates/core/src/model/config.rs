use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pipeline variants used for ablations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Importance-weighted attention, factor selection, weighted reconstruction.
    #[default]
    Full,
    /// Uniform attention within each factor neighborhood and unit factor weights.
    NoAlpha,
    /// Every factor aggregates over the full neighborhood.
    NoSelection,
    /// Equal-weight sum of factor similarities for reconstruction.
    VanillaRecon,
}

/// How attention weights inside a factor neighborhood are formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttentionMode {
    Importance,
    Uniform,
}

/// How per-factor similarities are combined into a link logit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reconstruction {
    /// `sum_k exp(z_s,k . z_t,k / tau) * (h_s,k . h_t,k)`
    Weighted,
    /// `sum_k h_s,k . h_t,k`
    Equal,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Full,
        Variant::NoAlpha,
        Variant::NoSelection,
        Variant::VanillaRecon,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoAlpha => "no-alpha",
            Variant::NoSelection => "no-selection",
            Variant::VanillaRecon => "vanilla-recon",
        }
    }

    pub fn selects_factors(self) -> bool {
        self != Variant::NoSelection
    }

    pub fn attention(self) -> AttentionMode {
        match self {
            Variant::NoAlpha => AttentionMode::Uniform,
            _ => AttentionMode::Importance,
        }
    }

    pub fn reconstruction(self) -> Reconstruction {
        match self {
            Variant::NoAlpha | Variant::VanillaRecon => Reconstruction::Equal,
            _ => Reconstruction::Weighted,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Number of latent factors K.
    pub factors: usize,
    /// Embedding width per factor.
    pub dim: usize,
    /// Hidden width of each factor's projection MLP.
    pub hidden: usize,
    /// Softmax temperature for factor importance and reconstruction weights.
    pub tau: f64,
    /// Share of a node's own projection kept during message passing.
    pub beta: f64,
    /// Training negatives per positive.
    pub neg_m: usize,
    pub lr: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    /// Validation checks without improvement before stopping.
    pub patience: usize,
    /// Epochs between validation checks.
    pub eval_every: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Adds bias vectors to both projection layers.
    pub bias: bool,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            factors: 5,
            dim: 32,
            hidden: 64,
            tau: 1.0,
            beta: 0.5,
            neg_m: 5,
            lr: 1e-3,
            weight_decay: 5e-4,
            max_epochs: 2000,
            patience: 20,
            eval_every: 10,
            seed: 0,
            variant: Variant::Full,
            bias: false,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        self.check(false)
    }

    /// As [`validate`](Self::validate) but also admits `beta = 0`, the
    /// pure-aggregation end point of a teleport sweep.
    pub fn validate_for_sweep(&self) -> Result<()> {
        self.check(true)
    }

    fn check(&self, zero_beta_ok: bool) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidHyperparams(msg));
        if self.factors == 0 || self.dim == 0 || self.hidden == 0 {
            return fail(format!(
                "factors, dim and hidden must be positive (got {}, {}, {})",
                self.factors, self.dim, self.hidden
            ));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return fail(format!("tau must be positive, got {}", self.tau));
        }
        let beta_ok = if zero_beta_ok {
            (0.0..=1.0).contains(&self.beta)
        } else {
            self.beta > 0.0 && self.beta <= 1.0
        };
        if !beta_ok {
            return fail(format!("beta must lie in (0, 1], got {}", self.beta));
        }
        if self.neg_m == 0 {
            return fail("neg_m must be at least 1".into());
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return fail(format!("lr must be non-negative, got {}", self.lr));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return fail(format!("weight_decay must be non-negative, got {}", self.weight_decay));
        }
        if self.eval_every == 0 {
            return fail("eval_every must be at least 1".into());
        }
        Ok(())
    }
}
