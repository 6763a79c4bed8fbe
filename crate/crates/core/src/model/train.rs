use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use hetlink_autodiff::{Adam, AdamConfig, Checkpoint, CheckpointHeader, Tape, Tensor};
use log::{debug, info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::{Hyperparams, Reconstruction, Variant};
use super::layers::{
    encode, link_logit, score_pairs, weighted_squared_error, Encoded, FactorNeighborhoods,
    MessageGraph,
};
use super::params::{param_names, ModelParams, ParamVars};
use crate::error::{Error, Result};
use crate::eval::{auc, LinkScorer};
use crate::graph::{sample_training_negatives, AttributedGraph, Edge, EdgeSplit, TrainingNegatives, Which};

/// Scored pairs for one loss evaluation: positives carry target 1 and
/// weight 1, each source's negatives carry target 0 and weight `1 / M`.
#[derive(Clone, Debug)]
pub struct PairBatch {
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
    pub targets: Vec<f64>,
    pub weights: Vec<f64>,
}

impl PairBatch {
    pub fn new(positives: &[Edge], negatives: &TrainingNegatives) -> Self {
        let mut src = Vec::new();
        let mut dst = Vec::new();
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        for &(s, t) in positives {
            src.push(s);
            dst.push(t);
            targets.push(1.0);
            weights.push(1.0);
        }
        for (&(s, _), drawn) in positives.iter().zip(&negatives.targets) {
            let w = 1.0 / drawn.len() as f64;
            for &t in drawn {
                src.push(s);
                dst.push(t);
                targets.push(0.0);
                weights.push(w);
            }
        }
        Self {
            src: src.into(),
            dst: dst.into(),
            targets,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.src.len()
    }

    pub fn is_empty(&self) -> bool {
        self.src.is_empty()
    }
}

/// Records the full forward pass and reconstruction loss on `tape`.
pub fn training_loss(
    tape: &mut Tape,
    params: &ParamVars,
    features: &Arc<Tensor>,
    graph: &MessageGraph,
    hp: &Hyperparams,
    batch: &PairBatch,
) -> Result<(hetlink_autodiff::Var, Encoded)> {
    let enc = encode(tape, features, params, graph, hp)?;
    let scores = score_pairs(
        tape,
        &enc.z,
        &enc.h,
        batch.src.clone(),
        batch.dst.clone(),
        hp.tau,
        hp.variant.reconstruction(),
    )?;
    let loss = weighted_squared_error(
        tape,
        scores.probs,
        Tensor::column(batch.targets.clone()),
        Tensor::column(batch.weights.clone()),
    )?;
    Ok((loss, enc))
}

/// Final factor embeddings, detached from any tape.
#[derive(Clone, Debug)]
pub struct Embeddings {
    /// Per-factor projections, `N x d` each.
    pub z: Vec<Tensor>,
    /// Per-factor propagated embeddings, `N x d` each.
    pub h: Vec<Tensor>,
    pub tau: f64,
    pub reconstruction: Reconstruction,
}

impl Embeddings {
    pub fn logit(&self, s: usize, t: usize) -> f64 {
        link_logit(&self.z, &self.h, s, t, self.tau, self.reconstruction)
    }

    pub fn predict(&self, s: usize, t: usize) -> f64 {
        super::layers::predict_link(&self.z, &self.h, s, t, self.tau, self.reconstruction)
    }

    pub fn score_pairs(&self, pairs: &[Edge]) -> Vec<f64> {
        pairs.iter().map(|&(s, t)| self.predict(s, t)).collect()
    }

    /// Concatenation of all factor embeddings, `N x (K d)`, factor-major columns.
    pub fn h_matrix(&self) -> Tensor {
        let n = self.h.first().map_or(0, |t| t.shape()[0]);
        let width: usize = self.h.iter().map(|t| t.shape()[1]).sum();
        let mut data = Vec::with_capacity(n * width);
        for r in 0..n {
            for hk in &self.h {
                data.extend_from_slice(hk.row(r));
            }
        }
        Tensor::matrix(n, width, data).expect("consistent factor widths")
    }
}

impl LinkScorer for Embeddings {
    fn score(&self, s: usize, t: usize) -> f64 {
        self.predict(s, t)
    }
}

/// Attention and routing read back from one forward pass.
#[derive(Clone, Debug)]
pub struct FactorDiagnostics {
    /// `E x K` importance over message-graph edges.
    pub alpha: Option<Tensor>,
    pub neighborhoods: FactorNeighborhoods,
    /// Normalized attention per factor, aligned with `neighborhoods.members[k]`.
    pub alpha_bar: Vec<Option<Tensor>>,
    /// Per-factor projections.
    pub z: Vec<Tensor>,
}

/// Trainable parameters plus optimizer state.
#[derive(Clone, Debug)]
pub struct ModelState {
    pub hp: Hyperparams,
    pub feature_dim: usize,
    pub params: ModelParams,
    adam: Adam,
}

fn adam_config(hp: &Hyperparams) -> AdamConfig {
    AdamConfig {
        lr: hp.lr,
        weight_decay: hp.weight_decay,
        ..AdamConfig::default()
    }
}

impl ModelState {
    /// Fresh parameters drawn from a generator seeded with `hp.seed`.
    pub fn new(hp: &Hyperparams, feature_dim: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let params = ModelParams::init(hp, feature_dim, &mut rng);
        let adam = Adam::new(adam_config(hp), &params.tensors);
        Self {
            hp: hp.clone(),
            feature_dim,
            params,
            adam,
        }
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.adam.steps()
    }

    /// One optimizer step; returns the loss before the update.
    pub fn train_step(
        &mut self,
        features: &Arc<Tensor>,
        graph: &MessageGraph,
        batch: &PairBatch,
    ) -> Result<f64> {
        let mut tape = Tape::new();
        let vars = self.params.record(&mut tape, true);
        let (loss, _) = training_loss(&mut tape, &vars, features, graph, &self.hp, batch)?;
        let value = tape.value(loss).item();
        if !value.is_finite() {
            return Ok(value);
        }
        let mut grads = tape.backward(loss)?;
        let grads: Vec<Tensor> = vars
            .vars
            .iter()
            .map(|&v| grads.take(v).expect("every parameter has a gradient"))
            .collect();
        self.adam.step(&mut self.params.tensors, &grads)?;
        Ok(value)
    }

    fn forward(&self, graph: &AttributedGraph) -> Result<(Tape, Encoded)> {
        let mut tape = Tape::new();
        let vars = self.params.record(&mut tape, false);
        let mg = MessageGraph::new(graph);
        let enc = encode(&mut tape, graph.features(), &vars, &mg, &self.hp)?;
        Ok((tape, enc))
    }

    /// Embeddings after message passing over `graph`'s edges.
    pub fn embed(&self, graph: &AttributedGraph) -> Result<Embeddings> {
        let (tape, enc) = self.forward(graph)?;
        Ok(Embeddings {
            z: enc.z.iter().map(|&v| tape.value(v).clone()).collect(),
            h: enc.h.iter().map(|&v| tape.value(v).clone()).collect(),
            tau: self.hp.tau,
            reconstruction: self.hp.variant.reconstruction(),
        })
    }

    pub fn diagnostics(&self, graph: &AttributedGraph) -> Result<FactorDiagnostics> {
        let (tape, enc) = self.forward(graph)?;
        Ok(FactorDiagnostics {
            alpha: enc.alpha.map(|a| tape.value(a).clone()),
            alpha_bar: enc
                .attention
                .iter()
                .map(|a| a.weights.map(|w| tape.value(w).clone()))
                .collect(),
            neighborhoods: enc.hoods,
            z: enc.z.iter().map(|&v| tape.value(v).clone()).collect(),
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let hp = &self.hp;
        let mut ckpt = Checkpoint::new(CheckpointHeader {
            factors: hp.factors,
            dim: hp.dim,
            hidden: hp.hidden,
            seed: hp.seed,
        });
        let extra = [
            ("feature_dim", self.feature_dim.to_string()),
            ("tau", hp.tau.to_string()),
            ("beta", hp.beta.to_string()),
            ("neg_m", hp.neg_m.to_string()),
            ("lr", hp.lr.to_string()),
            ("weight_decay", hp.weight_decay.to_string()),
            ("max_epochs", hp.max_epochs.to_string()),
            ("patience", hp.patience.to_string()),
            ("eval_every", hp.eval_every.to_string()),
            ("variant", hp.variant.to_string()),
            ("bias", hp.bias.to_string()),
        ];
        ckpt.extra = extra.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        ckpt.params = self
            .params
            .names
            .iter()
            .cloned()
            .zip(self.params.tensors.iter().cloned())
            .collect();
        ckpt
    }

    /// Rebuilds a model from a checkpoint. Optimizer moments start fresh.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let bad = |msg: String| Error::CheckpointMismatch(msg);
        fn field<T: std::str::FromStr>(ckpt: &Checkpoint, key: &str) -> Result<T> {
            let raw = ckpt
                .extra_value(key)
                .ok_or_else(|| Error::CheckpointMismatch(format!("missing `{key}`")))?;
            raw.parse()
                .map_err(|_| Error::CheckpointMismatch(format!("bad value for `{key}`: {raw}")))
        }
        let variant: Variant = ckpt
            .extra_value("variant")
            .ok_or_else(|| bad("missing `variant`".into()))?
            .parse()?;
        let hp = Hyperparams {
            factors: ckpt.header.factors,
            dim: ckpt.header.dim,
            hidden: ckpt.header.hidden,
            seed: ckpt.header.seed,
            tau: field(ckpt, "tau")?,
            beta: field(ckpt, "beta")?,
            neg_m: field(ckpt, "neg_m")?,
            lr: field(ckpt, "lr")?,
            weight_decay: field(ckpt, "weight_decay")?,
            max_epochs: field(ckpt, "max_epochs")?,
            patience: field(ckpt, "patience")?,
            eval_every: field(ckpt, "eval_every")?,
            bias: field(ckpt, "bias")?,
            variant,
        };
        let feature_dim: usize = field(ckpt, "feature_dim")?;
        let expected = |name: &str| -> Vec<usize> {
            match &name[..2] {
                "W1" => vec![hp.hidden, feature_dim],
                "W2" => vec![hp.dim, hp.hidden],
                "b1" => vec![1, hp.hidden],
                _ => vec![1, hp.dim],
            }
        };
        let mut tensors = Vec::new();
        for name in param_names(hp.factors, hp.bias) {
            let t = ckpt
                .param(&name)
                .ok_or_else(|| bad(format!("missing parameter {name}")))?;
            if t.shape() != expected(&name).as_slice() {
                return Err(bad(format!(
                    "parameter {name} has shape {:?}, expected {:?}",
                    t.shape(),
                    expected(&name)
                )));
            }
            tensors.push(t.clone());
        }
        let params = ModelParams::from_tensors(tensors, hp.factors, hp.bias);
        let adam = Adam::new(adam_config(&hp), &params.tensors);
        Ok(Self {
            hp,
            feature_dim,
            params,
            adam,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(self.to_checkpoint().save(path)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TrainOptions {
    /// Writes wall-clock times into the trace; off gives byte-identical traces
    /// across runs.
    pub record_timing: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { record_timing: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_auc: Option<f64>,
    pub elapsed_ms: u64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters from the best validation check (or the last epoch when no
    /// validation pairs exist).
    pub state: ModelState,
    pub trace: Vec<EpochRecord>,
    pub best_epoch: Option<usize>,
    pub best_valid_auc: Option<f64>,
    /// Graph holding only training edges; use it for message passing at test time.
    pub train_graph: AttributedGraph,
}

impl TrainOutcome {
    pub fn embeddings(&self) -> Result<Embeddings> {
        self.state.embed(&self.train_graph)
    }
}

pub fn train(
    graph: &AttributedGraph,
    split: &EdgeSplit,
    hp: &Hyperparams,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    train_with_observer(graph, split, hp, opts, |_, _, _| Ok(()))
}

/// Trains with early stopping on validation AUC. `observer` runs after
/// every optimizer step with the epoch, current state and training graph.
pub fn train_with_observer<F>(
    graph: &AttributedGraph,
    split: &EdgeSplit,
    hp: &Hyperparams,
    opts: &TrainOptions,
    mut observer: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &ModelState, &AttributedGraph) -> Result<()>,
{
    hp.validate_for_sweep()?;
    let train_graph = graph.with_edges(&split.train_pos)?;
    let mg = MessageGraph::new(&train_graph);
    let positives = train_graph.directed_edges();
    let features = train_graph.features().clone();
    let valid_pos = split.positives(Which::Valid);
    let valid_neg = split.negatives(Which::Valid);
    let can_validate = !valid_pos.is_empty() && !valid_neg.is_empty();

    let mut state = ModelState::new(hp, graph.feature_dim());
    let mut trace = Vec::new();
    let mut best: Option<(f64, usize, ModelParams)> = None;
    let mut stale = 0;
    let start = Instant::now();

    for epoch in 0..hp.max_epochs {
        let negatives =
            sample_training_negatives(&train_graph, &positives, hp.neg_m, hp.seed, epoch as u64);
        let batch = PairBatch::new(&positives, &negatives);
        let loss = state.train_step(&features, &mg, &batch)?;
        if !loss.is_finite() {
            warn!("training diverged at epoch {epoch} after {} recorded epochs", trace.len());
            return Err(Error::Diverged { epoch, loss });
        }
        observer(epoch, &state, &train_graph)?;

        let check = can_validate && (epoch + 1) % hp.eval_every == 0;
        let valid_auc = if check {
            let emb = state.embed(&train_graph)?;
            Some(auc(&emb.score_pairs(valid_pos), &emb.score_pairs(valid_neg))?)
        } else {
            None
        };
        trace.push(EpochRecord {
            epoch,
            train_loss: loss,
            valid_auc,
            elapsed_ms: if opts.record_timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            },
        });
        if let Some(score) = valid_auc {
            debug!("epoch {epoch}: loss {loss:.6} valid auc {score:.4}");
            if best.as_ref().is_none_or(|(b, _, _)| score > *b) {
                best = Some((score, epoch, state.params.clone()));
                stale = 0;
            } else {
                stale += 1;
                if stale >= hp.patience {
                    info!("early stop at epoch {epoch}");
                    break;
                }
            }
        }
    }

    let (best_valid_auc, best_epoch) = match best {
        Some((score, epoch, params)) => {
            state.params = params;
            (Some(score), Some(epoch))
        }
        None => (None, None),
    };
    Ok(TrainOutcome {
        state,
        trace,
        best_epoch,
        best_valid_auc,
        train_graph,
    })
}

/// Writes `epoch,train_loss,valid_auc,elapsed_ms` rows.
pub fn write_trace_csv<W: Write>(trace: &[EpochRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for rec in trace {
        w.serialize(rec)?;
    }
    w.flush()?;
    Ok(())
}
