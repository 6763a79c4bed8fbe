//! Differentiable building blocks of the factorized encoder and decoder.
//!
//! Every function records onto a caller-owned [`Tape`]. Factor selection is
//! the one step that runs off the tape: it reads attention values and emits
//! integer neighborhoods that later ops treat as constants.

use std::sync::Arc;

use hetlink_autodiff::{Tape, Tensor, Var};
use log::warn;

use super::config::{AttentionMode, Hyperparams, Reconstruction};
use super::params::ParamVars;
use crate::error::Result;
use crate::graph::AttributedGraph;

/// Bound applied to `z_s . z_t / tau` before exponentiating factor weights.
pub const LOGIT_CLAMP: f64 = 50.0;

/// Directed edge list used for message passing: each undirected edge appears
/// in both orientations, grouped by source.
#[derive(Clone, Debug)]
pub struct MessageGraph {
    pub num_nodes: usize,
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
}

impl MessageGraph {
    pub fn new(graph: &AttributedGraph) -> Self {
        let (src, dst): (Vec<usize>, Vec<usize>) = graph.directed_edges().into_iter().unzip();
        Self {
            num_nodes: graph.num_nodes(),
            src: src.into(),
            dst: dst.into(),
        }
    }

    pub fn num_edges(&self) -> usize {
        self.src.len()
    }
}

/// Projects features into `K` factor spaces: `z_k = relu(X W1_k^T + b1_k) W2_k^T + b2_k`.
pub fn project_features(
    tape: &mut Tape,
    features: &Arc<Tensor>,
    params: &ParamVars,
) -> Result<Vec<Var>> {
    (0..params.factors())
        .map(|k| {
            let w1t = tape.transpose(params.w1(k))?;
            let mut hidden = tape.matmul_fixed(features, w1t)?;
            if let Some(b1) = params.b1(k) {
                hidden = tape.add_row(hidden, b1)?;
            }
            let hidden = tape.relu(hidden);
            let w2t = tape.transpose(params.w2(k))?;
            let mut z = tape.matmul(hidden, w2t)?;
            if let Some(b2) = params.b2(k) {
                z = tape.add_row(z, b2)?;
            }
            Ok(z)
        })
        .collect()
}

/// Per-edge factor importance: softmax over `k` of `z_s,k . z_t,k / tau`.
/// Returns an `E x K` matrix aligned with `graph.src`/`graph.dst`.
pub fn compute_importance(
    tape: &mut Tape,
    z: &[Var],
    graph: &MessageGraph,
    tau: f64,
) -> Result<Var> {
    let mut cols = Vec::with_capacity(z.len());
    for &zk in z {
        let zs = tape.gather_rows(zk, graph.src.clone())?;
        let zt = tape.gather_rows(zk, graph.dst.clone())?;
        cols.push(tape.row_dot(zs, zt)?);
    }
    let logits = tape.concat_cols(&cols)?;
    let logits = tape.scale(logits, 1.0 / tau);
    Ok(tape.softmax_rows(logits)?)
}

/// Edge ids assigned to each factor.
#[derive(Clone, Debug)]
pub struct FactorNeighborhoods {
    pub num_nodes: usize,
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
    /// Edge ids per factor, ascending.
    pub members: Vec<Arc<[usize]>>,
    /// Chosen factor per edge when selection ran.
    pub selection: Option<Vec<usize>>,
}

/// Index of the largest entry in each row, ties going to the lowest index.
pub fn argmax_rows(alpha: &Tensor) -> Result<Vec<usize>> {
    let (rows, cols) = alpha.dims2()?;
    Ok((0..rows)
        .map(|r| {
            let row = alpha.row(r);
            let mut best = 0;
            for k in 1..cols {
                if row[k] > row[best] {
                    best = k;
                }
            }
            best
        })
        .collect())
}

impl FactorNeighborhoods {
    /// Routes each edge to the factor with the highest importance.
    pub fn select(graph: &MessageGraph, alpha: &Tensor, factors: usize) -> Result<Self> {
        let selection = argmax_rows(alpha)?;
        let mut members = vec![Vec::new(); factors];
        for (e, &k) in selection.iter().enumerate() {
            members[k].push(e);
        }
        Ok(Self {
            num_nodes: graph.num_nodes,
            src: graph.src.clone(),
            dst: graph.dst.clone(),
            members: members.into_iter().map(Arc::from).collect(),
            selection: Some(selection),
        })
    }

    /// Every factor sees the whole neighborhood.
    pub fn shared(graph: &MessageGraph, factors: usize) -> Self {
        let all: Arc<[usize]> = (0..graph.num_edges()).collect();
        Self {
            num_nodes: graph.num_nodes,
            src: graph.src.clone(),
            dst: graph.dst.clone(),
            members: vec![all; factors],
            selection: None,
        }
    }

    pub fn factors(&self) -> usize {
        self.members.len()
    }

    /// Neighbors of `s` routed to factor `k`, in edge order.
    pub fn neighbors(&self, k: usize, s: usize) -> Vec<usize> {
        self.members[k]
            .iter()
            .filter(|&&e| self.src[e] == s)
            .map(|&e| self.dst[e])
            .collect()
    }

    /// True when every directed edge belongs to exactly one factor.
    pub fn is_partition(&self) -> bool {
        let mut seen = vec![0usize; self.src.len()];
        for m in &self.members {
            for &e in m.iter() {
                seen[e] += 1;
            }
        }
        seen.iter().all(|&c| c == 1)
    }

    fn endpoints(&self, k: usize) -> (Arc<[usize]>, Arc<[usize]>) {
        let m = &self.members[k];
        let src: Arc<[usize]> = m.iter().map(|&e| self.src[e]).collect();
        let dst: Arc<[usize]> = m.iter().map(|&e| self.dst[e]).collect();
        (src, dst)
    }
}

/// Normalized attention for one factor's edges.
#[derive(Clone, Debug)]
pub struct FactorAttention {
    pub src: Arc<[usize]>,
    pub dst: Arc<[usize]>,
    /// `m x 1` weights summing to one per source; `None` when the factor has no edges.
    pub weights: Option<Var>,
}

/// Renormalizes importance within each factor neighborhood:
/// `alpha_bar = alpha_k(s,t) / sum over N_k(s) of alpha_k(s,t')`.
pub fn normalize_attention(
    tape: &mut Tape,
    alpha: Option<Var>,
    hoods: &FactorNeighborhoods,
    mode: AttentionMode,
) -> Result<Vec<FactorAttention>> {
    let n = hoods.num_nodes;
    let mut out = Vec::with_capacity(hoods.factors());
    for k in 0..hoods.factors() {
        let (src, dst) = hoods.endpoints(k);
        if src.is_empty() {
            out.push(FactorAttention { src, dst, weights: None });
            continue;
        }
        let weights = match (mode, alpha) {
            (AttentionMode::Importance, Some(alpha)) => {
                let col = tape.column(alpha, k)?;
                let a = tape.gather_rows(col, hoods.members[k].clone())?;
                let per_node = tape.scatter_add_rows(a, src.clone(), n)?;
                let denom = tape.gather_rows(per_node, src.clone())?;
                tape.div(a, denom)?
            }
            _ => {
                let mut count = vec![0usize; n];
                for &s in src.iter() {
                    count[s] += 1;
                }
                let w = src.iter().map(|&s| 1.0 / count[s] as f64).collect();
                tape.constant(Tensor::column(w))
            }
        };
        out.push(FactorAttention { src, dst, weights: Some(weights) });
    }
    Ok(out)
}

/// `h_k = beta z_k + (1 - beta) sum_t alpha_bar z_t,k`. With `beta = 1`
/// the projections are returned unchanged.
pub fn message_pass(
    tape: &mut Tape,
    z: &[Var],
    attention: &[FactorAttention],
    beta: f64,
    num_nodes: usize,
) -> Result<Vec<Var>> {
    if beta == 1.0 {
        return Ok(z.to_vec());
    }
    z.iter()
        .zip(attention)
        .map(|(&zk, att)| {
            let own = tape.scale(zk, beta);
            let Some(w) = att.weights else {
                return Ok(own);
            };
            let zt = tape.gather_rows(zk, att.dst.clone())?;
            let weighted = tape.mul_col(zt, w)?;
            let agg = tape.scatter_add_rows(weighted, att.src.clone(), num_nodes)?;
            let agg = tape.scale(agg, 1.0 - beta);
            Ok(tape.add(own, agg)?)
        })
        .collect()
}

/// Everything the encoder produces for one forward pass.
#[derive(Clone, Debug)]
pub struct Encoded {
    pub z: Vec<Var>,
    /// `E x K` importance; `None` when the graph has no edges.
    pub alpha: Option<Var>,
    pub hoods: FactorNeighborhoods,
    pub attention: Vec<FactorAttention>,
    pub h: Vec<Var>,
}

pub fn encode(
    tape: &mut Tape,
    features: &Arc<Tensor>,
    params: &ParamVars,
    graph: &MessageGraph,
    hp: &Hyperparams,
) -> Result<Encoded> {
    let z = project_features(tape, features, params)?;
    let alpha = if graph.num_edges() > 0 {
        Some(compute_importance(tape, &z, graph, hp.tau)?)
    } else {
        None
    };
    let hoods = match alpha {
        Some(a) if hp.variant.selects_factors() => {
            FactorNeighborhoods::select(graph, tape.value(a), hp.factors)?
        }
        _ => FactorNeighborhoods::shared(graph, hp.factors),
    };
    let attention = normalize_attention(tape, alpha, &hoods, hp.variant.attention())?;
    let h = message_pass(tape, &z, &attention, hp.beta, graph.num_nodes)?;
    Ok(Encoded { z, alpha, hoods, attention, h })
}

/// Link scores for a batch of node pairs.
#[derive(Clone, Debug)]
pub struct PairScores {
    /// `P x 1` pre-sigmoid scores.
    pub logits: Var,
    /// `P x 1` probabilities.
    pub probs: Var,
    /// Per-factor `P x 1` weights; empty under equal-weight reconstruction.
    pub gamma: Vec<Var>,
    /// Count of pair-factor logits that hit [`LOGIT_CLAMP`].
    pub clamped: usize,
}

pub fn score_pairs(
    tape: &mut Tape,
    z: &[Var],
    h: &[Var],
    src: Arc<[usize]>,
    dst: Arc<[usize]>,
    tau: f64,
    recon: Reconstruction,
) -> Result<PairScores> {
    let mut total: Option<Var> = None;
    let mut gamma = Vec::new();
    let mut clamped = 0;
    for (&zk, &hk) in z.iter().zip(h) {
        let hs = tape.gather_rows(hk, src.clone())?;
        let ht = tape.gather_rows(hk, dst.clone())?;
        let mut term = tape.row_dot(hs, ht)?;
        if recon == Reconstruction::Weighted {
            let zs = tape.gather_rows(zk, src.clone())?;
            let zt = tape.gather_rows(zk, dst.clone())?;
            let raw = tape.row_dot(zs, zt)?;
            let raw = tape.scale(raw, 1.0 / tau);
            clamped += tape
                .value(raw)
                .data()
                .iter()
                .filter(|v| v.abs() > LOGIT_CLAMP)
                .count();
            let bounded = tape.clamp(raw, -LOGIT_CLAMP, LOGIT_CLAMP);
            let g = tape.exp(bounded);
            gamma.push(g);
            term = tape.mul(g, term)?;
        }
        total = Some(match total {
            Some(t) => tape.add(t, term)?,
            None => term,
        });
    }
    let logits = total.expect("at least one factor");
    if clamped > 0 {
        warn!("{clamped} factor similarities clamped to +/-{LOGIT_CLAMP}");
    }
    let probs = tape.sigmoid(logits);
    Ok(PairScores { logits, probs, gamma, clamped })
}

/// `sum_i w_i (p_i - y_i)^2`.
pub fn weighted_squared_error(
    tape: &mut Tape,
    probs: Var,
    targets: Tensor,
    weights: Tensor,
) -> Result<Var> {
    let y = tape.constant(targets);
    let w = tape.constant(weights);
    let diff = tape.sub(probs, y)?;
    let sq = tape.mul(diff, diff)?;
    let weighted = tape.mul(sq, w)?;
    Ok(tape.sum(weighted))
}

/// Off-tape score for a single pair from precomputed embeddings.
pub fn predict_link(
    z: &[Tensor],
    h: &[Tensor],
    s: usize,
    t: usize,
    tau: f64,
    recon: Reconstruction,
) -> f64 {
    sigmoid(link_logit(z, h, s, t, tau, recon))
}

pub(crate) fn link_logit(
    z: &[Tensor],
    h: &[Tensor],
    s: usize,
    t: usize,
    tau: f64,
    recon: Reconstruction,
) -> f64 {
    z.iter()
        .zip(h)
        .map(|(zk, hk)| {
            let sim = dot(hk.row(s), hk.row(t));
            match recon {
                Reconstruction::Equal => sim,
                Reconstruction::Weighted => {
                    let raw = dot(zk.row(s), zk.row(t)) / tau;
                    raw.clamp(-LOGIT_CLAMP, LOGIT_CLAMP).exp() * sim
                }
            }
        })
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}
