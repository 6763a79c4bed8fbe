//! Straight-line re-implementation of the forward pass, used as an oracle.

use hetlink::graph::{sample_training_negatives, AttributedGraph};
use hetlink::model::{
    training_loss, AttentionMode, Hyperparams, MessageGraph, ModelParams, PairBatch, ParamVars,
    Reconstruction, Variant,
};
use hetlink_autodiff::{finite_difference_check, Tape, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

pub struct Reference {
    /// `[k][node][dim]`
    pub z: Vec<Vec<Vec<f64>>>,
    /// `[edge][k]`
    pub alpha: Vec<Vec<f64>>,
    /// `[k][node][dim]`
    pub h: Vec<Vec<Vec<f64>>>,
    /// smallest gap between the top two importances of any edge
    pub selection_margin: f64,
    /// smallest |pre-activation| of any hidden unit
    pub relu_margin: f64,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn reference_forward(
    x: &Tensor,
    params: &ModelParams,
    src: &[usize],
    dst: &[usize],
    hp: &Hyperparams,
) -> Reference {
    let n = x.shape()[0];
    let k_count = hp.factors;
    let mut relu_margin = f64::INFINITY;
    let mut z = Vec::new();
    for k in 0..k_count {
        let (w1, w2) = (params.w1(k), params.w2(k));
        let mut zk = Vec::new();
        for v in 0..n {
            let hidden: Vec<f64> = (0..hp.hidden)
                .map(|j| {
                    let pre = dot(w1.row(j), x.row(v));
                    if x.row(v).iter().any(|&f| f != 0.0) {
                        relu_margin = relu_margin.min(pre.abs());
                    }
                    pre.max(0.0)
                })
                .collect();
            zk.push((0..hp.dim).map(|i| dot(w2.row(i), &hidden)).collect::<Vec<f64>>());
        }
        z.push(zk);
    }

    let mut selection_margin = f64::INFINITY;
    let alpha: Vec<Vec<f64>> = src
        .iter()
        .zip(dst)
        .map(|(&s, &t)| {
            let logits: Vec<f64> = (0..k_count).map(|k| dot(&z[k][s], &z[k][t]) / hp.tau).collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let total: f64 = exps.iter().sum();
            let row: Vec<f64> = exps.iter().map(|e| e / total).collect();
            let mut sorted = row.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            if sorted.len() > 1 {
                selection_margin = selection_margin.min(sorted[0] - sorted[1]);
            }
            row
        })
        .collect();

    let in_factor = |e: usize, k: usize| -> bool {
        if !hp.variant.selects_factors() {
            return true;
        }
        let row = &alpha[e];
        let best = (0..k_count).fold(0, |b, j| if row[j] > row[b] { j } else { b });
        best == k
    };

    let mut h = Vec::new();
    for k in 0..k_count {
        let mut hk = Vec::new();
        for s in 0..n {
            let edges: Vec<usize> = (0..src.len()).filter(|&e| src[e] == s && in_factor(e, k)).collect();
            let denom: f64 = edges.iter().map(|&e| alpha[e][k]).sum();
            let mut agg = vec![0.0; hp.dim];
            for &e in &edges {
                let w = match hp.variant.attention() {
                    AttentionMode::Importance => alpha[e][k] / denom,
                    AttentionMode::Uniform => 1.0 / edges.len() as f64,
                };
                for i in 0..hp.dim {
                    agg[i] += w * z[k][dst[e]][i];
                }
            }
            hk.push(
                (0..hp.dim)
                    .map(|i| hp.beta * z[k][s][i] + (1.0 - hp.beta) * agg[i])
                    .collect::<Vec<f64>>(),
            );
        }
        h.push(hk);
    }
    Reference { z, alpha, h, selection_margin, relu_margin }
}

pub fn reference_loss(r: &Reference, batch: &PairBatch, hp: &Hyperparams) -> f64 {
    (0..batch.len())
        .map(|i| {
            let (s, t) = (batch.src[i], batch.dst[i]);
            let logit: f64 = (0..hp.factors)
                .map(|k| {
                    let sim = dot(&r.h[k][s], &r.h[k][t]);
                    match hp.variant.reconstruction() {
                        Reconstruction::Equal => sim,
                        Reconstruction::Weighted => {
                            (dot(&r.z[k][s], &r.z[k][t]) / hp.tau).clamp(-50.0, 50.0).exp() * sim
                        }
                    }
                })
                .sum();
            batch.weights[i] * (sigmoid(logit) - batch.targets[i]).powi(2)
        })
        .sum()
}

pub fn toy_setup(variant: Variant, seed: u64) -> (AttributedGraph, Hyperparams, ModelParams, PairBatch) {
    let graph = super::toy_graph(seed);
    let hp = Hyperparams {
        factors: 2,
        dim: 3,
        hidden: 4,
        neg_m: 2,
        seed,
        variant,
        ..Hyperparams::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = ModelParams::init(&hp, graph.feature_dim(), &mut rng);
    let positives = graph.directed_edges();
    let negatives = sample_training_negatives(&graph, &positives, hp.neg_m, seed, 0);
    let batch = PairBatch::new(&positives, &negatives);
    (graph, hp, params, batch)
}

/// Seeds whose toy instance keeps every argmax and ReLU comfortably away from
/// a switch, so finite differences never cross a discontinuity.
pub fn well_conditioned(variant: Variant) -> (AttributedGraph, Hyperparams, ModelParams, PairBatch) {
    for seed in 0..500 {
        let setup = toy_setup(variant, seed);
        let (graph, hp, params, _) = &setup;
        let mg = MessageGraph::new(graph);
        let r = reference_forward(graph.features(), params, &mg.src, &mg.dst, hp);
        if r.selection_margin > 1e-3 && r.relu_margin > 1e-3 {
            return setup;
        }
    }
    panic!("no well-conditioned toy instance for {variant}");
}

pub struct GradientCheck {
    pub max_rel_error: f64,
    /// Gradient entries with magnitude above 1e-4.
    pub live: usize,
    pub total: usize,
}

/// Central differences against tape gradients of the full training loss.
pub fn gradient_check(variant: Variant) -> GradientCheck {
    let (graph, hp, params, batch) = well_conditioned(variant);
    let mg = MessageGraph::new(&graph);
    let features = graph.features().clone();
    let report = finite_difference_check(
        |tape: &mut Tape, vars: &[hetlink_autodiff::Var]| {
            let pv = ParamVars::new(vars.to_vec(), hp.factors, hp.bias);
            training_loss(tape, &pv, &features, &mg, &hp, &batch).map(|(l, _)| l)
        },
        &params.tensors,
        1e-5,
    )
    .unwrap();
    let grads = report.analytic.iter().flat_map(|g| g.data().iter());
    GradientCheck {
        max_rel_error: report.max_rel_error,
        live: grads.clone().filter(|g| g.abs() > 1e-4).count(),
        total: grads.count(),
    }
}
