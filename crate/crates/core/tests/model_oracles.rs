mod common;

use std::sync::Arc;
use std::time::Instant;

use common::reference::{gradient_check, reference_forward, reference_loss, sigmoid, toy_setup};
use hetlink::model::layers::{
    compute_importance, message_pass, normalize_attention, project_features, score_pairs,
    weighted_squared_error,
};
use hetlink::model::{
    encode, predict_link, training_loss, AttentionMode, FactorNeighborhoods, Hyperparams,
    MessageGraph, ModelParams, ModelState, Reconstruction, Variant,
};
use hetlink_autodiff::{Tape, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const E: f64 = std::f64::consts::E;

fn matrix(rows: &[&[f64]]) -> Tensor {
    Tensor::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}

#[test]
fn encoder_matches_reference_for_every_variant() {
    for variant in Variant::ALL {
        for seed in 0..5 {
            let (graph, hp, params, batch) = toy_setup(variant, seed);
            let mg = MessageGraph::new(&graph);
            let reference = reference_forward(graph.features(), &params, &mg.src, &mg.dst, &hp);

            let mut tape = Tape::new();
            let vars = params.record(&mut tape, false);
            let (loss, enc) =
                training_loss(&mut tape, &vars, graph.features(), &mg, &hp, &batch).unwrap();
            for k in 0..hp.factors {
                for v in 0..graph.num_nodes() {
                    for i in 0..hp.dim {
                        let got_z = tape.value(enc.z[k]).get(v, i);
                        let got_h = tape.value(enc.h[k]).get(v, i);
                        assert!((got_z - reference.z[k][v][i]).abs() < 1e-12);
                        assert!((got_h - reference.h[k][v][i]).abs() < 1e-12, "{variant} h");
                    }
                }
            }
            let alpha = tape.value(enc.alpha.unwrap());
            for (e, row) in reference.alpha.iter().enumerate() {
                for k in 0..hp.factors {
                    assert!((alpha.get(e, k) - row[k]).abs() < 1e-12);
                }
            }
            let expected = reference_loss(&reference, &batch, &hp);
            let got = tape.value(loss).item();
            assert!((got - expected).abs() < 1e-10 * expected.max(1.0), "{variant}: {got} vs {expected}");
        }
    }
}

// ---- hand-computed cases --------------------------------------------------

#[test]
fn projection_matches_hand_computation() {
    // 2 nodes, F=3, K=2, hidden=2, d=2
    let x = Arc::new(matrix(&[&[1.0, 0.0, 2.0], &[0.5, -1.0, 0.0]]));
    let w1_0 = matrix(&[&[1.0, 2.0, 0.5], &[-1.0, 0.0, 1.0]]);
    let w2_0 = matrix(&[&[1.0, -1.0], &[0.5, 2.0]]);
    let w1_1 = matrix(&[&[0.0, -1.0, 1.0], &[2.0, 1.0, -0.5]]);
    let w2_1 = matrix(&[&[-1.0, 1.0], &[1.0, 1.0]]);
    let params = ModelParams::from_tensors(vec![w1_0, w2_0, w1_1, w2_1], 2, false);
    let mut tape = Tape::new();
    let vars = params.record(&mut tape, false);
    let z = project_features(&mut tape, &x, &vars).unwrap();

    // factor 0, node 0: pre = (1+0+1, -1+0+2) = (2, 1) -> z = (2-1, 1+2) = (1, 3)
    // factor 0, node 1: pre = (0.5-2, -0.5) -> relu (0, 0) -> z = (0, 0)
    // factor 1, node 0: pre = (2, 2-1) = (2, 1) -> z = (-2+1, 2+1) = (-1, 3)
    // factor 1, node 1: pre = (1, 1-1) = (1, 0) -> z = (-1, 1)
    let expected = [[[1.0, 3.0], [0.0, 0.0]], [[-1.0, 3.0], [-1.0, 1.0]]];
    for k in 0..2 {
        for v in 0..2 {
            assert_eq!(tape.value(z[k]).row(v), expected[k][v]);
        }
    }
}

#[test]
fn zero_features_project_to_zero() {
    let hp = Hyperparams { factors: 3, dim: 4, hidden: 5, ..Hyperparams::default() };
    let params = ModelParams::init(&hp, 6, &mut ChaCha8Rng::seed_from_u64(1));
    let x = Arc::new(Tensor::zeros(&[3, 6]));
    let mut tape = Tape::new();
    let vars = params.record(&mut tape, false);
    for zk in project_features(&mut tape, &x, &vars).unwrap() {
        assert!(tape.value(zk).data().iter().all(|&v| v == 0.0));
    }
}

fn two_node_graph() -> MessageGraph {
    MessageGraph {
        num_nodes: 2,
        src: Arc::from(vec![0]),
        dst: Arc::from(vec![1]),
    }
}

#[test]
fn importance_hand_example() {
    // K=2, d=1: z_s = (1, 2), z_t = (1, 0) -> logits (1, 0)
    let mut tape = Tape::new();
    let z0 = tape.constant(matrix(&[&[1.0], &[1.0]]));
    let z1 = tape.constant(matrix(&[&[2.0], &[0.0]]));
    let alpha = compute_importance(&mut tape, &[z0, z1], &two_node_graph(), 1.0).unwrap();
    let row = tape.value(alpha).row(0).to_vec();
    let oracle = E / (1.0 + E);
    assert!((row[0] - oracle).abs() < 1e-15);
    assert!((row[1] - (1.0 - oracle)).abs() < 1e-15);
    assert!((row[0] - 0.7311).abs() < 1e-4);

    let hoods = FactorNeighborhoods::select(&two_node_graph(), tape.value(alpha), 2).unwrap();
    assert_eq!(hoods.selection, Some(vec![0]));
}

#[test]
fn single_factor_importance_is_one() {
    let mut tape = Tape::new();
    let z = tape.constant(matrix(&[&[3.0, -1.0], &[0.5, 7.0]]));
    let alpha = compute_importance(&mut tape, &[z], &two_node_graph(), 0.1).unwrap();
    assert_eq!(tape.value(alpha).data(), [1.0]);
}

#[test]
fn equal_similarities_give_uniform_importance() {
    let mut tape = Tape::new();
    let zs: Vec<_> = (0..4).map(|_| tape.constant(matrix(&[&[1.0, 2.0], &[0.5, 0.5]]))).collect();
    let alpha = compute_importance(&mut tape, &zs, &two_node_graph(), 1.0).unwrap();
    for &a in tape.value(alpha).data() {
        assert!((a - 0.25).abs() < 1e-15);
    }
}

#[test]
fn lower_temperature_sharpens_importance() {
    let mut last = 0.0;
    for tau in [4.0, 2.0, 1.0, 0.5, 0.1] {
        let mut tape = Tape::new();
        let z0 = tape.constant(matrix(&[&[1.0], &[0.8]]));
        let z1 = tape.constant(matrix(&[&[0.5], &[1.0]]));
        let z2 = tape.constant(matrix(&[&[-0.2], &[1.0]]));
        let alpha = compute_importance(&mut tape, &[z0, z1, z2], &two_node_graph(), tau).unwrap();
        let max = tape.value(alpha).data().iter().cloned().fold(0.0, f64::max);
        assert!(max > last, "tau {tau}: {max} <= {last}");
        last = max;
    }
}

#[test]
fn attention_renormalizes_within_factor() {
    // node 0 has neighbors 1 and 2 with factor-0 importance 0.6 and 0.2
    let graph = MessageGraph {
        num_nodes: 3,
        src: Arc::from(vec![0, 0]),
        dst: Arc::from(vec![1, 2]),
    };
    let rows = [
        vec![0.6, 0.1, 0.1, 0.1, 0.1],
        vec![0.2, 0.2, 0.2, 0.2, 0.2], // tie, routed to factor 0
    ];
    let alpha_t = Tensor::from_rows(&rows).unwrap();
    let hoods = FactorNeighborhoods::select(&graph, &alpha_t, 5).unwrap();
    assert_eq!(hoods.neighbors(0, 0), vec![1, 2]);
    let mut tape = Tape::new();
    let alpha = tape.constant(alpha_t);
    let att = normalize_attention(&mut tape, Some(alpha), &hoods, AttentionMode::Importance).unwrap();
    let w = tape.value(att[0].weights.unwrap()).data().to_vec();
    assert!((w[0] - 0.75).abs() < 1e-15 && (w[1] - 0.25).abs() < 1e-15);
    assert!(att[1..].iter().all(|a| a.weights.is_none()));

    // without selection every factor normalizes over both neighbors
    let shared = FactorNeighborhoods::shared(&graph, 5);
    let att = normalize_attention(&mut tape, Some(alpha), &shared, AttentionMode::Importance).unwrap();
    let w1 = tape.value(att[1].weights.unwrap()).data().to_vec();
    assert!((w1[0] - 1.0 / 3.0).abs() < 1e-15 && (w1[1] - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn message_pass_on_a_path() {
    // path 0 - 1 - 2, K=2, d=2, beta = 0.3
    let graph = MessageGraph {
        num_nodes: 3,
        src: Arc::from(vec![0, 1, 1, 2]),
        dst: Arc::from(vec![1, 0, 2, 1]),
    };
    let z0 = matrix(&[&[1.0, 0.0], &[0.5, 1.0], &[0.0, 2.0]]);
    let z1 = matrix(&[&[0.2, 0.1], &[1.0, -1.0], &[0.3, 0.3]]);
    let beta = 0.3;
    let mut tape = Tape::new();
    let zv = [tape.constant(z0.clone()), tape.constant(z1.clone())];
    let alpha = compute_importance(&mut tape, &zv, &graph, 1.0).unwrap();
    let a = tape.value(alpha).clone();
    let hoods = FactorNeighborhoods::select(&graph, &a, 2).unwrap();
    let att = normalize_attention(&mut tape, Some(alpha), &hoods, AttentionMode::Importance).unwrap();
    let h = message_pass(&mut tape, &zv, &att, beta, 3).unwrap();

    // straight-line evaluation of h = beta z + (1 - beta) sum alpha_bar z_t
    let z = [&z0, &z1];
    let sel = hoods.selection.clone().unwrap();
    for k in 0..2 {
        for s in 0..3 {
            let mine: Vec<usize> = (0..4).filter(|&e| graph.src[e] == s && sel[e] == k).collect();
            let denom: f64 = mine.iter().map(|&e| a.get(e, k)).sum();
            for i in 0..2 {
                let agg: f64 = mine.iter().map(|&e| a.get(e, k) / denom * z[k].get(graph.dst[e], i)).sum();
                let expected = beta * z[k].get(s, i) + (1.0 - beta) * agg;
                assert!((tape.value(h[k]).get(s, i) - expected).abs() < 1e-15);
            }
        }
    }
}

#[test]
fn single_neighbor_half_teleport() {
    let mut tape = Tape::new();
    let z = tape.constant(matrix(&[&[2.0, 0.0], &[0.0, 4.0]]));
    let graph = two_node_graph();
    let hoods = FactorNeighborhoods::shared(&graph, 1);
    for mode in [AttentionMode::Importance, AttentionMode::Uniform] {
        let alpha = compute_importance(&mut tape, &[z], &graph, 1.0).unwrap();
        let att = normalize_attention(&mut tape, Some(alpha), &hoods, mode).unwrap();
        let h = message_pass(&mut tape, &[z], &att, 0.5, 2).unwrap();
        assert_eq!(tape.value(h[0]).row(0), [1.0, 2.0]);
        // node 1 has no outgoing edge here: h = beta z
        assert_eq!(tape.value(h[0]).row(1), [0.0, 2.0]);
    }
}

#[test]
fn link_probability_hand_examples() {
    let one = vec![matrix(&[&[1.0], &[1.0]])];
    let weighted = predict_link(&one, &one, 0, 1, 1.0, Reconstruction::Weighted);
    assert!((weighted - sigmoid(E)).abs() < 1e-15);
    // sigma(e) = 0.93810 to five places
    assert!((weighted - 0.93810).abs() < 1e-5);
    let equal = predict_link(&one, &one, 0, 1, 1.0, Reconstruction::Equal);
    assert!((equal - sigmoid(1.0)).abs() < 1e-15);
    assert!((equal - 0.7311).abs() < 1e-4);

    let zero_h = vec![matrix(&[&[0.0], &[0.0]])];
    assert_eq!(predict_link(&one, &zero_h, 0, 1, 1.0, Reconstruction::Weighted), 0.5);

    // the on-tape scorer agrees
    let mut tape = Tape::new();
    let z = tape.constant(one[0].clone());
    let s = score_pairs(&mut tape, &[z], &[z], Arc::from(vec![0]), Arc::from(vec![1]), 1.0, Reconstruction::Weighted)
        .unwrap();
    assert_eq!(tape.value(s.probs).item(), weighted);
    assert!(tape.value(s.gamma[0]).item() > 0.0);
}

#[test]
fn loss_hand_examples() {
    let mut tape = Tape::new();
    let p = tape.constant(Tensor::column(vec![0.5, 0.5]));
    let loss = weighted_squared_error(&mut tape, p, Tensor::column(vec![1.0, 0.0]), Tensor::column(vec![1.0, 1.0]))
        .unwrap();
    assert_eq!(tape.value(loss).item(), 0.5);

    let p = tape.constant(Tensor::column(vec![1.0, 0.0, 0.0]));
    let loss = weighted_squared_error(&mut tape, p, Tensor::column(vec![1.0, 0.0, 0.0]), Tensor::column(vec![1.0, 0.5, 0.5]))
        .unwrap();
    assert_eq!(tape.value(loss).item(), 0.0);
}

// ---- gradients --------------------------------------------------------------

#[test]
fn full_pipeline_gradients_match_finite_differences() {
    let start = Instant::now();
    for variant in Variant::ALL {
        let check = gradient_check(variant);
        println!(
            "{variant}: max relative error {:.3e}, {}/{} gradient entries above 1e-4",
            check.max_rel_error, check.live, check.total
        );
        assert!(check.live * 2 > check.total, "{variant}: gradients mostly vanish, check is vacuous");
        assert!(check.max_rel_error < 1e-4, "{variant}");
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

// ---- degenerate reductions and symmetry ---------------------------------------

#[test]
fn unit_teleport_returns_projections_exactly() {
    let graph = common::toy_graph(3);
    let hp = Hyperparams { beta: 1.0, factors: 3, dim: 4, hidden: 6, ..Hyperparams::default() };
    let emb = ModelState::new(&hp, graph.feature_dim()).embed(&graph).unwrap();
    assert_eq!(emb.z, emb.h);
}

#[test]
fn predictions_are_symmetric() {
    let graph = common::toy_graph(4);
    for variant in Variant::ALL {
        let hp = Hyperparams { variant, factors: 3, dim: 4, hidden: 6, ..Hyperparams::default() };
        let emb = ModelState::new(&hp, graph.feature_dim()).embed(&graph).unwrap();
        for s in 0..graph.num_nodes() {
            for t in 0..graph.num_nodes() {
                assert_eq!(emb.predict(s, t), emb.predict(t, s));
            }
        }
    }
}

#[test]
fn no_selection_shares_full_neighborhoods() {
    let graph = common::toy_graph(5);
    let hp = Hyperparams { variant: Variant::NoSelection, factors: 3, dim: 4, hidden: 6, ..Hyperparams::default() };
    let diag = ModelState::new(&hp, graph.feature_dim()).diagnostics(&graph).unwrap();
    for k in 0..3 {
        for s in 0..graph.num_nodes() {
            assert_eq!(diag.neighborhoods.neighbors(k, s), graph.neighbors(s));
        }
    }
    common::check_structure(&diag, &graph, false).unwrap();
}

#[test]
fn encode_on_edgeless_graph_keeps_teleport_share() {
    let graph = common::toy_graph(6).with_edges(&[]).unwrap();
    let hp = Hyperparams { factors: 2, dim: 3, hidden: 4, ..Hyperparams::default() };
    let state = ModelState::new(&hp, graph.feature_dim());
    let mut tape = Tape::new();
    let vars = state.params.record(&mut tape, false);
    let enc = encode(&mut tape, graph.features(), &vars, &MessageGraph::new(&graph), &hp).unwrap();
    assert!(enc.alpha.is_none());
    for k in 0..2 {
        let z = tape.value(enc.z[k]);
        let h = tape.value(enc.h[k]);
        for (a, b) in z.data().iter().zip(h.data()) {
            assert_eq!(*b, 0.5 * a);
        }
    }
}
