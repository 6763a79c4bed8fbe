use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use hetlink::eval::{
    block_contrast, correlation_matrix, evaluate, repeat_experiment, repeat_heuristic, sweep,
    write_correlation_csv, write_sweep_csv, ExperimentConfig, MetricsRow, RepeatSummary,
    SweepValues,
};
use hetlink::graph::{edge_homophily, load_dataset_dir, split_edges, AttributedGraph, EdgeSplit, Which};
use hetlink::heuristics::Heuristic;
use hetlink::model::{train, write_trace_csv, Embeddings, Hyperparams, ModelState, TrainOptions, Variant};
use hetlink::Error;
use log::info;

use crate::config::RunConfig;
use crate::output::{ensure_dir, run_path, write_rows, Snapshot, MODEL_METHOD};

pub fn load_graph(cfg: &RunConfig) -> Result<AttributedGraph> {
    let dir = cfg.dataset_dir()?;
    let (mut graph, report) =
        load_dataset_dir(dir).with_context(|| format!("loading {}", dir.display()))?;
    info!(
        "{}: {} nodes, {} edges, {} features ({} self loops, {} duplicates dropped)",
        dir.display(),
        graph.num_nodes(),
        graph.num_edges(),
        graph.feature_dim(),
        report.self_loops,
        report.duplicates
    );
    if cfg.normalize_features {
        graph.normalize_features()?;
    }
    Ok(graph)
}

fn experiment_config(cfg: &RunConfig) -> ExperimentConfig {
    ExperimentConfig {
        ratios: cfg.split_ratios(),
        neg_multiplier: cfg.neg_multiplier,
        train: TrainOptions { record_timing: cfg.record_timing },
    }
}

fn model_row(cfg: &RunConfig, hp: &Hyperparams, seed: u64, auc: f64, split: Which, wall_ms: u64) -> MetricsRow {
    MetricsRow {
        dataset: cfg.dataset_name(),
        method: MODEL_METHOD.into(),
        variant: hp.variant.to_string(),
        seed,
        factors: Some(hp.factors),
        dim: Some(hp.dim),
        tau: Some(hp.tau),
        beta: Some(hp.beta),
        neg_m: Some(hp.neg_m),
        auc,
        split: split.to_string(),
        wall_ms,
    }
}

fn summary_rows(cfg: &RunConfig, hp: &Hyperparams, summary: &RepeatSummary) -> Vec<MetricsRow> {
    summary
        .runs
        .iter()
        .map(|r| model_row(cfg, hp, r.seed, r.test_auc, Which::Test, r.wall_ms))
        .collect()
}

fn elapsed(cfg: &RunConfig, start: Instant) -> u64 {
    if cfg.record_timing {
        start.elapsed().as_millis() as u64
    } else {
        0
    }
}

fn load_or_make_split(
    graph: &AttributedGraph,
    cfg: &RunConfig,
    split_file: Option<&Path>,
) -> Result<(EdgeSplit, PathBuf, bool)> {
    match split_file {
        Some(path) => {
            let split = EdgeSplit::load(path).with_context(|| format!("reading {}", path.display()))?;
            split.check_against(graph)?;
            Ok((split, path.to_path_buf(), false))
        }
        None => {
            let seed = cfg.hp.seed;
            let split = split_edges(graph, cfg.split_ratios(), cfg.neg_multiplier, seed)?;
            let path = cfg.out_dir.join(format!("{}_split_seed{seed}.txt", cfg.dataset_name()));
            Ok((split, path, true))
        }
    }
}

pub fn train_cmd(cfg: &RunConfig, split_file: Option<&Path>) -> Result<()> {
    cfg.hp.validate()?;
    let graph = load_graph(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let (split, split_path, fresh) = load_or_make_split(&graph, cfg, split_file)?;
    if fresh {
        split.save(&split_path)?;
    }
    let start = Instant::now();
    let outcome = train(&graph, &split, &cfg.hp, &TrainOptions { record_timing: cfg.record_timing })?;
    let emb = outcome.embeddings()?;
    let wall = elapsed(cfg, start);

    let hp = &cfg.hp;
    let (name, variant) = (cfg.dataset_name(), hp.variant.to_string());
    let path = |ext| run_path(&cfg.out_dir, &name, MODEL_METHOD, &variant, hp.seed, ext);
    let ckpt = path("ckpt");
    outcome.state.save(&ckpt)?;
    write_trace_csv(&outcome.trace, BufWriter::new(File::create(path("trace.csv"))?))?;
    let mut rows = Vec::new();
    for which in [Which::Valid, Which::Test] {
        let auc = evaluate(&emb, &split, which)?;
        println!("{which} auc {auc:.4}");
        rows.push(model_row(cfg, hp, hp.seed, auc, which, wall));
    }
    write_rows(&path("metrics.csv"), &rows)?;
    let mut snap = Snapshot::new("train", cfg, vec![hp.seed]);
    snap.split_file = Some(&split_path);
    snap.checkpoint = Some(&ckpt);
    snap.write(&path("config.json"))?;
    println!(
        "epochs {} best epoch {:?}; checkpoint {}",
        outcome.trace.len(),
        outcome.best_epoch,
        ckpt.display()
    );
    Ok(())
}

pub fn eval_cmd(cfg: &RunConfig, checkpoint: &Path, split_file: &Path) -> Result<()> {
    let graph = load_graph(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let state = ModelState::load(checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    if state.feature_dim != graph.feature_dim() {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint expects {} features, dataset has {}",
            state.feature_dim,
            graph.feature_dim()
        ))
        .into());
    }
    let split = EdgeSplit::load(split_file).with_context(|| format!("reading {}", split_file.display()))?;
    split.check_against(&graph)?;
    let start = Instant::now();
    let emb = state.embed(&graph.with_edges(&split.train_pos)?)?;
    let mut rows = Vec::new();
    for which in [Which::Valid, Which::Test] {
        let auc = evaluate(&emb, &split, which)?;
        println!("{which} auc {auc:.4}");
        rows.push(model_row(cfg, &state.hp, state.hp.seed, auc, which, elapsed(cfg, start)));
    }
    let (name, variant) = (cfg.dataset_name(), state.hp.variant.to_string());
    let path = |ext| run_path(&cfg.out_dir, &name, MODEL_METHOD, &variant, state.hp.seed, ext);
    write_rows(&path("eval.csv"), &rows)?;
    let eval_cfg = RunConfig { hp: state.hp.clone(), ..cfg.clone() };
    let mut snap = Snapshot::new("eval", &eval_cfg, vec![state.hp.seed]);
    snap.split_file = Some(split_file);
    snap.checkpoint = Some(checkpoint);
    snap.write(&path("eval.config.json"))?;
    Ok(())
}

fn print_summary(label: &str, s: &RepeatSummary) {
    println!("{label:<28} {:.4} +/- {:.4} ({} seeds)", s.mean, s.std, s.runs.len());
}

pub fn baseline_cmd(cfg: &RunConfig) -> Result<()> {
    let graph = load_graph(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let seeds = cfg.seed_list();
    let exp = experiment_config(cfg);
    let mut rows = Vec::new();
    for h in Heuristic::ALL {
        let summary = repeat_heuristic(&graph, h, &seeds, &exp)?;
        print_summary(h.name(), &summary);
        for r in &summary.runs {
            let base = MetricsRow {
                dataset: cfg.dataset_name(),
                method: h.name().into(),
                variant: "-".into(),
                seed: r.seed,
                factors: None,
                dim: None,
                tau: None,
                beta: None,
                neg_m: None,
                auc: r.test_auc,
                split: Which::Test.to_string(),
                wall_ms: r.wall_ms,
            };
            if let Some(valid) = r.valid_auc {
                rows.push(MetricsRow { auc: valid, split: Which::Valid.to_string(), ..base.clone() });
            }
            rows.push(base);
        }
    }
    let stem = cfg.out_dir.join(format!("{}_baseline", cfg.dataset_name()));
    write_rows(&stem.with_extension("metrics.csv"), &rows)?;
    Snapshot::new("baseline", cfg, seeds).write(&stem.with_extension("config.json"))?;
    Ok(())
}

pub fn ablate_cmd(cfg: &RunConfig) -> Result<()> {
    cfg.hp.validate()?;
    let graph = load_graph(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let seeds = cfg.seed_list();
    let exp = experiment_config(cfg);
    let mut settings: Vec<(String, Hyperparams)> = Variant::ALL
        .into_iter()
        .map(|v| (v.to_string(), Hyperparams { variant: v, ..cfg.hp.clone() }))
        .collect();
    if cfg.hp.factors != 1 {
        let single = Hyperparams { variant: Variant::Full, factors: 1, ..cfg.hp.clone() };
        settings.push(("full (single factor)".into(), single));
    }
    let mut rows = Vec::new();
    for (label, hp) in &settings {
        let summary = repeat_experiment(&graph, hp, &seeds, &exp)?;
        print_summary(label, &summary);
        rows.extend(summary_rows(cfg, hp, &summary));
    }
    let stem = cfg.out_dir.join(format!("{}_ablate", cfg.dataset_name()));
    write_rows(&stem.with_extension("metrics.csv"), &rows)?;
    Snapshot::new("ablate", cfg, seeds).write(&stem.with_extension("config.json"))?;
    Ok(())
}

pub fn parse_values(axis: &str, values: Option<&str>) -> Result<SweepValues> {
    let floats = |s: &str| -> Result<Vec<f64>> {
        s.split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidHyperparams(format!("bad sweep value `{v}`")).into())
            })
            .collect()
    };
    Ok(match (axis, values) {
        ("k", None) => SweepValues::Factors((1..=10).collect()),
        ("k", Some(s)) => SweepValues::Factors(
            floats(s)?
                .into_iter()
                .map(|v| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(Error::InvalidHyperparams(format!("factor count {v} is not a positive integer")).into())
                    }
                })
                .collect::<Result<_>>()?,
        ),
        ("beta", None) => SweepValues::Beta((0..=10).map(|i| i as f64 / 10.0).collect()),
        ("beta", Some(s)) => SweepValues::Beta(floats(s)?),
        ("tau", None) => SweepValues::Tau(vec![0.1, 1.0]),
        ("tau", Some(s)) => SweepValues::Tau(floats(s)?),
        (other, _) => {
            return Err(Error::InvalidHyperparams(format!("unknown sweep axis `{other}` (k, beta, tau)")).into())
        }
    })
}

pub fn sweep_cmd(cfg: &RunConfig, axis: &str, values: Option<&str>) -> Result<()> {
    let values = parse_values(axis, values)?;
    let graph = load_graph(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let seeds = cfg.seed_list();
    let points = sweep(&graph, &cfg.hp, &values, &seeds, &experiment_config(cfg))?;
    let mut rows = Vec::new();
    for p in &points {
        print_summary(&format!("{}={}", p.axis, p.value), &p.summary);
        let hp = match values {
            SweepValues::Factors(_) => Hyperparams { factors: p.value as usize, ..cfg.hp.clone() },
            SweepValues::Beta(_) => Hyperparams { beta: p.value, ..cfg.hp.clone() },
            SweepValues::Tau(_) => Hyperparams { tau: p.value, ..cfg.hp.clone() },
        };
        rows.extend(summary_rows(cfg, &hp, &p.summary));
    }
    let stem = cfg.out_dir.join(format!("{}_sweep_{axis}", cfg.dataset_name()));
    write_sweep_csv(&points, BufWriter::new(File::create(stem.with_extension("csv"))?))?;
    write_rows(&stem.with_extension("metrics.csv"), &rows)?;
    Snapshot::new("sweep", cfg, seeds).write(&stem.with_extension("config.json"))?;
    Ok(())
}

pub fn homophily_cmd(cfg: &RunConfig) -> Result<()> {
    let graph = load_graph(cfg)?;
    println!("{:.4}", edge_homophily(&graph)?);
    Ok(())
}

pub fn corr_cmd(cfg: &RunConfig, checkpoint: Option<&Path>, split_file: Option<&Path>) -> Result<()> {
    let graph = load_graph(cfg)?;
    ensure_dir(&cfg.out_dir)?;
    let (hp, emb): (Hyperparams, Embeddings) = match checkpoint {
        Some(path) => {
            let state = ModelState::load(path).with_context(|| format!("reading {}", path.display()))?;
            let run_cfg = RunConfig { hp: state.hp.clone(), ..cfg.clone() };
            let (split, _, _) = load_or_make_split(&graph, &run_cfg, split_file)?;
            let emb = state.embed(&graph.with_edges(&split.train_pos)?)?;
            (state.hp, emb)
        }
        None => {
            cfg.hp.validate()?;
            let (split, _, _) = load_or_make_split(&graph, cfg, split_file)?;
            let out = train(&graph, &split, &cfg.hp, &TrainOptions { record_timing: cfg.record_timing })?;
            (cfg.hp.clone(), out.embeddings()?)
        }
    };
    let corr = correlation_matrix(&emb.h_matrix())?;
    let blocks = block_contrast(&corr, hp.factors, hp.dim)?;
    let path = run_path(&cfg.out_dir, &cfg.dataset_name(), MODEL_METHOD, hp.variant.as_str(), hp.seed, "corr.csv");
    write_correlation_csv(&corr, BufWriter::new(File::create(&path)?))?;
    let fmt = |v: Option<f64>| v.map_or("n/a".to_string(), |v| format!("{v:.4}"));
    println!("within-block {} cross-block {}", fmt(blocks.within), fmt(blocks.cross));
    if let (Some(w), Some(c)) = (blocks.within, blocks.cross) {
        println!("ratio {:.3}", w / c);
    }
    println!("matrix {}", path.display());
    Ok(())
}

pub fn split_cmd(cfg: &RunConfig, output: Option<&Path>) -> Result<()> {
    let graph = load_graph(cfg)?;
    let split = split_edges(&graph, cfg.split_ratios(), cfg.neg_multiplier, cfg.hp.seed)?;
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => {
            ensure_dir(&cfg.out_dir)?;
            cfg.out_dir.join(format!("{}_split_seed{}.txt", cfg.dataset_name(), cfg.hp.seed))
        }
    };
    split.save(&path)?;
    println!(
        "{} train / {} valid / {} test edges -> {}",
        split.train_pos.len(),
        split.valid_pos.len(),
        split.test_pos.len(),
        path.display()
    );
    Ok(())
}
