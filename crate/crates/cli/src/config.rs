//! Run configuration: defaults, then a flat JSON file, then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use hetlink::graph::SplitRatios;
use hetlink::model::{Hyperparams, Variant};
use hetlink::Error;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Args, Debug, Clone, Default)]
pub struct HyperFlags {
    /// Number of latent factors K.
    #[arg(long)]
    pub factors: Option<usize>,
    /// Embedding width per factor.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Hidden width of the projection MLP (defaults to twice --dim).
    #[arg(long)]
    pub hidden: Option<usize>,
    /// Softmax temperature.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Share of a node's own projection kept during aggregation.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Training negatives per positive.
    #[arg(long = "neg-m")]
    pub neg_m: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "weight-decay")]
    pub weight_decay: Option<f64>,
    /// Maximum training epochs.
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Validation checks without improvement before stopping.
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long = "eval-every")]
    pub eval_every: Option<usize>,
    /// Seed for the split, initialization and negative sampling. Repeated
    /// runs use consecutive seeds starting here.
    #[arg(long)]
    pub seed: Option<u64>,
    /// full | no-alpha | no-selection | vanilla-recon
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Add bias vectors to the projection layers.
    #[arg(long)]
    pub bias: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct CommonArgs {
    /// Flat JSON object supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding edges.txt, features.txt and optionally labels.txt.
    #[arg(long = "dataset-dir")]
    pub dataset_dir: Option<PathBuf>,
    /// Where outputs are written (created if absent).
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Number of repetitions for multi-seed commands.
    #[arg(long)]
    pub seeds: Option<usize>,
    /// Write 0 for every wall-clock column so reruns are byte-identical.
    #[arg(long = "no-timing")]
    pub no_timing: bool,
    /// L2-normalize feature rows after loading.
    #[arg(long = "normalize-features")]
    pub normalize_features: bool,
    #[command(flatten)]
    pub hyper: HyperFlags,
}

/// Non-hyperparameter keys accepted in a config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileExtras {
    dataset_dir: Option<PathBuf>,
    out_dir: Option<PathBuf>,
    seeds: Option<usize>,
    record_timing: Option<bool>,
    normalize_features: Option<bool>,
    neg_multiplier: Option<usize>,
    train_ratio: Option<f64>,
    valid_ratio: Option<f64>,
    test_ratio: Option<f64>,
}

const EXTRA_KEYS: [&str; 9] = [
    "dataset_dir",
    "out_dir",
    "seeds",
    "record_timing",
    "normalize_features",
    "neg_multiplier",
    "train_ratio",
    "valid_ratio",
    "test_ratio",
];

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub hp: Hyperparams,
    pub dataset_dir: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seeds: usize,
    pub record_timing: bool,
    pub normalize_features: bool,
    pub neg_multiplier: usize,
    pub ratios: [f64; 3],
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::InvalidHyperparams(msg.into())
}

fn read_config_file(path: &Path) -> Result<Map<String, Value>, Error> {
    let text = fs::read_to_string(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    match value {
        Value::Object(map) => {
            if let Some((k, _)) = map.iter().find(|(_, v)| v.is_object() || v.is_array()) {
                return Err(config_err(format!("{}: `{k}` is not a scalar", path.display())));
            }
            Ok(map)
        }
        _ => Err(config_err(format!("{}: expected a JSON object", path.display()))),
    }
}

impl RunConfig {
    pub fn resolve(args: &CommonArgs) -> Result<Self, Error> {
        let file = match &args.config {
            Some(path) => read_config_file(path)?,
            None => Map::new(),
        };
        let (extra_map, hp_map): (Map<String, Value>, Map<String, Value>) = file
            .into_iter()
            // `epochs` mirrors the command-line flag name
            .map(|(k, v)| if k == "epochs" { ("max_epochs".into(), v) } else { (k, v) })
            .partition(|(k, _)| EXTRA_KEYS.contains(&k.as_str()));
        let extras: FileExtras = serde_json::from_value(Value::Object(extra_map))
            .map_err(|e| config_err(format!("config file: {e}")))?;
        let hidden_in_file = hp_map.contains_key("hidden");

        let mut merged = match serde_json::to_value(Hyperparams::default()) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("hyperparameters serialize to an object"),
        };
        merged.extend(hp_map);
        let mut hp: Hyperparams = serde_json::from_value(Value::Object(merged))
            .map_err(|e| config_err(format!("config file: {e}")))?;

        let f = &args.hyper;
        macro_rules! take {
            ($flag:ident => $field:ident) => {
                if let Some(v) = f.$flag.clone() {
                    hp.$field = v;
                }
            };
        }
        take!(factors => factors);
        take!(dim => dim);
        take!(hidden => hidden);
        take!(tau => tau);
        take!(beta => beta);
        take!(neg_m => neg_m);
        take!(lr => lr);
        take!(weight_decay => weight_decay);
        take!(epochs => max_epochs);
        take!(patience => patience);
        take!(eval_every => eval_every);
        take!(seed => seed);
        take!(variant => variant);
        if f.bias {
            hp.bias = true;
        }
        if f.hidden.is_none() && !hidden_in_file {
            hp.hidden = 2 * hp.dim;
        }

        let defaults = SplitRatios::default();
        let ratios = [
            extras.train_ratio.unwrap_or(defaults.train),
            extras.valid_ratio.unwrap_or(defaults.valid),
            extras.test_ratio.unwrap_or(defaults.test),
        ];
        let cfg = Self {
            hp,
            dataset_dir: args.dataset_dir.clone().or(extras.dataset_dir),
            out_dir: args
                .out_dir
                .clone()
                .or(extras.out_dir)
                .unwrap_or_else(|| PathBuf::from("runs")),
            seeds: args.seeds.or(extras.seeds).unwrap_or(5),
            record_timing: !args.no_timing && extras.record_timing.unwrap_or(true),
            normalize_features: args.normalize_features || extras.normalize_features.unwrap_or(false),
            neg_multiplier: extras.neg_multiplier.unwrap_or(5),
            ratios,
        };
        if cfg.seeds == 0 {
            return Err(config_err("seeds must be at least 1"));
        }
        if cfg.neg_multiplier == 0 {
            return Err(config_err("neg_multiplier must be at least 1"));
        }
        cfg.split_ratios().validate()?;
        Ok(cfg)
    }

    pub fn split_ratios(&self) -> SplitRatios {
        SplitRatios {
            train: self.ratios[0],
            valid: self.ratios[1],
            test: self.ratios[2],
        }
    }

    /// Consecutive seeds starting at the configured one.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.hp.seed + i).collect()
    }

    pub fn dataset_dir(&self) -> Result<&Path, Error> {
        let dir = self
            .dataset_dir
            .as_deref()
            .ok_or_else(|| config_err("--dataset-dir is required"))?;
        if !dir.is_dir() {
            return Err(Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("dataset directory {} not found", dir.display()),
            )));
        }
        Ok(dir)
    }

    /// Dataset id used in output names: the dataset directory's last component.
    pub fn dataset_name(&self) -> String {
        self.dataset_dir
            .as_deref()
            .and_then(|d| d.file_name())
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    }
}
