//! `train-clf`: split, normalize on the train side, train the transformer.

use std::path::PathBuf;

use clap::Args;
use tidgan_core::data::{load_csv, split, Normalizer, SplitSpec};
use tidgan_core::error::Result;
use tidgan_core::rng::{stage_seed, Stage};
use tidgan_core::transformer::train_classifier;

use crate::commands::{curve_csv, ClassifierCheckpoint};
use crate::config::ExperimentConfig;
use crate::manifest::{config_hash, RunRecorder};

#[derive(Debug, Args)]
pub struct TrainClfArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Train fraction of the 6:4-style split
    #[arg(long)]
    pub split: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub d_model: Option<usize>,
    #[arg(long)]
    pub heads: Option<usize>,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub d_ff: Option<usize>,
    #[arg(long)]
    pub pe_base: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: TrainClfArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(v) = args.split {
        cfg.split.train_fraction = Some(v);
    }
    if let Some(v) = args.epochs {
        cfg.classifier.epochs = Some(v);
    }
    if let Some(v) = args.batch_size {
        cfg.classifier.batch_size = Some(v);
    }
    if let Some(v) = args.lr {
        cfg.classifier.lr = Some(v);
    }
    if let Some(v) = args.d_model {
        cfg.transformer.d_model = Some(v);
    }
    if let Some(v) = args.heads {
        cfg.transformer.h = Some(v);
    }
    if let Some(v) = args.layers {
        cfg.transformer.n_layers = Some(v);
    }
    if let Some(v) = args.d_ff {
        cfg.transformer.d_ff = Some(v);
    }
    if let Some(v) = args.pe_base {
        cfg.transformer.pe_base = Some(v);
    }
    if let Some(v) = args.dropout {
        cfg.transformer.dropout_rate = Some(v);
    }
    if let Some(v) = args.label_column {
        cfg.label_column = Some(v);
    }

    let master = cfg.seed.unwrap_or(0);
    let clf_seed = stage_seed(master, Stage::TrainClassifier);
    let split_spec = SplitSpec {
        train_fraction: cfg.split.train_fraction.unwrap_or(0.6),
        stratified: cfg.split.stratified.unwrap_or(true),
        seed: clf_seed,
    };

    let mut rec = RunRecorder::new("train-clf", master, config_hash(&cfg), &args.out);
    rec.stage("load");
    let table = load_csv(&args.data, &cfg.label_column())?;
    let transformer_config = cfg.transformer.build(table.n_features());
    transformer_config.validate()?;

    rec.stage("split");
    let (train, test) = split(&table, &split_spec)?;

    // the normalizer is fitted on training rows only; test rows never
    // touch fitting or training
    rec.stage("normalize");
    let normalizer = Normalizer::fit(&train.features, cfg.normalizer_mode())?;
    let mut train_normalized = train.clone();
    train_normalized.features = normalizer.apply_matrix(&train.features);
    train_normalized.normalizer = Some(normalizer.clone());

    rec.stage("train");
    let hyper = cfg.classifier.build(clf_seed);
    let (model, history) = train_classifier(&train_normalized, &transformer_config, &hyper)?;

    rec.stage("write");
    rec.stage_bytes(
        "clf_history.csv",
        curve_csv(
            &["epoch", "mean_bce"],
            history.iter().enumerate().map(|(i, l)| vec![(i + 1) as f64, *l]),
        ),
    );
    let checkpoint = ClassifierCheckpoint {
        seed: rec.seed(),
        config_hash: rec.config_hash().to_string(),
        label_column: cfg.label_column(),
        split: split_spec,
        normalizer: Some(normalizer),
        model,
    };
    let mut bytes = serde_json::to_vec_pretty(&checkpoint)?;
    bytes.push(b'\n');
    rec.stage_bytes("transformer_model.json", bytes);
    rec.finish()?;

    println!(
        "trained classifier on {} rows ({} test rows held out); wrote {}/transformer_model.json",
        train.n_rows(),
        test.n_rows(),
        args.out.display()
    );
    Ok(())
}
