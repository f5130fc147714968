//! `train-gan`: fit the generator/discriminator pair on real incident rows.

use std::path::PathBuf;

use clap::Args;
use tidgan_core::data::load_csv;
use tidgan_core::error::{Error, Result};
use tidgan_core::gan::{train_gan, LossMode};
use tidgan_core::rng::{stage_seed, Stage};

use crate::commands::{curve_csv, GanCheckpoint};
use crate::config::ExperimentConfig;
use crate::manifest::{config_hash, RunRecorder};

#[derive(Debug, Args)]
pub struct TrainGanArgs {
    /// Input dataset CSV
    #[arg(long)]
    pub data: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub noise_dim: Option<usize>,
    #[arg(long)]
    pub d_steps: Option<usize>,
    /// "paper" or "non_saturating"
    #[arg(long)]
    pub loss_mode: Option<String>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: TrainGanArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(v) = args.epochs {
        cfg.gan.epochs = Some(v);
    }
    if let Some(v) = args.batch_size {
        cfg.gan.batch_size = Some(v);
    }
    if let Some(v) = args.lr {
        cfg.gan.lr = Some(v);
    }
    if let Some(v) = args.noise_dim {
        cfg.gan.noise_dim = Some(v);
    }
    if let Some(v) = args.d_steps {
        cfg.gan.d_steps_per_g_step = Some(v);
    }
    if let Some(v) = &args.loss_mode {
        cfg.gan.loss_mode = Some(match v.as_str() {
            "paper" => LossMode::Paper,
            "non_saturating" | "non-saturating" => LossMode::NonSaturating,
            other => {
                return Err(Error::Config(format!(
                    "unknown loss mode {other:?} (expected \"paper\" or \"non_saturating\")"
                )))
            }
        });
    }
    if let Some(v) = args.label_column {
        cfg.label_column = Some(v);
    }

    let master = cfg.seed.unwrap_or(0);
    let gan_config = cfg.gan.build(stage_seed(master, Stage::TrainGan));
    gan_config.validate()?;

    let mut rec = RunRecorder::new("train-gan", master, config_hash(&cfg), &args.out);
    rec.stage("load");
    let table = load_csv(&args.data, &cfg.label_column())?;
    // real incident rows only: the minority class the generator must learn
    let minority: Vec<Vec<f64>> = table
        .features
        .iter()
        .zip(table.labels.iter().zip(&table.synthetic_flags))
        .filter(|(_, (&l, &s))| l == 1 && s == 0)
        .map(|(f, _)| f.clone())
        .collect();

    rec.stage("train");
    let model = train_gan(&minority, gan_config)?;

    rec.stage("write");
    let history = curve_csv(
        &["epoch", "loss_d", "loss_g", "mean_d_real", "mean_d_fake"],
        model.history.iter().map(|s| {
            vec![s.epoch as f64, s.loss_d, s.loss_g, s.mean_d_real, s.mean_d_fake]
        }),
    );
    rec.stage_bytes("gan_history.csv", history);
    let checkpoint = GanCheckpoint {
        seed: rec.seed(),
        config_hash: rec.config_hash().to_string(),
        model,
    };
    let mut bytes = serde_json::to_vec_pretty(&checkpoint)?;
    bytes.push(b'\n');
    rec.stage_bytes("gan_model.json", bytes);
    rec.finish()?;

    println!(
        "trained GAN on {} incident rows; wrote {}/gan_model.json",
        minority.len(),
        args.out.display()
    );
    Ok(())
}
