//! `augment`: append GAN-generated incident rows up to a target ratio.

use std::path::PathBuf;

use clap::Args;
use tidgan_core::data::load_csv;
use tidgan_core::error::{Error, Result};
use tidgan_core::gan::{augment_to_ratio, BalanceRatio};
use tidgan_core::rng::{rng_from_seed, stage_seed, Stage};

use crate::commands::{load_json, table_to_csv_bytes, GanCheckpoint};
use crate::config::ExperimentConfig;
use crate::manifest::{config_hash, RunRecorder};

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// GAN checkpoint produced by train-gan
    #[arg(long)]
    pub model: PathBuf,
    /// Target incident:non-incident ratio, e.g. 1:4, 2:3, 1:1
    #[arg(long)]
    pub ratio: Option<String>,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: AugmentArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(args.config.as_deref())?;
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    if let Some(r) = args.ratio {
        cfg.target_ratio = Some(r);
    }
    if let Some(v) = args.label_column {
        cfg.label_column = Some(v);
    }

    let ratio: BalanceRatio = cfg
        .target_ratio
        .as_deref()
        .ok_or_else(|| Error::Config("no target ratio given (use --ratio A:B)".into()))?
        .parse()?;
    let master = cfg.seed.unwrap_or(0);

    let mut rec = RunRecorder::new("augment", master, config_hash(&cfg), &args.out);
    rec.stage("load");
    let table = load_csv(&args.data, &cfg.label_column())?;
    let checkpoint: GanCheckpoint = load_json(&args.model, "GAN checkpoint")?;

    rec.stage("generate");
    let mut rng = rng_from_seed(stage_seed(master, Stage::Augment));
    let (augmented, summary) = augment_to_ratio(&table, &checkpoint.model, ratio, &mut rng)?;

    rec.stage("write");
    rec.stage_bytes("augmented.csv", table_to_csv_bytes(&augmented)?);
    rec.stage_json("augment_report.json", &summary)?;
    rec.finish()?;

    println!(
        "appended {} synthetic incident rows (target {} at ratio {}); wrote {}/augmented.csv",
        summary.appended,
        summary.target_incidents,
        ratio,
        args.out.display()
    );
    Ok(())
}
