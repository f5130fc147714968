//! `gen-data`: synthetic two-class dataset with a known ground truth.

use std::path::PathBuf;

use clap::Args;
use tidgan_core::data::{generate_oracle_dataset, OracleSpec};
use tidgan_core::error::Result;
use tidgan_core::rng::{stage_seed, Stage};

use crate::config::ExperimentConfig;
use crate::manifest::{config_hash, RunRecorder};
use crate::commands::table_to_csv_bytes;

#[derive(Debug, Args)]
pub struct GenDataArgs {
    /// Output directory (created if missing)
    #[arg(short, long)]
    pub out: PathBuf,
    /// Distribution profile: "default" (well separated) or "overlap"
    #[arg(long)]
    pub profile: Option<String>,
    #[arg(long)]
    pub n_incident: Option<usize>,
    #[arg(long)]
    pub n_non: Option<usize>,
    /// Master seed; the stage seed is derived from it
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: GenDataArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(args.config.as_deref())?;
    if let Some(p) = args.profile {
        cfg.oracle.profile = Some(p);
    }
    if let Some(n) = args.n_incident {
        cfg.oracle.n_incident = Some(n);
    }
    if let Some(n) = args.n_non {
        cfg.oracle.n_non_incident = Some(n);
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }

    let master = cfg.seed.unwrap_or(0);
    let seed = stage_seed(master, Stage::GenData);
    let profile = cfg.oracle.profile.clone().unwrap_or_else(|| "default".to_string());
    let spec = OracleSpec::by_name(&profile)?;
    let n_incident = cfg.oracle.n_incident.unwrap_or(1600);
    let n_non = cfg.oracle.n_non_incident.unwrap_or(7240);

    let mut rec = RunRecorder::new("gen-data", master, config_hash(&cfg), &args.out);
    rec.stage("generate");
    let (table, truth) = generate_oracle_dataset(&spec, n_incident, n_non, seed)?;

    rec.stage("write");
    rec.stage_bytes("dataset.csv", table_to_csv_bytes(&table)?);
    rec.stage_json("ground_truth.json", &truth)?;
    rec.finish()?;

    println!(
        "wrote {}/dataset.csv ({} rows: {} incident, {} non-incident, profile {profile})",
        args.out.display(),
        table.n_rows(),
        n_incident,
        n_non
    );
    Ok(())
}
