//! `evaluate`: score the held-out split and report DR/FAR/CR/AUC + ROC.

use std::path::PathBuf;

use clap::Args;
use tidgan_core::data::{load_csv, split};
use tidgan_core::error::{Error, Result};
use tidgan_core::metrics::evaluate;
use tidgan_core::transformer::Classifier;

use crate::commands::{curve_csv, load_json, ClassifierCheckpoint};
use crate::config::ExperimentConfig;
use crate::manifest::{config_hash, RunRecorder};

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Classifier checkpoint produced by train-clf
    #[arg(long)]
    pub model: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// "test" re-derives the checkpoint's held-out split; "all" scores
    /// every row in the file
    #[arg(long, default_value = "test")]
    pub on: String,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

pub fn run(args: EvaluateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(args.config.as_deref())?;
    if let Some(t) = args.threshold {
        cfg.threshold = Some(t);
    }
    let threshold = cfg.threshold();

    let checkpoint: ClassifierCheckpoint = load_json(&args.model, "classifier checkpoint")?;
    let master = cfg.seed.unwrap_or(checkpoint.seed);

    let mut rec = RunRecorder::new("evaluate", master, config_hash(&cfg), &args.out);
    rec.stage("load");
    let table = load_csv(&args.data, &checkpoint.label_column)?;
    let target = match args.on.as_str() {
        "test" => {
            let (_, test) = split(&table, &checkpoint.split)?;
            test
        }
        "all" => table,
        other => {
            return Err(Error::Config(format!(
                "--on must be \"test\" or \"all\", got {other:?}"
            )))
        }
    };

    rec.stage("score");
    let scorer = Classifier {
        model: checkpoint.model,
        normalizer: checkpoint.normalizer,
    };
    let mut report = evaluate(&scorer, &target, threshold)?;
    let wall_clock = report.eval_wall_clock_seconds.take();

    rec.stage("write");
    // scoring time is machine-dependent, so it lives in the manifest and
    // the report itself stays byte-reproducible
    rec.stage_json("evaluation_report.json", &report)?;
    rec.stage_bytes(
        "roc.csv",
        curve_csv(
            &["fpr", "tpr"],
            report.roc_points.iter().map(|(x, y)| vec![*x, *y]),
        ),
    );
    rec.finish()?;

    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.6}"));
    println!(
        "rows={} dr={} far_paper={} far_conventional={} cr={} auc={} (scoring {:.3}s)",
        target.n_rows(),
        fmt(report.dr),
        fmt(report.far_paper),
        fmt(report.far_conventional),
        fmt(report.cr),
        fmt(report.auc),
        wall_clock.unwrap_or(0.0),
    );
    Ok(())
}
