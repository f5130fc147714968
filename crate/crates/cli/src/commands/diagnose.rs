//! `diagnose`: distribution-fidelity comparison between real and synthetic
//! rows, as a JSON report plus per-feature ECDF/KDE curves for plotting.

use std::path::PathBuf;

use clap::Args;
use serde::Serialize;
use tidgan_core::data::load_csv;
use tidgan_core::diagnostics::{compare, DistributionReport};
use tidgan_core::error::{Error, Result};

use crate::commands::{curve_csv, sanitize};
use crate::config::ExperimentConfig;
use crate::manifest::{config_hash, RunRecorder};

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Augmented CSV: real incident rows are compared against the
    /// synthetic-flagged rows in the same file
    #[arg(long, conflicts_with_all = ["real", "synthetic"])]
    pub data: Option<PathBuf>,
    /// CSV of real rows (feature columns compared)
    #[arg(long, requires = "synthetic")]
    pub real: Option<PathBuf>,
    /// CSV of synthetic rows
    #[arg(long, requires = "real")]
    pub synthetic: Option<PathBuf>,
    #[arg(short, long)]
    pub out: PathBuf,
    #[arg(long)]
    pub label_column: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Serialize)]
struct NamedReport<'a> {
    feature_names: &'a [String],
    #[serde(flatten)]
    report: &'a DistributionReport,
}

pub fn run(args: DiagnoseArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::load_or_default(args.config.as_deref())?;
    if let Some(v) = args.label_column {
        cfg.label_column = Some(v);
    }
    let label_column = cfg.label_column();
    let master = cfg.seed.unwrap_or(0);

    let mut rec = RunRecorder::new("diagnose", master, config_hash(&cfg), &args.out);
    rec.stage("load");
    let (names, real_rows, synthetic_rows) = match (&args.data, &args.real, &args.synthetic) {
        (Some(data), None, None) => {
            let table = load_csv(data, &label_column)?;
            let real: Vec<Vec<f64>> = table
                .features
                .iter()
                .zip(table.labels.iter().zip(&table.synthetic_flags))
                .filter(|(_, (&l, &s))| l == 1 && s == 0)
                .map(|(f, _)| f.clone())
                .collect();
            let synthetic: Vec<Vec<f64>> = table
                .features
                .iter()
                .zip(&table.synthetic_flags)
                .filter(|(_, &s)| s == 1)
                .map(|(f, _)| f.clone())
                .collect();
            if synthetic.is_empty() {
                return Err(Error::Input(format!(
                    "{} has no synthetic-flagged rows to compare",
                    data.display()
                )));
            }
            (table.feature_names.clone(), real, synthetic)
        }
        (None, Some(real), Some(synthetic)) => {
            let a = load_csv(real, &label_column)?;
            let b = load_csv(synthetic, &label_column)?;
            (a.feature_names.clone(), a.features, b.features)
        }
        _ => {
            return Err(Error::Config(
                "diagnose needs either --data FILE or both --real and --synthetic".into(),
            ))
        }
    };

    rec.stage("compare");
    let report = compare(&real_rows, &synthetic_rows)?;

    rec.stage("write");
    for (j, name) in names.iter().enumerate() {
        let safe = sanitize(name);
        let ecdf_rows = report.ecdf_real[j]
            .iter()
            .map(|(v, p)| vec![0.0, *v, *p])
            .chain(report.ecdf_synthetic[j].iter().map(|(v, p)| vec![1.0, *v, *p]));
        rec.stage_bytes(
            &format!("ecdf_{safe}.csv"),
            curve_csv(&["synthetic", "value", "cumulative_prob"], ecdf_rows),
        );
        let kde_rows = report.kde_real[j]
            .iter()
            .zip(&report.kde_synthetic[j])
            .map(|((x, dr), (_, ds))| vec![*x, *dr, *ds]);
        rec.stage_bytes(
            &format!("kde_{safe}.csv"),
            curve_csv(&["grid", "density_real", "density_synthetic"], kde_rows),
        );
    }
    rec.stage_json(
        "distribution_report.json",
        NamedReport {
            feature_names: &names,
            report: &report,
        },
    )?;
    rec.finish()?;

    let max_ks = report
        .ks_per_feature
        .iter()
        .cloned()
        .fold(0.0f64, f64::max);
    println!(
        "compared {} real vs {} synthetic rows over {} features; max KS {max_ks:.4}; wrote {}/distribution_report.json",
        real_rows.len(),
        synthetic_rows.len(),
        names.len(),
        args.out.display()
    );
    Ok(())
}
