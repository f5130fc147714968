//! Subcommand implementations and the checkpoint formats they share.

pub mod augment;
pub mod diagnose;
pub mod evaluate;
pub mod gen_data;
pub mod train_clf;
pub mod train_gan;

use serde::{Deserialize, Serialize};
use std::path::Path;

use tidgan_core::data::{write_csv, Normalizer, SampleTable, SplitSpec};
use tidgan_core::error::{Error, Result};
use tidgan_core::gan::GanModel;
use tidgan_core::transformer::TransformerModel;

/// On-disk form of a trained GAN (the model embeds its feature scaler).
#[derive(Serialize, Deserialize)]
pub struct GanCheckpoint {
    pub seed: u64,
    pub config_hash: String,
    pub model: GanModel,
}

/// On-disk form of a trained classifier plus everything evaluation needs
/// to reproduce its data handling: the fitted normalizer, the split spec,
/// and the label column.
#[derive(Serialize, Deserialize)]
pub struct ClassifierCheckpoint {
    pub seed: u64,
    pub config_hash: String,
    pub label_column: String,
    pub split: SplitSpec,
    pub normalizer: Option<Normalizer>,
    pub model: TransformerModel,
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("invalid {what} {}: {e}", path.display())))
}

pub fn table_to_csv_bytes(table: &SampleTable) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    write_csv(table, &mut bytes)?;
    Ok(bytes)
}

/// Two-column (or more) numeric CSV with the given header.
pub fn curve_csv(header: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out.into_bytes()
}

/// File-name-safe version of a feature name.
pub fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}
