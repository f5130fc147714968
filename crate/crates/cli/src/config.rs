//! Experiment configuration: JSON file plus flag overrides.
//!
//! A config file sets any subset of the fields below; command-line flags
//! win over the file, the file wins over defaults. Unknown keys are
//! rejected up front.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tidgan_core::data::NormalizerMode;
use tidgan_core::error::{Error, Result};
use tidgan_core::gan::{GanConfig, LossMode};
use tidgan_core::transformer::{ClassifierHyper, TransformerConfig};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub label_column: Option<String>,
    pub threshold: Option<f64>,
    pub normalizer_mode: Option<NormalizerMode>,
    pub target_ratio: Option<String>,
    pub split: SplitSettings,
    pub oracle: OracleSettings,
    pub gan: GanSettings,
    pub transformer: TransformerSettings,
    pub classifier: ClassifierSettings,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct SplitSettings {
    pub train_fraction: Option<f64>,
    pub stratified: Option<bool>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OracleSettings {
    pub profile: Option<String>,
    pub n_incident: Option<usize>,
    pub n_non_incident: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct GanSettings {
    pub noise_dim: Option<usize>,
    pub gen_hidden: Option<Vec<usize>>,
    pub disc_hidden: Option<Vec<usize>>,
    pub batch_size: Option<usize>,
    pub d_steps_per_g_step: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub loss_mode: Option<LossMode>,
}

impl GanSettings {
    /// Full core config with the stage seed filled in.
    pub fn build(&self, seed: u64) -> GanConfig {
        let d = GanConfig::default();
        GanConfig {
            noise_dim: self.noise_dim.unwrap_or(d.noise_dim),
            gen_hidden: self.gen_hidden.clone().unwrap_or(d.gen_hidden),
            disc_hidden: self.disc_hidden.clone().unwrap_or(d.disc_hidden),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            d_steps_per_g_step: self.d_steps_per_g_step.unwrap_or(d.d_steps_per_g_step),
            epochs: self.epochs.unwrap_or(d.epochs),
            lr: self.lr.unwrap_or(d.lr),
            seed,
            loss_mode: self.loss_mode.unwrap_or(d.loss_mode),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct TransformerSettings {
    pub d_model: Option<usize>,
    pub h: Option<usize>,
    pub n_layers: Option<usize>,
    pub d_ff: Option<usize>,
    pub pe_base: Option<f64>,
    pub dropout_rate: Option<f64>,
}

impl TransformerSettings {
    pub fn build(&self, n_features: usize) -> TransformerConfig {
        let d = TransformerConfig::with_defaults(n_features);
        TransformerConfig {
            n_features,
            d_model: self.d_model.unwrap_or(d.d_model),
            h: self.h.unwrap_or(d.h),
            n_layers: self.n_layers.unwrap_or(d.n_layers),
            d_ff: self.d_ff.unwrap_or(d.d_ff),
            pe_base: self.pe_base.unwrap_or(d.pe_base),
            dropout_rate: self.dropout_rate.unwrap_or(d.dropout_rate),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifierSettings {
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub lr: Option<f64>,
}

impl ClassifierSettings {
    pub fn build(&self, seed: u64) -> ClassifierHyper {
        let d = ClassifierHyper::default();
        ClassifierHyper {
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            lr: self.lr.unwrap_or(d.lr),
            seed,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<ExperimentConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<ExperimentConfig> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(ExperimentConfig::default()),
        }
    }

    pub fn label_column(&self) -> String {
        self.label_column.clone().unwrap_or_else(|| "label".to_string())
    }

    pub fn threshold(&self) -> f64 {
        self.threshold.unwrap_or(0.5)
    }

    pub fn normalizer_mode(&self) -> NormalizerMode {
        self.normalizer_mode.unwrap_or(NormalizerMode::ZScore)
    }
}
