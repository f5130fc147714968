//! Synthetic-row generation and rebalancing to a target class ratio.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::str::FromStr;

use super::train::sample_noise;
use super::GanModel;
use crate::data::SampleTable;
use crate::error::{Error, Result};
use crate::tensor::ComputationRecord;

/// Target incident : non-incident count ratio, e.g. 1:4, 2:3, 1:1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BalanceRatio {
    pub incident: u64,
    pub non_incident: u64,
}

impl BalanceRatio {
    pub fn new(incident: u64, non_incident: u64) -> Result<BalanceRatio> {
        if incident == 0 || non_incident == 0 {
            return Err(Error::Config(format!(
                "balance ratio parts must be positive, got {incident}:{non_incident}"
            )));
        }
        Ok(BalanceRatio {
            incident,
            non_incident,
        })
    }

    /// ceil(n_non * incident / non_incident): incident count the dataset
    /// should reach.
    pub fn target_incidents(&self, n_non_incident: usize) -> usize {
        let n = n_non_incident as u64;
        ((n * self.incident + self.non_incident - 1) / self.non_incident) as usize
    }
}

impl FromStr for BalanceRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<BalanceRatio> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 2 {
            return Err(Error::Config(format!(
                "balance ratio must look like \"1:4\", got {s:?}"
            )));
        }
        let incident = parts[0]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad incident part in ratio {s:?}")))?;
        let non_incident = parts[1]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("bad non-incident part in ratio {s:?}")))?;
        BalanceRatio::new(incident, non_incident)
    }
}

impl std::fmt::Display for BalanceRatio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.incident, self.non_incident)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AugmentSummary {
    pub ratio: BalanceRatio,
    pub n_incident_before: usize,
    pub n_non_incident: usize,
    pub target_incidents: usize,
    pub appended: usize,
}

/// Generates `count` feature rows in original units: G applied to fresh
/// noise, then the model's scaler inverted.
pub fn generate(model: &GanModel, count: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let noise = sample_noise(count, model.config.noise_dim, rng)?;
    let mut rec = ComputationRecord::new();
    let out = model.generator.forward(&mut rec, &noise)?;
    let values = out.values();
    let n = model.n_features;
    let rows: Vec<Vec<f64>> = (0..count)
        .map(|i| model.normalizer.invert_row(&values[i * n..(i + 1) * n]))
        .collect();
    Ok(rows)
}

/// Appends GAN-generated incident rows (label 1, synthetic flag set) until
/// the incident count reaches ceil(n_non * ratio). Real rows are preserved
/// verbatim; an already-met target appends nothing.
pub fn augment_to_ratio(
    dataset: &SampleTable,
    model: &GanModel,
    ratio: BalanceRatio,
    rng: &mut ChaCha8Rng,
) -> Result<(SampleTable, AugmentSummary)> {
    if !dataset.has_both_classes() {
        return Err(Error::Config(
            "augment_to_ratio: dataset must contain both classes".into(),
        ));
    }
    if model.n_features != dataset.n_features() {
        return Err(Error::Dimension(format!(
            "augment_to_ratio: model generates {} features, dataset has {}",
            model.n_features,
            dataset.n_features()
        )));
    }
    let n_incident = dataset.n_incident();
    let n_non = dataset.n_non_incident();
    let target = ratio.target_incidents(n_non);
    let appended = target.saturating_sub(n_incident);

    let summary = AugmentSummary {
        ratio,
        n_incident_before: n_incident,
        n_non_incident: n_non,
        target_incidents: target,
        appended,
    };
    if appended == 0 {
        return Ok((dataset.clone(), summary));
    }

    let mut out = dataset.clone();
    for row in generate(model, appended, rng)? {
        out.features.push(row);
        out.labels.push(1);
        out.synthetic_flags.push(1);
    }
    Ok((out, summary))
}
