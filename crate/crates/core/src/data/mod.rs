//! Dataset handling: labeled tables, normalization, stratified splitting,
//! and a synthetic loop-detector-style oracle generator with a known
//! ground-truth distribution.

mod csv_io;
mod oracle;

pub use csv_io::{load_csv, save_csv, write_csv, SYNTHETIC_COLUMN};
pub use oracle::{
    generate_oracle_dataset, sample_gaussian_matrix, ClassSpec, GroundTruth, OracleSpec,
};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

/// A labeled tabular dataset. Features are kept in original units; the
/// `normalizer` field records the transform fitted for model consumption.
#[derive(Debug, Clone)]
pub struct SampleTable {
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<f64>>,
    /// 1 = incident (positive class), 0 = non-incident.
    pub labels: Vec<u8>,
    /// 1 marks a GAN-generated row.
    pub synthetic_flags: Vec<u8>,
    pub normalizer: Option<Normalizer>,
}

impl SampleTable {
    pub fn new(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
        synthetic_flags: Vec<u8>,
    ) -> Result<SampleTable> {
        let n = features.len();
        if labels.len() != n || synthetic_flags.len() != n {
            return Err(Error::Input(format!(
                "row counts disagree: {} features, {} labels, {} synthetic flags",
                n,
                labels.len(),
                synthetic_flags.len()
            )));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != feature_names.len() {
                return Err(Error::Input(format!(
                    "row {} has {} features, header names {}",
                    i + 1,
                    row.len(),
                    feature_names.len()
                )));
            }
        }
        if let Some(bad) = labels.iter().find(|l| **l > 1) {
            return Err(Error::Input(format!("non-binary label {bad}")));
        }
        if let Some(bad) = synthetic_flags.iter().find(|l| **l > 1) {
            return Err(Error::Input(format!("non-binary synthetic flag {bad}")));
        }
        Ok(SampleTable {
            feature_names,
            features,
            labels,
            synthetic_flags,
            normalizer: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.features.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_incident(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn n_non_incident(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 0).count()
    }

    pub fn has_both_classes(&self) -> bool {
        self.n_incident() > 0 && self.n_non_incident() > 0
    }

    /// Feature rows of all incident (label 1) samples.
    pub fn incident_features(&self) -> Vec<Vec<f64>> {
        self.features
            .iter()
            .zip(&self.labels)
            .filter(|(_, &l)| l == 1)
            .map(|(f, _)| f.clone())
            .collect()
    }

    /// Values of one feature column.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.features.iter().map(|r| r[j]).collect()
    }

    /// New table holding the given rows (in the given order).
    pub fn subset(&self, indices: &[usize]) -> SampleTable {
        SampleTable {
            feature_names: self.feature_names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            synthetic_flags: indices.iter().map(|&i| self.synthetic_flags[i]).collect(),
            normalizer: self.normalizer.clone(),
        }
    }

    /// Drops synthetic rows, recovering the underlying real table.
    pub fn without_synthetic(&self) -> SampleTable {
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| self.synthetic_flags[i] == 0)
            .collect();
        self.subset(&keep)
    }
}

/// Per-feature affine normalization, invertible within 1e-12.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Normalizer {
    pub mode: NormalizerMode,
    /// Per feature: (min, max) for min-max, (mean, sd) for z-score.
    pub params: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum NormalizerMode {
    /// Min-max to [-1, 1]; degenerate features map to 0.
    MinMaxSymmetric,
    /// (x - mean) / sd; degenerate features map to 0.
    ZScore,
}

impl Normalizer {
    /// Fits on the given rows only. Never fit on test data.
    pub fn fit(rows: &[Vec<f64>], mode: NormalizerMode) -> Result<Normalizer> {
        if rows.is_empty() {
            return Err(Error::Input("fit_normalizer: empty table".into()));
        }
        let n_features = rows[0].len();
        let mut params = Vec::with_capacity(n_features);
        for j in 0..n_features {
            let col: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            match mode {
                NormalizerMode::MinMaxSymmetric => {
                    let min = col.iter().cloned().fold(f64::INFINITY, f64::min);
                    let max = col.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    params.push((min, max));
                }
                NormalizerMode::ZScore => {
                    let n = col.len() as f64;
                    let mean = col.iter().sum::<f64>() / n;
                    let var = if col.len() < 2 {
                        0.0
                    } else {
                        col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
                    };
                    params.push((mean, var.sqrt()));
                }
            }
        }
        Ok(Normalizer { mode, params })
    }

    pub fn n_features(&self) -> usize {
        self.params.len()
    }

    pub fn apply_value(&self, j: usize, x: f64) -> f64 {
        let (a, b) = self.params[j];
        match self.mode {
            NormalizerMode::MinMaxSymmetric => {
                if b == a {
                    0.0
                } else {
                    2.0 * (x - a) / (b - a) - 1.0
                }
            }
            NormalizerMode::ZScore => {
                if b == 0.0 {
                    0.0
                } else {
                    (x - a) / b
                }
            }
        }
    }

    pub fn invert_value(&self, j: usize, y: f64) -> f64 {
        let (a, b) = self.params[j];
        match self.mode {
            NormalizerMode::MinMaxSymmetric => {
                if b == a {
                    a
                } else {
                    (y + 1.0) / 2.0 * (b - a) + a
                }
            }
            NormalizerMode::ZScore => {
                if b == 0.0 {
                    a
                } else {
                    y * b + a
                }
            }
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &x)| self.apply_value(j, x))
            .collect()
    }

    pub fn invert_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(j, &y)| self.invert_value(j, y))
            .collect()
    }

    pub fn apply_matrix(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.apply_row(r)).collect()
    }

    pub fn invert_matrix(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|r| self.invert_row(r)).collect()
    }
}

/// Train/test split parameters.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.6,
            stratified: true,
            seed: 0,
        }
    }
}

/// Seeded train/test split. Real rows are split per class (when
/// stratified), taking ceil(fraction * n_class) of each into train;
/// synthetic rows always go to train so the test side stays real.
/// Both outputs keep the original row order.
pub fn split(table: &SampleTable, spec: &SplitSpec) -> Result<(SampleTable, SampleTable)> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(Error::Config(format!(
            "train_fraction must be in (0, 1), got {}",
            spec.train_fraction
        )));
    }
    let real: Vec<usize> = (0..table.n_rows())
        .filter(|&i| table.synthetic_flags[i] == 0)
        .collect();
    let synthetic: Vec<usize> = (0..table.n_rows())
        .filter(|&i| table.synthetic_flags[i] == 1)
        .collect();
    if real.is_empty() {
        return Err(Error::Config("split: no real rows".into()));
    }

    let mut rng = rng_from_seed(spec.seed);
    let mut train_idx: Vec<usize> = synthetic;

    if spec.stratified {
        let classes: [Vec<usize>; 2] = [
            real.iter().cloned().filter(|&i| table.labels[i] == 0).collect(),
            real.iter().cloned().filter(|&i| table.labels[i] == 1).collect(),
        ];
        if classes[0].is_empty() || classes[1].is_empty() {
            return Err(Error::Config(
                "stratified split requires both classes among real rows".into(),
            ));
        }
        for class in classes {
            let mut idx = class;
            idx.shuffle(&mut rng);
            let take = (spec.train_fraction * idx.len() as f64).ceil() as usize;
            train_idx.extend_from_slice(&idx[..take.min(idx.len())]);
        }
    } else {
        let mut idx = real;
        idx.shuffle(&mut rng);
        let take = (spec.train_fraction * idx.len() as f64).ceil() as usize;
        train_idx.extend_from_slice(&idx[..take.min(idx.len())]);
    }

    train_idx.sort_unstable();
    let in_train: std::collections::HashSet<usize> = train_idx.iter().cloned().collect();
    let test_idx: Vec<usize> = (0..table.n_rows()).filter(|i| !in_train.contains(i)).collect();
    Ok((table.subset(&train_idx), table.subset(&test_idx)))
}
