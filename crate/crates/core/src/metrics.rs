//! Detection-quality metrics: confusion counts at a threshold, detection
//! rate, both false-alarm-rate conventions, classification rate, and the
//! ROC curve with trapezoidal AUC.
//!
//! FAR comes in two modes. `Paper` divides false detections by *correct*
//! detections (fp/tp), which can exceed 1; `Conventional` is fp/(fp+tn).
//! Both are reported so results stay comparable with either convention.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::SampleTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub threshold: f64,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.fp + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FarMode {
    Paper,
    Conventional,
}

/// Anything that can score a feature row with an incident probability.
/// Detectors beyond the built-in transformer plug in through this trait.
pub trait Scorer {
    fn score(&self, features: &[f64]) -> f64;
}

impl<F: Fn(&[f64]) -> f64> Scorer for F {
    fn score(&self, features: &[f64]) -> f64 {
        self(features)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvaluationReport {
    pub dr: Option<f64>,
    pub far_paper: Option<f64>,
    pub far_conventional: Option<f64>,
    pub cr: Option<f64>,
    pub auc: Option<f64>,
    pub roc_points: Vec<(f64, f64)>,
    pub counts: ConfusionCounts,
    /// Informational only; never comparable across machines.
    pub eval_wall_clock_seconds: Option<f64>,
}

/// Tallies predictions (positive iff score >= threshold) against labels.
pub fn confusion(scores: &[f64], labels: &[u8], threshold: f64) -> Result<ConfusionCounts> {
    if scores.is_empty() || scores.len() != labels.len() {
        return Err(Error::Input(format!(
            "confusion: {} scores vs {} labels (both must be nonempty and equal)",
            scores.len(),
            labels.len()
        )));
    }
    let mut c = ConfusionCounts {
        tp: 0,
        fp: 0,
        tn: 0,
        fn_: 0,
        threshold,
    };
    for (i, (&s, &l)) in scores.iter().zip(labels).enumerate() {
        if l > 1 {
            return Err(Error::Input(format!("confusion: non-binary label {l} at index {i}")));
        }
        let predicted = s >= threshold;
        match (predicted, l == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// tp / (tp + fn): fraction of true incidents flagged.
pub fn detection_rate(c: &ConfusionCounts) -> Result<f64> {
    if c.positives() == 0 {
        return Err(Error::UndefinedMetric(
            "detection rate: no positive samples".into(),
        ));
    }
    Ok(c.tp as f64 / c.positives() as f64)
}

pub fn false_alarm_rate(c: &ConfusionCounts, mode: FarMode) -> Result<f64> {
    match mode {
        FarMode::Paper => {
            if c.tp == 0 {
                Err(Error::UndefinedMetric(
                    "false alarm rate (paper mode): no correct detections (tp = 0)".into(),
                ))
            } else {
                Ok(c.fp as f64 / c.tp as f64)
            }
        }
        FarMode::Conventional => {
            if c.negatives() == 0 {
                Err(Error::UndefinedMetric(
                    "false alarm rate (conventional mode): no negative samples".into(),
                ))
            } else {
                Ok(c.fp as f64 / c.negatives() as f64)
            }
        }
    }
}

/// (tp + tn) / total: overall accuracy.
pub fn classification_rate(c: &ConfusionCounts) -> Result<f64> {
    if c.total() == 0 {
        return Err(Error::Input("classification rate of empty counts".into()));
    }
    Ok((c.tp + c.tn) as f64 / c.total() as f64)
}

/// ROC sweep over every distinct score (descending, ties grouped into one
/// step) plus the (0,0) anchor; AUC by trapezoidal integration.
pub fn roc_and_auc(scores: &[f64], labels: &[u8]) -> Result<(Vec<(f64, f64)>, f64)> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(Error::Input(format!(
            "roc_and_auc: {} scores vs {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::UndefinedMetric(
            "roc: both classes must be present".into(),
        ));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut points = vec![(0.0, 0.0)];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        // consume the whole tie group at this score
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / n_neg as f64, tp as f64 / n_pos as f64));
    }

    let mut auc = 0.0;
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok((points, auc))
}

/// Scores every row of `test`, then assembles the full report. Undefined
/// metrics become explicit `null` fields, never fabricated zeros.
pub fn evaluate(scorer: &dyn Scorer, test: &SampleTable, threshold: f64) -> Result<EvaluationReport> {
    if test.n_rows() == 0 {
        return Err(Error::Input("evaluate: empty test set".into()));
    }
    if !test.has_both_classes() {
        return Err(Error::UndefinedMetric(
            "evaluate: test set contains a single class".into(),
        ));
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Config(format!(
            "threshold must lie in [0, 1], got {threshold}"
        )));
    }

    let started = Instant::now();
    let scores: Vec<f64> = test.features.iter().map(|row| scorer.score(row)).collect();
    let elapsed = started.elapsed().as_secs_f64();

    let counts = confusion(&scores, &test.labels, threshold)?;
    let optional = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let dr = optional(detection_rate(&counts))?;
    let far_paper = optional(false_alarm_rate(&counts, FarMode::Paper))?;
    let far_conventional = optional(false_alarm_rate(&counts, FarMode::Conventional))?;
    let cr = optional(classification_rate(&counts))?;
    let (roc_points, auc) = roc_and_auc(&scores, &test.labels)?;

    Ok(EvaluationReport {
        dr,
        far_paper,
        far_conventional,
        cr,
        auc: Some(auc),
        roc_points,
        counts,
        eval_wall_clock_seconds: Some(elapsed),
    })
}
