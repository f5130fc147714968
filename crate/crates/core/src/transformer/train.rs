//! Classifier training: binary cross-entropy over shuffled mini-batches.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::forward::classify_recorded;
use super::{TransformerConfig, TransformerModel};
use crate::data::SampleTable;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::tensor::{AdamState, ComputationRecord, Tensor};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ClassifierHyper {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for ClassifierHyper {
    fn default() -> Self {
        ClassifierHyper {
            epochs: 30,
            batch_size: 32,
            lr: 1e-3,
            seed: 0,
        }
    }
}

/// Mean binary cross-entropy -[y log p + (1-y) log(1-p)] of a recorded
/// probability row against constant targets.
pub fn bce_loss(rec: &mut ComputationRecord, probs: &Tensor, targets: &[f64]) -> Result<Tensor> {
    let (_, b) = probs.dims();
    if targets.len() != b {
        return Err(Error::Dimension(format!(
            "bce_loss: {b} probabilities vs {} targets",
            targets.len()
        )));
    }
    let y = Tensor::new(vec![1, b], targets.to_vec())?;
    let ones = Tensor::full(vec![1, b], 1.0)?;
    let zeros = Tensor::zeros(vec![1, b]);
    let log_p = rec.log(probs)?;
    let pos_term = rec.mul(&y, &log_p)?;
    let one_minus_p = rec.sub(&ones, probs)?;
    let log_q = rec.log(&one_minus_p)?;
    let one_minus_y = rec.sub(&ones, &y)?;
    let neg_term = rec.mul(&one_minus_y, &log_q)?;
    let ll = rec.add(&pos_term, &neg_term)?;
    let negated = rec.sub(&zeros, &ll)?;
    rec.mean(&negated)
}

/// Trains a fresh model on the table (features must already be normalized).
/// Returns the model and the per-epoch mean training loss. Deterministic
/// given the hyper seed.
pub fn train_classifier(
    train: &SampleTable,
    config: &TransformerConfig,
    hyper: &ClassifierHyper,
) -> Result<(TransformerModel, Vec<f64>)> {
    config.validate()?;
    if train.n_features() != config.n_features {
        return Err(Error::Config(format!(
            "config expects {} features, table has {}",
            config.n_features,
            train.n_features()
        )));
    }
    if !train.has_both_classes() {
        return Err(Error::Config(
            "train_classifier: training set must contain both classes".into(),
        ));
    }
    if hyper.epochs == 0 || hyper.batch_size == 0 {
        return Err(Error::Config("epochs and batch_size must be positive".into()));
    }

    let model = TransformerModel::new(config.clone(), hyper.seed)?;
    let params = model.parameters();
    let mut adam = AdamState::with_hyper(&params, hyper.lr, 0.9, 0.999, 1e-8);
    let mut rng = rng_from_seed(hyper.seed.wrapping_add(1));

    let n = train.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(hyper.epochs);

    for epoch in 1..=hyper.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for chunk in order.chunks(hyper.batch_size) {
            let rows: Vec<&[f64]> = chunk.iter().map(|&i| train.features[i].as_slice()).collect();
            let targets: Vec<f64> = chunk.iter().map(|&i| train.labels[i] as f64).collect();
            let mut rec = ComputationRecord::new();
            let dropout = (config.dropout_rate > 0.0).then_some((config.dropout_rate, &mut rng));
            let probs = classify_recorded(&mut rec, &model, &rows, dropout)?;
            let loss = bce_loss(&mut rec, &probs, &targets)?;
            let value = loss.item();
            if !value.is_finite() {
                return Err(Error::TrainingDivergence {
                    epoch,
                    message: format!("batch loss is {value}"),
                });
            }
            loss_sum += value * chunk.len() as f64;
            rec.backward(&loss)?;
            adam.step(&params)?;
        }
        let epoch_loss = loss_sum / n as f64;
        if !epoch_loss.is_finite() {
            return Err(Error::TrainingDivergence {
                epoch,
                message: format!("epoch mean loss is {epoch_loss}"),
            });
        }
        history.push(epoch_loss);
    }
    Ok((model, history))
}
