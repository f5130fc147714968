//! Transformer-encoder binary classifier for tabular feature vectors.
//!
//! Each scalar feature becomes one token: a learned per-feature embedding
//! vector scaled by the feature value, plus a sinusoidal positional
//! encoding. A stack of post-norm encoder layers (multi-head self-attention
//! and a relu feed-forward block, each with residual + layer norm) feeds a
//! mean-pooled sigmoid head.

mod encoding;
mod forward;
mod train;

pub use encoding::{pe_table, positional_encoding};
pub use forward::{attention_weights, classify_recorded, embed, encoder_forward, multi_head_attention};
pub use train::{bce_loss, train_classifier, ClassifierHyper};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Normalizer;
use crate::error::{Error, Result};
use crate::metrics::Scorer;
use crate::rng::rng_from_seed;
use crate::tensor::{ComputationRecord, Tensor};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct TransformerConfig {
    /// Input variables per sample; also the token-sequence length.
    pub n_features: usize,
    pub d_model: usize,
    /// Attention heads; must divide d_model.
    pub h: usize,
    pub n_layers: usize,
    pub d_ff: usize,
    /// Base constant of the sinusoidal positional encoding.
    pub pe_base: f64,
    /// Inverted dropout on the two sublayer outputs during training.
    pub dropout_rate: f64,
}

impl TransformerConfig {
    pub fn with_defaults(n_features: usize) -> TransformerConfig {
        TransformerConfig {
            n_features,
            d_model: 32,
            h: 4,
            n_layers: 2,
            d_ff: 64,
            pe_base: 100.0,
            dropout_rate: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.d_model == 0 || self.h == 0 || self.d_ff == 0 {
            return Err(Error::Config(
                "transformer dimensions must all be positive".into(),
            ));
        }
        if self.d_model % self.h != 0 {
            return Err(Error::Config(format!(
                "d_model {} must be divisible by h {}",
                self.d_model, self.h
            )));
        }
        if self.pe_base <= 1.0 {
            return Err(Error::Config(format!(
                "pe_base must exceed 1, got {}",
                self.pe_base
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout_rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    pub fn d_k(&self) -> usize {
        self.d_model / self.h
    }

    /// Trainable parameter count implied by the configuration.
    pub fn param_count(&self) -> usize {
        let d = self.d_model;
        let per_layer = 4 * d * d          // W_Q, W_K, W_V, W_O
            + d * self.d_ff + self.d_ff    // FFN in
            + self.d_ff * d + d            // FFN out
            + 4 * d;                       // two layer-norm scale/shift pairs
        self.n_features * d                // embeddings
            + self.n_layers * per_layer
            + d + 1                        // classifier head
    }
}

/// Per-layer weights. The fused Q/K/V projections are split into per-head
/// column blocks of width d_k during the forward pass.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EncoderLayerParams {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    pub w_o: Tensor,
    pub ff_w1: Tensor,
    pub ff_b1: Tensor,
    pub ff_w2: Tensor,
    pub ff_b2: Tensor,
    pub ln1_gamma: Tensor,
    pub ln1_beta: Tensor,
    pub ln2_gamma: Tensor,
    pub ln2_beta: Tensor,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ModelRepr", into = "ModelRepr")]
pub struct TransformerModel {
    pub config: TransformerConfig,
    pub seed: u64,
    /// One d_model embedding vector per feature (row-stacked).
    pub embedding: Tensor,
    /// Precomputed n_features x d_model positional table (not trained).
    pub pe: Tensor,
    pub layers: Vec<EncoderLayerParams>,
    pub head_w: Tensor,
    pub head_b: Tensor,
}

/// Checkpoint layout: config, parameter tensors, seed. The positional
/// table is derived from the config on load.
#[derive(Serialize, Deserialize)]
struct ModelRepr {
    config: TransformerConfig,
    seed: u64,
    embedding: Tensor,
    layers: Vec<EncoderLayerParams>,
    head_w: Tensor,
    head_b: Tensor,
}

impl From<TransformerModel> for ModelRepr {
    fn from(m: TransformerModel) -> ModelRepr {
        ModelRepr {
            config: m.config,
            seed: m.seed,
            embedding: m.embedding,
            layers: m.layers,
            head_w: m.head_w,
            head_b: m.head_b,
        }
    }
}

impl TryFrom<ModelRepr> for TransformerModel {
    type Error = Error;

    fn try_from(r: ModelRepr) -> Result<TransformerModel> {
        r.config.validate()?;
        let pe = pe_table(r.config.n_features, r.config.d_model, r.config.pe_base)?;
        Ok(TransformerModel {
            config: r.config,
            seed: r.seed,
            embedding: r.embedding,
            pe,
            layers: r.layers,
            head_w: r.head_w,
            head_b: r.head_b,
        })
    }
}

fn uniform_param(rng: &mut ChaCha8Rng, shape: Vec<usize>, fan_in: usize) -> Tensor {
    let bound = (1.0 / fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-bound..=bound)).collect();
    Tensor::param(shape, data).expect("generated data is finite")
}

fn zero_param(shape: Vec<usize>) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::param(shape, vec![0.0; n]).expect("zeros are valid")
}

fn one_param(shape: Vec<usize>) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::param(shape, vec![1.0; n]).expect("ones are valid")
}

impl TransformerModel {
    /// Fresh model with uniform(-sqrt(1/fan_in), sqrt(1/fan_in)) weights
    /// drawn from the seeded generator.
    pub fn new(config: TransformerConfig, seed: u64) -> Result<TransformerModel> {
        config.validate()?;
        let mut rng = rng_from_seed(seed);
        let d = config.d_model;
        let embedding = uniform_param(&mut rng, vec![config.n_features, d], 1);
        let pe = pe_table(config.n_features, d, config.pe_base)?;
        let layers = (0..config.n_layers)
            .map(|_| EncoderLayerParams {
                w_q: uniform_param(&mut rng, vec![d, d], d),
                w_k: uniform_param(&mut rng, vec![d, d], d),
                w_v: uniform_param(&mut rng, vec![d, d], d),
                w_o: uniform_param(&mut rng, vec![d, d], d),
                ff_w1: uniform_param(&mut rng, vec![d, config.d_ff], d),
                ff_b1: zero_param(vec![1, config.d_ff]),
                ff_w2: uniform_param(&mut rng, vec![config.d_ff, d], config.d_ff),
                ff_b2: zero_param(vec![1, d]),
                ln1_gamma: one_param(vec![1, d]),
                ln1_beta: zero_param(vec![1, d]),
                ln2_gamma: one_param(vec![1, d]),
                ln2_beta: zero_param(vec![1, d]),
            })
            .collect();
        let head_w = uniform_param(&mut rng, vec![d, 1], d);
        let head_b = zero_param(vec![1, 1]);
        Ok(TransformerModel {
            config,
            seed,
            embedding,
            pe,
            layers,
            head_w,
            head_b,
        })
    }

    pub fn n_features(&self) -> usize {
        self.config.n_features
    }

    /// All trainable tensors in a fixed order.
    pub fn parameters(&self) -> Vec<Tensor> {
        let mut params = vec![self.embedding.clone()];
        for layer in &self.layers {
            params.extend([
                layer.w_q.clone(),
                layer.w_k.clone(),
                layer.w_v.clone(),
                layer.w_o.clone(),
                layer.ff_w1.clone(),
                layer.ff_b1.clone(),
                layer.ff_w2.clone(),
                layer.ff_b2.clone(),
                layer.ln1_gamma.clone(),
                layer.ln1_beta.clone(),
                layer.ln2_gamma.clone(),
                layer.ln2_beta.clone(),
            ]);
        }
        params.push(self.head_w.clone());
        params.push(self.head_b.clone());
        params
    }

    /// Incident probabilities for a batch of feature rows, as a rank-1
    /// tensor of length B. Inference only; safe to call concurrently.
    pub fn classify(&self, rows: &[Vec<f64>]) -> Result<Tensor> {
        let mut rec = ComputationRecord::new();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let probs = classify_recorded(&mut rec, self, &refs, None)?;
        Tensor::vector(probs.values())
    }
}

/// A trained model plus the normalizer its features were fitted with;
/// scores raw feature rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Classifier {
    pub model: TransformerModel,
    pub normalizer: Option<Normalizer>,
}

impl Scorer for Classifier {
    fn score(&self, features: &[f64]) -> f64 {
        let row = match &self.normalizer {
            Some(n) => n.apply_row(features),
            None => features.to_vec(),
        };
        self.model
            .classify(&[row])
            .map(|t| t.values()[0])
            .unwrap_or(f64::NAN)
    }
}
