//! Unconditional GAN over minority-class (incident) feature rows.
//!
//! The generator maps standard-normal noise through a small relu MLP with a
//! tanh output; the discriminator mirrors it with a sigmoid output. Training
//! data is min-max scaled to [-1, 1] to match the tanh range, and the fitted
//! scaler stays with the model so generated rows come back in original
//! feature units.

mod augment;
mod train;

pub use augment::{augment_to_ratio, generate, AugmentSummary, BalanceRatio};
pub use train::{
    discriminator_loss, generator_loss, paper_sign_discriminator_value, sample_noise, train_gan,
    GanTrainer,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Normalizer;
use crate::error::{Error, Result};
use crate::tensor::{Activation, ComputationRecord, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Generator minimizes (1/m) sum log(1 - D(G(z))).
    Paper,
    /// Generator minimizes -(1/m) sum log D(G(z)); same optimum, stronger
    /// gradients while the discriminator is winning.
    NonSaturating,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GanConfig {
    pub noise_dim: usize,
    pub gen_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
    pub batch_size: usize,
    pub d_steps_per_g_step: usize,
    pub epochs: usize,
    pub lr: f64,
    /// Adam first-moment decay for both networks. Adversarial training is
    /// noticeably more stable at 0.5 than the usual 0.9.
    #[serde(default = "default_adam_beta1")]
    pub adam_beta1: f64,
    pub seed: u64,
    pub loss_mode: LossMode,
}

fn default_adam_beta1() -> f64 {
    0.5
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            noise_dim: 16,
            gen_hidden: vec![64, 64],
            disc_hidden: vec![64, 32],
            batch_size: 64,
            d_steps_per_g_step: 1,
            epochs: 200,
            lr: 2e-4,
            adam_beta1: default_adam_beta1(),
            seed: 0,
            loss_mode: LossMode::Paper,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.noise_dim == 0 {
            return Err(Error::Config("noise_dim must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be at least 2".into()));
        }
        if self.gen_hidden.iter().chain(&self.disc_hidden).any(|&w| w == 0) {
            return Err(Error::Config("hidden layer widths must be at least 1".into()));
        }
        if self.d_steps_per_g_step == 0 {
            return Err(Error::Config("d_steps_per_g_step must be at least 1".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(Error::Config(format!("lr must be positive, got {}", self.lr)));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) {
            return Err(Error::Config(format!(
                "adam_beta1 must lie in [0, 1), got {}",
                self.adam_beta1
            )));
        }
        Ok(())
    }
}

/// Fully-connected stack with relu hidden layers and a fixed output
/// activation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    pub weights: Vec<Tensor>,
    pub biases: Vec<Tensor>,
    pub output_activation: Activation,
}

impl Mlp {
    pub(crate) fn new(
        sizes: &[usize],
        output_activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Mlp {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (1.0 / fan_in as f64).sqrt();
            let data: Vec<f64> = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            weights.push(Tensor::param(vec![fan_in, fan_out], data).expect("finite init"));
            biases.push(Tensor::param(vec![1, fan_out], vec![0.0; fan_out]).expect("zeros"));
        }
        Mlp {
            weights,
            biases,
            output_activation,
        }
    }

    pub fn forward(&self, rec: &mut ComputationRecord, x: &Tensor) -> Result<Tensor> {
        let last = self.weights.len() - 1;
        let mut h = x.clone();
        for (i, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let lin = rec.matmul(&h, w)?;
            let lin = rec.add(&lin, b)?;
            h = rec.activation(
                if i == last { self.output_activation } else { Activation::Relu },
                &lin,
            )?;
        }
        Ok(h)
    }

    pub fn parameters(&self) -> Vec<Tensor> {
        self.weights
            .iter()
            .chain(&self.biases)
            .cloned()
            .collect()
    }

    /// Concatenated parameter bits; changes iff some parameter changed.
    pub fn fingerprint(&self) -> Vec<u64> {
        self.parameters()
            .iter()
            .flat_map(|t| t.values().into_iter().map(f64::to_bits))
            .collect()
    }
}

/// Per-epoch training record. `loss_d` keeps the paper's sign (optimum 0
/// from above); `loss_g` is the value actually minimized for the
/// configured mode.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct GanEpochStats {
    pub epoch: usize,
    pub loss_d: f64,
    pub loss_g: f64,
    pub mean_d_real: f64,
    pub mean_d_fake: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GanModel {
    pub config: GanConfig,
    pub n_features: usize,
    pub generator: Mlp,
    pub discriminator: Mlp,
    /// Min-max [-1, 1] scaler fitted on the minority training rows.
    pub normalizer: Normalizer,
    pub history: Vec<GanEpochStats>,
}

impl GanModel {
    pub fn n_features(&self) -> usize {
        self.n_features
    }
}
