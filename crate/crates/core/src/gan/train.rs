//! Adversarial losses and the alternating training loop ("first D, then G").

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{GanConfig, GanEpochStats, GanModel, LossMode, Mlp};
use crate::data::{Normalizer, NormalizerMode};
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::tensor::{zero_grads, Activation, AdamState, ComputationRecord, Tensor};

/// count x noise_dim matrix of i.i.d. standard normal draws.
pub fn sample_noise(count: usize, noise_dim: usize, rng: &mut ChaCha8Rng) -> Result<Tensor> {
    if count == 0 {
        return Err(Error::Precondition("sample_noise: count must be at least 1".into()));
    }
    let data: Vec<f64> = (0..count * noise_dim)
        .map(|_| StandardNormal.sample(rng))
        .collect();
    Tensor::new(vec![count, noise_dim], data)
}

fn check_unit_interval(name: &str, t: &Tensor) -> Result<()> {
    if let Some(bad) = t.values().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::NumericDomain(format!(
            "{name} contains {bad}, outside [0, 1]"
        )));
    }
    Ok(())
}

/// The value MINIMIZED by the discriminator:
/// -(1/m) sum [log D(x_i) + log(1 - D(G(z_i)))].
/// Its negation is the paper-sign value, which peaks at 0 for a perfect
/// discriminator.
pub fn discriminator_loss(
    rec: &mut ComputationRecord,
    d_real: &Tensor,
    d_fake: &Tensor,
) -> Result<Tensor> {
    check_unit_interval("d_real", d_real)?;
    check_unit_interval("d_fake", d_fake)?;
    let log_real = rec.log(d_real)?;
    let mean_real = rec.mean(&log_real)?;
    let ones = Tensor::full(d_fake.shape(), 1.0)?;
    let one_minus_fake = rec.sub(&ones, d_fake)?;
    let log_fake = rec.log(&one_minus_fake)?;
    let mean_fake = rec.mean(&log_fake)?;
    let paper_sign = rec.add(&mean_real, &mean_fake)?;
    rec.sub(&Tensor::scalar(0.0), &paper_sign)
}

/// Paper-sign discriminator objective value for reporting: the negation of
/// [`discriminator_loss`], always <= 0 with optimum 0.
pub fn paper_sign_discriminator_value(loss_minimized: f64) -> f64 {
    -loss_minimized
}

/// The value MINIMIZED by the generator under the given mode.
pub fn generator_loss(rec: &mut ComputationRecord, d_fake: &Tensor, mode: LossMode) -> Result<Tensor> {
    check_unit_interval("d_fake", d_fake)?;
    match mode {
        LossMode::Paper => {
            let ones = Tensor::full(d_fake.shape(), 1.0)?;
            let one_minus = rec.sub(&ones, d_fake)?;
            let logs = rec.log(&one_minus)?;
            rec.mean(&logs)
        }
        LossMode::NonSaturating => {
            let logs = rec.log(d_fake)?;
            let mean = rec.mean(&logs)?;
            rec.sub(&Tensor::scalar(0.0), &mean)
        }
    }
}

/// Stepwise trainer over normalized minority rows. The full loop lives in
/// [`train_gan`]; the step methods are public so the alternation contract
/// is directly exercisable.
pub struct GanTrainer {
    pub generator: Mlp,
    pub discriminator: Mlp,
    config: GanConfig,
    normalizer: Normalizer,
    rows: Vec<Vec<f64>>,
    n_features: usize,
    adam_g: AdamState,
    adam_d: AdamState,
    rng: ChaCha8Rng,
}

pub struct DStepStats {
    pub loss_d_paper_sign: f64,
    pub mean_d_real: f64,
    pub mean_d_fake: f64,
}

impl GanTrainer {
    /// Fits the [-1, 1] scaler on the minority rows (original units) and
    /// initializes both networks from the config seed.
    pub fn new(minority_features: &[Vec<f64>], config: GanConfig) -> Result<GanTrainer> {
        config.validate()?;
        if minority_features.len() < 2 * config.batch_size {
            return Err(Error::Config(format!(
                "GAN training needs at least 2*batch_size = {} minority rows, got {}",
                2 * config.batch_size,
                minority_features.len()
            )));
        }
        let n_features = minority_features[0].len();
        if n_features == 0 {
            return Err(Error::Config("GAN training needs at least one feature".into()));
        }
        let normalizer = Normalizer::fit(minority_features, NormalizerMode::MinMaxSymmetric)?;
        let rows = normalizer.apply_matrix(minority_features);

        let mut rng = rng_from_seed(config.seed);
        let mut gen_sizes = vec![config.noise_dim];
        gen_sizes.extend(&config.gen_hidden);
        gen_sizes.push(n_features);
        let generator = Mlp::new(&gen_sizes, Activation::Tanh, &mut rng);
        let mut disc_sizes = vec![n_features];
        disc_sizes.extend(&config.disc_hidden);
        disc_sizes.push(1);
        let discriminator = Mlp::new(&disc_sizes, Activation::Sigmoid, &mut rng);

        let adam_g = AdamState::with_hyper(&generator.parameters(), config.lr, config.adam_beta1, 0.999, 1e-8);
        let adam_d = AdamState::with_hyper(&discriminator.parameters(), config.lr, config.adam_beta1, 0.999, 1e-8);
        Ok(GanTrainer {
            generator,
            discriminator,
            config,
            normalizer,
            rows,
            n_features,
            adam_g,
            adam_d,
            rng,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    fn fake_batch_detached(&mut self, count: usize) -> Result<Tensor> {
        let noise = sample_noise(count, self.config.noise_dim, &mut self.rng)?;
        let mut rec = ComputationRecord::new();
        let fake = self.generator.forward(&mut rec, &noise)?;
        Ok(fake.detached())
    }

    /// One discriminator update on the given real rows (normalized units)
    /// against a fresh detached fake batch. Generator parameters are
    /// untouched.
    pub fn d_step(&mut self, real_rows: &[Vec<f64>]) -> Result<DStepStats> {
        let real = Tensor::from_rows(real_rows)?;
        let fake = self.fake_batch_detached(real_rows.len())?;
        let mut rec = ComputationRecord::new();
        let d_real = self.discriminator.forward(&mut rec, &real)?;
        let d_fake = self.discriminator.forward(&mut rec, &fake)?;
        let loss = discriminator_loss(&mut rec, &d_real, &d_fake)?;
        let value = loss.item();
        rec.backward(&loss)?;
        self.adam_d.step(&self.discriminator.parameters())?;
        let mean = |t: &Tensor| t.values().iter().sum::<f64>() / t.numel() as f64;
        Ok(DStepStats {
            loss_d_paper_sign: paper_sign_discriminator_value(value),
            mean_d_real: mean(&d_real),
            mean_d_fake: mean(&d_fake),
        })
    }

    /// One generator update through a frozen discriminator: gradients flow
    /// into D's buffers but only G's parameters step; D's buffers are
    /// zeroed afterwards.
    pub fn g_step(&mut self) -> Result<f64> {
        let noise = sample_noise(self.config.batch_size, self.config.noise_dim, &mut self.rng)?;
        let mut rec = ComputationRecord::new();
        let fake = self.generator.forward(&mut rec, &noise)?;
        let d_fake = self.discriminator.forward(&mut rec, &fake)?;
        let loss = generator_loss(&mut rec, &d_fake, self.config.loss_mode)?;
        let value = loss.item();
        rec.backward(&loss)?;
        self.adam_g.step(&self.generator.parameters())?;
        zero_grads(&self.discriminator.parameters());
        Ok(value)
    }

    /// Runs the configured number of epochs and finishes into a model.
    pub fn train(mut self) -> Result<GanModel> {
        let mut history = Vec::with_capacity(self.config.epochs);
        let n = self.rows.len();
        let m = self.config.batch_size;
        for epoch in 1..=self.config.epochs {
            let mut order: Vec<usize> = (0..n).collect();
            rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut self.rng);

            let mut d_stats: Vec<DStepStats> = Vec::new();
            let mut g_losses: Vec<f64> = Vec::new();
            let mut d_since_g = 0usize;
            for chunk in order.chunks(m) {
                if chunk.len() < m {
                    break;
                }
                let batch: Vec<Vec<f64>> = chunk.iter().map(|&i| self.rows[i].clone()).collect();
                let stats = self.d_step(&batch)?;
                if !stats.loss_d_paper_sign.is_finite() {
                    return Err(Error::TrainingDivergence {
                        epoch,
                        message: format!("discriminator loss is {}", stats.loss_d_paper_sign),
                    });
                }
                d_stats.push(stats);
                d_since_g += 1;
                if d_since_g == self.config.d_steps_per_g_step {
                    let g = self.g_step()?;
                    if !g.is_finite() {
                        return Err(Error::TrainingDivergence {
                            epoch,
                            message: format!("generator loss is {g}"),
                        });
                    }
                    g_losses.push(g);
                    d_since_g = 0;
                }
            }
            if d_since_g > 0 {
                g_losses.push(self.g_step()?);
            }

            let avg = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len().max(1) as f64;
            history.push(GanEpochStats {
                epoch,
                loss_d: avg(&d_stats.iter().map(|s| s.loss_d_paper_sign).collect::<Vec<_>>()),
                loss_g: avg(&g_losses),
                mean_d_real: avg(&d_stats.iter().map(|s| s.mean_d_real).collect::<Vec<_>>()),
                mean_d_fake: avg(&d_stats.iter().map(|s| s.mean_d_fake).collect::<Vec<_>>()),
            });
        }
        Ok(GanModel {
            n_features: self.n_features,
            generator: self.generator,
            discriminator: self.discriminator,
            normalizer: self.normalizer,
            history,
            config: self.config,
        })
    }
}

/// Trains an unconditional GAN on minority-class feature rows (original
/// units). Deterministic given the config seed.
pub fn train_gan(minority_features: &[Vec<f64>], config: GanConfig) -> Result<GanModel> {
    GanTrainer::new(minority_features, config)?.train()
}
