use serde::{Deserialize, Serialize};

use super::{TaggerError, DISCRIMINATOR};
use crate::domain::{make_tag, EpistemicTag};
use crate::perception::{sigmoid, train_encoder, EncoderParams, Loss, TrainConfig};
use crate::rng::RngStream;

/// `D(x) = P(real | x)` over sensory-percept tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discriminator {
    pub params: EncoderParams,
}

impl Discriminator {
    pub fn new(params: EncoderParams) -> Result<Self, TaggerError> {
        if params.output_dim() != 1 {
            return Err(TaggerError::DimMismatch {
                expected: 1,
                got: params.output_dim(),
            });
        }
        Ok(Self { params })
    }

    /// Always in `(0, 1)` for finite inputs of moderate size; saturates to
    /// the closed interval only when the logit overflows.
    pub fn prob_real(&self, tuple: &[f64]) -> Result<f64, TaggerError> {
        Ok(sigmoid(self.params.forward(tuple)?[0]))
    }
}

/// Maps latent draws `z ~ N(0, I)` to synthetic `(signal, representation)` tuples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub params: EncoderParams,
    pub latent_dim: usize,
    pub signal_dim: usize,
    pub rep_dim: usize,
}

impl GeneratorSpec {
    pub fn new(params: EncoderParams, signal_dim: usize, rep_dim: usize) -> Result<Self, TaggerError> {
        let g = Self {
            latent_dim: params.input_dim(),
            params,
            signal_dim,
            rep_dim,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), TaggerError> {
        if self.params.output_dim() != self.signal_dim + self.rep_dim {
            return Err(TaggerError::DimMismatch {
                expected: self.signal_dim + self.rep_dim,
                got: self.params.output_dim(),
            });
        }
        if self.params.input_dim() != self.latent_dim || self.latent_dim == 0 {
            return Err(TaggerError::InvalidParams("generator latent_dim mismatch".into()));
        }
        Ok(())
    }

    pub fn draw_latent(&self, rng: &mut RngStream) -> Vec<f64> {
        (0..self.latent_dim).map(|_| rng.normal(0.0, 1.0)).collect()
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<Vec<f64>, TaggerError> {
        let z = self.draw_latent(rng);
        Ok(self.params.forward(&z)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    #[serde(flatten)]
    pub train: TrainConfig,
    #[serde(default = "default_holdout")]
    pub holdout_fraction: f64,
    /// Also update the generator between discriminator epochs. Exploration
    /// only; not used by any acceptance scenario.
    #[serde(default)]
    pub alternate_generator: bool,
    #[serde(default = "default_gen_lr")]
    pub generator_learning_rate: f64,
}

fn default_holdout() -> f64 {
    0.25
}
fn default_gen_lr() -> f64 {
    0.01
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            holdout_fraction: default_holdout(),
            alternate_generator: false,
            generator_learning_rate: default_gen_lr(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorTraining {
    pub discriminator: Discriminator,
    pub generator: GeneratorSpec,
    pub initial_holdout_loss: f64,
    pub final_holdout_loss: f64,
    pub holdout_accuracy: f64,
}

fn holdout_metrics(d: &Discriminator, holdout: &[(Vec<f64>, Vec<f64>)]) -> Result<(f64, f64), TaggerError> {
    let mut loss = 0.0;
    let mut correct = 0usize;
    for (x, y) in holdout {
        loss += d.params.loss(x, y, Loss::Logistic)?;
        let p = d.prob_real(x)?;
        if (p > 0.5) == (y[0] > 0.5) {
            correct += 1;
        }
    }
    let n = holdout.len().max(1) as f64;
    Ok((loss / n, correct as f64 / n))
}

/// Trains the discriminator against a fixed generator (or, with
/// `alternate_generator`, a generator updated to fool it).
///
/// Real tuples are labelled 1 and an equal number of generator samples 0;
/// the shuffled pool is split into training and held-out parts.
pub fn train_discriminator(
    d: &Discriminator,
    g: &GeneratorSpec,
    real_tuples: &[Vec<f64>],
    cfg: &DiscriminatorConfig,
) -> Result<DiscriminatorTraining, TaggerError> {
    g.validate()?;
    let dim = d.params.input_dim();
    if g.params.output_dim() != dim {
        return Err(TaggerError::DimMismatch {
            expected: dim,
            got: g.params.output_dim(),
        });
    }
    if let Some(bad) = real_tuples.iter().find(|t| t.len() != dim) {
        return Err(TaggerError::DimMismatch { expected: dim, got: bad.len() });
    }
    if real_tuples.len() < 2 {
        return Err(TaggerError::EmptyWindow);
    }
    if !(0.0..1.0).contains(&cfg.holdout_fraction) {
        return Err(TaggerError::InvalidParams("holdout_fraction must lie in [0, 1)".into()));
    }

    let seed = cfg.train.seed;
    let mut gen_rng = RngStream::new(seed, "discriminator/generator");
    let mut pool: Vec<(Vec<f64>, Vec<f64>)> = real_tuples.iter().map(|x| (x.clone(), vec![1.0])).collect();
    for _ in 0..real_tuples.len() {
        pool.push((g.sample(&mut gen_rng)?, vec![0.0]));
    }
    RngStream::new(seed, "discriminator/split").shuffle(&mut pool);
    let n_hold = ((pool.len() as f64) * cfg.holdout_fraction).round() as usize;
    let (holdout, train) = pool.split_at(n_hold.min(pool.len() - 1));
    let mut train = train.to_vec();

    let (initial_holdout_loss, _) = holdout_metrics(d, holdout)?;
    let train_cfg = TrainConfig { loss: Loss::Logistic, ..cfg.train.clone() };
    let mut disc = d.clone();
    let mut generator = g.clone();

    if !cfg.alternate_generator {
        disc.params = train_encoder(&disc.params, &train, &train_cfg)?;
    } else {
        for epoch in 0..cfg.train.epochs {
            let epoch_cfg = TrainConfig { epochs: 1, seed: seed.wrapping_add(epoch as u64), ..train_cfg.clone() };
            disc.params = train_encoder(&disc.params, &train, &epoch_cfg)?;
            generator_step(&disc, &mut generator, train.len() / 2, cfg.generator_learning_rate, &mut gen_rng)?;
            for sample in train.iter_mut().filter(|(_, y)| y[0] == 0.0) {
                sample.0 = generator.sample(&mut gen_rng)?;
            }
        }
    }

    let (final_holdout_loss, holdout_accuracy) = holdout_metrics(&disc, holdout)?;
    if !final_holdout_loss.is_finite() {
        return Err(TaggerError::NonFiniteLoss);
    }
    Ok(DiscriminatorTraining {
        discriminator: disc,
        generator,
        initial_holdout_loss,
        final_holdout_loss,
        holdout_accuracy,
    })
}

/// One SGD step on the generator towards `D(G(z)) = 1`.
fn generator_step(
    d: &Discriminator,
    g: &mut GeneratorSpec,
    batch: usize,
    lr: f64,
    rng: &mut RngStream,
) -> Result<(), TaggerError> {
    let batch = batch.max(1);
    let mut acc = crate::perception::Gradients::zeros_like(&g.params);
    for _ in 0..batch {
        let z = g.draw_latent(rng);
        let g_cache = g.params.forward_cached(&z)?;
        let d_cache = d.params.forward_cached(g_cache.output())?;
        let d_out = Loss::Logistic.gradient(d_cache.output(), &[1.0]);
        let (_, d_input) = d.params.backward(&d_cache, &d_out);
        let (grads, _) = g.params.backward(&g_cache, &d_input);
        acc.add_scaled(&grads, 1.0 / batch as f64);
    }
    g.params.apply_gradients(&acc, lr);
    Ok(())
}

pub fn tag_discriminator(d: &Discriminator, tuple: &[f64], subject: &str) -> Result<EpistemicTag, TaggerError> {
    Ok(make_tag(d.prob_real(tuple)?, DISCRIMINATOR, subject)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::Activation;

    #[test]
    fn generator_shape_checked() {
        let p = EncoderParams::identity(2);
        assert!(GeneratorSpec::new(p.clone(), 1, 1).is_ok());
        assert!(GeneratorSpec::new(p, 2, 1).is_err());
    }

    #[test]
    fn discriminator_needs_scalar_output() {
        assert!(Discriminator::new(EncoderParams::identity(2)).is_err());
        let d = Discriminator::new(EncoderParams::zeros(&[2, 1], &[Activation::Identity]).unwrap()).unwrap();
        assert_eq!(d.prob_real(&[3.0, -1.0]).unwrap(), 0.5);
        assert_eq!(tag_discriminator(&d, &[0.0, 0.0], "r").unwrap().tagger_id(), "discriminator");
    }

    #[test]
    fn training_rejects_mismatched_tuples() {
        let d = Discriminator::new(EncoderParams::zeros(&[2, 1], &[Activation::Identity]).unwrap()).unwrap();
        let g = GeneratorSpec::new(EncoderParams::identity(2), 1, 1).unwrap();
        let err = train_discriminator(&d, &g, &[vec![1.0], vec![2.0]], &DiscriminatorConfig::default());
        assert!(matches!(err, Err(TaggerError::DimMismatch { .. })));
    }
}
