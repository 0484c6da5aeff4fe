use serde::{Deserialize, Serialize};

use super::network::{EncoderParams, Gradients, Loss};
use super::PerceptionError;
use crate::rng::RngStream;

/// Plain minibatch SGD settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch: usize,
    pub seed: u64,
    #[serde(default)]
    pub loss: Loss,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            epochs: 200,
            batch: 16,
            seed: 0,
            loss: Loss::Mse,
        }
    }
}

fn dataset_loss(
    params: &EncoderParams,
    dataset: &[(Vec<f64>, Vec<f64>)],
    loss: Loss,
) -> Result<f64, PerceptionError> {
    let mut total = 0.0;
    for (x, y) in dataset {
        total += params.loss(x, y, loss)?;
    }
    Ok(total / dataset.len() as f64)
}

/// Trains a copy of `params`; see [`train_encoder_logged`].
pub fn train_encoder(
    params: &EncoderParams,
    dataset: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<EncoderParams, PerceptionError> {
    train_encoder_logged(params, dataset, cfg).map(|(p, _)| p)
}

/// Trains a copy of `params` and returns it with the mean dataset loss
/// before training (index 0) and after every epoch.
///
/// Samples are visited in a fresh shuffled order each epoch, drawn from the
/// stream `(cfg.seed, "train")`.
pub fn train_encoder_logged(
    params: &EncoderParams,
    dataset: &[(Vec<f64>, Vec<f64>)],
    cfg: &TrainConfig,
) -> Result<(EncoderParams, Vec<f64>), PerceptionError> {
    if dataset.is_empty() {
        return Err(PerceptionError::EmptyDataset);
    }
    params.validate()?;
    for (x, y) in dataset {
        if x.len() != params.input_dim() || y.len() != params.output_dim() {
            return Err(PerceptionError::ShapeMismatch(format!(
                "sample ({} -> {}) does not fit network ({} -> {})",
                x.len(),
                y.len(),
                params.input_dim(),
                params.output_dim()
            )));
        }
    }

    let mut params = params.clone();
    let mut rng = RngStream::new(cfg.seed, "train");
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let batch = cfg.batch.max(1);

    let mut history = Vec::with_capacity(cfg.epochs + 1);
    let initial = dataset_loss(&params, dataset, cfg.loss)?;
    if !initial.is_finite() {
        return Err(PerceptionError::NonFiniteLoss { epoch: 0 });
    }
    history.push(initial);

    for epoch in 1..=cfg.epochs {
        rng.shuffle(&mut order);
        for chunk in order.chunks(batch) {
            let mut acc = Gradients::zeros_like(&params);
            for &i in chunk {
                let (x, y) = &dataset[i];
                let (_, g) = params.loss_and_gradients(x, y, cfg.loss)?;
                acc.add_scaled(&g, 1.0 / chunk.len() as f64);
            }
            params.apply_gradients(&acc, cfg.learning_rate);
        }
        let l = dataset_loss(&params, dataset, cfg.loss)?;
        if !l.is_finite() {
            return Err(PerceptionError::NonFiniteLoss { epoch });
        }
        history.push(l);
    }
    Ok((params, history))
}

/// Largest observed `|f(x) - f(x')| / |x - x'|` over the given pairs.
/// Pairs with coincident inputs are skipped.
pub fn lipschitz_estimate(
    params: &EncoderParams,
    pairs: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64, PerceptionError> {
    let mut best: f64 = 0.0;
    for (a, b) in pairs {
        let dx = euclid(a, b);
        if dx == 0.0 {
            continue;
        }
        let dy = euclid(&params.forward(a)?, &params.forward(b)?);
        best = best.max(dy / dx);
    }
    Ok(best)
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}
