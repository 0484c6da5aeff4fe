use serde::{Deserialize, Serialize};

use super::{TaggerError, BAYES};
use crate::domain::{make_tag, EpistemicTag};
use crate::perception::{sigmoid, EncoderParams, PerceptualRepresentation};

/// Maps an unnormalized log score onto `[0, 1]`:
/// `logistic((score - mid) / scale)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub mid: f64,
    pub scale: f64,
}

impl Default for Calibration {
    fn default() -> Self {
        Self { mid: 0.0, scale: 1.0 }
    }
}

impl Calibration {
    /// Standardizes against a validation set of scores (mean and standard deviation).
    pub fn fit(scores: &[f64]) -> Result<Self, TaggerError> {
        if scores.is_empty() {
            return Err(TaggerError::EmptyWindow);
        }
        let n = scores.len() as f64;
        let mid = scores.iter().sum::<f64>() / n;
        let var = scores.iter().map(|s| (s - mid).powi(2)).sum::<f64>() / n;
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        Ok(Self { mid, scale })
    }

    pub fn reliability(&self, log_score: f64) -> f64 {
        sigmoid((log_score - self.mid) / self.scale)
    }
}

/// The two factors of the unnormalized log posterior, Gaussian constants dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreTerms {
    pub log_prior: f64,
    pub log_likelihood: f64,
}

impl ScoreTerms {
    pub fn total(&self) -> f64 {
        self.log_prior + self.log_likelihood
    }
}

/// Scores a (latent, representation) pair with a Gaussian prior over latents
/// and a Gaussian likelihood around `likelihood_model(latent)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesianScorer {
    /// `(mean, precision)` per latent coordinate.
    pub prior: Vec<(f64, f64)>,
    pub likelihood_model: EncoderParams,
    pub noise_precision: f64,
    #[serde(default)]
    pub calibration: Calibration,
}

impl BayesianScorer {
    pub fn validate(&self) -> Result<(), TaggerError> {
        if self.prior.iter().any(|(m, p)| !m.is_finite() || !(*p > 0.0)) || !(self.noise_precision > 0.0) {
            return Err(TaggerError::InvalidParams("precisions must be positive".into()));
        }
        if self.prior.len() != self.likelihood_model.input_dim() {
            return Err(TaggerError::DimMismatch {
                expected: self.likelihood_model.input_dim(),
                got: self.prior.len(),
            });
        }
        Ok(())
    }

    pub fn log_prior(&self, latent: &[f64]) -> Result<f64, TaggerError> {
        if latent.len() != self.prior.len() {
            return Err(TaggerError::DimMismatch {
                expected: self.prior.len(),
                got: latent.len(),
            });
        }
        Ok(latent
            .iter()
            .zip(&self.prior)
            .map(|(x, (m, p))| -0.5 * p * (x - m) * (x - m))
            .sum())
    }

    pub fn log_likelihood(&self, latent: &[f64], rep: &[f64]) -> Result<f64, TaggerError> {
        let expected = self.likelihood_model.forward(latent)?;
        if expected.len() != rep.len() {
            return Err(TaggerError::DimMismatch {
                expected: expected.len(),
                got: rep.len(),
            });
        }
        let sq: f64 = expected.iter().zip(rep).map(|(e, r)| (r - e) * (r - e)).sum();
        Ok(-0.5 * self.noise_precision * sq)
    }

    pub fn score(&self, latent: &[f64], rep: &[f64]) -> Result<ScoreTerms, TaggerError> {
        self.validate()?;
        Ok(ScoreTerms {
            log_prior: self.log_prior(latent)?,
            log_likelihood: self.log_likelihood(latent, rep)?,
        })
    }

    /// Index of the best-scoring latent on a grid (first one on ties).
    pub fn argmax_on_grid(&self, grid: &[Vec<f64>], rep: &[f64]) -> Result<usize, TaggerError> {
        let mut best: Option<(usize, f64)> = None;
        for (i, latent) in grid.iter().enumerate() {
            let s = self.score(latent, rep)?.total();
            if best.is_none_or(|(_, b)| s > b) {
                best = Some((i, s));
            }
        }
        best.map(|(i, _)| i).ok_or(TaggerError::EmptyWindow)
    }
}

/// Returns the unnormalized log posterior and its calibrated tag.
pub fn tag_bayesian(
    b: &BayesianScorer,
    latent: &[f64],
    rep: &PerceptualRepresentation,
) -> Result<(f64, EpistemicTag), TaggerError> {
    let total = b.score(latent, &rep.vector)?.total();
    let tag = make_tag(b.calibration.reliability(total), BAYES, rep.rep_id.clone())?;
    Ok((total, tag))
}
