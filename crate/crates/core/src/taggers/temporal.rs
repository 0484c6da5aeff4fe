use serde::{Deserialize, Serialize};

use super::{TaggerError, TEMPORAL};
use crate::domain::{make_tag, EpistemicTag};
use crate::perception::{
    train_encoder, EncoderParams, PerceptualRepresentation, PredictedRepresentation, TrainConfig,
};

/// Predicts the next representation from the `k` previous ones and turns the
/// squared prediction error into reliability `exp(-err / tau)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalPredictor {
    pub params: EncoderParams,
    pub k: usize,
    pub tau: f64,
}

/// `exp(-err / tau)`: 1 for a perfect prediction, strictly decreasing in `err`.
pub fn reliability_from_error(err: f64, tau: f64) -> f64 {
    (-err / tau).exp()
}

impl TemporalPredictor {
    pub fn new(params: EncoderParams, k: usize, tau: f64) -> Result<Self, TaggerError> {
        let p = Self { params, k, tau };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TaggerError> {
        if self.k < 1 {
            return Err(TaggerError::InvalidParams("history length k must be >= 1".into()));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(TaggerError::InvalidParams(format!("tau must be positive, got {}", self.tau)));
        }
        let rep_dim = self.rep_dim();
        if rep_dim * self.k != self.params.input_dim() {
            return Err(TaggerError::InvalidParams(format!(
                "predictor input {} is not k={} times output {}",
                self.params.input_dim(),
                self.k,
                rep_dim
            )));
        }
        Ok(())
    }

    pub fn rep_dim(&self) -> usize {
        self.params.output_dim()
    }

    /// Fits a predictor on one clean trajectory of representations.
    pub fn fit(
        init: &EncoderParams,
        trajectory: &[Vec<f64>],
        k: usize,
        tau: f64,
        cfg: &TrainConfig,
    ) -> Result<Self, TaggerError> {
        let shell = Self::new(init.clone(), k, tau)?;
        if trajectory.len() <= k {
            return Err(TaggerError::EmptyWindow);
        }
        let data: Vec<(Vec<f64>, Vec<f64>)> = trajectory
            .windows(k + 1)
            .map(|w| (w[..k].concat(), w[k].clone()))
            .collect();
        let params = train_encoder(&shell.params, &data, cfg)?;
        Self::new(params, k, tau)
    }

    /// `ĥ` from a history ordered oldest first.
    pub fn predict_vectors(&self, history: &[&[f64]], for_t: u64) -> Result<PredictedRepresentation, TaggerError> {
        if history.len() != self.k {
            return Err(TaggerError::HistoryLengthMismatch {
                expected: self.k,
                got: history.len(),
            });
        }
        let input = history.concat();
        if input.len() != self.params.input_dim() {
            return Err(TaggerError::DimMismatch {
                expected: self.params.input_dim(),
                got: input.len(),
            });
        }
        Ok(PredictedRepresentation {
            vector: self.params.forward(&input)?,
            for_t,
        })
    }

    pub fn predict(&self, history: &[PerceptualRepresentation]) -> Result<PredictedRepresentation, TaggerError> {
        let for_t = history.last().map(|r| r.t + 1).unwrap_or(0);
        let views: Vec<&[f64]> = history.iter().map(|r| r.vector.as_slice()).collect();
        self.predict_vectors(&views, for_t)
    }

    /// `||current - predicted||^2`.
    pub fn prediction_error(predicted: &PredictedRepresentation, current: &[f64]) -> Result<f64, TaggerError> {
        if predicted.vector.len() != current.len() {
            return Err(TaggerError::DimMismatch {
                expected: predicted.vector.len(),
                got: current.len(),
            });
        }
        Ok(predicted
            .vector
            .iter()
            .zip(current)
            .map(|(p, c)| (c - p) * (c - p))
            .sum())
    }
}

pub fn tag_temporal(
    p: &TemporalPredictor,
    history: &[PerceptualRepresentation],
    current: &PerceptualRepresentation,
) -> Result<EpistemicTag, TaggerError> {
    let predicted = p.predict(history)?;
    let err = TemporalPredictor::prediction_error(&predicted, &current.vector)?;
    Ok(make_tag(reliability_from_error(err, p.tau), TEMPORAL, current.rep_id.clone())?)
}

/// Rolling history for online temporal tagging.
///
/// The first `k` frames only fill the history. After that every frame is
/// tagged against the prediction from the stored history; a frame whose
/// reliability falls below `gate` is kept out of the history and the
/// prediction is stored in its place, so one outlier does not spoil the
/// next `k` predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatedHistory {
    pub gate: f64,
    frames: Vec<Vec<f64>>,
}

impl GatedHistory {
    pub fn new(gate: f64) -> Self {
        Self { gate, frames: Vec::new() }
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    /// Returns `None` while the history is still filling.
    pub fn observe(&mut self, p: &TemporalPredictor, current: &[f64]) -> Result<Option<f64>, TaggerError> {
        if self.frames.len() < p.k {
            self.frames.push(current.to_vec());
            return Ok(None);
        }
        let views: Vec<&[f64]> = self.frames.iter().map(Vec::as_slice).collect();
        let predicted = p.predict_vectors(&views, 0)?;
        let err = TemporalPredictor::prediction_error(&predicted, current)?;
        let r = reliability_from_error(err, p.tau);
        self.frames.remove(0);
        self.frames.push(if r < self.gate { predicted.vector } else { current.to_vec() });
        Ok(Some(r))
    }
}

/// Runs a [`GatedHistory`] over a whole stream.
pub fn tag_stream(p: &TemporalPredictor, stream: &[Vec<f64>], gate: f64) -> Result<Vec<Option<f64>>, TaggerError> {
    let mut h = GatedHistory::new(gate);
    stream.iter().map(|x| h.observe(p, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::{Activation, Layer};

    fn repeat_last(dim: usize, k: usize, tau: f64) -> TemporalPredictor {
        // copies the newest history entry
        let mut w = vec![0.0; dim * dim * k];
        for i in 0..dim {
            w[i * dim * k + (k - 1) * dim + i] = 1.0;
        }
        let params = EncoderParams::from_layers(vec![Layer {
            weights: w,
            biases: vec![0.0; dim],
            activation: Activation::Identity,
        }])
        .unwrap();
        TemporalPredictor::new(params, k, tau).unwrap()
    }

    fn rep(t: u64, v: &[f64]) -> PerceptualRepresentation {
        PerceptualRepresentation { rep_id: format!("c@{t}"), vector: v.to_vec(), source_channel: "c".into(), t }
    }

    #[test]
    fn perfect_prediction_is_fully_reliable() {
        let p = repeat_last(2, 2, 0.5);
        let tag = tag_temporal(&p, &[rep(0, &[0.0, 0.0]), rep(1, &[1.0, 2.0])], &rep(2, &[1.0, 2.0])).unwrap();
        assert_eq!(tag.reliability(), 1.0);
        assert_eq!(tag.tagger_id(), "temporal");
    }

    #[test]
    fn error_equal_to_tau_gives_inverse_e() {
        let p = repeat_last(1, 1, 0.25);
        // err = 0.5^2 = 0.25 = tau
        let tag = tag_temporal(&p, &[rep(0, &[1.0])], &rep(1, &[1.5])).unwrap();
        assert!((tag.reliability() - (-1.0f64).exp()).abs() < 1e-15);
        assert!((tag.reliability() - 0.3679).abs() < 1e-4);
    }

    #[test]
    fn gated_history_skips_outliers() {
        let p = repeat_last(1, 1, 0.1);
        let stream = vec![vec![1.0], vec![1.0], vec![9.0], vec![1.0]];
        let tags = tag_stream(&p, &stream, 0.5).unwrap();
        assert_eq!(tags[0], None);
        assert_eq!(tags[1], Some(1.0));
        assert!(tags[2].unwrap() < 1e-10);
        // the outlier never entered the history
        assert_eq!(tags[3], Some(1.0));
        assert_eq!(tag_stream(&p, &stream, 0.0).unwrap()[3].map(|r| r < 1e-10), Some(true));
    }

    #[test]
    fn history_length_checked() {
        let p = repeat_last(1, 2, 1.0);
        assert_eq!(
            tag_temporal(&p, &[rep(0, &[1.0])], &rep(1, &[1.0])),
            Err(TaggerError::HistoryLengthMismatch { expected: 2, got: 1 })
        );
    }

    #[test]
    fn invalid_predictors() {
        let params = EncoderParams::identity(2);
        assert!(TemporalPredictor::new(params.clone(), 0, 1.0).is_err());
        assert!(TemporalPredictor::new(params.clone(), 1, 0.0).is_err());
        assert!(TemporalPredictor::new(params, 2, 1.0).is_err());
    }
}
