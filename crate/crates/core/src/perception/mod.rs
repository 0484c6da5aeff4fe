//! First-order perception: encoding signals into representations and
//! scoring candidate interpretations of them.

mod gradcheck;
mod network;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainError, SensorySignal};

pub use gradcheck::grad_check;
pub use network::{sigmoid, Activation, EncoderParams, ForwardCache, Gradients, Layer, Loss};
pub use train::{lipschitz_estimate, train_encoder, train_encoder_logged, TrainConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PerceptionError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("finite-difference step must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("training dataset is empty")]
    EmptyDataset,
    #[error("invalid network parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// A first-order representation `h(S)`: a point in the channel's
/// similarity space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerceptualRepresentation {
    pub rep_id: String,
    pub vector: Vec<f64>,
    pub source_channel: String,
    pub t: u64,
}

impl PerceptualRepresentation {
    pub fn new(rep_id: impl Into<String>, vector: Vec<f64>) -> Self {
        Self {
            rep_id: rep_id.into(),
            vector,
            source_channel: String::new(),
            t: 0,
        }
    }
}

/// Scores `f_i(S)`, one per candidate interpretation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretationScores {
    pub hypothesis_ids: Vec<String>,
    pub scores: Vec<f64>,
}

impl InterpretationScores {
    pub fn new(hypothesis_ids: Vec<String>, scores: Vec<f64>) -> Result<Self, PerceptionError> {
        if hypothesis_ids.len() != scores.len() {
            return Err(PerceptionError::DimensionMismatch {
                expected: hypothesis_ids.len(),
                got: scores.len(),
            });
        }
        if scores.iter().any(|s| !s.is_finite()) {
            return Err(PerceptionError::Domain(DomainError::NonFiniteValues));
        }
        Ok(Self {
            hypothesis_ids,
            scores,
        })
    }

    /// Highest-scoring hypothesis; ties go to the smallest id.
    pub fn best(&self) -> Option<(&str, f64)> {
        self.hypothesis_ids
            .iter()
            .zip(&self.scores)
            .fold(None, |best: Option<(&str, f64)>, (id, &s)| match best {
                Some((bid, bs)) if bs > s || (bs == s && bid <= id.as_str()) => Some((bid, bs)),
                _ => Some((id.as_str(), s)),
            })
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            hypothesis_ids: self.hypothesis_ids.clone(),
            scores: self.scores.iter().map(|s| s * factor).collect(),
        }
    }
}

/// `ĥ(S_t)`: what a temporal model expected to see at `for_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedRepresentation {
    pub vector: Vec<f64>,
    pub for_t: u64,
}

/// Runs the first-order network on a signal.
pub fn encode(
    params: &EncoderParams,
    signal: &SensorySignal,
) -> Result<PerceptualRepresentation, PerceptionError> {
    signal.validate()?;
    let vector = params.forward(&signal.values)?;
    Ok(PerceptualRepresentation {
        rep_id: format!("{}@{}", signal.channel_id, signal.t),
        vector,
        source_channel: signal.channel_id.clone(),
        t: signal.t,
    })
}

/// Scores every hypothesis with an interpretation head.
pub fn interpret(
    rep: &PerceptualRepresentation,
    hypotheses: &[String],
    head: &EncoderParams,
) -> Result<InterpretationScores, PerceptionError> {
    if head.output_dim() != hypotheses.len() {
        return Err(PerceptionError::DimensionMismatch {
            expected: hypotheses.len(),
            got: head.output_dim(),
        });
    }
    let scores = head.forward(&rep.vector)?;
    InterpretationScores::new(hypotheses.to_vec(), scores)
}
