//! Second-order estimators that attach epistemic tags to representations.
//!
//! Four training regimes are provided: supervised reliability estimation
//! (with ground truth from temporal averaging or cross-modal agreement),
//! temporal prediction error, Bayesian prior-times-likelihood scoring, and an
//! adversarially trained discriminator. Every tag goes through
//! [`make_tag`](crate::domain::make_tag), so reliabilities are always in `[0, 1]`.

mod adversarial;
mod bayes;
mod ground_truth;
mod supervised;
mod temporal;

use thiserror::Error;

use crate::domain::DomainError;
use crate::perception::PerceptionError;

pub use adversarial::{
    tag_discriminator, train_discriminator, DiscriminatorConfig, DiscriminatorTraining,
    Discriminator, GeneratorSpec,
};
pub use bayes::{tag_bayesian, BayesianScorer, Calibration, ScoreTerms};
pub use ground_truth::{
    calibrate_threshold, ground_truth_by_averaging, ground_truth_by_cross_modal, tag_cross_modal,
    AlignedRep, AlignmentHead, CrossModalLabel,
};
pub use supervised::{classification_accuracy, tag_supervised, train_supervised};
pub use temporal::{reliability_from_error, tag_stream, tag_temporal, GatedHistory, TemporalPredictor};

pub const SUPERVISED: &str = "supervised";
pub const TEMPORAL: &str = "temporal";
pub const BAYES: &str = "bayes";
pub const DISCRIMINATOR: &str = "discriminator";
pub const CROSSMODAL: &str = "crossmodal";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TaggerError {
    #[error("averaging window is empty")]
    EmptyWindow,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("representations live in different spaces ({0} vs {1})")]
    SpaceMismatch(String, String),
    #[error("history has {got} representations, predictor needs {expected}")]
    HistoryLengthMismatch { expected: usize, got: usize },
    #[error("invalid tagger parameters: {0}")]
    InvalidParams(String),
    #[error("training loss became non-finite")]
    NonFiniteLoss,
    #[error(transparent)]
    Perception(PerceptionError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

impl From<PerceptionError> for TaggerError {
    fn from(e: PerceptionError) -> Self {
        match e {
            PerceptionError::NonFiniteLoss { .. } => TaggerError::NonFiniteLoss,
            PerceptionError::DimensionMismatch { expected, got } => {
                TaggerError::DimMismatch { expected, got }
            }
            other => TaggerError::Perception(other),
        }
    }
}
