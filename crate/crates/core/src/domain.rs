//! Value types shared by every stage of the pipeline.
//!
//! Everything here is immutable once constructed. Validation happens at the
//! boundary (`validate`, [`make_tag`]) so downstream code can assume finite
//! values and in-range reliabilities.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("reliability {0} is outside [0, 1]")]
    ReliabilityOutOfRange(f64),
    #[error("epistemic tag subject is empty")]
    EmptySubject,
    #[error("signal values contain NaN or infinity")]
    NonFiniteValues,
    #[error("signal value vector is empty")]
    EmptyVector,
    #[error("conflict weight hint {0} is negative")]
    NegativeWeightHint(f64),
    #[error("gate parameter {name} = {value} is negative")]
    NegativeGateParam { name: &'static str, value: f64 },
    #[error("precision {0} must be positive and finite")]
    NonPositivePrecision(f64),
}

/// Where a signal really came from. Only environments know this; the agent
/// always sees [`Origin::Unknown`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    External,
    InternallyGenerated,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorySignal {
    pub channel_id: String,
    pub t: u64,
    pub values: Vec<f64>,
    pub origin: Origin,
}

impl SensorySignal {
    /// An agent-facing signal; origin is always `Unknown`.
    pub fn new(channel_id: impl Into<String>, t: u64, values: Vec<f64>) -> Self {
        Self {
            channel_id: channel_id.into(),
            t,
            values,
            origin: Origin::Unknown,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        validate_values(&self.values)
    }

    /// Copy of this signal with the ground-truth label stripped.
    pub fn for_agent(&self) -> Self {
        Self {
            origin: Origin::Unknown,
            ..self.clone()
        }
    }
}

/// Checks a raw value vector: non-empty and finite.
pub fn validate_signal(signal: &SensorySignal) -> Result<(), DomainError> {
    signal.validate()
}

pub(crate) fn validate_values(values: &[f64]) -> Result<(), DomainError> {
    if values.is_empty() {
        return Err(DomainError::EmptyVector);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(DomainError::NonFiniteValues);
    }
    Ok(())
}

/// Evidence from some other source that may contradict a signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictInput {
    pub source_id: String,
    pub values: Vec<f64>,
    #[serde(default)]
    pub weight_hint: f64,
}

impl ConflictInput {
    pub fn new(source_id: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            source_id: source_id.into(),
            values,
            weight_hint: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        validate_values(&self.values)?;
        if !(self.weight_hint >= 0.0) {
            return Err(DomainError::NegativeWeightHint(self.weight_hint));
        }
        Ok(())
    }

    /// Scalar reduction used by the priority gate: the mean of the vector.
    pub fn scalar(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClampMode {
    /// `max(sum, 1)`: the signal can never be pushed below unit priority.
    #[default]
    FloorOne,
    /// `min(sum, 1)`: normalized variant.
    CapOne,
}

/// Default ratio by which the signal coefficient must dominate every
/// conflict coefficient for a gate to count as assertoric.
pub const DEFAULT_ASSERTORIC_RATIO: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateParams {
    pub alpha: f64,
    #[serde(default)]
    pub betas: Vec<f64>,
    #[serde(default, rename = "clamp")]
    pub clamp_mode: ClampMode,
}

impl GateParams {
    pub fn new(alpha: f64, betas: Vec<f64>, clamp_mode: ClampMode) -> Self {
        Self {
            alpha,
            betas,
            clamp_mode,
        }
    }

    pub fn validate(&self) -> Result<(), DomainError> {
        if !(self.alpha >= 0.0) || !self.alpha.is_finite() {
            return Err(DomainError::NegativeGateParam {
                name: "alpha",
                value: self.alpha,
            });
        }
        if let Some(&b) = self.betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(DomainError::NegativeGateParam {
                name: "beta",
                value: b,
            });
        }
        Ok(())
    }

    pub fn max_beta(&self) -> f64 {
        self.betas.iter().copied().fold(0.0, f64::max)
    }

    /// `alpha >= ratio * max(betas)`.
    pub fn is_assertoric(&self, ratio: f64) -> bool {
        self.alpha >= ratio * self.max_beta()
    }
}

/// Second-order reliability attached to one perceptual representation.
///
/// Fields are private so that every tag in the system went through
/// [`make_tag`] and carries a reliability in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpistemicTag {
    reliability: f64,
    tagger_id: String,
    subject: String,
}

impl EpistemicTag {
    pub fn reliability(&self) -> f64 {
        self.reliability
    }

    pub fn tagger_id(&self) -> &str {
        &self.tagger_id
    }

    pub fn subject(&self) -> &str {
        &self.subject
    }
}

/// Builds a tag. Out-of-range reliabilities are rejected, never clamped.
pub fn make_tag(
    reliability: f64,
    tagger_id: impl Into<String>,
    subject: impl Into<String>,
) -> Result<EpistemicTag, DomainError> {
    let subject = subject.into();
    if subject.is_empty() {
        return Err(DomainError::EmptySubject);
    }
    if !(0.0..=1.0).contains(&reliability) {
        return Err(DomainError::ReliabilityOutOfRange(reliability));
    }
    Ok(EpistemicTag {
        reliability,
        tagger_id: tagger_id.into(),
        subject,
    })
}

/// One entry of the reality model: a mean vector with scalar precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: Vec<f64>,
    pub precision: f64,
}

impl Estimate {
    pub fn new(mean: Vec<f64>, precision: f64) -> Result<Self, DomainError> {
        validate_values(&mean)?;
        if !(precision > 0.0) || !precision.is_finite() {
            return Err(DomainError::NonPositivePrecision(precision));
        }
        Ok(Self { mean, precision })
    }
}

/// The agent's belief about the world at step `t`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RealityBelief {
    pub t: u64,
    pub estimates: BTreeMap<String, Estimate>,
}

impl RealityBelief {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_estimate(mut self, variable: impl Into<String>, estimate: Estimate) -> Self {
        self.estimates.insert(variable.into(), estimate);
        self
    }

    pub fn get(&self, variable: &str) -> Option<&Estimate> {
        self.estimates.get(variable)
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Origin::External => "external",
            Origin::InternallyGenerated => "internally_generated",
            Origin::Unknown => "unknown",
        };
        f.write_str(s)
    }
}
