//! Central processing: the assertoric gate, tag-weighted decision, action
//! selection, categorical proxies, and the per-step agent pipeline that ties
//! every module together.

mod action;
mod agent;
mod decide;
mod gate;
mod proxy;

pub use action::{context_bucket, select_action, UtilitySpec};
pub use agent::{
    Agent, Channel, ChannelTagger, ChannelTrace, ContradictionPolicy, Head, ProfileSource, StepTrace,
    REALITY_SOURCE, PROBE_SOURCE,
};
pub use decide::{decide, Competitor, DecisionOutcome, TraceEntry};
pub use gate::{assertoric_priority, signal_strength};
pub use proxy::{bind_proxy, ProxyObject, RepStore};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{make_tag, DomainError, EpistemicTag};
use crate::perception::PerceptionError;
use crate::reality::RealityError;
use crate::simspace::SimError;
use crate::taggers::TaggerError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CpsError {
    #[error("decide needs at least one competitor")]
    EmptyCompetitors,
    #[error("no utilities for context bucket {0}")]
    UnknownBucket(String),
    #[error("dangling reference {0}")]
    DanglingReference(String),
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("{conflicts} conflict inputs but only {betas} betas")]
    ConflictCountMismatch { betas: usize, conflicts: usize },
    #[error("invalid utility spec: {0}")]
    InvalidUtility(String),
    #[error("invalid agent: {0}")]
    InvalidAgent(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error("perception: {0}")]
    Perception(#[from] PerceptionError),
    #[error("simspace: {0}")]
    Sim(#[from] SimError),
    #[error("tagger: {0}")]
    Tagger(#[from] TaggerError),
    #[error("reality: {0}")]
    Reality(#[from] RealityError),
}

/// How the tags of several taggers on one representation become one.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CombineRule {
    #[default]
    Product,
    Min,
    Mean,
}

/// Combined tag under `rule`; an empty tag set is fully reliable.
pub fn combine_tags(tags: &[EpistemicTag], rule: CombineRule, subject: &str) -> Result<EpistemicTag, CpsError> {
    let rs = tags.iter().map(EpistemicTag::reliability);
    let r = if tags.is_empty() {
        1.0
    } else {
        match rule {
            CombineRule::Product => rs.product(),
            CombineRule::Min => rs.fold(1.0, f64::min),
            CombineRule::Mean => rs.sum::<f64>() / tags.len() as f64,
        }
    };
    Ok(make_tag(r.clamp(0.0, 1.0), "combined", subject)?)
}
