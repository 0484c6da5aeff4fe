//! Executable sentience audit: is a channel assertoric (high, persistent
//! priority) and qualitative (immediate, self-grounded, metric, distinct)?
//!
//! Four ablations each remove one ingredient; each must flip exactly the
//! sub-check it targets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cps::{assertoric_priority, Agent, ContradictionPolicy, CpsError, ProfileSource};
use crate::domain::{ConflictInput, SensorySignal};
use crate::perception::{encode, PerceptionError};
use crate::rng::RngStream;
use crate::simspace::{euclidean, validate_metric, SimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuditError {
    #[error("unknown channel {0}")]
    UnknownChannel(String),
    #[error("invalid audit config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Cps(#[from] CpsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    /// Non-ignorability threshold.
    pub epsilon: f64,
    /// Distinctiveness threshold.
    pub delta: f64,
    /// Required margin of `alpha(p)` over `epsilon`.
    #[serde(default = "default_ratio")]
    pub r_assertoric: f64,
    #[serde(default = "default_probes")]
    pub probe_count: usize,
    /// Size of the injected contradicting conflict.
    #[serde(default = "default_magnitude")]
    pub probe_magnitude: f64,
    /// Noise added to the probe stimulus.
    #[serde(default = "default_probe_noise")]
    pub probe_noise: f64,
    /// Scale of the Gaussian encoder perturbation for the self-grounding check.
    #[serde(default = "default_perturb")]
    pub perturb_scale: f64,
    #[serde(default = "default_metric_samples")]
    pub metric_samples: usize,
    /// Prototype that stands for the channel's own signal; defaults to the first.
    #[serde(default)]
    pub prototype: Option<String>,
    #[serde(default)]
    pub seed: u64,
}

fn default_ratio() -> f64 {
    crate::domain::DEFAULT_ASSERTORIC_RATIO
}
fn default_probes() -> usize {
    100
}
fn default_magnitude() -> f64 {
    100.0
}
fn default_probe_noise() -> f64 {
    0.05
}
fn default_perturb() -> f64 {
    0.1
}
fn default_metric_samples() -> usize {
    1000
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            epsilon: 0.5,
            delta: 0.05,
            r_assertoric: default_ratio(),
            probe_count: default_probes(),
            probe_magnitude: default_magnitude(),
            probe_noise: default_probe_noise(),
            perturb_scale: default_perturb(),
            metric_samples: default_metric_samples(),
            prototype: None,
            seed: 0,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<(), AuditError> {
        let positive = [
            ("epsilon", self.epsilon),
            ("delta", self.delta),
            ("r_assertoric", self.r_assertoric),
            ("probe_magnitude", self.probe_magnitude),
            ("perturb_scale", self.perturb_scale),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
            return Err(AuditError::InvalidConfig(format!("{name} must be positive, got {v}")));
        }
        if self.probe_count == 0 || self.metric_samples < 3 {
            return Err(AuditError::InvalidConfig("probe_count and metric_samples must be positive".into()));
        }
        if !(self.probe_noise >= 0.0) {
            return Err(AuditError::InvalidConfig("probe_noise must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertoricResult {
    pub pass: bool,
    /// Gate priority of a unit-strength signal with no conflict.
    pub alpha_p: f64,
    /// `epsilon * r_assertoric`.
    pub threshold: f64,
    pub margin: f64,
    pub dominance_pass: bool,
    /// Fraction of probes where the channel kept a positive score and its choice.
    pub persistence_rate: f64,
    pub persistence_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitativeResult {
    pub pass: bool,
    pub immediate: bool,
    pub self_grounded: bool,
    pub metric_valid: bool,
    pub distinctive: bool,
    /// Largest change of any profile entry under encoder perturbation.
    pub profile_shift: f64,
    pub metric_violations: usize,
    /// Smallest distance from the designated prototype to any other.
    pub min_distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub channel: String,
    pub assertoric: AssertoricResult,
    pub qualitative: QualitativeResult,
    pub verdict: bool,
}

pub const AUDIT_CSV_HEADER: &str =
    "channel,verdict,assertoric,alpha_p,persistence_rate,qualitative,immediate,self_grounded,metric_valid,distinctive,min_distance";

impl AuditResult {
    /// One line matching [`AUDIT_CSV_HEADER`].
    pub fn csv_line(&self) -> String {
        let q = &self.qualitative;
        let a = &self.assertoric;
        format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.channel,
            self.verdict,
            a.pass,
            a.alpha_p,
            a.persistence_rate,
            q.pass,
            q.immediate,
            q.self_grounded,
            q.metric_valid,
            q.distinctive,
            q.min_distance
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    /// `alpha = beta = 1`: the signal no longer dominates its conflicts.
    GateDominanceRemoved,
    /// Contradicting evidence zeroes the channel's tag.
    TagGatedSilencing,
    /// Profiles come from a fixed lookup table instead of the encoder.
    ExternalTableProfiles,
    /// Every encoder weight and bias set to zero: the space is one point.
    CollapsedSpace,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::GateDominanceRemoved,
        Ablation::TagGatedSilencing,
        Ablation::ExternalTableProfiles,
        Ablation::CollapsedSpace,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::GateDominanceRemoved => "gate-dominance-removed",
            Ablation::TagGatedSilencing => "tag-gated-silencing",
            Ablation::ExternalTableProfiles => "external-table-profiles",
            Ablation::CollapsedSpace => "collapsed-space",
        }
    }
}

pub fn apply_ablation(agent: &Agent, channel: &str, ablation: Ablation) -> Result<Agent, AuditError> {
    let mut a = agent.clone();
    let ch = a.channel_mut(channel).ok_or_else(|| AuditError::UnknownChannel(channel.to_string()))?;
    match ablation {
        Ablation::GateDominanceRemoved => {
            ch.gate.alpha = 1.0;
            ch.gate.betas.iter_mut().for_each(|b| *b = 1.0);
        }
        Ablation::TagGatedSilencing => a.contradiction = ContradictionPolicy::SilenceTag,
        Ablation::ExternalTableProfiles => {
            let encoded = ch.encoded_prototypes().map_err(AuditError::Cps)?;
            let rows: BTreeMap<String, Vec<f64>> = encoded
                .iter()
                .map(|p| (p.rep_id.clone(), encoded.iter().map(|q| euclidean(&p.vector, &q.vector)).collect()))
                .collect();
            ch.profile_source = ProfileSource::ExternalTable { rows };
        }
        Ablation::CollapsedSpace => {
            for layer in &mut ch.encoder.layers {
                layer.weights.iter_mut().for_each(|w| *w = 0.0);
                layer.biases.iter_mut().for_each(|b| *b = 0.0);
            }
        }
    }
    Ok(a)
}

fn designated(agent: &Agent, channel: &str, cfg: &AuditConfig) -> Result<(String, Vec<f64>), AuditError> {
    let ch = agent.channel(channel).ok_or_else(|| AuditError::UnknownChannel(channel.to_string()))?;
    let found = match &cfg.prototype {
        Some(id) => ch.prototypes.iter().find(|(p, _)| p == id),
        None => ch.prototypes.first(),
    };
    found
        .cloned()
        .ok_or_else(|| AuditError::InvalidConfig(format!("channel {channel} has no prototype {:?}", cfg.prototype)))
}

fn stimulus(channel: &str, t: u64, base: &[f64], noise: f64, rng: &mut RngStream) -> SensorySignal {
    SensorySignal::new(channel, t, base.iter().map(|x| x + rng.normal(0.0, noise)).collect())
}

pub fn check_assertoric(agent: &Agent, channel: &str, cfg: &AuditConfig) -> Result<AssertoricResult, AuditError> {
    cfg.validate()?;
    let ch = agent.channel(channel).ok_or_else(|| AuditError::UnknownChannel(channel.to_string()))?;
    let alpha_p = assertoric_priority(1.0, &[], &ch.gate)?;
    let threshold = cfg.epsilon * cfg.r_assertoric;
    let (_, base) = designated(agent, channel, cfg)?;
    let sources = ch.conflict_sources.clone();

    let mut rng = RngStream::new(cfg.seed, "audit/probes");
    let mut kept = 0usize;
    for _ in 0..cfg.probe_count {
        let signal = stimulus(channel, 0, &base, cfg.probe_noise, &mut rng);
        let mut clean = agent.clone();
        clean.reset(agent.belief.clone());
        let (_, baseline) = clean.step(std::slice::from_ref(&signal))?;

        let mut probed = agent.clone();
        probed.reset(agent.belief.clone());
        let probes: Vec<(String, ConflictInput)> = sources
            .iter()
            .map(|s| (channel.to_string(), ConflictInput::new(s.clone(), vec![-cfg.probe_magnitude; base.len()])))
            .collect();
        let (_, trace) = probed.step_with(std::slice::from_ref(&signal), &probes)?;
        let before = baseline.decision.within_source(channel).map(|(h, _)| h.to_string());
        let after = trace.decision.within_source(channel);
        if let (Some(b), Some((h, w))) = (before, after) {
            if w > 0.0 && h == b {
                kept += 1;
            }
        }
    }
    let persistence_rate = kept as f64 / cfg.probe_count as f64;
    let dominance_pass = alpha_p > threshold;
    let persistence_pass = persistence_rate >= 0.95;
    Ok(AssertoricResult {
        pass: dominance_pass && persistence_pass,
        alpha_p,
        threshold,
        margin: alpha_p - threshold,
        dominance_pass,
        persistence_rate,
        persistence_pass,
    })
}

pub fn check_qualitative(agent: &Agent, channel: &str, cfg: &AuditConfig) -> Result<QualitativeResult, AuditError> {
    cfg.validate()?;
    let ch = agent.channel(channel).ok_or_else(|| AuditError::UnknownChannel(channel.to_string()))?;
    let (proto_id, base) = designated(agent, channel, cfg)?;
    let signal = SensorySignal::new(channel, agent.belief.t, base.clone());

    // immediate: the profile is in the trace of the step that saw the signal
    let mut probe = agent.clone();
    probe.reset(agent.belief.clone());
    let (_, trace) = probe.step(std::slice::from_ref(&signal))?;
    let immediate = trace.channel(channel).is_some_and(|c| {
        c.profile_step == trace.t && c.profile.subject == c.rep_id && !c.profile.distances.is_empty()
    });

    // self-grounded: the profile moves when the agent's own encoder moves
    let rep = encode(&ch.encoder, &signal)?;
    let profile = ch.profile(&base, &rep)?;
    let mut perturbed = ch.clone();
    let mut rng = RngStream::new(cfg.seed, "audit/perturb");
    for layer in &mut perturbed.encoder.layers {
        layer.weights.iter_mut().for_each(|w| *w += rng.normal(0.0, cfg.perturb_scale));
        layer.biases.iter_mut().for_each(|b| *b += rng.normal(0.0, cfg.perturb_scale));
    }
    let moved = perturbed.profile(&base, &encode(&perturbed.encoder, &signal)?)?;
    let profile_shift = profile
        .distances
        .iter()
        .zip(&moved.distances)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let self_grounded = profile_shift > 1e-9;

    let report = validate_metric(&ch.space(), cfg.metric_samples, &mut RngStream::new(cfg.seed, "audit/metric"))?;
    let metric_valid = report.is_valid();

    let encoded = ch.encoded_prototypes()?;
    let own = encoded.iter().find(|p| p.rep_id == proto_id).expect("designated prototype is encoded");
    let min_distance = encoded
        .iter()
        .filter(|p| p.rep_id != proto_id)
        .map(|p| euclidean(&own.vector, &p.vector))
        .fold(f64::INFINITY, f64::min);
    if min_distance.is_infinite() {
        return Err(AuditError::InvalidConfig(format!(
            "channel {channel} needs a second prototype for the distinctiveness check"
        )));
    }
    let distinctive = min_distance > cfg.delta;

    Ok(QualitativeResult {
        pass: immediate && self_grounded && metric_valid && distinctive,
        immediate,
        self_grounded,
        metric_valid,
        distinctive,
        profile_shift,
        metric_violations: report.violations,
        min_distance,
    })
}

pub fn audit_sentience(agent: &Agent, channel: &str, cfg: &AuditConfig) -> Result<AuditResult, AuditError> {
    let assertoric = check_assertoric(agent, channel, cfg)?;
    let qualitative = check_qualitative(agent, channel, cfg)?;
    Ok(AuditResult {
        channel: channel.to_string(),
        verdict: assertoric.pass && qualitative.pass,
        assertoric,
        qualitative,
    })
}
