use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{
    assertoric_priority, bind_proxy, combine_tags, context_bucket, decide, select_action, signal_strength, CombineRule,
    Competitor, CpsError, DecisionOutcome, RepStore, UtilitySpec,
};
use crate::domain::{make_tag, ConflictInput, EpistemicTag, GateParams, RealityBelief, SensorySignal};
use crate::perception::{encode, EncoderParams, InterpretationScores, PerceptualRepresentation};
use crate::reality::{conflict, precision_confidence, update_logged, FusionPolicy, Percept, UpdateBranch};
use crate::simspace::{euclidean, similarity_profile, SimilarityProfile, SimilaritySpace};
use crate::taggers::{
    tag_bayesian, tag_discriminator, tag_supervised, BayesianScorer, Discriminator, GatedHistory, TemporalPredictor,
    CROSSMODAL, TEMPORAL,
};

/// Conflict source fed by the Reality Model: minus the standardized
/// divergence between the percept and the current belief.
pub const REALITY_SOURCE: &str = "reality";
/// Conflict source used by the audit to inject contradicting evidence.
pub const PROBE_SOURCE: &str = "probe";

/// Turns a representation into interpretation scores `f_i(S)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Head {
    /// Softmax over the logits of a small network.
    Network { hypotheses: Vec<String>, params: EncoderParams },
    /// `exp(-d)` to each prototype; the hypotheses are the prototype ids.
    Profile,
}

/// Where a channel's similarity profiles come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileSource {
    /// Distances in the channel's own space to its encoded prototypes.
    Encoder,
    /// A fixed row per prototype, picked by the prototype nearest to the raw
    /// signal. Blind to the agent's own encoder.
    ExternalTable { rows: BTreeMap<String, Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ChannelTagger {
    /// Prediction error against a gated rolling history.
    Temporal { predictor: TemporalPredictor, gate: f64 },
    /// Agreement with the concurrent representation of `reference`.
    CrossModal { reference: String, tau: f64 },
    Supervised { estimator: EncoderParams },
    /// Scores the representation against the belief for the channel's
    /// variable (or the prior mean before one exists).
    Bayes { scorer: BayesianScorer },
    /// Scores the `(signal, representation)` tuple.
    Discriminator { discriminator: Discriminator },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ContradictionPolicy {
    /// Contradicting evidence only enters through the gate.
    #[default]
    Persist,
    /// A contradicting conflict input forces the channel's tag to zero.
    SilenceTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub id: String,
    pub encoder: EncoderParams,
    /// Reference stimuli in raw signal space, encoded afresh every step.
    pub prototypes: Vec<(String, Vec<f64>)>,
    pub profile_source: ProfileSource,
    pub head: Head,
    pub gate: GateParams,
    /// Conflict source for each gate beta, in order.
    pub conflict_sources: Vec<String>,
    pub taggers: Vec<ChannelTagger>,
    #[serde(default)]
    pub combine: CombineRule,
    /// Reality variable this channel reports on.
    pub variable: Option<String>,
}

impl Channel {
    pub fn space(&self) -> SimilaritySpace {
        SimilaritySpace::continuous(format!("{}-space", self.id), self.encoder.output_dim())
    }

    pub fn hypotheses(&self) -> Vec<String> {
        match &self.head {
            Head::Network { hypotheses, .. } => hypotheses.clone(),
            Head::Profile => self.prototypes.iter().map(|(id, _)| id.clone()).collect(),
        }
    }

    /// Prototypes passed through the channel's current encoder.
    pub fn encoded_prototypes(&self) -> Result<Vec<PerceptualRepresentation>, CpsError> {
        self.prototypes
            .iter()
            .map(|(id, x)| {
                Ok(PerceptualRepresentation {
                    rep_id: id.clone(),
                    vector: self.encoder.forward(x)?,
                    source_channel: self.id.clone(),
                    t: 0,
                })
            })
            .collect()
    }

    /// `SP(S)` for a representation of `raw`.
    pub fn profile(&self, raw: &[f64], rep: &PerceptualRepresentation) -> Result<SimilarityProfile, CpsError> {
        match &self.profile_source {
            ProfileSource::Encoder => Ok(similarity_profile(&self.space(), rep, &self.encoded_prototypes()?)?),
            ProfileSource::ExternalTable { rows } => {
                let (nearest, _) = self
                    .prototypes
                    .iter()
                    .map(|(id, x)| (id, euclidean(x, raw)))
                    .fold(None, |best: Option<(&String, f64)>, (id, d)| match best {
                        Some((_, bd)) if bd <= d => best,
                        _ => Some((id, d)),
                    })
                    .ok_or_else(|| CpsError::InvalidAgent(format!("channel {} has no prototypes", self.id)))?;
                let row = rows
                    .get(nearest)
                    .ok_or_else(|| CpsError::DanglingReference(format!("table row {nearest}")))?;
                Ok(SimilarityProfile {
                    subject: rep.rep_id.clone(),
                    reference_ids: self.prototypes.iter().map(|(id, _)| id.clone()).collect(),
                    distances: row.clone(),
                })
            }
        }
    }

    /// Interpretation scores of a point in the channel's representation space.
    pub fn scores(&self, vector: &[f64]) -> Result<InterpretationScores, CpsError> {
        match &self.head {
            Head::Network { hypotheses, params } => {
                let logits = params.forward(vector)?;
                Ok(InterpretationScores::new(hypotheses.clone(), softmax(&logits))?)
            }
            Head::Profile => {
                let rep = PerceptualRepresentation::new("probe", vector.to_vec());
                let profile = similarity_profile(&self.space(), &rep, &self.encoded_prototypes()?)?;
                Ok(InterpretationScores::new(
                    profile.reference_ids,
                    profile.distances.iter().map(|d| (-d).exp()).collect(),
                )?)
            }
        }
    }

    /// Scores read off an already computed profile.
    fn scores_from_profile(&self, profile: &SimilarityProfile, vector: &[f64]) -> Result<InterpretationScores, CpsError> {
        match self.head {
            Head::Profile => Ok(InterpretationScores::new(
                profile.reference_ids.clone(),
                profile.distances.iter().map(|d| (-d).exp()).collect(),
            )?),
            Head::Network { .. } => self.scores(vector),
        }
    }

    fn validate(&self) -> Result<(), CpsError> {
        let bad = |msg: String| Err(CpsError::InvalidAgent(format!("channel {}: {msg}", self.id)));
        self.encoder.validate()?;
        self.gate.validate()?;
        if self.prototypes.is_empty() {
            return bad("needs at least one prototype".into());
        }
        if let Some((id, _)) = self.prototypes.iter().find(|(_, x)| x.len() != self.encoder.input_dim()) {
            return bad(format!("prototype {id} does not match the encoder input"));
        }
        let mut seen = BTreeSet::new();
        if let Some((id, _)) = self.prototypes.iter().find(|(id, _)| !seen.insert(id)) {
            return bad(format!("duplicate prototype {id}"));
        }
        if self.conflict_sources.len() != self.gate.betas.len() {
            return bad(format!(
                "{} conflict sources for {} betas",
                self.conflict_sources.len(),
                self.gate.betas.len()
            ));
        }
        if let Head::Network { hypotheses, params } = &self.head {
            params.validate()?;
            if params.input_dim() != self.encoder.output_dim() || params.output_dim() != hypotheses.len() {
                return bad("head does not fit encoder output and hypotheses".into());
            }
        }
        if let ProfileSource::ExternalTable { rows } = &self.profile_source {
            for (id, _) in &self.prototypes {
                match rows.get(id) {
                    Some(r) if r.len() == self.prototypes.len() => {}
                    _ => return bad(format!("external table row {id} missing or short")),
                }
            }
        }
        for t in &self.taggers {
            match t {
                ChannelTagger::Temporal { predictor, .. } => {
                    predictor.validate()?;
                    if predictor.rep_dim() != self.encoder.output_dim() {
                        return bad("temporal predictor does not match representation".into());
                    }
                }
                ChannelTagger::CrossModal { tau, .. } if !(*tau > 0.0) => return bad("cross-modal tau must be positive".into()),
                ChannelTagger::Supervised { estimator } if estimator.input_dim() != self.encoder.output_dim() => {
                    return bad("supervised estimator does not match representation".into())
                }
                ChannelTagger::Bayes { scorer } => scorer.validate()?,
                _ => {}
            }
        }
        Ok(())
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Everything one channel contributed to a step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTrace {
    pub channel_id: String,
    pub signal: Vec<f64>,
    pub rep_id: String,
    pub rep: Vec<f64>,
    pub profile: SimilarityProfile,
    /// Step at which `profile` was computed.
    pub profile_step: u64,
    pub label: String,
    pub tags: Vec<EpistemicTag>,
    pub combined_tag: f64,
    /// Tag after the contradiction policy; the one used downstream.
    pub effective_tag: f64,
    pub silenced: bool,
    pub strength: f64,
    pub conflicts: Vec<ConflictInput>,
    pub priority: f64,
    pub scores: InterpretationScores,
    /// Within-channel interpretation: argmax of the unweighted scores.
    pub percept_choice: String,
    pub reality_conflict: Option<f64>,
    pub update_branch: Option<UpdateBranch>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefEntry {
    pub variable: String,
    pub mean: Vec<f64>,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub t: u64,
    pub channels: Vec<ChannelTrace>,
    pub beliefs: Vec<BeliefEntry>,
    pub decision: DecisionOutcome,
    pub context: String,
    pub action: String,
}

impl StepTrace {
    pub fn channel(&self, id: &str) -> Option<&ChannelTrace> {
        self.channels.iter().find(|c| c.channel_id == id)
    }
}

/// An agent: channels, a Reality Model, and a utility table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub channels: Vec<Channel>,
    pub belief: RealityBelief,
    pub policy: FusionPolicy,
    pub utility: UtilitySpec,
    #[serde(default)]
    pub contradiction: ContradictionPolicy,
    /// Conflict scalars below `-contradiction_threshold` count as contradicting.
    pub contradiction_threshold: f64,
    #[serde(skip)]
    histories: BTreeMap<String, GatedHistory>,
    #[serde(skip)]
    store: RepStore,
}

impl Agent {
    pub fn new(
        channels: Vec<Channel>,
        belief: RealityBelief,
        policy: FusionPolicy,
        utility: UtilitySpec,
    ) -> Result<Self, CpsError> {
        let agent = Self {
            channels,
            belief,
            policy,
            utility,
            contradiction: ContradictionPolicy::Persist,
            contradiction_threshold: 1.0,
            histories: BTreeMap::new(),
            store: RepStore::new(),
        };
        agent.validate()?;
        Ok(agent)
    }

    pub fn validate(&self) -> Result<(), CpsError> {
        self.policy.validate()?;
        self.utility.validate()?;
        let ids: BTreeSet<&str> = self.channels.iter().map(|c| c.id.as_str()).collect();
        if ids.len() != self.channels.len() {
            return Err(CpsError::InvalidAgent("duplicate channel id".into()));
        }
        for c in &self.channels {
            c.validate()?;
            for t in &c.taggers {
                if let ChannelTagger::CrossModal { reference, .. } = t {
                    if !ids.contains(reference.as_str()) {
                        return Err(CpsError::UnknownChannel(reference.clone()));
                    }
                }
            }
            for h in c.hypotheses() {
                if !self.utility.utility_table.contains_key(&h) {
                    return Err(CpsError::UnknownBucket(h));
                }
            }
        }
        Ok(())
    }

    pub fn channel(&self, id: &str) -> Option<&Channel> {
        self.channels.iter().find(|c| c.id == id)
    }

    pub fn channel_mut(&mut self, id: &str) -> Option<&mut Channel> {
        self.channels.iter_mut().find(|c| c.id == id)
    }

    /// Forgets temporal histories and resets the belief.
    pub fn reset(&mut self, belief: RealityBelief) {
        self.belief = belief;
        self.histories.clear();
        self.store.clear();
    }

    pub fn step(&mut self, frame: &[SensorySignal]) -> Result<(String, StepTrace), CpsError> {
        self.step_with(frame, &[])
    }

    /// One pass of the pipeline over all signals of one time step.
    ///
    /// `extra` adds conflict inputs as `(channel, input)`; an input whose
    /// source matches one of the channel's conflict sources replaces the
    /// value that source would otherwise have.
    pub fn step_with(
        &mut self,
        frame: &[SensorySignal],
        extra: &[(String, ConflictInput)],
    ) -> Result<(String, StepTrace), CpsError> {
        let t = frame.first().map(|s| s.t).unwrap_or(self.belief.t);
        let mut by_channel: BTreeMap<&str, SensorySignal> = BTreeMap::new();
        for s in frame {
            if s.t != t {
                return Err(CpsError::InvalidAgent(format!("frame mixes steps {t} and {}", s.t)));
            }
            if self.channel(&s.channel_id).is_none() {
                return Err(CpsError::UnknownChannel(s.channel_id.clone()));
            }
            if by_channel.insert(&s.channel_id, s.for_agent()).is_some() {
                return Err(CpsError::InvalidAgent(format!("channel {} appears twice in one frame", s.channel_id)));
            }
        }
        self.store.clear();

        // encode and profile
        let mut traces = Vec::new();
        let mut reps: BTreeMap<String, PerceptualRepresentation> = BTreeMap::new();
        for ch in &self.channels {
            let Some(sig) = by_channel.get(ch.id.as_str()) else { continue };
            let rep = encode(&ch.encoder, sig)?;
            let profile = ch.profile(&sig.values, &rep)?;
            let label = profile.nearest().map(|(id, _)| id.to_string()).unwrap_or_default();
            self.store.insert_rep(rep.clone());
            self.store.insert_profile(format!("profile:{}", rep.rep_id), profile.clone());
            reps.insert(ch.id.clone(), rep.clone());
            let scores = ch.scores_from_profile(&profile, &rep.vector)?;
            let percept_choice = scores.best().map(|(h, _)| h.to_string()).unwrap_or_default();
            traces.push(ChannelTrace {
                channel_id: ch.id.clone(),
                signal: sig.values.clone(),
                rep_id: rep.rep_id.clone(),
                rep: rep.vector.clone(),
                profile,
                profile_step: t,
                label,
                tags: Vec::new(),
                combined_tag: 1.0,
                effective_tag: 1.0,
                silenced: false,
                strength: signal_strength(&sig.values),
                conflicts: Vec::new(),
                priority: 0.0,
                scores,
                percept_choice,
                reality_conflict: None,
                update_branch: None,
            });
        }

        // tag, gate
        let mut effective_tags = Vec::with_capacity(traces.len());
        for tr in &mut traces {
            let ch = self.channels.iter().find(|c| c.id == tr.channel_id).expect("trace channel exists");
            let rep = &reps[&ch.id];
            for tagger in &ch.taggers {
                let tag = match tagger {
                    ChannelTagger::Temporal { predictor, gate } => {
                        let h = self.histories.entry(ch.id.clone()).or_insert_with(|| GatedHistory::new(*gate));
                        match h.observe(predictor, &rep.vector)? {
                            Some(r) => Some(make_tag(r, TEMPORAL, rep.rep_id.clone())?),
                            None => None,
                        }
                    }
                    ChannelTagger::CrossModal { reference, tau } => match reps.get(reference) {
                        Some(other) if other.vector.len() == rep.vector.len() => {
                            let d2 = euclidean(&rep.vector, &other.vector).powi(2);
                            Some(make_tag((-d2 / tau).exp(), CROSSMODAL, rep.rep_id.clone())?)
                        }
                        Some(_) => return Err(CpsError::InvalidAgent(format!("{} and {reference} differ in dimension", ch.id))),
                        None => None,
                    },
                    ChannelTagger::Supervised { estimator } => Some(tag_supervised(estimator, rep)?),
                    ChannelTagger::Bayes { scorer } => {
                        let prior_mean: Vec<f64> = scorer.prior.iter().map(|(m, _)| *m).collect();
                        let latent = ch
                            .variable
                            .as_deref()
                            .and_then(|v| self.belief.get(v))
                            .map(|e| e.mean.clone())
                            .filter(|m| m.len() == prior_mean.len())
                            .unwrap_or(prior_mean);
                        Some(tag_bayesian(scorer, &latent, rep)?.1)
                    }
                    ChannelTagger::Discriminator { discriminator } => {
                        let tuple = [tr.signal.as_slice(), rep.vector.as_slice()].concat();
                        Some(tag_discriminator(discriminator, &tuple, &rep.rep_id)?)
                    }
                };
                tr.tags.extend(tag);
            }
            let combined = combine_tags(&tr.tags, ch.combine, &rep.rep_id)?;
            tr.combined_tag = combined.reliability();

            let mut conflicts = Vec::with_capacity(ch.conflict_sources.len());
            for src in &ch.conflict_sources {
                let injected = extra.iter().find(|(c, inp)| *c == ch.id && inp.source_id == *src);
                let input = if let Some((_, inp)) = injected {
                    inp.clone()
                } else if src == REALITY_SOURCE {
                    match ch.variable.as_deref().filter(|v| self.belief.get(v).is_some()) {
                        Some(v) => {
                            let c = conflict(&self.belief, v, &rep.vector)?;
                            tr.reality_conflict = Some(c);
                            ConflictInput::new(src.clone(), vec![-c])
                        }
                        None => ConflictInput::new(src.clone(), vec![0.0]),
                    }
                } else {
                    ConflictInput::new(src.clone(), vec![0.0])
                };
                conflicts.push(input);
            }
            tr.priority = assertoric_priority(tr.strength, &conflicts, &ch.gate)?;
            tr.silenced = self.contradiction == ContradictionPolicy::SilenceTag
                && conflicts.iter().any(|c| c.scalar() < -self.contradiction_threshold);
            tr.conflicts = conflicts;
            let effective = if tr.silenced { make_tag(0.0, "combined", rep.rep_id.clone())? } else { combined };
            tr.effective_tag = effective.reliability();
            effective_tags.push(effective);
        }

        // reality update
        let mut percepts = Vec::new();
        let mut percept_owner = Vec::new();
        for (i, tr) in traces.iter().enumerate() {
            let ch = self.channel(&tr.channel_id).expect("trace channel exists");
            if let Some(v) = &ch.variable {
                percepts.push(Percept { variable_id: v.clone(), value: tr.rep.clone(), tag: effective_tags[i].clone() });
                percept_owner.push(i);
            }
        }
        let (belief, branches) = update_logged(&self.belief, &percepts, &self.policy)?;
        self.belief = belief;
        for (i, b) in percept_owner.into_iter().zip(branches) {
            traces[i].update_branch = Some(b);
        }

        // decide, act
        let mut competitors = Vec::new();
        for (tr, tag) in traces.iter().zip(effective_tags) {
            let proxy = bind_proxy(&self.store, &tr.rep_id, tag, tr.label.clone(), &format!("profile:{}", tr.rep_id))?;
            competitors.push(Competitor {
                source_id: tr.channel_id.clone(),
                scores: tr.scores.scaled(tr.priority),
                tag: proxy.tag().clone(),
            });
        }
        for (var, est) in &self.belief.estimates {
            let Some(ch) = self.channels.iter().find(|c| c.variable.as_deref() == Some(var.as_str())) else {
                continue;
            };
            competitors.push(Competitor {
                source_id: format!("{REALITY_SOURCE}:{var}"),
                scores: ch.scores(&est.mean)?,
                tag: make_tag(precision_confidence(est.precision), REALITY_SOURCE, var.clone())?,
            });
        }
        let decision = decide(&competitors)?;
        let context = context_bucket(&decision).to_string();
        let action = select_action(&self.utility, &context)?;
        let beliefs = self
            .belief
            .estimates
            .iter()
            .map(|(v, e)| BeliefEntry { variable: v.clone(), mean: e.mean.clone(), precision: e.precision })
            .collect();
        Ok((action.clone(), StepTrace { t, channels: traces, beliefs, decision, context, action }))
    }
}
