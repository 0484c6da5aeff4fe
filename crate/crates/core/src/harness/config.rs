//! Run configuration (TOML) and construction of an agent from it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::audit::{Ablation, AuditConfig};
use crate::cps::{
    Agent, Channel, ChannelTagger, CombineRule, ContradictionPolicy, Head, ProfileSource, UtilitySpec,
};
use crate::domain::{Estimate, GateParams, Origin, RealityBelief};
use crate::envs::{gen_episode, EnvSpec, Episode};
use crate::perception::{encode, train_encoder, Activation, EncoderParams, Layer, TrainConfig};
use crate::reality::FusionPolicy;
use crate::rng::RngStream;
use crate::taggers::{
    train_discriminator, train_supervised, BayesianScorer, Calibration, Discriminator, DiscriminatorConfig,
    GeneratorSpec, TemporalPredictor,
};

/// Offset between the run seed and the seed of the episode used to train
/// taggers and predictors, so training never sees the evaluation draws.
pub const TRAIN_SEED_OFFSET: u64 = 1_000_003;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    /// Label used in reports; defaults to `name`.
    #[serde(default)]
    pub scenario: Option<String>,
    /// The only seed of a run. Overrides `env.seed`.
    pub seed: u64,
    /// Output subdirectory under the output root; defaults to `name`.
    #[serde(default)]
    pub output_dir: Option<String>,
    pub env: EnvSpec,
    pub agent: AgentConfig,
    #[serde(default)]
    pub metrics: MetricsConfig,
    #[serde(default)]
    pub audit: Option<AuditSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    pub channels: Vec<ChannelConfig>,
    #[serde(default)]
    pub policy: FusionPolicy,
    pub utility: UtilityConfig,
    #[serde(default)]
    pub contradiction: ContradictionPolicy,
    #[serde(default = "one")]
    pub contradiction_threshold: f64,
    #[serde(default)]
    pub beliefs: Vec<BeliefConfig>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeliefConfig {
    pub variable: String,
    pub mean: Vec<f64>,
    pub precision: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilityConfig {
    pub actions: Vec<String>,
    /// bucket -> action -> utility
    pub table: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrototypeConfig {
    pub id: String,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub id: String,
    pub encoder: EncoderConfig,
    pub prototypes: Vec<PrototypeConfig>,
    pub head: HeadConfig,
    pub gate: GateParams,
    #[serde(default)]
    pub conflict_sources: Vec<String>,
    #[serde(default)]
    pub taggers: Vec<TaggerConfig>,
    #[serde(default)]
    pub combine: CombineRule,
    #[serde(default)]
    pub variable: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EncoderConfig {
    Identity {
        dim: usize,
    },
    /// Randomly initialized network; `seed` defaults to the run seed.
    Random {
        dims: Vec<usize>,
        activations: Vec<Activation>,
        #[serde(default)]
        seed: Option<u64>,
    },
    Layers {
        layers: Vec<Layer>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum HeadConfig {
    /// `exp(-d)` to each prototype.
    Profile,
    /// Two-way head ("different", "same") trained on uniform pairs in
    /// `[lo, hi]^2`, labelled "different" when `|x0 - x1| > threshold`.
    LengthRule {
        threshold: f64,
        #[serde(default = "default_hidden")]
        hidden: usize,
        #[serde(default = "default_lo")]
        lo: f64,
        #[serde(default = "default_hi")]
        hi: f64,
        #[serde(default = "default_samples")]
        samples: usize,
        #[serde(default = "default_head_epochs")]
        epochs: usize,
    },
    Layers {
        hypotheses: Vec<String>,
        layers: Vec<Layer>,
    },
}

fn default_hidden() -> usize {
    8
}
fn default_lo() -> f64 {
    0.5
}
fn default_hi() -> f64 {
    1.5
}
fn default_samples() -> usize {
    2000
}
fn default_head_epochs() -> usize {
    200
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    /// Linear predictor fitted on a clean training episode.
    #[default]
    Fit,
    /// Predicts that the newest frame repeats.
    RepeatLast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum TaggerConfig {
    Temporal {
        k: usize,
        tau: f64,
        #[serde(default = "default_gate")]
        gate: f64,
        #[serde(default)]
        predictor: PredictorKind,
        #[serde(default = "default_tagger_epochs")]
        epochs: usize,
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_train_horizon")]
        train_horizon: usize,
    },
    Crossmodal {
        reference: String,
        tau: f64,
    },
    /// Logistic estimator trained on a training episode labelled by origin.
    Supervised {
        #[serde(default = "default_tagger_epochs")]
        epochs: usize,
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_train_horizon")]
        train_horizon: usize,
    },
    /// Identity likelihood; calibration fit on a training episode.
    Bayes {
        prior_mean: Vec<f64>,
        prior_precision: f64,
        noise_precision: f64,
        #[serde(default = "default_train_horizon")]
        train_horizon: usize,
    },
    /// Discriminator against a fixed Gaussian generator.
    Discriminator {
        generator_mean: f64,
        generator_sd: f64,
        #[serde(default = "default_tagger_epochs")]
        epochs: usize,
        #[serde(default = "default_lr")]
        learning_rate: f64,
        #[serde(default = "default_train_horizon")]
        train_horizon: usize,
    },
}

fn default_gate() -> f64 {
    0.5
}
fn default_tagger_epochs() -> usize {
    100
}
fn default_lr() -> f64 {
    0.05
}
fn default_train_horizon() -> usize {
    400
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricsConfig {
    /// Reality variable compared against the ground-truth latent.
    #[serde(default)]
    pub variable: Option<String>,
    /// Channel whose conflict, percept bias and tags are reported.
    #[serde(default)]
    pub channel: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditSection {
    pub channel: String,
    /// Ablations audited after the intact agent.
    #[serde(default)]
    pub ablations: Vec<Ablation>,
    #[serde(default)]
    pub params: AuditConfig,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| HarnessError::ConfigInvalid(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_value(value: toml::Value) -> Result<Self, HarnessError> {
        let cfg: RunConfig = value
            .try_into()
            .map_err(|e: toml::de::Error| HarnessError::ConfigInvalid(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn scenario(&self) -> &str {
        self.scenario.as_deref().unwrap_or(&self.name)
    }

    pub fn output_dir(&self) -> &str {
        self.output_dir.as_deref().unwrap_or(&self.name)
    }

    /// The environment actually run: `env` with the run seed.
    pub fn env_spec(&self) -> EnvSpec {
        EnvSpec { seed: self.seed, ..self.env.clone() }
    }

    /// Short content hash of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config always serializes");
        hex::encode(&Sha256::digest(json.as_bytes())[..8])
    }

    /// Identifier-level checks; numeric checks happen when the agent is built.
    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |m: String| Err(HarnessError::ConfigInvalid(m));
        self.env_spec().validate().map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        let env_channels = self.env_spec().channels();
        let ids: Vec<&str> = self.agent.channels.iter().map(|c| c.id.as_str()).collect();
        for ch in &env_channels {
            if !ids.contains(&ch.as_str()) {
                return invalid(format!("environment channel {ch} has no agent channel"));
            }
        }
        for c in &self.agent.channels {
            for t in &c.taggers {
                if let TaggerConfig::Crossmodal { reference, .. } = t {
                    if !ids.contains(&reference.as_str()) {
                        return invalid(format!("channel {}: cross-modal reference {reference} is not a channel", c.id));
                    }
                }
            }
        }
        if let Some(m) = &self.metrics.channel {
            if !ids.contains(&m.as_str()) {
                return invalid(format!("metrics channel {m} is not a channel"));
            }
        }
        if let Some(a) = &self.audit {
            if !ids.contains(&a.channel.as_str()) {
                return invalid(format!("audit channel {} is not a channel", a.channel));
            }
        }
        Ok(())
    }
}

fn component<E: std::fmt::Display>(module: &'static str) -> impl Fn(E) -> HarnessError {
    move |e| HarnessError::ComponentFailure { module, message: e.to_string() }
}

fn build_encoder(cfg: &EncoderConfig, run_seed: u64, channel: &str) -> Result<EncoderParams, HarnessError> {
    match cfg {
        EncoderConfig::Identity { dim } => Ok(EncoderParams::identity(*dim)),
        EncoderConfig::Random { dims, activations, seed } => {
            let mut rng = RngStream::new(seed.unwrap_or(run_seed), format!("encoder/{channel}"));
            EncoderParams::init(dims, activations, &mut rng).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
        }
        EncoderConfig::Layers { layers } => {
            EncoderParams::from_layers(layers.clone()).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))
        }
    }
}

fn build_head(cfg: &HeadConfig, rep_dim: usize, run_seed: u64, channel: &str) -> Result<Head, HarnessError> {
    match cfg {
        HeadConfig::Profile => Ok(Head::Profile),
        HeadConfig::Layers { hypotheses, layers } => Ok(Head::Network {
            hypotheses: hypotheses.clone(),
            params: EncoderParams::from_layers(layers.clone()).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?,
        }),
        HeadConfig::LengthRule { threshold, hidden, lo, hi, samples, epochs } => {
            if rep_dim != 2 {
                return Err(HarnessError::ConfigInvalid(format!("channel {channel}: length-rule head needs a 2-D representation")));
            }
            let mut rng = RngStream::new(run_seed, format!("head/{channel}"));
            let data: Vec<(Vec<f64>, Vec<f64>)> = (0..*samples)
                .map(|_| {
                    let x = vec![rng.uniform(*lo, *hi), rng.uniform(*lo, *hi)];
                    let different = (x[0] - x[1]).abs() > *threshold;
                    (x, if different { vec![2.0, -2.0] } else { vec![-2.0, 2.0] })
                })
                .collect();
            let init = EncoderParams::init(&[2, *hidden, 2], &[Activation::Tanh, Activation::Identity], &mut rng)
                .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
            let train = TrainConfig { learning_rate: 0.05, epochs: *epochs, batch: 16, seed: run_seed, ..TrainConfig::default() };
            let params = train_encoder(&init, &data, &train).map_err(component("perception"))?;
            Ok(Head::Network { hypotheses: vec!["different".into(), "same".into()], params })
        }
    }
}

/// `(signal, representation, origin)`
type Sample = (Vec<f64>, Vec<f64>, Origin);

/// Every sample of one channel across an episode.
fn channel_stream(ep: &Episode, channel: &str, encoder: &EncoderParams) -> Result<Vec<Sample>, HarnessError> {
    let mut out = Vec::new();
    for (frame, gt) in ep.observations.iter().zip(&ep.ground_truth) {
        for (sig, origin) in frame.iter().zip(&gt.origins) {
            if sig.channel_id == channel {
                let rep = encode(encoder, sig).map_err(component("perception"))?;
                out.push((sig.values.clone(), rep.vector, *origin));
            }
        }
    }
    Ok(out)
}

fn training_episode(cfg: &RunConfig, horizon: usize, clean: bool) -> Result<Episode, HarnessError> {
    let mut spec = cfg.env_spec();
    spec.seed = cfg.seed.wrapping_add(TRAIN_SEED_OFFSET);
    spec.horizon = horizon;
    if clean {
        spec.rho = 0.0;
    }
    gen_episode(&spec).map_err(component("envs"))
}

fn build_tagger(
    cfg: &RunConfig,
    tc: &TaggerConfig,
    channel: &str,
    encoder: &EncoderParams,
) -> Result<ChannelTagger, HarnessError> {
    let rep_dim = encoder.output_dim();
    let invalid = |e: crate::taggers::TaggerError| HarnessError::ConfigInvalid(format!("channel {channel}: {e}"));
    Ok(match tc {
        TaggerConfig::Temporal { k, tau, gate, predictor, epochs, learning_rate, train_horizon } => {
            let predictor = match predictor {
                PredictorKind::RepeatLast => {
                    let mut w = vec![0.0; rep_dim * rep_dim * k];
                    for i in 0..rep_dim {
                        w[i * rep_dim * k + (k.saturating_sub(1)) * rep_dim + i] = 1.0;
                    }
                    let params = EncoderParams::from_layers(vec![Layer {
                        weights: w,
                        biases: vec![0.0; rep_dim],
                        activation: Activation::Identity,
                    }])
                    .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
                    TemporalPredictor::new(params, *k, *tau).map_err(invalid)?
                }
                PredictorKind::Fit => {
                    let ep = training_episode(cfg, *train_horizon, true)?;
                    let trajectory: Vec<Vec<f64>> =
                        channel_stream(&ep, channel, encoder)?.into_iter().map(|(_, r, _)| r).collect();
                    let init = EncoderParams::zeros(&[rep_dim * k, rep_dim], &[Activation::Identity])
                        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
                    let train = TrainConfig { learning_rate: *learning_rate, epochs: *epochs, seed: cfg.seed, ..TrainConfig::default() };
                    TemporalPredictor::new(init.clone(), *k, *tau).map_err(invalid)?;
                    TemporalPredictor::fit(&init, &trajectory, *k, *tau, &train).map_err(component("taggers"))?
                }
            };
            ChannelTagger::Temporal { predictor, gate: *gate }
        }
        TaggerConfig::Crossmodal { reference, tau } => ChannelTagger::CrossModal { reference: reference.clone(), tau: *tau },
        TaggerConfig::Supervised { epochs, learning_rate, train_horizon } => {
            let ep = training_episode(cfg, *train_horizon, false)?;
            let samples: Vec<(Vec<f64>, bool)> = channel_stream(&ep, channel, encoder)?
                .into_iter()
                .map(|(_, r, o)| (r, o == Origin::External))
                .collect();
            let init = EncoderParams::zeros(&[rep_dim, 1], &[Activation::Identity])
                .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
            let train = TrainConfig { learning_rate: *learning_rate, epochs: *epochs, seed: cfg.seed, ..TrainConfig::default() };
            ChannelTagger::Supervised { estimator: train_supervised(&init, &samples, &train).map_err(component("taggers"))? }
        }
        TaggerConfig::Bayes { prior_mean, prior_precision, noise_precision, train_horizon } => {
            if prior_mean.len() != rep_dim {
                return Err(HarnessError::ConfigInvalid(format!(
                    "channel {channel}: bayes prior has {} dims, representation has {rep_dim}",
                    prior_mean.len()
                )));
            }
            let mut scorer = BayesianScorer {
                prior: prior_mean.iter().map(|m| (*m, *prior_precision)).collect(),
                likelihood_model: EncoderParams::identity(rep_dim),
                noise_precision: *noise_precision,
                calibration: Calibration::default(),
            };
            scorer.validate().map_err(invalid)?;
            let ep = training_episode(cfg, *train_horizon, true)?;
            let scores = channel_stream(&ep, channel, encoder)?
                .iter()
                .map(|(_, r, _)| scorer.score(prior_mean, r).map(|s| s.total()))
                .collect::<Result<Vec<_>, _>>()
                .map_err(component("taggers"))?;
            scorer.calibration = Calibration::fit(&scores).map_err(component("taggers"))?;
            ChannelTagger::Bayes { scorer }
        }
        TaggerConfig::Discriminator { generator_mean, generator_sd, epochs, learning_rate, train_horizon } => {
            let ep = training_episode(cfg, *train_horizon, true)?;
            let stream = channel_stream(&ep, channel, encoder)?;
            let signal_dim = stream.first().map(|(s, _, _)| s.len()).unwrap_or(0);
            let dim = signal_dim + rep_dim;
            let mut weights = vec![0.0; dim * dim];
            for i in 0..dim {
                weights[i * dim + i] = *generator_sd;
            }
            let g_params = EncoderParams::from_layers(vec![Layer {
                weights,
                biases: vec![*generator_mean; dim],
                activation: Activation::Identity,
            }])
            .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
            let g = GeneratorSpec::new(g_params, signal_dim, rep_dim).map_err(invalid)?;
            let real: Vec<Vec<f64>> = stream.into_iter().map(|(s, r, _)| [s, r].concat()).collect();
            let d0 = Discriminator::new(
                EncoderParams::zeros(&[dim, 1], &[Activation::Identity]).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?,
            )
            .map_err(invalid)?;
            let dcfg = DiscriminatorConfig {
                train: TrainConfig { learning_rate: *learning_rate, epochs: *epochs, seed: cfg.seed, ..TrainConfig::default() },
                ..DiscriminatorConfig::default()
            };
            let trained = train_discriminator(&d0, &g, &real, &dcfg).map_err(component("taggers"))?;
            ChannelTagger::Discriminator { discriminator: trained.discriminator }
        }
    })
}

/// Builds (and trains, where configured) the agent a run uses.
pub fn build_agent(cfg: &RunConfig) -> Result<Agent, HarnessError> {
    cfg.validate()?;
    let mut channels = Vec::with_capacity(cfg.agent.channels.len());
    for c in &cfg.agent.channels {
        let encoder = build_encoder(&c.encoder, cfg.seed, &c.id)?;
        let head = build_head(&c.head, encoder.output_dim(), cfg.seed, &c.id)?;
        let taggers = c
            .taggers
            .iter()
            .map(|t| build_tagger(cfg, t, &c.id, &encoder))
            .collect::<Result<Vec<_>, _>>()?;
        channels.push(Channel {
            id: c.id.clone(),
            encoder,
            prototypes: c.prototypes.iter().map(|p| (p.id.clone(), p.x.clone())).collect(),
            profile_source: ProfileSource::Encoder,
            head,
            gate: c.gate.clone(),
            conflict_sources: c.conflict_sources.clone(),
            taggers,
            combine: c.combine,
            variable: c.variable.clone(),
        });
    }
    let mut belief = RealityBelief::new();
    for b in &cfg.agent.beliefs {
        let est = Estimate::new(b.mean.clone(), b.precision).map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
        belief = belief.with_estimate(b.variable.clone(), est);
    }
    let utility = UtilitySpec { action_ids: cfg.agent.utility.actions.clone(), utility_table: cfg.agent.utility.table.clone() };
    let mut agent = Agent::new(channels, belief, cfg.agent.policy.clone(), utility)
        .map_err(|e| HarnessError::ConfigInvalid(e.to_string()))?;
    agent.contradiction = cfg.agent.contradiction;
    agent.contradiction_threshold = cfg.agent.contradiction_threshold;
    Ok(agent)
}
