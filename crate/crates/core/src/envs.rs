//! Synthetic worlds with ground truth.
//!
//! * `Noisy`: a constant latent seen through Gaussian noise.
//! * `Illusion`: two equal lengths seen with opposite, never-decaying biases
//!   on the `visual` channel, plus an unbiased `ruler` channel (what the
//!   agent can come to *know*).
//! * `Hallucination`: a smooth circular trajectory; each step is replaced,
//!   with probability `rho`, by a draw unrelated to the world.
//! * `CrossModal`: one latent seen through several fixed linear maps; with
//!   probability `rho` the first modality is replaced by an unrelated draw.
//!
//! Agent-facing observations always carry `Origin::Unknown`; the true
//! origins live only in [`GroundTruth`].

use std::f64::consts::TAU;
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Origin, SensorySignal};
use crate::rng::RngStream;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment spec: {0}")]
    InvalidSpec(String),
    #[error("step range {start}..{end} is outside the horizon {horizon}")]
    RangeOutOfBounds {
        start: usize,
        end: usize,
        horizon: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnvKind {
    Noisy,
    Illusion,
    Hallucination,
    CrossModal,
}

pub const VISUAL_CHANNEL: &str = "visual";
pub const RULER_CHANNEL: &str = "ruler";

fn one() -> f64 {
    1.0
}
fn default_level() -> Vec<f64> {
    vec![1.0]
}
fn default_lengths() -> [f64; 2] {
    [1.0, 1.0]
}
fn default_ruler_sigma() -> f64 {
    0.01
}
fn default_period() -> f64 {
    50.0
}
fn default_range() -> f64 {
    3.0
}
fn default_modalities() -> usize {
    2
}
fn default_latent_dim() -> usize {
    2
}
fn default_obs_dim() -> usize {
    3
}
fn default_channel() -> String {
    "sense".into()
}

/// Environment description. Parameters not used by a kind are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub horizon: usize,
    #[serde(default)]
    pub seed: u64,
    /// Observation noise standard deviation.
    #[serde(default)]
    pub sigma: f64,
    /// Illusion bias added to the first length and subtracted from the second.
    #[serde(default)]
    pub bias: f64,
    /// Hallucination / corruption rate.
    #[serde(default)]
    pub rho: f64,
    /// Channel name for `Noisy` and `Hallucination`.
    #[serde(default = "default_channel")]
    pub channel: String,
    /// `Noisy` latent.
    #[serde(default = "default_level")]
    pub level: Vec<f64>,
    #[serde(default = "default_lengths")]
    pub lengths: [f64; 2],
    #[serde(default = "default_ruler_sigma")]
    pub ruler_sigma: f64,
    /// `Hallucination` trajectory radius.
    #[serde(default = "one")]
    pub amplitude: f64,
    /// `Hallucination` steps per revolution.
    #[serde(default = "default_period")]
    pub period: f64,
    /// Hallucinated values are uniform in `±range * amplitude`.
    #[serde(default = "default_range")]
    pub hallucination_range: f64,
    #[serde(default = "default_modalities")]
    pub modality_count: usize,
    #[serde(default = "default_latent_dim")]
    pub latent_dim: usize,
    #[serde(default = "default_obs_dim")]
    pub obs_dim: usize,
    /// Seeds the `CrossModal` linear maps. Kept apart from `seed` so episodes
    /// with different noise draws share one world.
    #[serde(default)]
    pub map_seed: u64,
}

impl EnvSpec {
    /// A spec of `kind` with every parameter at its default.
    pub fn new(kind: EnvKind, horizon: usize, seed: u64) -> Self {
        Self {
            kind,
            horizon,
            seed,
            sigma: 0.0,
            bias: 0.0,
            rho: 0.0,
            channel: default_channel(),
            level: default_level(),
            lengths: default_lengths(),
            ruler_sigma: default_ruler_sigma(),
            amplitude: 1.0,
            period: default_period(),
            hallucination_range: default_range(),
            modality_count: default_modalities(),
            latent_dim: default_latent_dim(),
            obs_dim: default_obs_dim(),
            map_seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |m: &str| Err(EnvError::InvalidSpec(m.into()));
        if self.horizon < 1 {
            return bad("horizon must be at least 1");
        }
        if !(self.sigma >= 0.0) || !(self.ruler_sigma >= 0.0) {
            return bad("noise sigma must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.rho) {
            return bad("rho must lie in [0, 1]");
        }
        if !self.bias.is_finite() {
            return bad("bias must be finite");
        }
        match self.kind {
            EnvKind::Noisy if self.level.is_empty() || self.level.iter().any(|v| !v.is_finite()) => {
                bad("level must be a nonempty finite vector")
            }
            EnvKind::Hallucination if !(self.period > 0.0) || !(self.hallucination_range > 0.0) => {
                bad("period and hallucination_range must be positive")
            }
            EnvKind::CrossModal
                if self.modality_count < 2 || self.latent_dim == 0 || self.obs_dim == 0 =>
            {
                bad("cross-modal worlds need >= 2 modalities and positive dims")
            }
            _ => Ok(()),
        }
    }

    /// Channel ids this environment emits, in emission order.
    pub fn channels(&self) -> Vec<String> {
        match self.kind {
            EnvKind::Noisy | EnvKind::Hallucination => vec![self.channel.clone()],
            EnvKind::Illusion => vec![VISUAL_CHANNEL.into(), RULER_CHANNEL.into()],
            EnvKind::CrossModal => (0..self.modality_count).map(modality_channel).collect(),
        }
    }

    /// The fixed linear maps of a cross-modal world, one `obs_dim x latent_dim`
    /// row-major matrix per modality.
    pub fn modality_maps(&self) -> Vec<Vec<f64>> {
        let mut rng = RngStream::new(self.map_seed, "env/crossmodal-maps");
        (0..self.modality_count)
            .map(|_| {
                (0..self.obs_dim * self.latent_dim)
                    .map(|_| rng.normal(0.0, 1.0))
                    .collect()
            })
            .collect()
    }
}

pub fn modality_channel(i: usize) -> String {
    format!("modality-{i}")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub latent: Vec<f64>,
    /// Aligned with the step's observations.
    pub origins: Vec<Origin>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub spec: EnvSpec,
    pub observations: Vec<Vec<SensorySignal>>,
    pub ground_truth: Vec<GroundTruth>,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("episodes always serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, EnvError> {
        serde_json::from_str(s).map_err(|e| EnvError::InvalidSpec(format!("bad episode JSON: {e}")))
    }
}

fn noisy(values: &[f64], sigma: f64, rng: &mut RngStream) -> Vec<f64> {
    values
        .iter()
        .map(|v| if sigma > 0.0 { v + rng.normal(0.0, sigma) } else { *v })
        .collect()
}

fn mat_vec(m: &[f64], x: &[f64], rows: usize) -> Vec<f64> {
    let cols = x.len();
    (0..rows)
        .map(|r| m[r * cols..(r + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// Generates an episode. Pure in `spec`: equal specs give identical episodes.
pub fn gen_episode(spec: &EnvSpec) -> Result<Episode, EnvError> {
    spec.validate()?;
    let mut rng = RngStream::new(spec.seed, "env");
    let mut observations = Vec::with_capacity(spec.horizon);
    let mut ground_truth = Vec::with_capacity(spec.horizon);
    let maps = if spec.kind == EnvKind::CrossModal { spec.modality_maps() } else { Vec::new() };

    for step in 0..spec.horizon {
        let t = step as u64;
        let (latent, frame): (Vec<f64>, Vec<(String, Vec<f64>, Origin)>) = match spec.kind {
            EnvKind::Noisy => {
                let obs = noisy(&spec.level, spec.sigma, &mut rng);
                (spec.level.clone(), vec![(spec.channel.clone(), obs, Origin::External)])
            }
            EnvKind::Illusion => {
                let [l1, l2] = spec.lengths;
                let visual = noisy(&[l1 + spec.bias, l2 - spec.bias], spec.sigma, &mut rng);
                let ruler = noisy(&[l1, l2], spec.ruler_sigma, &mut rng);
                (
                    vec![l1, l2],
                    vec![
                        (VISUAL_CHANNEL.into(), visual, Origin::External),
                        (RULER_CHANNEL.into(), ruler, Origin::External),
                    ],
                )
            }
            EnvKind::Hallucination => {
                let phase = TAU * step as f64 / spec.period;
                let latent = vec![spec.amplitude * phase.cos(), spec.amplitude * phase.sin()];
                let hallucinate = rng.bernoulli(spec.rho);
                let (obs, origin) = if hallucinate {
                    let r = spec.hallucination_range * spec.amplitude;
                    (vec![rng.uniform(-r, r), rng.uniform(-r, r)], Origin::InternallyGenerated)
                } else {
                    (noisy(&latent, spec.sigma, &mut rng), Origin::External)
                };
                (latent, vec![(spec.channel.clone(), obs, origin)])
            }
            EnvKind::CrossModal => {
                let latent: Vec<f64> = (0..spec.latent_dim).map(|_| rng.uniform(-1.0, 1.0)).collect();
                let corrupt = rng.bernoulli(spec.rho);
                let frame = maps
                    .iter()
                    .enumerate()
                    .map(|(k, m)| {
                        if k == 0 && corrupt {
                            let obs = (0..spec.obs_dim).map(|_| rng.uniform(-2.0, 2.0)).collect();
                            (modality_channel(k), obs, Origin::InternallyGenerated)
                        } else {
                            let clean = mat_vec(m, &latent, spec.obs_dim);
                            (modality_channel(k), noisy(&clean, spec.sigma, &mut rng), Origin::External)
                        }
                    })
                    .collect();
                (latent, frame)
            }
        };
        let origins = frame.iter().map(|(_, _, o)| *o).collect();
        observations.push(
            frame
                .into_iter()
                .map(|(ch, values, _)| SensorySignal::new(ch, t, values))
                .collect(),
        );
        ground_truth.push(GroundTruth { latent, origins });
    }
    Ok(Episode {
        spec: spec.clone(),
        observations,
        ground_truth,
    })
}

/// Re-emits the observations for `range`.
pub fn replay(episode: &Episode, range: Range<usize>) -> Result<Vec<Vec<SensorySignal>>, EnvError> {
    if range.start > range.end || range.end > episode.len() {
        return Err(EnvError::RangeOutOfBounds {
            start: range.start,
            end: range.end,
            horizon: episode.len(),
        });
    }
    Ok(episode.observations[range].to_vec())
}
