//! The Reality Model: precision-weighted fusion of tagged percepts into the
//! agent's beliefs.
//!
//! Each percept lands in one of three regimes, chosen by its reliability:
//! adopt it outright, ignore it, or fuse it with the prior as a weighted
//! average. Reliability becomes observation precision through a linear gain.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{DomainError, EpistemicTag, Estimate, RealityBelief};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealityError {
    #[error("precision {0} must be positive")]
    NonPositivePrecision(f64),
    #[error("unknown reality variable {0}")]
    UnknownVariable(String),
    #[error("variable {variable}: belief has dimension {expected}, percept has {got}")]
    DimensionMismatch {
        variable: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid fusion policy: {0}")]
    InvalidPolicy(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FusionPolicy {
    #[serde(default = "default_adopt")]
    pub adopt_threshold: f64,
    #[serde(default = "default_ignore")]
    pub ignore_threshold: f64,
    #[serde(default = "default_gain")]
    pub reliability_to_precision_gain: f64,
    /// Reject percepts for variables the belief does not already hold.
    #[serde(default)]
    pub strict: bool,
}

fn default_adopt() -> f64 {
    0.95
}
fn default_ignore() -> f64 {
    0.05
}
fn default_gain() -> f64 {
    1.0
}

impl Default for FusionPolicy {
    fn default() -> Self {
        Self {
            adopt_threshold: default_adopt(),
            ignore_threshold: default_ignore(),
            reliability_to_precision_gain: default_gain(),
            strict: false,
        }
    }
}

impl FusionPolicy {
    pub fn validate(&self) -> Result<(), RealityError> {
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(self.adopt_threshold) || !in_unit(self.ignore_threshold) {
            return Err(RealityError::InvalidPolicy("thresholds must lie in [0, 1]".into()));
        }
        if !(self.ignore_threshold < self.adopt_threshold) {
            return Err(RealityError::InvalidPolicy(
                "ignore_threshold must be below adopt_threshold".into(),
            ));
        }
        if !(self.reliability_to_precision_gain > 0.0) || !self.reliability_to_precision_gain.is_finite() {
            return Err(RealityError::InvalidPolicy("gain must be positive".into()));
        }
        Ok(())
    }
}

/// Gaussian fusion of a prior `(mean, precision)` with an observation.
///
/// The mean is `(p1*m1 + p2*v) / (p1 + p2)` computed in a form that is
/// symmetric in its arguments, then pinned into `[min(m1, v), max(m1, v)]`
/// so rounding can never push it outside the inputs.
pub fn fuse(prior: (&[f64], f64), obs: (&[f64], f64)) -> Result<(Vec<f64>, f64), RealityError> {
    let (m1, p1) = prior;
    let (v, p2) = obs;
    for p in [p1, p2] {
        if !(p > 0.0) || !p.is_finite() {
            return Err(RealityError::NonPositivePrecision(p));
        }
    }
    if m1.len() != v.len() {
        return Err(RealityError::DimensionMismatch {
            variable: String::new(),
            expected: m1.len(),
            got: v.len(),
        });
    }
    let total = p1 + p2;
    let mean = m1
        .iter()
        .zip(v)
        .map(|(&a, &b)| {
            let m = (p1 * a + p2 * b) / total;
            m.clamp(a.min(b), a.max(b))
        })
        .collect();
    Ok((mean, total))
}

/// A decoded percept bound for one reality variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Percept {
    pub variable_id: String,
    pub value: Vec<f64>,
    pub tag: EpistemicTag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateBranch {
    Adopt,
    Ignore,
    Fuse,
    /// First sighting of a variable in non-strict mode.
    Create,
}

/// Applies percepts in order and advances `t` by one.
pub fn update(
    z: &RealityBelief,
    percepts: &[Percept],
    policy: &FusionPolicy,
) -> Result<RealityBelief, RealityError> {
    update_logged(z, percepts, policy).map(|(b, _)| b)
}

/// [`update`], also returning which branch each percept took.
pub fn update_logged(
    z: &RealityBelief,
    percepts: &[Percept],
    policy: &FusionPolicy,
) -> Result<(RealityBelief, Vec<UpdateBranch>), RealityError> {
    policy.validate()?;
    let mut next = z.clone();
    let mut branches = Vec::with_capacity(percepts.len());
    for p in percepts {
        let r = p.tag.reliability();
        let obs_precision = r * policy.reliability_to_precision_gain;
        let branch = match next.estimates.get_mut(&p.variable_id) {
            None if policy.strict => return Err(RealityError::UnknownVariable(p.variable_id.clone())),
            None if r <= policy.ignore_threshold => UpdateBranch::Ignore,
            None => {
                next.estimates.insert(p.variable_id.clone(), Estimate::new(p.value.clone(), obs_precision)?);
                UpdateBranch::Create
            }
            Some(est) => {
                if est.mean.len() != p.value.len() {
                    return Err(RealityError::DimensionMismatch {
                        variable: p.variable_id.clone(),
                        expected: est.mean.len(),
                        got: p.value.len(),
                    });
                }
                if r <= policy.ignore_threshold {
                    UpdateBranch::Ignore
                } else if r >= policy.adopt_threshold {
                    *est = Estimate::new(p.value.clone(), obs_precision)?;
                    UpdateBranch::Adopt
                } else {
                    let (mean, precision) = fuse((&est.mean, est.precision), (&p.value, obs_precision))?;
                    *est = Estimate { mean, precision };
                    UpdateBranch::Fuse
                }
            }
        };
        branches.push(branch);
    }
    next.t += 1;
    Ok((next, branches))
}

/// Standardized divergence `|value - mean| * sqrt(precision)`; vectors use
/// the Euclidean norm of the difference.
pub fn conflict(z: &RealityBelief, variable_id: &str, value: &[f64]) -> Result<f64, RealityError> {
    let est = z
        .get(variable_id)
        .ok_or_else(|| RealityError::UnknownVariable(variable_id.to_string()))?;
    if est.mean.len() != value.len() {
        return Err(RealityError::DimensionMismatch {
            variable: variable_id.to_string(),
            expected: est.mean.len(),
            got: value.len(),
        });
    }
    let norm = est
        .mean
        .iter()
        .zip(value)
        .map(|(m, v)| (v - m) * (v - m))
        .sum::<f64>()
        .sqrt();
    Ok(norm * est.precision.sqrt())
}

/// Confidence in `[0, 1)` derived from a precision: `p / (1 + p)`.
pub fn precision_confidence(precision: f64) -> f64 {
    precision / (1.0 + precision)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_tag;

    fn percept(var: &str, value: &[f64], r: f64) -> Percept {
        Percept {
            variable_id: var.into(),
            value: value.to_vec(),
            tag: make_tag(r, "test", "rep").unwrap(),
        }
    }

    fn belief(mean: f64, precision: f64) -> RealityBelief {
        RealityBelief::new().with_estimate("x", Estimate::new(vec![mean], precision).unwrap())
    }

    #[test]
    fn fuse_examples() {
        assert_eq!(fuse((&[0.0], 1.0), (&[2.0], 1.0)).unwrap(), (vec![1.0], 2.0));
        let (m, p) = fuse((&[1.0], 4.0), (&[3.0], 1.0)).unwrap();
        assert!((m[0] - 1.4).abs() < 1e-15);
        assert_eq!(p, 5.0);
        let (m, _) = fuse((&[1.0], 1.0), (&[100.0], 1e-12)).unwrap();
        assert!((m[0] - 1.0).abs() < 1e-9);
        assert_eq!(
            fuse((&[0.0], 0.0), (&[1.0], 1.0)),
            Err(RealityError::NonPositivePrecision(0.0))
        );
    }

    #[test]
    fn update_branches() {
        let policy = FusionPolicy::default();
        let z = belief(0.0, 1.0);

        let (z1, b) = update_logged(&z, &[percept("x", &[3.0], 0.99)], &policy).unwrap();
        assert_eq!(b, vec![UpdateBranch::Adopt]);
        assert_eq!(z1.get("x").unwrap().mean, vec![3.0]);
        assert_eq!(z1.t, 1);

        let (z2, b) = update_logged(&z, &[percept("x", &[3.0], 0.01)], &policy).unwrap();
        assert_eq!(b, vec![UpdateBranch::Ignore]);
        assert_eq!(z2.estimates, z.estimates);

        let policy = FusionPolicy { reliability_to_precision_gain: 2.0, ..FusionPolicy::default() };
        let z3 = update(&z, &[percept("x", &[2.0], 0.5)], &policy).unwrap();
        let e = z3.get("x").unwrap();
        assert_eq!((e.mean.clone(), e.precision), (vec![1.0], 2.0));
    }

    #[test]
    fn unknown_variables() {
        let strict = FusionPolicy { strict: true, ..FusionPolicy::default() };
        assert_eq!(
            update(&RealityBelief::new(), &[percept("y", &[1.0], 0.5)], &strict),
            Err(RealityError::UnknownVariable("y".into()))
        );
        let (z, b) = update_logged(&RealityBelief::new(), &[percept("y", &[1.0], 0.5)], &FusionPolicy::default())
            .unwrap();
        assert_eq!(b, vec![UpdateBranch::Create]);
        assert_eq!(z.get("y").unwrap().precision, 0.5);
        let (z, _) = update_logged(&RealityBelief::new(), &[percept("y", &[1.0], 0.0)], &FusionPolicy::default())
            .unwrap();
        assert!(z.get("y").is_none());
    }

    #[test]
    fn conflict_examples() {
        let z = belief(0.0, 4.0);
        assert_eq!(conflict(&z, "x", &[0.0]).unwrap(), 0.0);
        assert_eq!(conflict(&z, "x", &[1.0]).unwrap(), 2.0);
        assert!(matches!(conflict(&z, "nope", &[1.0]), Err(RealityError::UnknownVariable(_))));
    }

    #[test]
    fn policy_validation() {
        let bad = FusionPolicy { adopt_threshold: 0.1, ignore_threshold: 0.2, ..FusionPolicy::default() };
        assert!(bad.validate().is_err());
        let bad = FusionPolicy { reliability_to_precision_gain: 0.0, ..FusionPolicy::default() };
        assert!(bad.validate().is_err());
    }
}
