use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CpsError, DecisionOutcome};

/// Actions `A` and utilities `U(action | context bucket)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilitySpec {
    pub action_ids: Vec<String>,
    /// bucket -> action -> utility
    pub utility_table: BTreeMap<String, BTreeMap<String, f64>>,
}

impl UtilitySpec {
    pub fn validate(&self) -> Result<(), CpsError> {
        if self.action_ids.is_empty() {
            return Err(CpsError::InvalidUtility("no actions".into()));
        }
        for (bucket, row) in &self.utility_table {
            for a in &self.action_ids {
                match row.get(a) {
                    Some(u) if u.is_finite() => {}
                    _ => return Err(CpsError::InvalidUtility(format!("no utility for {a} in bucket {bucket}"))),
                }
            }
            if let Some(extra) = row.keys().find(|k| !self.action_ids.contains(k)) {
                return Err(CpsError::InvalidUtility(format!("unknown action {extra} in bucket {bucket}")));
            }
        }
        Ok(())
    }
}

/// The context bucket a decision puts the agent in: its chosen hypothesis.
pub fn context_bucket(outcome: &DecisionOutcome) -> &str {
    &outcome.chosen_hypothesis
}

/// `a* = argmax_a U(a | bucket)`; ties go to the smallest action id.
pub fn select_action(u: &UtilitySpec, bucket: &str) -> Result<String, CpsError> {
    let row = u
        .utility_table
        .get(bucket)
        .ok_or_else(|| CpsError::UnknownBucket(bucket.to_string()))?;
    let mut best: Option<(&String, f64)> = None;
    for a in &u.action_ids {
        let v = *row.get(a).ok_or_else(|| CpsError::InvalidUtility(format!("no utility for {a}")))?;
        best = match best {
            Some((b, bv)) if bv > v || (bv == v && b <= a) => Some((b, bv)),
            _ => Some((a, v)),
        };
    }
    best.map(|(a, _)| a.clone()).ok_or_else(|| CpsError::InvalidUtility("no actions".into()))
}
