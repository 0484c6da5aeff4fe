use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::CpsError;
use crate::domain::EpistemicTag;
use crate::perception::InterpretationScores;

/// One source of interpretations competing in [`decide`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Competitor {
    pub source_id: String,
    pub scores: InterpretationScores,
    pub tag: EpistemicTag,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// `source:hypothesis`.
    pub input_id: String,
    pub score: f64,
    pub tag: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionOutcome {
    /// `source:hypothesis` of the winner.
    pub chosen: String,
    pub chosen_source: String,
    pub chosen_hypothesis: String,
    pub weighted_scores: Vec<f64>,
    pub trace: Vec<TraceEntry>,
}

impl DecisionOutcome {
    /// Best hypothesis of one source by weighted score (smallest id on ties).
    pub fn within_source(&self, source: &str) -> Option<(&str, f64)> {
        let prefix = format!("{source}:");
        self.trace
            .iter()
            .filter(|e| e.input_id.starts_with(&prefix))
            .min_by(|a, b| rank(a, b))
            .map(|e| (&e.input_id[prefix.len()..], e.weighted))
    }
}

fn rank(a: &TraceEntry, b: &TraceEntry) -> Ordering {
    b.weighted.total_cmp(&a.weighted).then_with(|| a.input_id.cmp(&b.input_id))
}

/// `argmax f_i(S) * E(S)` over every (source, hypothesis) pair. Ties go to
/// the lexicographically smallest `source:hypothesis`.
pub fn decide(competitors: &[Competitor]) -> Result<DecisionOutcome, CpsError> {
    if competitors.is_empty() {
        return Err(CpsError::EmptyCompetitors);
    }
    let mut trace = Vec::new();
    for c in competitors {
        let e = c.tag.reliability();
        for (h, &f) in c.scores.hypothesis_ids.iter().zip(&c.scores.scores) {
            trace.push(TraceEntry {
                input_id: format!("{}:{h}", c.source_id),
                score: f,
                tag: e,
                weighted: f * e,
            });
        }
    }
    let (best_idx, _) = trace
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| rank(a, b))
        .ok_or(CpsError::EmptyCompetitors)?;
    let (source, hyp) = competitors
        .iter()
        .flat_map(|c| c.scores.hypothesis_ids.iter().map(move |h| (c.source_id.clone(), h.clone())))
        .nth(best_idx)
        .expect("trace and competitors align");
    Ok(DecisionOutcome {
        chosen: trace[best_idx].input_id.clone(),
        chosen_source: source,
        chosen_hypothesis: hyp,
        weighted_scores: trace.iter().map(|e| e.weighted).collect(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::make_tag;

    fn comp(source: &str, hyps: &[&str], scores: &[f64], tag: f64) -> Competitor {
        Competitor {
            source_id: source.into(),
            scores: InterpretationScores::new(hyps.iter().map(|h| h.to_string()).collect(), scores.to_vec()).unwrap(),
            tag: make_tag(tag, "t", source).unwrap(),
        }
    }

    #[test]
    fn single_source_argmax_ignores_tag() {
        let a = decide(&[comp("p", &["h0", "h1"], &[0.2, 0.9], 0.5)]).unwrap();
        let b = decide(&[comp("p", &["h0", "h1"], &[0.2, 0.9], 1.0)]).unwrap();
        assert_eq!(a.chosen_hypothesis, "h1");
        assert_eq!(a.chosen, b.chosen);
    }

    #[test]
    fn tags_arbitrate_between_sources() {
        let out = decide(&[comp("percept", &["x"], &[0.9], 0.9), comp("reality", &["y"], &[0.8], 1.0)]).unwrap();
        assert_eq!(out.chosen_source, "percept");
        assert_eq!(out.trace.len(), 2);
        assert!((out.weighted_scores[0] - 0.81).abs() < 1e-15);
    }

    #[test]
    fn illusion_percept_keeps_different() {
        for tag in [1e-6, 0.3, 1.0] {
            let out = decide(&[comp("visual", &["different", "same"], &[0.8, 0.2], tag)]).unwrap();
            assert_eq!(out.chosen_hypothesis, "different");
        }
    }

    #[test]
    fn ties_go_to_smallest_id() {
        let out = decide(&[comp("b", &["h"], &[0.5], 1.0), comp("a", &["h"], &[0.5], 1.0)]).unwrap();
        assert_eq!(out.chosen, "a:h");
        assert_eq!(out.within_source("b"), Some(("h", 0.5)));
        assert_eq!(decide(&[]), Err(CpsError::EmptyCompetitors));
    }
}
