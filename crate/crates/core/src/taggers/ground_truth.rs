use serde::{Deserialize, Serialize};

use super::{TaggerError, CROSSMODAL};
use crate::domain::{make_tag, EpistemicTag};
use crate::perception::{EncoderParams, PerceptualRepresentation};
use crate::simspace::euclidean;

/// Denoised target: elementwise mean of repeated representations of one stimulus.
pub fn ground_truth_by_averaging(reps: &[PerceptualRepresentation]) -> Result<Vec<f64>, TaggerError> {
    let first = reps.first().ok_or(TaggerError::EmptyWindow)?;
    let dim = first.vector.len();
    let mut acc = vec![0.0; dim];
    for r in reps {
        if r.vector.len() != dim {
            return Err(TaggerError::DimMismatch {
                expected: dim,
                got: r.vector.len(),
            });
        }
        acc.iter_mut().zip(&r.vector).for_each(|(a, v)| *a += v);
    }
    let n = reps.len() as f64;
    Ok(acc.into_iter().map(|a| a / n).collect())
}

/// Maps one modality's representations into a shared space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentHead {
    pub modality: String,
    pub space_id: String,
    pub params: EncoderParams,
}

/// A representation after alignment, tagged with the space it now lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedRep {
    pub space_id: String,
    pub rep_id: String,
    pub vector: Vec<f64>,
}

impl AlignmentHead {
    pub fn align(&self, rep: &PerceptualRepresentation) -> Result<AlignedRep, TaggerError> {
        Ok(AlignedRep {
            space_id: self.space_id.clone(),
            rep_id: rep.rep_id.clone(),
            vector: self.params.forward(&rep.vector)?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossModalLabel {
    Veridical,
    Nonveridical,
}

fn aligned_distance(a: &AlignedRep, b: &AlignedRep) -> Result<f64, TaggerError> {
    if a.space_id != b.space_id {
        return Err(TaggerError::SpaceMismatch(a.space_id.clone(), b.space_id.clone()));
    }
    if a.vector.len() != b.vector.len() {
        return Err(TaggerError::DimMismatch {
            expected: a.vector.len(),
            got: b.vector.len(),
        });
    }
    Ok(euclidean(&a.vector, &b.vector))
}

/// Veridical iff the two modalities agree to within `align_threshold`.
pub fn ground_truth_by_cross_modal(
    a: &AlignedRep,
    b: &AlignedRep,
    align_threshold: f64,
) -> Result<CrossModalLabel, TaggerError> {
    let d = aligned_distance(a, b)?;
    Ok(if d <= align_threshold {
        CrossModalLabel::Veridical
    } else {
        CrossModalLabel::Nonveridical
    })
}

/// Online form of the cross-modal check: reliability `exp(-d^2 / tau)` of
/// `subject` given a concurrent reference modality.
pub fn tag_cross_modal(subject: &AlignedRep, reference: &AlignedRep, tau: f64) -> Result<EpistemicTag, TaggerError> {
    if !(tau > 0.0) {
        return Err(TaggerError::InvalidParams(format!("tau must be positive, got {tau}")));
    }
    let d = aligned_distance(subject, reference)?;
    Ok(make_tag((-d * d / tau).exp(), CROSSMODAL, subject.rep_id.clone())?)
}

/// Picks the threshold (among the observed distances) that best separates
/// veridical (`true`) from nonveridical samples. Ties go to the smaller
/// threshold.
pub fn calibrate_threshold(samples: &[(f64, bool)]) -> Result<f64, TaggerError> {
    if samples.is_empty() {
        return Err(TaggerError::EmptyWindow);
    }
    let mut candidates: Vec<f64> = samples.iter().map(|s| s.0).collect();
    candidates.sort_by(|a, b| a.total_cmp(b));
    candidates.dedup();
    let mut best = (candidates[0], 0usize);
    for &c in &candidates {
        let correct = samples
            .iter()
            .filter(|(d, veridical)| (*d <= c) == *veridical)
            .count();
        if correct > best.1 {
            best = (c, correct);
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(v: &[f64]) -> PerceptualRepresentation {
        PerceptualRepresentation::new("r", v.to_vec())
    }

    fn aligned(space: &str, v: &[f64]) -> AlignedRep {
        AlignedRep { space_id: space.into(), rep_id: "r".into(), vector: v.to_vec() }
    }

    #[test]
    fn averaging() {
        assert_eq!(ground_truth_by_averaging(&[rep(&[1.0, 1.0]), rep(&[3.0, 3.0])]).unwrap(), vec![2.0, 2.0]);
        assert_eq!(ground_truth_by_averaging(&[rep(&[0.3, -2.0])]).unwrap(), vec![0.3, -2.0]);
        assert_eq!(ground_truth_by_averaging(&[]), Err(TaggerError::EmptyWindow));
        assert!(matches!(
            ground_truth_by_averaging(&[rep(&[1.0]), rep(&[1.0, 2.0])]),
            Err(TaggerError::DimMismatch { .. })
        ));
    }

    #[test]
    fn cross_modal_labels() {
        let a = aligned("shared", &[0.2, 0.4]);
        for th in [0.0, 0.5, 10.0] {
            assert_eq!(ground_truth_by_cross_modal(&a, &a, th).unwrap(), CrossModalLabel::Veridical);
        }
        let b = aligned("shared", &[3.2, 4.4]);
        assert_eq!(ground_truth_by_cross_modal(&a, &b, 1.0).unwrap(), CrossModalLabel::Nonveridical);
        let c = aligned("other", &[0.2, 0.4]);
        assert!(matches!(ground_truth_by_cross_modal(&a, &c, 1.0), Err(TaggerError::SpaceMismatch(..))));
    }

    #[test]
    fn cross_modal_tag_decays_with_distance() {
        let a = aligned("s", &[0.0]);
        assert_eq!(tag_cross_modal(&a, &a, 0.1).unwrap().reliability(), 1.0);
        let near = tag_cross_modal(&a, &aligned("s", &[0.1]), 0.1).unwrap().reliability();
        let far = tag_cross_modal(&a, &aligned("s", &[0.5]), 0.1).unwrap().reliability();
        assert!(near > far);
        assert!(tag_cross_modal(&a, &a, 0.0).is_err());
    }

    #[test]
    fn threshold_sweep_separates() {
        let samples = [(0.1, true), (0.2, true), (0.3, true), (1.5, false), (2.0, false)];
        assert_eq!(calibrate_threshold(&samples).unwrap(), 0.3);
    }

    #[test]
    fn alignment_head_projects() {
        let head = AlignmentHead {
            modality: "m".into(),
            space_id: "shared".into(),
            params: EncoderParams::identity(2),
        };
        let a = head.align(&rep(&[1.0, 2.0])).unwrap();
        assert_eq!(a.vector, vec![1.0, 2.0]);
        assert_eq!(a.space_id, "shared");
    }
}
