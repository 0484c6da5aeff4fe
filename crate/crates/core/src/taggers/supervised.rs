use super::{TaggerError, SUPERVISED};
use crate::domain::{make_tag, EpistemicTag};
use crate::perception::{sigmoid, train_encoder, EncoderParams, Loss, PerceptualRepresentation, TrainConfig};

/// Reliability = logistic output of a one-dimensional estimator network.
pub fn tag_supervised(estimator: &EncoderParams, rep: &PerceptualRepresentation) -> Result<EpistemicTag, TaggerError> {
    if estimator.output_dim() != 1 {
        return Err(TaggerError::DimMismatch {
            expected: 1,
            got: estimator.output_dim(),
        });
    }
    let logit = estimator.forward(&rep.vector)?[0];
    Ok(make_tag(sigmoid(logit), SUPERVISED, rep.rep_id.clone())?)
}

/// Fits an estimator with logistic loss on `(representation, veridical)` pairs.
pub fn train_supervised(
    init: &EncoderParams,
    samples: &[(Vec<f64>, bool)],
    cfg: &TrainConfig,
) -> Result<EncoderParams, TaggerError> {
    let data: Vec<(Vec<f64>, Vec<f64>)> = samples
        .iter()
        .map(|(x, y)| (x.clone(), vec![if *y { 1.0 } else { 0.0 }]))
        .collect();
    let cfg = TrainConfig { loss: Loss::Logistic, ..cfg.clone() };
    Ok(train_encoder(init, &data, &cfg)?)
}

/// Fraction of samples where `reliability > 0.5` matches the label.
pub fn classification_accuracy(estimator: &EncoderParams, samples: &[(Vec<f64>, bool)]) -> Result<f64, TaggerError> {
    let mut correct = 0usize;
    for (x, label) in samples {
        let tag = tag_supervised(estimator, &PerceptualRepresentation::new("probe", x.clone()))?;
        if (tag.reliability() > 0.5) == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / samples.len().max(1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perception::Activation;

    #[test]
    fn zero_estimator_is_agnostic() {
        let est = EncoderParams::zeros(&[3, 1], &[Activation::Identity]).unwrap();
        let tag = tag_supervised(&est, &PerceptualRepresentation::new("r", vec![1.0, 2.0, 3.0])).unwrap();
        assert_eq!(tag.reliability(), 0.5);
        assert_eq!(tag.tagger_id(), "supervised");
        assert_eq!(tag.subject(), "r");
    }

    #[test]
    fn multi_output_estimator_rejected() {
        let est = EncoderParams::identity(2);
        assert!(matches!(
            tag_supervised(&est, &PerceptualRepresentation::new("r", vec![1.0, 2.0])),
            Err(TaggerError::DimMismatch { expected: 1, got: 2 })
        ));
    }
}
