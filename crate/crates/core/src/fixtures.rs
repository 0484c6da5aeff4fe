//! Deterministic toy datasets and models used by the test suites, the
//! acceptance run and the guide.

use crate::perception::{Activation, EncoderParams, Layer};
use crate::rng::RngStream;
use crate::taggers::{BayesianScorer, Calibration, GeneratorSpec};

/// Balanced 2-D set, veridical iff `x0 > 0` with a margin of 1 between the
/// classes, so a separating threshold exists by construction.
pub fn separable_reps(seed: u64, n: usize) -> Vec<(Vec<f64>, bool)> {
    let mut rng = RngStream::new(seed, "fixture/separable");
    (0..n)
        .map(|i| {
            let veridical = i % 2 == 0;
            let x0 = rng.uniform(0.5, 2.0);
            let x1 = rng.uniform(-2.0, 2.0);
            (vec![if veridical { x0 } else { -x0 }, x1], veridical)
        })
        .collect()
}

/// One linear layer `y = w * x + b`.
pub fn affine_1d(w: f64, b: f64) -> EncoderParams {
    EncoderParams::from_layers(vec![Layer {
        weights: vec![w],
        biases: vec![b],
        activation: Activation::Identity,
    }])
    .expect("1x1 layer is well formed")
}

/// `rep = 2 * latent + 0.5`, prior `N(0, 1/4)`, noise precision 4.
pub fn bayes_toy() -> BayesianScorer {
    BayesianScorer {
        prior: vec![(0.0, 4.0)],
        likelihood_model: affine_1d(2.0, 0.5),
        noise_precision: 4.0,
        calibration: Calibration::default(),
    }
}

/// `n` tuples each holding one draw from `N(mean, sd)` repeated `dim` times.
pub fn gaussian_tuples(seed: u64, mean: f64, sd: f64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = RngStream::new(seed, "fixture/real-tuples");
    (0..n).map(|_| vec![rng.normal(mean, sd); dim]).collect()
}

/// Generator whose tuples have the same law as [`gaussian_tuples`].
pub fn gaussian_generator(mean: f64, sd: f64, dim: usize, signal_dim: usize) -> GeneratorSpec {
    let params = EncoderParams::from_layers(vec![Layer {
        weights: vec![sd; dim],
        biases: vec![mean; dim],
        activation: Activation::Identity,
    }])
    .expect("1xdim layer is well formed");
    GeneratorSpec::new(params, signal_dim, dim - signal_dim).expect("output matches tuple dim")
}
