use super::network::{EncoderParams, Loss};
use super::PerceptionError;

/// Gradients below this magnitude are compared absolutely rather than
/// relatively; central differences carry ~1e-10 of truncation noise at
/// `eps = 1e-5`.
const RELATIVE_FLOOR: f64 = 1e-4;

/// Compares backprop against central finite differences on every parameter
/// and returns the largest relative error
/// `|analytic - numeric| / max(|analytic|, |numeric|, 1e-4)`.
pub fn grad_check(
    params: &EncoderParams,
    sample: (&[f64], &[f64]),
    eps: f64,
    loss: Loss,
) -> Result<f64, PerceptionError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(PerceptionError::InvalidEpsilon(eps));
    }
    let (x, y) = sample;
    let (_, grads) = params.loss_and_gradients(x, y, loss)?;
    let analytic = grads.flatten();

    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (k, &a) in analytic.iter().enumerate() {
        let orig = *probe.param_mut(k);
        *probe.param_mut(k) = orig + eps;
        let plus = probe.loss(x, y, loss)?;
        *probe.param_mut(k) = orig - eps;
        let minus = probe.loss(x, y, loss)?;
        *probe.param_mut(k) = orig;
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = a.abs().max(numeric.abs()).max(RELATIVE_FLOOR);
        worst = worst.max((a - numeric).abs() / denom);
    }
    Ok(worst)
}
