use super::CpsError;
use crate::domain::{ClampMode, ConflictInput, GateParams};

/// `P(S)`: `max(alpha*s + sum(beta_i * c_i), 1)` in `FloorOne` mode, `min(.., 1)`
/// in `CapOne` mode. Conflict `i` is weighted by `betas[i]`; its scalar is the
/// mean of its values.
pub fn assertoric_priority(s_strength: f64, conflicts: &[ConflictInput], g: &GateParams) -> Result<f64, CpsError> {
    g.validate()?;
    if conflicts.len() > g.betas.len() {
        return Err(CpsError::ConflictCountMismatch {
            betas: g.betas.len(),
            conflicts: conflicts.len(),
        });
    }
    let mut sum = g.alpha * s_strength;
    for (c, beta) in conflicts.iter().zip(&g.betas) {
        c.validate()?;
        sum += beta * c.scalar();
    }
    Ok(match g.clamp_mode {
        ClampMode::FloorOne => sum.max(1.0),
        ClampMode::CapOne => sum.min(1.0),
    })
}

/// Root mean square of a raw signal: the `s` fed to the gate.
pub fn signal_strength(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    (values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gate(alpha: f64, betas: Vec<f64>) -> GateParams {
        GateParams::new(alpha, betas, ClampMode::FloorOne)
    }

    #[test]
    fn literal_formula() {
        assert_eq!(assertoric_priority(3.0, &[], &gate(2.0, vec![])).unwrap(), 6.0);
        assert_eq!(assertoric_priority(0.0, &[], &gate(1.0, vec![])).unwrap(), 1.0);
        let c = ConflictInput::new("reality", vec![-5.0]);
        assert_eq!(assertoric_priority(1.0, &[c], &gate(10.0, vec![1.0])).unwrap(), 5.0);
    }

    #[test]
    fn cap_mode_and_errors() {
        let g = GateParams::new(2.0, vec![0.5], ClampMode::CapOne);
        assert_eq!(assertoric_priority(3.0, &[], &g).unwrap(), 1.0);
        let c = ConflictInput::new("r", vec![-4.0, -2.0]);
        assert_eq!(assertoric_priority(0.5, &[c.clone()], &g).unwrap(), -0.5);
        assert!(matches!(
            assertoric_priority(0.5, &[c.clone(), c], &g),
            Err(CpsError::ConflictCountMismatch { .. })
        ));
        assert!(assertoric_priority(1.0, &[], &gate(-1.0, vec![])).is_err());
    }

    #[test]
    fn strength_is_rms() {
        assert_eq!(signal_strength(&[3.0, -4.0, 0.0, 0.0]), 2.5);
        assert_eq!(signal_strength(&[]), 0.0);
    }
}
