//! Shared-statistics RMSProp update kernel.

use super::NetError;

/// Per-coordinate second-moment accumulators shared by all workers.
#[derive(Debug, Clone)]
pub struct RmsPropState {
    acc: Vec<f64>,
    pub decay: f64,
    pub epsilon: f64,
}

impl RmsPropState {
    pub const DEFAULT_DECAY: f64 = 0.99;
    pub const DEFAULT_EPSILON: f64 = 1e-8;

    pub fn new(len: usize) -> Self {
        RmsPropState {
            acc: vec![0.0; len],
            decay: Self::DEFAULT_DECAY,
            epsilon: Self::DEFAULT_EPSILON,
        }
    }

    pub fn with_hyper(len: usize, decay: f64, epsilon: f64) -> Result<Self, NetError> {
        if !(0.0..1.0).contains(&decay) {
            return Err(NetError::BadSpec(format!("decay {decay} outside [0, 1)")));
        }
        if !(epsilon > 0.0) {
            return Err(NetError::BadSpec(format!("epsilon {epsilon} must be > 0")));
        }
        Ok(RmsPropState {
            acc: vec![0.0; len],
            decay,
            epsilon,
        })
    }

    pub fn accumulators(&self) -> &[f64] {
        &self.acc
    }
}

/// One RMSProp step over the full vector:
/// `acc <- decay acc + (1-decay) g^2`, then `p <- p - lr g / sqrt(acc + eps)`.
/// Accumulators decay even where the gradient is zero.
pub fn rmsprop_step(params: &mut [f64], state: &mut RmsPropState, grad: &[f64], lr: f64) {
    assert_eq!(params.len(), grad.len());
    assert_eq!(params.len(), state.acc.len());
    let decay = state.decay;
    let eps = state.epsilon;
    for ((p, acc), &g) in params.iter_mut().zip(&mut state.acc).zip(grad) {
        *acc = decay * *acc + (1.0 - decay) * g * g;
        *p -= lr * g / (*acc + eps).sqrt();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_lr_leaves_params() {
        let mut p = vec![1.0, -2.0];
        let mut s = RmsPropState::new(2);
        rmsprop_step(&mut p, &mut s, &[0.5, 0.5], 0.0);
        assert_eq!(p, vec![1.0, -2.0]);
        // accumulators still advanced
        assert!(s.accumulators()[0] > 0.0);
    }

    #[test]
    fn zero_grad_decays_accumulators() {
        let mut p = vec![0.3];
        let mut s = RmsPropState::new(1);
        rmsprop_step(&mut p, &mut s, &[1.0], 0.0);
        let a1 = s.accumulators()[0];
        rmsprop_step(&mut p, &mut s, &[0.0], 1e-3);
        assert_eq!(p, vec![0.3]);
        assert!((s.accumulators()[0] - 0.99 * a1).abs() < 1e-18);
    }

    #[test]
    fn first_step_magnitude_matches_hand_value() {
        let mut p = vec![0.0];
        let mut s = RmsPropState::new(1);
        rmsprop_step(&mut p, &mut s, &[1.0], 1e-3);
        let expected = 1e-3 / (0.01f64 + 1e-8).sqrt();
        assert!((p[0] + expected).abs() < 1e-15);
    }

    #[test]
    fn hyper_validation() {
        assert!(RmsPropState::with_hyper(3, 1.0, 1e-8).is_err());
        assert!(RmsPropState::with_hyper(3, 0.9, 0.0).is_err());
        assert!(RmsPropState::with_hyper(3, 0.9, 1e-8).is_ok());
    }
}
