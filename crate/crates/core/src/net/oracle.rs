//! Finite-difference verification oracle for the analytic gradients.
//!
//! [`loss_gradients`](super::loss_gradients) differentiates an objective with
//! explicit stop-gradients (frozen advantages, frozen return values, frozen
//! bootstrap-state features). To compare it against central differences, the
//! perturbed evaluations must freeze the same quantities at the base point;
//! [`freeze_context`] captures them and [`frozen_objective`] re-evaluates the
//! objective at any parameter vector under those freezes.

use super::forward::forward;
use super::params::{GradientVector, ParamRole, ParamVector};
use super::NetError;
use crate::returns::{all_returns, confidence_weights, MixerConfig, MixerMode, TrajectorySegment};

/// Central finite differences of `scalar_loss` around `params`, step 1e-5.
pub fn finite_diff_grad<F>(params: &ParamVector, scalar_loss: F) -> GradientVector
where
    F: Fn(&ParamVector) -> f64,
{
    const EPS: f64 = 1e-5;
    let mut grad = GradientVector::zeros(params.layout().clone());
    let mut probe = params.clone();
    for i in 0..probe.len() {
        let orig = probe.as_slice()[i];
        probe.as_mut_slice()[i] = orig + EPS;
        let plus = scalar_loss(&probe);
        probe.as_mut_slice()[i] = orig - EPS;
        let minus = scalar_loss(&probe);
        probe.as_mut_slice()[i] = orig;
        grad.as_mut_slice()[i] = (plus - minus) / (2.0 * EPS);
    }
    grad
}

/// Quantities frozen at the base parameter snapshot.
#[derive(Debug, Clone)]
pub struct FrozenContext {
    /// `T_j - V_j` at the base point (the actor's constant advantage).
    pub advantages: Vec<f64>,
    /// Base targets, used verbatim when the mixer is not `car`.
    pub targets: Vec<f64>,
    /// All n-step return values `G_j^(n)` at the base point.
    pub returns: Vec<Vec<f64>>,
    /// Trunk features of each bootstrap state at the base point.
    pub next_features: Vec<Vec<f64>>,
}

/// Capture everything the stop-gradient rules hold constant.
pub fn freeze_context(
    base: &ParamVector,
    seg: &TrajectorySegment,
    targets: &[f64],
) -> Result<FrozenContext, NetError> {
    let mut advantages = Vec::with_capacity(seg.len());
    for (j, obs) in seg.observations.iter().enumerate() {
        advantages.push(targets[j] - forward(base, obs)?.value);
    }
    let mut next_features = Vec::with_capacity(seg.next_observations.len());
    for obs in &seg.next_observations {
        next_features.push(forward(base, obs)?.cache.features().to_vec());
    }
    Ok(FrozenContext {
        advantages,
        targets: targets.to_vec(),
        returns: all_returns(seg),
        next_features,
    })
}

/// The combined objective `J` evaluated at `theta` with the base-point
/// freezes applied. Its gradient at the base point is what `loss_gradients`
/// computes analytically.
pub fn frozen_objective(
    ctx: &FrozenContext,
    theta: &ParamVector,
    seg: &TrajectorySegment,
    beta: f64,
    mixer: &MixerConfig,
    critic_only: bool,
) -> f64 {
    let m = seg.len();
    // Confidence of each bootstrap state under theta's confidence head,
    // applied to the frozen trunk features.
    let car_confidences: Option<Vec<f64>> = (mixer.mode == MixerMode::Car).then(|| {
        let layout = theta.layout();
        let block = layout.block(ParamRole::ConfidenceHead);
        let v = theta.as_slice();
        ctx.next_features
            .iter()
            .map(|z| {
                let mut c = v[block.biases.start];
                for (i, zi) in z.iter().enumerate() {
                    c += v[block.weights.start + i] * zi;
                }
                c
            })
            .collect()
    });

    let mut total = 0.0;
    for j in 0..m {
        let out = forward(theta, &seg.observations[j]).expect("fixture dims fixed");
        let target = match &car_confidences {
            Some(conf) => {
                let w = confidence_weights(&conf[j..]).expect("finite confidences");
                w.iter()
                    .zip(&ctx.returns[j])
                    .map(|(wk, gk)| wk * gk)
                    .sum::<f64>()
            }
            None => ctx.targets[j],
        };
        let diff = target - out.value;
        total += diff * diff;
        if !critic_only {
            let log_pi = out.policy[seg.actions[j]].max(f64::MIN_POSITIVE).ln();
            total -= ctx.advantages[j] * log_pi + beta * out.entropy();
        }
    }
    total
}
