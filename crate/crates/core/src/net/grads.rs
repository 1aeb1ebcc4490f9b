//! Analytic gradients for the combined actor-critic objective.
//!
//! The returned vector is a single update direction: descending it descends
//! the critic loss and ascends the entropy-regularized actor objective.
//! Writing `T_j` for the mixed TD target and `V_j` for the value estimate,
//! the scalar being differentiated is
//!
//! ```text
//! J = sum_j (T_j - V_j)^2  -  sum_j [ log pi(a_j|s_j) (T_j - V_j)  +  beta H(pi(.|s_j)) ]
//! ```
//!
//! with these stop-gradient rules:
//! * the advantage `(T_j - V_j)` in the actor term is a constant,
//! * the critic is a semi-gradient: the n-step return values inside `T_j`
//!   never produce gradients,
//! * in `car` mode the critic loss additionally differentiates `T_j` through
//!   the softmax weights into the confidence head, treating the trunk
//!   features of the bootstrap states as fixed inputs. Nothing from that
//!   path reaches trunk parameters: the confidence-head contribution is
//!   accumulated into confidence-head ranges only.

use super::forward::{forward, ForwardCache};
use super::params::{Activation, GradientVector, ParamRole, ParamVector};
use super::NetError;
use crate::returns::{all_returns, confidence_weights, MixerConfig, MixerMode, TrajectorySegment};

/// Scalar summaries of one gradient evaluation.
#[derive(Debug, Clone, Copy)]
pub struct LossDiagnostics {
    /// `sum_j log pi(a_j|s_j) (T_j - V_j)` (zero when the actor is frozen).
    pub actor_objective: f64,
    /// `sum_j (T_j - V_j)^2`.
    pub critic_loss: f64,
    /// Mean policy entropy across the segment, in nats.
    pub mean_entropy: f64,
    /// Global norm of the returned gradient, before any clipping.
    pub grad_norm: f64,
    /// False when any gradient coordinate or loss term is non-finite.
    pub finite: bool,
}

/// Accumulated gradient of `J` for one segment under one parameter snapshot.
///
/// `targets` must come from `compute_targets` on the same segment under the
/// same snapshot. `critic_only` freezes the policy entirely (no actor or
/// entropy terms); the confidence path of `car` mode stays active.
pub fn loss_gradients(
    params: &ParamVector,
    seg: &TrajectorySegment,
    targets: &[f64],
    beta: f64,
    mixer: &MixerConfig,
    critic_only: bool,
) -> Result<(GradientVector, LossDiagnostics), NetError> {
    seg.validate()?;
    let m = seg.len();
    if targets.len() != m {
        return Err(NetError::SegmentMismatch(format!(
            "targets length {} != segment length {m}",
            targets.len()
        )));
    }
    if seg.observations.len() != m || seg.actions.len() != m {
        return Err(NetError::SegmentMismatch(
            "segment lacks observations/actions".into(),
        ));
    }
    if mixer.mode == MixerMode::Car && seg.next_observations.len() != m {
        return Err(NetError::SegmentMismatch(
            "car mode needs next_observations for the confidence path".into(),
        ));
    }
    let action_count = params.layout().spec.action_count;

    let mut grad = GradientVector::zeros(params.layout().clone());
    let mut diag = LossDiagnostics {
        actor_objective: 0.0,
        critic_loss: 0.0,
        mean_entropy: 0.0,
        grad_norm: 0.0,
        finite: true,
    };

    let mut state_values = Vec::with_capacity(m);
    for j in 0..m {
        let out = forward(params, &seg.observations[j])?;
        let action = seg.actions[j];
        if action >= action_count {
            return Err(NetError::InvalidAction {
                action,
                action_count,
            });
        }
        let value = out.value;
        state_values.push(value);
        let advantage = targets[j] - value;
        let entropy = out.entropy();
        diag.critic_loss += advantage * advantage;
        diag.mean_entropy += entropy;

        let d_value = 2.0 * (value - targets[j]);
        let d_logits = if critic_only {
            None
        } else {
            diag.actor_objective += advantage * out.policy[action].max(f64::MIN_POSITIVE).ln();
            let mut d = vec![0.0; action_count];
            for (k, dk) in d.iter_mut().enumerate() {
                let p = out.policy[k];
                let indicator = if k == action { 1.0 } else { 0.0 };
                let entropy_term = if p > 0.0 { p * (p.ln() + entropy) } else { 0.0 };
                *dk = -advantage * (indicator - p) + beta * entropy_term;
            }
            Some(d)
        };
        backprop_state(params, &out.cache, d_logits.as_deref(), d_value, &mut grad);
    }
    diag.mean_entropy /= m as f64;

    if mixer.mode == MixerMode::Car {
        accumulate_confidence_path(params, seg, targets, &state_values, &mut grad)?;
    }

    diag.grad_norm = grad.global_norm();
    diag.finite = grad.is_finite()
        && diag.critic_loss.is_finite()
        && diag.actor_objective.is_finite()
        && diag.grad_norm.is_finite();
    Ok((grad, diag))
}

/// Backpropagate head-output gradients through the heads and trunk for one
/// state, accumulating into `grad`. The confidence head never participates
/// here: the loss touches the current state's confidence nowhere.
fn backprop_state(
    params: &ParamVector,
    cache: &ForwardCache,
    d_logits: Option<&[f64]>,
    d_value: f64,
    grad: &mut GradientVector,
) {
    let layout = params.layout().clone();
    let values = params.as_slice();
    let features = cache.features();
    let mut d_feat = vec![0.0; features.len()];
    {
        let g = grad.as_mut_slice();
        if let Some(d_logits) = d_logits {
            let block = layout.block(ParamRole::PolicyHead);
            for (a, &dz) in d_logits.iter().enumerate() {
                g[block.biases.start + a] += dz;
                let row = block.weights.start + a * block.in_dim;
                for i in 0..block.in_dim {
                    g[row + i] += dz * features[i];
                    d_feat[i] += values[row + i] * dz;
                }
            }
        }
        if d_value != 0.0 {
            let block = layout.block(ParamRole::ValueHead);
            g[block.biases.start] += d_value;
            for i in 0..block.in_dim {
                g[block.weights.start + i] += d_value * features[i];
                d_feat[i] += values[block.weights.start + i] * d_value;
            }
        }
    }

    // Trunk, last layer first.
    let trunk: Vec<_> = layout.trunk_blocks().collect();
    let mut d_post = d_feat;
    for (l, block) in trunk.iter().enumerate().rev() {
        let post = &cache.trunk_acts[l];
        let input: &[f64] = if l == 0 {
            &cache.input
        } else {
            &cache.trunk_acts[l - 1]
        };
        let mut d_input = vec![0.0; block.in_dim];
        let g = grad.as_mut_slice();
        for o in 0..block.out_dim {
            let slope = match layout.spec.activation {
                Activation::Relu => {
                    if post[o] > 0.0 {
                        1.0
                    } else {
                        0.0
                    }
                }
                Activation::Tanh => 1.0 - post[o] * post[o],
            };
            let d_pre = d_post[o] * slope;
            if d_pre == 0.0 {
                continue;
            }
            g[block.biases.start + o] += d_pre;
            let row = block.weights.start + o * block.in_dim;
            for i in 0..block.in_dim {
                g[row + i] += d_pre * input[i];
                d_input[i] += values[row + i] * d_pre;
            }
        }
        d_post = d_input;
    }
}

/// Critic-loss gradient through the softmax weights of the autodidactic
/// target, confined to the confidence head.
///
/// With `w_j` the softmax over the confidences of bootstrap states `j..M`,
/// `dT_j/dc_k = w_jk (G_jk - T_j)`, so
/// `dJ/dc_k = sum_(j<=k) 2 (T_j - V_j) w_jk (G_jk - T_j)`.
/// Each `c_k` is an affine function of the (frozen) trunk features of
/// `next_observations[k]`.
fn accumulate_confidence_path(
    params: &ParamVector,
    seg: &TrajectorySegment,
    targets: &[f64],
    state_values: &[f64],
    grad: &mut GradientVector,
) -> Result<(), NetError> {
    let m = seg.len();
    let returns = all_returns(seg);
    let mut d_conf = vec![0.0; m];
    for j in 0..m {
        let w = confidence_weights(&seg.confidences[j..])?;
        let scale = 2.0 * (targets[j] - state_values[j]);
        for (offset, (&wk, &g)) in w.iter().zip(&returns[j]).enumerate() {
            d_conf[j + offset] += scale * wk * (g - targets[j]);
        }
    }

    let layout = params.layout().clone();
    let block = layout.block(ParamRole::ConfidenceHead);
    for (k, &dc) in d_conf.iter().enumerate() {
        if dc == 0.0 {
            continue;
        }
        let features_out = forward(params, &seg.next_observations[k])?;
        let features = features_out.cache.features();
        let g = grad.as_mut_slice();
        g[block.biases.start] += dc;
        for i in 0..block.in_dim {
            g[block.weights.start + i] += dc * features[i];
        }
    }
    Ok(())
}
