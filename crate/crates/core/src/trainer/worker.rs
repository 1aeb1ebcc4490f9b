//! The per-worker actor-learner loop.

use super::config::anneal_lr;
use super::evaluate::evaluate_detailed;
use super::runlog::Record;
use super::{mix_seed, sample_categorical, Shared, TrainError};
use crate::env::{make_env, Environment, Observation};
use crate::net::{forward, loss_gradients, save_checkpoint, ParamVector};
use crate::returns::{compute_targets, confidence_weights, TrajectorySegment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

/// Consecutive rejected updates tolerated before the run aborts.
const MAX_NONFINITE_STREAK: usize = 100;

pub(super) struct WorkerCtx {
    env: Box<dyn Environment>,
    obs: Observation,
    rng: ChaCha8Rng,
    episode: u64,
    seed_base: u64,
    gamma: f64,
    freeze_policy: bool,
}

impl WorkerCtx {
    pub fn new(worker_id: u32, shared: &Shared) -> Result<Self, TrainError> {
        let mut env = make_env(&shared.config.env_name)?;
        let seed_base = mix_seed(shared.run_seed, 0x10_000 + worker_id as u64);
        let rng = ChaCha8Rng::seed_from_u64(seed_base);
        let obs = env.reset(mix_seed(seed_base, 0));
        Ok(WorkerCtx {
            env,
            obs,
            rng,
            episode: 0,
            seed_base,
            gamma: shared.config.gamma,
            freeze_policy: shared.config.freeze_policy,
        })
    }

    fn select_action(&mut self, policy: &[f64]) -> usize {
        if self.freeze_policy {
            self.rng.gen_range(0..policy.len())
        } else {
            sample_categorical(policy, &mut self.rng)
        }
    }
}

pub(super) struct SegmentRollout {
    pub segment: TrajectorySegment,
    /// `V(s_j)` under the acting snapshot (the critic's "before" values).
    pub state_values: Vec<f64>,
    /// `c(s_j)` under the acting snapshot.
    pub state_confidences: Vec<f64>,
}

/// Roll out up to `window` steps under a fixed snapshot, recording rewards,
/// successor confidences, and successor values. Stops early at a terminal
/// state (bootstrap forced to 0) and resets the environment for the next
/// segment.
pub(super) fn run_segment(
    ctx: &mut WorkerCtx,
    snapshot: &ParamVector,
    window: usize,
) -> Result<SegmentRollout, TrainError> {
    let mut observations = Vec::with_capacity(window);
    let mut actions = Vec::with_capacity(window);
    let mut rewards = Vec::with_capacity(window);
    let mut confidences = Vec::with_capacity(window);
    let mut boot_values = Vec::with_capacity(window);
    let mut next_observations = Vec::with_capacity(window);
    let mut state_values = Vec::with_capacity(window);
    let mut state_confidences = Vec::with_capacity(window);

    let mut out = forward(snapshot, &ctx.obs)?;
    let mut terminal = false;
    for _ in 0..window {
        observations.push(ctx.obs.clone());
        state_values.push(out.value);
        state_confidences.push(out.confidence);
        let action = ctx.select_action(&out.policy);
        let sr = ctx.env.step(action)?;
        let next_out = forward(snapshot, &sr.observation)?;
        actions.push(action);
        rewards.push(sr.reward);
        // The confidence of the successor is recorded even when it is
        // terminal; only its bootstrap value is zeroed.
        confidences.push(next_out.confidence);
        boot_values.push(if sr.terminal { 0.0 } else { next_out.value });
        next_observations.push(sr.observation.clone());
        if sr.terminal {
            terminal = true;
            ctx.episode += 1;
            ctx.obs = ctx.env.reset(mix_seed(ctx.seed_base, ctx.episode));
            break;
        }
        ctx.obs = sr.observation;
        out = next_out;
    }
    let bootstrap_value = *boot_values.last().expect("window >= 1");
    Ok(SegmentRollout {
        segment: TrajectorySegment {
            observations,
            actions,
            rewards,
            confidences,
            boot_values,
            next_observations,
            bootstrap_value,
            terminal,
            gamma: ctx.gamma,
        },
        state_values,
        state_confidences,
    })
}

pub(super) fn worker_loop(worker_id: u32, shared: &Shared) -> Result<(), TrainError> {
    let mut ctx = WorkerCtx::new(worker_id, shared)?;
    let config = shared.config;
    let mixer = &shared.mixer;
    let mut nonfinite_streak = 0usize;

    loop {
        if shared.store.global_step() >= config.total_steps {
            break;
        }
        if let Some(deadline) = shared.deadline {
            if Instant::now() >= deadline {
                break;
            }
        }
        let snapshot = shared.store.snapshot();
        let rollout = run_segment(&mut ctx, &snapshot, config.window)?;
        let step = shared.store.advance_steps(rollout.segment.len() as u64);
        let targets = compute_targets(&rollout.segment, mixer)?;
        let (mut grad, diag) = loss_gradients(
            &snapshot,
            &rollout.segment,
            &targets,
            config.beta,
            mixer,
            config.freeze_policy,
        )?;

        let mut applied = false;
        if diag.finite {
            grad.clip_global_norm(config.grad_clip_norm);
            let lr = anneal_lr(step, config);
            applied = shared.store.apply_rmsprop(&grad, lr)?;
            if applied {
                nonfinite_streak = 0;
                let after = shared.store.snapshot();
                let value_changes = rollout
                    .segment
                    .observations
                    .iter()
                    .zip(&rollout.state_values)
                    .zip(&rollout.state_confidences)
                    .map(|((obs, &before), &conf)| {
                        forward(&after, obs).map(|o| (conf, before, o.value))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let weights = (mixer.mode == crate::returns::MixerMode::Car)
                    .then(|| {
                        (0..rollout.segment.len())
                            .map(|j| confidence_weights(&rollout.segment.confidences[j..]))
                            .collect::<Result<Vec<_>, _>>()
                    })
                    .transpose()?;
                shared.sink.append(Record::Segment {
                    step,
                    worker: worker_id,
                    len: rollout.segment.len(),
                    terminal: rollout.segment.terminal,
                    lr,
                    targets,
                    weights,
                    value_changes,
                    actor_objective: diag.actor_objective,
                    critic_loss: diag.critic_loss,
                    entropy: diag.mean_entropy,
                    grad_norm: diag.grad_norm,
                })?;
            }
        }
        if !applied {
            nonfinite_streak += 1;
            shared.sink.append(Record::Skipped {
                step,
                worker: worker_id,
                reason: "non-finite loss or gradient".into(),
            })?;
            if nonfinite_streak > MAX_NONFINITE_STREAK {
                return Err(TrainError::TooManyNonFiniteUpdates {
                    streak: nonfinite_streak,
                    step,
                });
            }
        }

        while let Some(eval_index) = shared.eval_gate.try_claim(shared.store.global_step()) {
            run_evaluation(shared, worker_id, eval_index)?;
        }
    }
    Ok(())
}

/// One evaluation round plus its checkpoint, logged under the claiming
/// worker's id.
pub(super) fn run_evaluation(
    shared: &Shared,
    worker_id: u32,
    eval_index: u64,
) -> Result<(), TrainError> {
    let config = shared.config;
    let step = shared.store.global_step();
    let params = shared.store.snapshot();
    let eval_seed = mix_seed(shared.run_seed ^ 0x5EED_CAFE, eval_index);
    let outcomes = evaluate_detailed(
        &params,
        &config.env_name,
        config.eval_episodes,
        config.eval_step_cap,
        eval_seed,
    )?;
    let mean_return = outcomes.iter().map(|o| o.ret).sum::<f64>() / outcomes.len() as f64;
    shared.sink.append(Record::Eval {
        step,
        worker: worker_id,
        eval_index,
        mean_return,
        episodes: outcomes.len(),
    })?;
    for outcome in outcomes {
        let episode = shared.eval_gate.next_episode_index();
        shared.sink.append(Record::EvalEpisode {
            step,
            worker: worker_id,
            eval_index,
            episode,
            ret: outcome.ret,
            len: outcome.len,
            confidences: outcome.confidences,
        })?;
    }
    if let Some(dir) = shared.ckpt_dir {
        let filename = format!("ckpt_{step}.bin");
        save_checkpoint(&dir.join(&filename), &params)?;
        shared.sink.append(Record::Checkpoint {
            step,
            worker: worker_id,
            path: filename,
        })?;
    }
    Ok(())
}
