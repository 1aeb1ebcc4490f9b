//! Policy evaluation with a frozen parameter snapshot.

use super::{mix_seed, sample_categorical, TrainError};
use crate::env::make_env;
use crate::net::{forward, ParamVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// One finished evaluation episode.
#[derive(Debug, Clone)]
pub struct EvalEpisodeOutcome {
    /// Undiscounted episode return.
    pub ret: f64,
    /// Number of steps taken.
    pub len: usize,
    /// Confidence the network assigned to each visited state, in step order.
    pub confidences: Vec<f64>,
}

/// Run `episodes` fresh episodes by sampling from the policy and return the
/// per-episode outcomes. Episode `e` uses an RNG seeded from `(seed, e)`, so
/// the whole evaluation is deterministic per seed.
pub fn evaluate_detailed(
    params: &ParamVector,
    env_name: &str,
    episodes: usize,
    step_cap: usize,
    seed: u64,
) -> Result<Vec<EvalEpisodeOutcome>, TrainError> {
    let mut outcomes = Vec::with_capacity(episodes);
    for episode in 0..episodes {
        let mut env = make_env(env_name)?;
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, episode as u64));
        let mut obs = env.reset(mix_seed(seed, episode as u64));
        let mut ret = 0.0;
        let mut confidences = Vec::new();
        for _ in 0..step_cap {
            let out = forward(params, &obs)?;
            confidences.push(out.confidence);
            let action = sample_categorical(&out.policy, &mut rng);
            let sr = env.step(action)?;
            ret += sr.reward;
            if sr.terminal {
                break;
            }
            obs = sr.observation;
        }
        let len = confidences.len();
        outcomes.push(EvalEpisodeOutcome {
            ret,
            len,
            confidences,
        });
    }
    Ok(outcomes)
}

/// Mean undiscounted return over `episodes` sampled episodes.
pub fn evaluate(
    params: &ParamVector,
    env_name: &str,
    episodes: usize,
    step_cap: usize,
    seed: u64,
) -> Result<f64, TrainError> {
    let outcomes = evaluate_detailed(params, env_name, episodes, step_cap, seed)?;
    Ok(outcomes.iter().map(|o| o.ret).sum::<f64>() / outcomes.len().max(1) as f64)
}
