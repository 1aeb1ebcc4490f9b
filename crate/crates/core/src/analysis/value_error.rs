//! Squared error of the learned value function along evaluation rollouts.

use super::AnalysisError;
use crate::env::{make_env, true_values};
use crate::net::{forward, load_checkpoint};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

/// What the value predictions are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueErrorReference {
    /// The realized discounted reward tail of each rollout.
    SampledReturns,
    /// The exact policy values from the dynamic-programming oracle, where
    /// the evaluated policy is the checkpoint's own policy distribution.
    DpTruth,
}

/// Mean squared value error at one within-episode timestep, averaged over
/// the episodes that reached it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueErrorPoint {
    pub t: usize,
    pub mse: f64,
    pub count: usize,
}

/// Roll out `episodes` episodes with the checkpointed policy (sampled
/// actions) and report, per within-episode timestep `t`, the mean squared
/// difference between `V(s_t)` and the reference.
pub fn value_error_curve(
    checkpoint: &Path,
    env_name: &str,
    episodes: usize,
    gamma: f64,
    reference: ValueErrorReference,
    seed: u64,
) -> Result<Vec<ValueErrorPoint>, AnalysisError> {
    if episodes == 0 {
        return Err(AnalysisError::BadArgument("episodes must be >= 1".into()));
    }
    if !(0.0..1.0).contains(&gamma) {
        return Err(AnalysisError::BadArgument(format!(
            "gamma {gamma} outside [0, 1)"
        )));
    }
    let params = load_checkpoint(checkpoint)?;
    let mut env = make_env(env_name)?;

    let dp_table = match reference {
        ValueErrorReference::DpTruth => {
            let policy: Vec<Vec<f64>> = (0..env.state_count())
                .map(|s| forward(&params, &env.observation_of(s)).map(|o| o.policy))
                .collect::<Result<_, _>>()?;
            Some(true_values(env.as_ref(), &policy, gamma)?)
        }
        ValueErrorReference::SampledReturns => None,
    };

    let mut sums: Vec<f64> = Vec::new();
    let mut counts: Vec<usize> = Vec::new();
    for episode in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (episode as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        let mut obs = env.reset(episode as u64);
        let mut predictions = Vec::new();
        let mut states = Vec::new();
        let mut rewards = Vec::new();
        loop {
            let out = forward(&params, &obs)?;
            predictions.push(out.value);
            states.push(env.state_index());
            let u: f64 = rng.gen();
            let mut cumulative = 0.0;
            let mut action = out.policy.len() - 1;
            for (a, &p) in out.policy.iter().enumerate() {
                cumulative += p;
                if u < cumulative {
                    action = a;
                    break;
                }
            }
            let sr = env.step(action)?;
            rewards.push(sr.reward);
            if sr.terminal {
                break;
            }
            obs = sr.observation;
        }

        let errors: Vec<f64> = match &dp_table {
            Some(table) => predictions
                .iter()
                .zip(&states)
                .map(|(&v, &s)| {
                    let d = v - table.value(s);
                    d * d
                })
                .collect(),
            None => {
                // Discounted reward tails, computed backward.
                let mut tail = 0.0;
                let mut tails = vec![0.0; rewards.len()];
                for t in (0..rewards.len()).rev() {
                    tail = rewards[t] + gamma * tail;
                    tails[t] = tail;
                }
                predictions
                    .iter()
                    .zip(&tails)
                    .map(|(&v, &g)| {
                        let d = v - g;
                        d * d
                    })
                    .collect()
            }
        };
        if errors.len() > sums.len() {
            sums.resize(errors.len(), 0.0);
            counts.resize(errors.len(), 0);
        }
        for (t, e) in errors.iter().enumerate() {
            sums[t] += e;
            counts[t] += 1;
        }
    }
    Ok(sums
        .iter()
        .zip(&counts)
        .enumerate()
        .map(|(t, (&sum, &count))| ValueErrorPoint {
            t,
            mse: sum / count as f64,
            count,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::{save_checkpoint, NetworkSpec, ParamLayout, ParamVector};

    fn zero_checkpoint(dir: &Path, input_dim: usize, actions: usize) -> std::path::PathBuf {
        let layout = ParamLayout::new(NetworkSpec::new(input_dim, actions)).unwrap();
        let params = ParamVector::zeros(layout);
        let path = dir.join("ckpt_0.bin");
        save_checkpoint(&path, &params).unwrap();
        path
    }

    #[test]
    fn random_network_errors_are_nonnegative_everywhere() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = zero_checkpoint(dir.path(), 19, 2);
        let curve = value_error_curve(
            &ckpt,
            "random_walk",
            4,
            0.99,
            ValueErrorReference::SampledReturns,
            9,
        )
        .unwrap();
        assert!(!curve.is_empty());
        for p in &curve {
            assert!(p.mse >= 0.0);
            assert!(p.count >= 1);
        }
        assert_eq!(curve[0].count, 4);

        let dp = value_error_curve(&ckpt, "random_walk", 3, 0.99, ValueErrorReference::DpTruth, 11)
            .unwrap();
        assert!(dp.iter().any(|p| p.mse > 0.0));
    }

    /// With one-hot observations the trunk can pass states through exactly,
    /// so a hand-built network can realize the DP values verbatim. On the
    /// deterministic corridor the sampled tails then match them exactly.
    #[test]
    fn perfect_values_on_deterministic_corridor_give_zero_sampled_error() {
        use crate::env::true_values;
        use crate::net::ParamRole;

        let gamma = 0.99;
        let env = make_env("delayed_corridor:3").unwrap();
        let dp = true_values(env.as_ref(), &vec![vec![1.0, 0.0]; 3], gamma).unwrap();

        let layout = ParamLayout::new(NetworkSpec::new(3, 2)).unwrap();
        let mut params = ParamVector::zeros(layout.clone());
        // Identity pass-through for the first 3 units of both trunk layers.
        let trunk: Vec<_> = layout
            .blocks
            .iter()
            .filter(|b| b.role == ParamRole::Trunk)
            .collect();
        for block in &trunk {
            for i in 0..3 {
                params.as_mut_slice()[block.weights.start + i * block.in_dim + i] = 1.0;
            }
        }
        let value = layout
            .blocks
            .iter()
            .find(|b| b.role == ParamRole::ValueHead)
            .unwrap();
        for s in 0..3 {
            params.as_mut_slice()[value.weights.start + s] = dp.value(s);
        }
        // Policy head: drive action 0 (forward) to near-determinism.
        let policy = layout
            .blocks
            .iter()
            .find(|b| b.role == ParamRole::PolicyHead)
            .unwrap();
        params.as_mut_slice()[policy.biases.start] = 60.0;
        params.as_mut_slice()[policy.biases.start + 1] = -60.0;

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("perfect.bin");
        save_checkpoint(&path, &params).unwrap();
        let curve = value_error_curve(
            &path,
            "delayed_corridor:3",
            5,
            gamma,
            ValueErrorReference::SampledReturns,
            3,
        )
        .unwrap();
        assert_eq!(curve.len(), 3);
        for p in &curve {
            assert!(p.mse < 1e-24, "t = {}: mse = {}", p.t, p.mse);
        }
    }
}
