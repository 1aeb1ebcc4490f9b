//! Dynamic-programming policy evaluation for the built-in environments.

use super::{EnvError, Environment};

/// Exact state values for a fixed policy, one entry per discrete state.
/// Terminal successors are valued at 0.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub values: Vec<f64>,
    pub gamma: f64,
}

impl ValueTable {
    pub fn value(&self, state: usize) -> f64 {
        self.values[state]
    }
}

/// Uniform action distribution over every state of `env`.
pub fn uniform_policy(env: &dyn Environment) -> Vec<Vec<f64>> {
    let a = env.spec().action_count;
    vec![vec![1.0 / a as f64; a]; env.state_count()]
}

/// Solve the policy-evaluation equations `V(s) = sum_a pi(a|s) (r(s,a) +
/// gamma V(s'))` by Gauss-Seidel sweeps, iterating until the sup-norm Bellman
/// residual drops to 1e-12.
pub fn true_values(
    env: &dyn Environment,
    policy: &[Vec<f64>],
    gamma: f64,
) -> Result<ValueTable, EnvError> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(EnvError::BadGamma(gamma));
    }
    let states = env.state_count();
    let actions = env.spec().action_count;
    if policy.len() != states || policy.iter().any(|row| row.len() != actions) {
        return Err(EnvError::PolicyShape {
            expected: states,
            actions,
        });
    }
    for (s, row) in policy.iter().enumerate() {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(EnvError::NonStochasticPolicy { state: s, sum });
        }
    }

    // Cache dynamics once; `transition` is pure.
    let dyn_table: Vec<Vec<(Option<usize>, f64)>> = (0..states)
        .map(|s| {
            (0..actions)
                .map(|a| {
                    let t = env.transition(s, a);
                    (t.next_state, t.reward)
                })
                .collect()
        })
        .collect();

    let backup = |values: &[f64], s: usize| -> f64 {
        let mut v = 0.0;
        for a in 0..actions {
            let (next, reward) = dyn_table[s][a];
            let cont = match next {
                Some(ns) => gamma * values[ns],
                None => 0.0,
            };
            v += policy[s][a] * (reward + cont);
        }
        v
    };

    const TOLERANCE: f64 = 1e-12;
    const MAX_SWEEPS: usize = 5_000_000;
    let mut values = vec![0.0; states];
    for _ in 0..MAX_SWEEPS {
        for s in 0..states {
            values[s] = backup(&values, s);
        }
        let residual = (0..states)
            .map(|s| (backup(&values, s) - values[s]).abs())
            .fold(0.0, f64::max);
        if residual <= TOLERANCE {
            return Ok(ValueTable { values, gamma });
        }
    }
    Err(EnvError::NoConvergence(MAX_SWEEPS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::make_env;

    #[test]
    fn corridor_always_forward() {
        let env = make_env("delayed_corridor:3").unwrap();
        let policy = vec![vec![1.0, 0.0]; 3];
        let table = true_values(env.as_ref(), &policy, 0.99).unwrap();
        assert!((table.value(0) - 0.9801).abs() < 1e-12);
        assert!((table.value(1) - 0.99).abs() < 1e-12);
        assert!((table.value(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_walk_near_undiscounted_is_symmetric() {
        let env = make_env("random_walk").unwrap();
        let table = true_values(env.as_ref(), &uniform_policy(env.as_ref()), 0.999999).unwrap();
        assert!(table.value(9).abs() < 1e-9);
        for i in 0..19 {
            assert!((table.value(i) + table.value(18 - i)).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_policy_and_gamma() {
        let env = make_env("random_walk:5").unwrap();
        let mut policy = uniform_policy(env.as_ref());
        policy[2] = vec![0.9, 0.3];
        assert!(matches!(
            true_values(env.as_ref(), &policy, 0.9),
            Err(EnvError::NonStochasticPolicy { state: 2, .. })
        ));
        let ok = uniform_policy(env.as_ref());
        assert!(matches!(
            true_values(env.as_ref(), &ok, 1.0),
            Err(EnvError::BadGamma(_))
        ));
    }
}
