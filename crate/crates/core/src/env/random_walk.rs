//! Linear random-walk chain with signed terminal rewards.

use super::{EnvError, EnvSpec, Environment, Observation, StepResult, Transition};

const REWARDS: &[f64] = &[-1.0, 0.0, 1.0];

/// `N` non-terminal states in a line with terminals off both ends.
/// Entering the left terminal pays -1, the right terminal +1, every other
/// step 0. Episodes start at the center state. Actions: 0 = left, 1 = right.
pub struct RandomWalkChain {
    spec: EnvSpec,
    n: usize,
    state: usize,
    steps: usize,
    done: bool,
}

impl RandomWalkChain {
    pub fn new(n: usize) -> Result<Self, EnvError> {
        if n < 1 {
            return Err(EnvError::BadParameter(
                "random_walk needs at least 1 state".into(),
            ));
        }
        Ok(RandomWalkChain {
            spec: EnvSpec {
                name: format!("random_walk:{n}"),
                observation_dim: n,
                action_count: 2,
                max_episode_steps: 1000,
            },
            n,
            state: (n - 1) / 2,
            steps: 0,
            done: false,
        })
    }
}

impl Environment for RandomWalkChain {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Observation {
        self.state = (self.n - 1) / 2;
        self.steps = 0;
        self.done = false;
        Observation::one_hot(self.n, self.state)
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::SteppedTerminal);
        }
        if action >= 2 {
            return Err(EnvError::InvalidAction {
                action,
                action_count: 2,
            });
        }
        let tr = self.transition(self.state, action);
        self.steps += 1;
        let truncated = self.steps >= self.spec.max_episode_steps;
        match tr.next_state {
            None => {
                self.done = true;
                // observation of the terminal edge state the agent left from
                Ok(StepResult {
                    observation: Observation::one_hot(self.n, self.state),
                    reward: tr.reward,
                    terminal: true,
                })
            }
            Some(next) => {
                self.state = next;
                self.done = truncated;
                Ok(StepResult {
                    observation: Observation::one_hot(self.n, next),
                    reward: tr.reward,
                    terminal: truncated,
                })
            }
        }
    }

    fn state_count(&self) -> usize {
        self.n
    }

    fn state_index(&self) -> usize {
        self.state
    }

    fn observation_of(&self, state: usize) -> Observation {
        Observation::one_hot(self.n, state)
    }

    fn transition(&self, state: usize, action: usize) -> Transition {
        match action {
            0 => {
                if state == 0 {
                    Transition {
                        next_state: None,
                        reward: -1.0,
                    }
                } else {
                    Transition {
                        next_state: Some(state - 1),
                        reward: 0.0,
                    }
                }
            }
            _ => {
                if state == self.n - 1 {
                    Transition {
                        next_state: None,
                        reward: 1.0,
                    }
                } else {
                    Transition {
                        next_state: Some(state + 1),
                        reward: 0.0,
                    }
                }
            }
        }
    }

    fn declared_rewards(&self) -> &'static [f64] {
        REWARDS
    }
}
