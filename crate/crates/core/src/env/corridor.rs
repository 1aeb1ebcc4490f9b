//! Corridor with a single delayed reward at the far end.

use super::{EnvError, EnvSpec, Environment, Observation, StepResult, Transition};

const REWARDS: &[f64] = &[0.0, 1.0];

/// Corridor of `L` states. The agent starts at state 0; `forward` (action 0)
/// from the last state ends the episode with reward +1, every other step pays
/// nothing. `back` (action 1) at state 0 stays put. Episode cap is `4 * L`
/// steps, after which the episode truncates.
pub struct DelayedCorridor {
    spec: EnvSpec,
    l: usize,
    state: usize,
    steps: usize,
    done: bool,
}

impl DelayedCorridor {
    pub fn new(l: usize) -> Result<Self, EnvError> {
        if l < 1 {
            return Err(EnvError::BadParameter(
                "delayed_corridor needs at least 1 state".into(),
            ));
        }
        Ok(DelayedCorridor {
            spec: EnvSpec {
                name: format!("delayed_corridor:{l}"),
                observation_dim: l,
                action_count: 2,
                max_episode_steps: 4 * l,
            },
            l,
            state: 0,
            steps: 0,
            done: false,
        })
    }
}

impl Environment for DelayedCorridor {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Observation {
        self.state = 0;
        self.steps = 0;
        self.done = false;
        Observation::one_hot(self.l, 0)
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
                Ok(StepResult {
                    observation: Observation::one_hot(self.l, self.state),
                    reward: tr.reward,
                    terminal: true,
                })
            }
            Some(next) => {
                self.state = next;
                self.done = truncated;
                Ok(StepResult {
                    observation: Observation::one_hot(self.l, next),
                    reward: tr.reward,
                    terminal: truncated,
                })
            }
        }
    }

    fn state_count(&self) -> usize {
        self.l
    }

    fn state_index(&self) -> usize {
        self.state
    }

    fn observation_of(&self, state: usize) -> Observation {
        Observation::one_hot(self.l, state)
    }

    fn transition(&self, state: usize, action: usize) -> Transition {
        match action {
            0 => {
                if state == self.l - 1 {
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
            _ => Transition {
                next_state: Some(state.saturating_sub(1)),
                reward: 0.0,
            },
        }
    }

    fn declared_rewards(&self) -> &'static [f64] {
        REWARDS
    }
}
