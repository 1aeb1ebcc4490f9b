//! 5x5 grid with a periodically collectible key cell.

use super::{EnvError, EnvSpec, Environment, Observation, StepResult, Transition};

const SIDE: usize = 5;
const CELLS: usize = SIDE * SIDE;
/// Center cell; pays +5 when entered on a step count that is a multiple of
/// the period.
const KEY_CELL: usize = 12;
/// Corner cells paying +0.1 each time they are entered from elsewhere.
const SCATTER: [usize; 3] = [4, 20, 24];
const REWARDS: &[f64] = &[0.0, 0.1, 5.0];

/// 5x5 grid world whose discrete state is `(position, phase)` with the phase
/// advancing modulo the period `P` every step. The key cell is collectible
/// exactly when the phase wraps to 0, so the grid contains a small set of
/// highly recurring high-value states. Actions: 0 = up, 1 = down, 2 = left,
/// 3 = right; moving off the edge stays in place. No terminal states besides
/// the 200-step truncation cap.
pub struct PeriodicKeyGrid {
    spec: EnvSpec,
    period: usize,
    pos: usize,
    phase: usize,
    steps: usize,
    done: bool,
}

impl PeriodicKeyGrid {
    pub fn new(period: usize) -> Result<Self, EnvError> {
        if period < 1 {
            return Err(EnvError::BadParameter(
                "periodic_key_grid needs period >= 1".into(),
            ));
        }
        Ok(PeriodicKeyGrid {
            spec: EnvSpec {
                name: format!("periodic_key_grid:{period}"),
                observation_dim: CELLS * period,
                action_count: 4,
                max_episode_steps: 200,
            },
            period,
            pos: 0,
            phase: 0,
            steps: 0,
            done: false,
        })
    }

    fn move_pos(pos: usize, action: usize) -> usize {
        let (row, col) = (pos / SIDE, pos % SIDE);
        let (nr, nc) = match action {
            0 => (row.saturating_sub(1), col),
            1 => ((row + 1).min(SIDE - 1), col),
            2 => (row, col.saturating_sub(1)),
            _ => (row, (col + 1).min(SIDE - 1)),
        };
        nr * SIDE + nc
    }

    fn pack(&self, pos: usize, phase: usize) -> usize {
        pos * self.period + phase
    }
}

impl Environment for PeriodicKeyGrid {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&mut self, _seed: u64) -> Observation {
        self.pos = 0;
        self.phase = 0;
        self.steps = 0;
        self.done = false;
        Observation::one_hot(self.spec.observation_dim, 0)
    }

    fn step(&mut self, action: usize) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::SteppedTerminal);
        }
        if action >= 4 {
            return Err(EnvError::InvalidAction {
                action,
                action_count: 4,
            });
        }
        let state = self.pack(self.pos, self.phase);
        let tr = self.transition(state, action);
        let next = tr.next_state.expect("grid has no absorbing states");
        self.pos = next / self.period;
        self.phase = next % self.period;
        self.steps += 1;
        self.done = self.steps >= self.spec.max_episode_steps;
        Ok(StepResult {
            observation: Observation::one_hot(self.spec.observation_dim, next),
            reward: tr.reward,
            terminal: self.done,
        })
    }

    fn state_count(&self) -> usize {
        CELLS * self.period
    }

    fn state_index(&self) -> usize {
        self.pack(self.pos, self.phase)
    }

    fn observation_of(&self, state: usize) -> Observation {
        Observation::one_hot(self.spec.observation_dim, state)
    }

    fn transition(&self, state: usize, action: usize) -> Transition {
        let pos = state / self.period;
        let phase = state % self.period;
        let npos = Self::move_pos(pos, action);
        let nphase = (phase + 1) % self.period;
        let mut reward = 0.0;
        if npos == KEY_CELL && nphase == 0 {
            reward += 5.0;
        }
        if SCATTER.contains(&npos) && npos != pos {
            reward += 0.1;
        }
        Transition {
            next_state: Some(pos_phase(npos, nphase, self.period)),
            reward,
        }
    }

    fn declared_rewards(&self) -> &'static [f64] {
        REWARDS
    }
}

fn pos_phase(pos: usize, phase: usize, period: usize) -> usize {
    pos * period + phase
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_cell_pays_only_on_phase_wrap() {
        let period = 3;
        let mut env = PeriodicKeyGrid::new(period).unwrap();
        env.reset(0);
        // Walk to the key cell (2,2) from (0,0): down, down, right, right.
        // Arrival happens on step 4; with period 3 the phase after step 4 is
        // 1, so no key reward on arrival.
        let path = [1usize, 1, 3, 3];
        let mut total = 0.0;
        for a in path {
            total += env.step(a).unwrap().reward;
        }
        assert_eq!(env.state_index() / period, KEY_CELL);
        assert_eq!(total, 0.0);
        // Bounce off the bottom edge until the phase wraps while re-entering.
        // Leaving and re-entering the key cell two steps later lands on
        // phase (4 + 2) % 3 == 0: reward.
        assert_eq!(env.step(1).unwrap().reward, 0.0);
        assert_eq!(env.step(0).unwrap().reward, 5.0);
    }

    #[test]
    fn scatter_cells_require_reentry() {
        let mut env = PeriodicKeyGrid::new(4).unwrap();
        env.reset(0);
        // (0,0) -> right x4 reaches (0,4) = scatter cell 4.
        for _ in 0..3 {
            assert_eq!(env.step(3).unwrap().reward, 0.0);
        }
        assert_eq!(env.step(3).unwrap().reward, 0.1);
        // Bumping the wall stays on the cell: no fresh reward.
        assert_eq!(env.step(3).unwrap().reward, 0.0);
    }

    #[test]
    fn truncates_at_200_steps() {
        let mut env = PeriodicKeyGrid::new(2).unwrap();
        env.reset(0);
        for i in 0..200 {
            let r = env.step(0).unwrap();
            assert_eq!(r.terminal, i == 199);
        }
        assert!(env.step(0).is_err());
    }
}
