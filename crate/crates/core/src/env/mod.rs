//! Built-in environments with exactly known dynamics.
//!
//! Every environment here has a small enumerable state space and deterministic
//! transitions, so the dynamic-programming oracle in [`dp`] can produce exact
//! ground-truth value functions to check learned critics against. Stochasticity
//! enters only through the acting policy.
//!
//! Environments are selected by name string, optionally with a size parameter:
//! `random_walk[:N]`, `delayed_corridor[:L]`, `periodic_key_grid[:P]`.

mod corridor;
mod dp;
mod key_grid;
mod random_walk;

pub use corridor::DelayedCorridor;
pub use dp::{true_values, uniform_policy, ValueTable};
pub use key_grid::PeriodicKeyGrid;
pub use random_walk::RandomWalkChain;

use thiserror::Error;

/// A feature vector handed to the agent. Fixed length per environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f64>);

impl Observation {
    /// One-hot vector of length `dim` with a 1.0 at `index`.
    pub fn one_hot(dim: usize, index: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[index] = 1.0;
        Observation(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Static description of an environment instance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvSpec {
    pub name: String,
    pub observation_dim: usize,
    pub action_count: usize,
    /// Environment-local episode cap; stepping past it truncates the episode
    /// (reported as terminal).
    pub max_episode_steps: usize,
}

/// Outcome of one environment step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub terminal: bool,
}

/// Dynamics of one (state, action) pair under the uncapped chain.
/// `next_state: None` means the action enters a terminal absorbing state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub next_state: Option<usize>,
    pub reward: f64,
}

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("unknown environment name `{0}`")]
    UnknownEnv(String),
    #[error("bad environment parameter: {0}")]
    BadParameter(String),
    #[error("action {action} out of range (action_count = {action_count})")]
    InvalidAction { action: usize, action_count: usize },
    #[error("environment is terminal; call reset before stepping")]
    SteppedTerminal,
    #[error("policy row for state {state} is not a distribution (sum = {sum})")]
    NonStochasticPolicy { state: usize, sum: f64 },
    #[error("policy shape mismatch: expected {expected} rows of {actions} actions")]
    PolicyShape { expected: usize, actions: usize },
    #[error("value sweep did not reach tolerance within {0} sweeps")]
    NoConvergence(usize),
    #[error("discount factor {0} outside [0, 1)")]
    BadGamma(f64),
}

/// A single-threaded environment instance. Each training worker owns a
/// private copy; the dynamics accessors (`transition`, `observation_of`) are
/// pure and shared with the DP oracle.
pub trait Environment: Send {
    fn spec(&self) -> &EnvSpec;

    /// Put the environment back at its initial state and return the initial
    /// observation. The built-in environments are deterministic, so `seed`
    /// only matters for environments with stochastic dynamics.
    fn reset(&mut self, seed: u64) -> Observation;

    /// Advance by one action. Errors on out-of-range actions and on stepping
    /// a terminal environment.
    fn step(&mut self, action: usize) -> Result<StepResult, EnvError>;

    /// Number of non-terminal discrete states.
    fn state_count(&self) -> usize;

    /// Discrete index of the current state.
    fn state_index(&self) -> usize;

    /// Observation for an arbitrary discrete state.
    fn observation_of(&self, state: usize) -> Observation;

    /// Uncapped dynamics for the DP oracle.
    fn transition(&self, state: usize, action: usize) -> Transition;

    /// Exact set of rewards this environment can emit.
    fn declared_rewards(&self) -> &'static [f64];
}

/// Build an environment from its name string.
///
/// Accepted forms: `random_walk`, `random_walk:19`, `delayed_corridor`,
/// `delayed_corridor:30`, `periodic_key_grid`, `periodic_key_grid:12`.
pub fn make_env(name: &str) -> Result<Box<dyn Environment>, EnvError> {
    let (base, param) = match name.split_once(':') {
        Some((b, p)) => (b, Some(p)),
        None => (name, None),
    };
    let parse = |p: Option<&str>, default: usize| -> Result<usize, EnvError> {
        match p {
            None => Ok(default),
            Some(s) => s
                .parse::<usize>()
                .map_err(|_| EnvError::BadParameter(format!("`{s}` is not a positive integer"))),
        }
    };
    match base {
        "random_walk" => Ok(Box::new(RandomWalkChain::new(parse(param, 19)?)?)),
        "delayed_corridor" => Ok(Box::new(DelayedCorridor::new(parse(param, 30)?)?)),
        "periodic_key_grid" => Ok(Box::new(PeriodicKeyGrid::new(parse(param, 12)?)?)),
        _ => Err(EnvError::UnknownEnv(name.to_string())),
    }
}
