//! Desk-scale asynchronous advantage actor-critic with interchangeable
//! TD-target constructions.
//!
//! The crate is organized around five pieces:
//!
//! * [`env`]     - small exactly-solvable environments plus a
//!   dynamic-programming oracle for ground-truth value functions,
//! * [`returns`] - the TD-target kernel: n-step returns, truncated
//!   lambda-returns, and confidence-weighted autodidactic returns,
//! * [`net`]     - a shared-trunk policy/value/confidence network with
//!   hand-written analytic gradients and shared-statistics RMSProp,
//! * [`trainer`] - the multi-worker asynchronous training loop, run logs,
//!   and checkpoints,
//! * [`analysis`] - score normalization and the value/confidence
//!   diagnostics consumed by the CLI.

pub mod analysis;
pub mod env;
pub mod net;
pub mod returns;
pub mod trainer;

pub use env::{make_env, EnvSpec, Environment, Observation, StepResult, ValueTable};
pub use net::{
    forward, init_params, loss_gradients, GradientVector, NetworkOutput, NetworkSpec, ParamVector,
    RmsPropState,
};
pub use returns::{
    build_weight_matrix, compute_targets, confidence_weights, lambda_weight_vector, n_step_return,
    oracle_targets, MixerConfig, MixerMode, TrajectorySegment, WeightMatrix,
};
pub use trainer::{anneal_lr, evaluate, train, ParameterStore, RunLog, TrainConfig, TrainOutput};
