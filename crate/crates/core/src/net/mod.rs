//! Shared-trunk policy/value/confidence network with exact analytic
//! gradients, written directly against flat `f64` parameter vectors.
//!
//! This is deliberately not a generic autodiff stack. The architecture is
//! fixed (MLP trunk, three affine heads), so the backward pass is spelled
//! out by hand and verified coordinate-by-coordinate against the central
//! finite-difference oracle in [`oracle`].

mod checkpoint;
mod forward;
mod grads;
pub mod oracle;
mod params;
mod rmsprop;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use forward::{forward, ForwardCache, NetworkOutput};
pub use grads::{loss_gradients, LossDiagnostics};
pub use params::{
    init_params, Activation, GradientVector, NetworkSpec, ParamLayout, ParamRole, ParamVector,
};
pub use rmsprop::{rmsprop_step, RmsPropState};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("network spec invalid: {0}")]
    BadSpec(String),
    #[error("input dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("segment/targets mismatch: {0}")]
    SegmentMismatch(String),
    #[error("action {action} out of range (action_count = {action_count})")]
    InvalidAction { action: usize, action_count: usize },
    #[error(transparent)]
    Returns(#[from] crate::returns::ReturnsError),
    #[error("checkpoint malformed: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
