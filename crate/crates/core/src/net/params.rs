//! Flat parameter storage with a role-tagged layout.
//!
//! All trainable parameters live in one `Vec<f64>` so optimizer state,
//! checkpoints, and gradient vectors can share the indexing. The layout maps
//! each affine block (trunk layers, then the three heads) to its weight and
//! bias ranges and records which role the block belongs to; the gradient
//! blocking rules are stated in terms of those roles.

use super::NetError;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use std::sync::Arc;

/// Architecture of the shared-trunk network: an MLP trunk feeding a softmax
/// policy head, a scalar value head, and a scalar confidence head.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_dim: usize,
    pub hidden_dims: Vec<usize>,
    pub action_count: usize,
    pub activation: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl NetworkSpec {
    /// Default trunk: two hidden layers of 64 rectifier units.
    pub fn new(input_dim: usize, action_count: usize) -> Self {
        NetworkSpec {
            input_dim,
            hidden_dims: vec![64, 64],
            action_count,
            activation: Activation::Relu,
        }
    }

    pub fn with_hidden(mut self, hidden_dims: Vec<usize>) -> Self {
        self.hidden_dims = hidden_dims;
        self
    }

    pub fn validate(&self) -> Result<(), NetError> {
        if self.input_dim == 0 {
            return Err(NetError::BadSpec("input_dim must be >= 1".into()));
        }
        if self.action_count < 2 {
            return Err(NetError::BadSpec("action_count must be >= 2".into()));
        }
        if self.hidden_dims.is_empty() || self.hidden_dims.iter().any(|&d| d == 0) {
            return Err(NetError::BadSpec(
                "at least one hidden layer, all dims >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Which part of the network a parameter block belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamRole {
    Trunk,
    PolicyHead,
    ValueHead,
    ConfidenceHead,
}

/// One affine block `y = W x + b`. Weights are row-major `(out_dim, in_dim)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub role: ParamRole,
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Range<usize>,
    pub biases: Range<usize>,
}

/// Index map from (block, role) to flat ranges; shared by parameters,
/// gradients, and optimizer accumulators.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayout {
    pub spec: NetworkSpec,
    pub blocks: Vec<Block>,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(spec: NetworkSpec) -> Result<Arc<Self>, NetError> {
        spec.validate()?;
        let mut blocks = Vec::new();
        let mut offset = 0;
        let mut push = |role: ParamRole, in_dim: usize, out_dim: usize, offset: &mut usize| {
            let weights = *offset..*offset + in_dim * out_dim;
            let biases = weights.end..weights.end + out_dim;
            *offset = biases.end;
            blocks.push(Block {
                role,
                in_dim,
                out_dim,
                weights,
                biases,
            });
        };
        let mut prev = spec.input_dim;
        for &h in &spec.hidden_dims {
            push(ParamRole::Trunk, prev, h, &mut offset);
            prev = h;
        }
        push(ParamRole::PolicyHead, prev, spec.action_count, &mut offset);
        push(ParamRole::ValueHead, prev, 1, &mut offset);
        push(ParamRole::ConfidenceHead, prev, 1, &mut offset);
        Ok(Arc::new(ParamLayout {
            spec,
            blocks,
            total: offset,
        }))
    }

    /// Flat index ranges covered by blocks of `role`.
    pub fn ranges_of(&self, role: ParamRole) -> Vec<Range<usize>> {
        self.blocks
            .iter()
            .filter(|b| b.role == role)
            .map(|b| b.weights.start..b.biases.end)
            .collect()
    }

    pub fn feature_dim(&self) -> usize {
        *self.spec.hidden_dims.last().unwrap()
    }

    pub(crate) fn block(&self, role: ParamRole) -> &Block {
        self.blocks
            .iter()
            .find(|b| b.role == role)
            .expect("head block present by construction")
    }

    pub(crate) fn trunk_blocks(&self) -> impl Iterator<Item = &Block> {
        self.blocks.iter().filter(|b| b.role == ParamRole::Trunk)
    }
}

/// Flat trainable parameters plus their layout.
#[derive(Debug, Clone)]
pub struct ParamVector {
    layout: Arc<ParamLayout>,
    values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(layout: Arc<ParamLayout>) -> Self {
        let values = vec![0.0; layout.total];
        ParamVector { layout, values }
    }

    pub fn from_values(layout: Arc<ParamLayout>, values: Vec<f64>) -> Result<Self, NetError> {
        if values.len() != layout.total {
            return Err(NetError::BadSpec(format!(
                "value count {} does not match layout total {}",
                values.len(),
                layout.total
            )));
        }
        Ok(ParamVector { layout, values })
    }

    pub fn layout(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Gradient (or update direction) with the same layout as the parameters.
#[derive(Debug, Clone)]
pub struct GradientVector {
    layout: Arc<ParamLayout>,
    values: Vec<f64>,
}

impl GradientVector {
    pub fn zeros(layout: Arc<ParamLayout>) -> Self {
        let values = vec![0.0; layout.total];
        GradientVector { layout, values }
    }

    pub fn layout(&self) -> &Arc<ParamLayout> {
        &self.layout
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn global_norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Scale the whole vector so its global norm does not exceed `max_norm`.
    /// Returns the norm before clipping.
    pub fn clip_global_norm(&mut self, max_norm: f64) -> f64 {
        let norm = self.global_norm();
        if norm > max_norm && norm > 0.0 {
            let scale = max_norm / norm;
            for v in &mut self.values {
                *v *= scale;
            }
        }
        norm
    }
}

/// Deterministic fan-in-scaled initialization: weights uniform in
/// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases zero.
pub fn init_params(spec: &NetworkSpec, seed: u64) -> Result<ParamVector, NetError> {
    let layout = ParamLayout::new(spec.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = vec![0.0; layout.total];
    for block in &layout.blocks {
        let limit = 1.0 / (block.in_dim as f64).sqrt();
        let dist = Uniform::new_inclusive(-limit, limit);
        for i in block.weights.clone() {
            values[i] = dist.sample(&mut rng);
        }
        // biases stay zero
    }
    Ok(ParamVector { layout, values })
}
