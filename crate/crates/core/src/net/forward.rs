//! Forward evaluation of the shared-trunk network.

use super::params::{Activation, ParamRole, ParamVector};
use super::NetError;
use crate::env::Observation;

/// Activations retained for the backward pass: the raw input and each trunk
/// layer's post-activation output.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub input: Vec<f64>,
    pub trunk_acts: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Output of the last trunk layer; input to all three heads.
    pub fn features(&self) -> &[f64] {
        self.trunk_acts.last().expect("trunk has at least one layer")
    }
}

/// One forward pass: policy distribution, value estimate, confidence scalar.
#[derive(Debug, Clone)]
pub struct NetworkOutput {
    pub policy: Vec<f64>,
    pub value: f64,
    pub confidence: f64,
    pub cache: ForwardCache,
}

impl NetworkOutput {
    /// Shannon entropy of the policy in nats.
    pub fn entropy(&self) -> f64 {
        -self
            .policy
            .iter()
            .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
            .sum::<f64>()
    }
}

pub(crate) fn affine(
    params: &ParamVector,
    role_block: &super::params::Block,
    input: &[f64],
    out: &mut [f64],
) {
    let values = params.as_slice();
    let w = &values[role_block.weights.clone()];
    let b = &values[role_block.biases.clone()];
    for (o, out_v) in out.iter_mut().enumerate() {
        let row = &w[o * role_block.in_dim..(o + 1) * role_block.in_dim];
        let mut acc = b[o];
        for (wi, xi) in row.iter().zip(input) {
            acc += wi * xi;
        }
        *out_v = acc;
    }
}

pub(crate) fn softmax_in_place(logits: &mut [f64]) {
    let max = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let mut sum = 0.0;
    for l in logits.iter_mut() {
        *l = (*l - max).exp();
        sum += *l;
    }
    for l in logits.iter_mut() {
        *l /= sum;
    }
}

/// Evaluate the network on one observation.
pub fn forward(params: &ParamVector, obs: &Observation) -> Result<NetworkOutput, NetError> {
    let layout = params.layout();
    if obs.dim() != layout.spec.input_dim {
        return Err(NetError::DimensionMismatch {
            expected: layout.spec.input_dim,
            got: obs.dim(),
        });
    }
    let activation = layout.spec.activation;
    let mut trunk_acts: Vec<Vec<f64>> = Vec::with_capacity(layout.spec.hidden_dims.len());
    {
        let mut input: &[f64] = obs.as_slice();
        for block in layout.trunk_blocks() {
            let mut z = vec![0.0; block.out_dim];
            affine(params, block, input, &mut z);
            for v in &mut z {
                *v = match activation {
                    Activation::Relu => v.max(0.0),
                    Activation::Tanh => v.tanh(),
                };
            }
            trunk_acts.push(z);
            input = trunk_acts.last().unwrap();
        }
    }
    let features = trunk_acts.last().unwrap().clone();

    let policy_block = layout.block(ParamRole::PolicyHead);
    let mut policy = vec![0.0; policy_block.out_dim];
    affine(params, policy_block, &features, &mut policy);
    softmax_in_place(&mut policy);

    let mut value = [0.0];
    affine(params, layout.block(ParamRole::ValueHead), &features, &mut value);
    let mut confidence = [0.0];
    affine(
        params,
        layout.block(ParamRole::ConfidenceHead),
        &features,
        &mut confidence,
    );

    Ok(NetworkOutput {
        policy,
        value: value[0],
        confidence: confidence[0],
        cache: ForwardCache {
            input: obs.as_slice().to_vec(),
            trunk_acts,
        },
    })
}
