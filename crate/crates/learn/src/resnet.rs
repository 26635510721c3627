use mlct_core::Field;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conv::{conv_acc, conv_filter_grad, conv_transpose_acc};
use crate::{LearnError, Result};

/// Channel counts `(k0, k1, k2, k3, k4)` of a four-layer residual block.
pub type ChannelPlan = [usize; 5];

/// Weights of `x -> x[..k4] + W4 relu W3 relu W2 relu W1 x`.
///
/// Filter `(o, i)` of layer `j` occupies
/// `filters[j][(o * plan[j] + i) * 9..][..9]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResNetParams {
    plan: ChannelPlan,
    filters: [Vec<f64>; 4],
    biases: Option<[Vec<f64>; 4]>,
}

/// Inputs and per-layer pre-activations recorded by [`resnet_forward`].
#[derive(Debug, Clone)]
pub struct ResNetCapture {
    pub inputs: Vec<Field>,
    /// `pre[j][o]` is the output of convolution layer `j + 1`.
    pub pre: [Vec<Field>; 4],
}

impl ResNetParams {
    pub fn zeros(plan: ChannelPlan, bias: bool) -> Result<Self> {
        if plan.iter().any(|&k| k == 0) {
            return Err(LearnError::Invalid(format!("channel plan {plan:?} has an empty layer")));
        }
        if plan[4] > plan[0] {
            return Err(LearnError::Invalid(format!(
                "{} outputs but only {} inputs for the residual connection",
                plan[4], plan[0]
            )));
        }
        let filters = std::array::from_fn(|j| vec![0.0; plan[j] * plan[j + 1] * 9]);
        let biases = bias.then(|| std::array::from_fn(|j| vec![0.0; plan[j + 1]]));
        Ok(Self { plan, filters, biases })
    }

    /// Gaussian filters with variance `gain^2 * 2 / (9 k_in)`; the last layer
    /// is scaled down by `last_gain`.
    pub fn random(plan: ChannelPlan, bias: bool, gain: f64, last_gain: f64, rng: &mut impl Rng) -> Result<Self> {
        let mut p = Self::zeros(plan, bias)?;
        for j in 0..4 {
            let mut sd = gain * (2.0 / (9.0 * plan[j] as f64)).sqrt();
            if j == 3 {
                sd *= last_gain;
            }
            let normal = Normal::new(0.0, sd).map_err(|e| LearnError::Invalid(e.to_string()))?;
            p.filters[j].iter_mut().for_each(|v| *v = normal.sample(rng));
        }
        Ok(p)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.plan, self.biases.is_some()).expect("plan already validated")
    }

    pub fn plan(&self) -> ChannelPlan {
        self.plan
    }

    pub fn has_bias(&self) -> bool {
        self.biases.is_some()
    }

    pub fn filter(&self, layer: usize, out: usize, inp: usize) -> &[f64] {
        let s = (out * self.plan[layer] + inp) * 9;
        &self.filters[layer][s..s + 9]
    }

    pub fn filter_mut(&mut self, layer: usize, out: usize, inp: usize) -> &mut [f64] {
        let s = (out * self.plan[layer] + inp) * 9;
        &mut self.filters[layer][s..s + 9]
    }

    pub fn bias(&self, layer: usize, out: usize) -> f64 {
        self.biases.as_ref().map_or(0.0, |b| b[layer][out])
    }

    pub fn bias_mut(&mut self, layer: usize, out: usize) -> Option<&mut f64> {
        self.biases.as_mut().map(|b| &mut b[layer][out])
    }

    /// Parameter count in flat order.
    pub fn len(&self) -> usize {
        self.filters.iter().map(Vec::len).sum::<usize>()
            + self.biases.as_ref().map_or(0, |b| b.iter().map(Vec::len).sum())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Filters of layers 1..4, then biases of layers 1..4.
    pub fn flat(&self) -> impl Iterator<Item = &f64> {
        self.filters.iter().flatten().chain(self.biases.iter().flat_map(|b| b.iter().flatten()))
    }

    pub fn flat_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.filters.iter_mut().flatten().chain(self.biases.iter_mut().flat_map(|b| b.iter_mut().flatten()))
    }

    pub fn is_finite(&self) -> bool {
        self.flat().all(|v| v.is_finite())
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &Self) {
        for (a, b) in self.flat_mut().zip(other.flat()) {
            *a += alpha * b;
        }
    }

    /// Whether filter `(o, i)` of `layer` has any nonzero tap.
    pub fn is_active(&self, layer: usize, out: usize, inp: usize) -> bool {
        self.filter(layer, out, inp).iter().any(|&v| v != 0.0)
    }
}

fn check_inputs(plan: &ChannelPlan, inputs: &[Field]) -> Result<(usize, usize)> {
    if inputs.len() != plan[0] {
        return Err(LearnError::Shape(format!("{} input channels, plan expects {}", inputs.len(), plan[0])));
    }
    let (w, h) = (inputs[0].width, inputs[0].height);
    if inputs.iter().any(|f| f.width != w || f.height != h) {
        return Err(LearnError::Shape("input channels differ in shape".into()));
    }
    Ok((w, h))
}

fn conv_layer(params: &ResNetParams, layer: usize, act: &[Field]) -> Vec<Field> {
    let (w, h) = (act[0].width, act[0].height);
    (0..params.plan[layer + 1])
        .map(|o| {
            let mut z = Field::zeros(w, h);
            let b = params.bias(layer, o);
            if b != 0.0 {
                z.data.iter_mut().for_each(|v| *v = b);
            }
            for (i, a) in act.iter().enumerate() {
                conv_acc(&mut z.data, &a.data, w, h, params.filter(layer, o, i));
            }
            z
        })
        .collect()
}

fn relu(z: &[Field]) -> Vec<Field> {
    z.iter().map(|f| f.map(|v| v.max(0.0))).collect()
}

/// Forward pass; returns the `k4` output channels and the capture needed by
/// [`resnet_backward`] and the wavefront propagation.
pub fn resnet_forward(params: &ResNetParams, inputs: &[Field]) -> Result<(Vec<Field>, ResNetCapture)> {
    check_inputs(&params.plan, inputs)?;
    let z1 = conv_layer(params, 0, inputs);
    let z2 = conv_layer(params, 1, &relu(&z1));
    let z3 = conv_layer(params, 2, &relu(&z2));
    let z4 = conv_layer(params, 3, &relu(&z3));
    let out = z4
        .iter()
        .zip(inputs)
        .map(|(b, x)| {
            let mut o = x.clone();
            o.axpy(1.0, b);
            o
        })
        .collect();
    Ok((out, ResNetCapture { inputs: inputs.to_vec(), pre: [z1, z2, z3, z4] }))
}

/// Reverse pass. `extra_pre[j]` adds gradients directly on the
/// pre-activations of layer `j + 1` (used by the wavefront loss).
pub fn resnet_backward(
    params: &ResNetParams,
    capture: &ResNetCapture,
    grad_out: &[Field],
    extra_pre: Option<&[Vec<Field>; 3]>,
) -> Result<(ResNetParams, Vec<Field>)> {
    let plan = params.plan;
    let (w, h) = check_inputs(&plan, &capture.inputs)?;
    for (j, z) in capture.pre.iter().enumerate() {
        if z.len() != plan[j + 1] || z.iter().any(|f| f.width != w || f.height != h) {
            return Err(LearnError::Capture(format!("layer {} pre-activations do not match the plan", j + 1)));
        }
    }
    if grad_out.len() != plan[4] || grad_out.iter().any(|f| f.width != w || f.height != h) {
        return Err(LearnError::Shape(format!("expected {} output gradients of size {w}x{h}", plan[4])));
    }
    let mut grads = params.zeros_like();
    let mut grad_in: Vec<Field> = (0..plan[0]).map(|_| Field::zeros(w, h)).collect();
    for (g, d) in grad_in.iter_mut().zip(grad_out) {
        g.axpy(1.0, d);
    }
    let mut dz: Vec<Field> = grad_out.to_vec();
    for j in (0..4).rev() {
        let act: Vec<Field> = if j == 0 { capture.inputs.clone() } else { relu(&capture.pre[j - 1]) };
        let mut dact: Vec<Field> = (0..plan[j]).map(|_| Field::zeros(w, h)).collect();
        for (o, d) in dz.iter().enumerate() {
            if let Some(b) = grads.bias_mut(j, o) {
                *b = d.data.iter().sum();
            }
            if d.data.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (i, a) in act.iter().enumerate() {
                conv_filter_grad(grads.filter_mut(j, o, i), &d.data, &a.data, w, h);
                conv_transpose_acc(&mut dact[i].data, &d.data, w, h, params.filter(j, o, i));
            }
        }
        if j == 0 {
            for (g, d) in grad_in.iter_mut().zip(&dact) {
                g.axpy(1.0, d);
            }
        } else {
            for (i, d) in dact.iter_mut().enumerate() {
                for (v, &z) in d.data.iter_mut().zip(&capture.pre[j - 1][i].data) {
                    if z <= 0.0 {
                        *v = 0.0;
                    }
                }
                if let Some(extra) = extra_pre {
                    d.axpy(1.0, &extra[j - 1][i]);
                }
            }
            dz = dact;
        }
    }
    Ok((grads, grad_in))
}
