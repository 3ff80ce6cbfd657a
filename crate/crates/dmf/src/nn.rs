//! From-scratch feed-forward network engine: ReLU MLP forward pass,
//! reverse-mode gradients of the mean-reduced MSE, the adaptive-moment
//! update, and the early-stopping training loop.
//!
//! The loss surface is plain MSE. [`mse_loss`] reports the raw sum over all
//! cells; [`mse_loss_mean`] divides by the row count, which is what the
//! trainer minimizes and what [`backward`] differentiates.

mod adam;
mod checkpoint;
mod train;

pub use adam::{adam_step, AdamHyper, AdamState};
pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, CHECKPOINT_VERSION,
};
pub use train::{train, EvalRecord, StopReason, TrainHistory, TrainHyper, TrainedModel};

use crate::error::{Error, Result};
use crate::seed::mix_seed;
use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Architecture: ReLU hidden layers, identity output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_layers: Vec<usize>,
    pub output_dim: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_layers: Vec<usize>, output_dim: usize) -> Result<Self> {
        let spec = MlpSpec { input_dim, hidden_layers, output_dim };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden_layers.contains(&0) {
            return Err(Error::InvalidConfig(
                "all layer dimensions must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// (fan_in, fan_out) per affine layer, in forward order.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut dims = Vec::with_capacity(self.hidden_layers.len() + 1);
        let mut fan_in = self.input_dim;
        for &w in &self.hidden_layers {
            dims.push((fan_in, w));
            fan_in = w;
        }
        dims.push((fan_in, self.output_dim));
        dims
    }
}

/// Total learnable parameters: sum of fan_in*fan_out + fan_out per layer.
pub fn param_count(spec: &MlpSpec) -> usize {
    spec.layer_dims()
        .iter()
        .map(|(fi, fo)| fi * fo + fo)
        .sum()
}

/// One affine layer; `weights` is fan_in x fan_out so a batch multiplies on
/// the left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Learned parameters in canonical (forward) layer order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub layers: Vec<DenseLayer>,
}

impl Params {
    pub fn zeros(spec: &MlpSpec) -> Params {
        Params {
            layers: spec
                .layer_dims()
                .iter()
                .map(|&(fi, fo)| DenseLayer {
                    weights: Array2::zeros((fi, fo)),
                    bias: Array1::zeros(fo),
                })
                .collect(),
        }
    }

    pub fn matches_spec(&self, spec: &MlpSpec) -> bool {
        let dims = spec.layer_dims();
        self.layers.len() == dims.len()
            && self.layers.iter().zip(&dims).all(|(l, &(fi, fo))| {
                l.weights.nrows() == fi && l.weights.ncols() == fo && l.bias.len() == fo
            })
    }
}

/// He-style initialization: weights ~ Normal(0, 2/fan_in), biases zero.
/// Bit-identical for a given seed.
pub fn init_params(spec: &MlpSpec, seed: u64) -> Result<Params> {
    spec.validate()?;
    let mut layers = Vec::with_capacity(spec.hidden_layers.len() + 1);
    for (l, (fan_in, fan_out)) in spec.layer_dims().into_iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, l as u64));
        let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt())
            .map_err(|e| Error::Internal(format!("bad init distribution: {e}")))?;
        let weights = Array2::from_shape_fn((fan_in, fan_out), |_| normal.sample(&mut rng));
        layers.push(DenseLayer {
            weights,
            bias: Array1::zeros(fan_out),
        });
    }
    Ok(Params { layers })
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

fn check_batch(params: &Params, batch: &Array2<f64>) -> Result<()> {
    let expect = params.layers[0].weights.nrows();
    if batch.ncols() != expect {
        return Err(Error::ShapeMismatch(format!(
            "batch width {} does not match input_dim {expect}",
            batch.ncols()
        )));
    }
    Ok(())
}

/// Forward pass: affine then ReLU per hidden layer, final layer affine only.
pub fn forward(params: &Params, batch: &Array2<f64>) -> Result<Array2<f64>> {
    check_batch(params, batch)?;
    let last = params.layers.len() - 1;
    let mut activ = batch.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        let mut z = activ.dot(&layer.weights) + &layer.bias;
        if l != last {
            z.mapv_inplace(relu);
        }
        activ = z;
    }
    Ok(activ)
}

/// Intermediate state from the forward pass: pre-activations per layer and
/// the post-activation inputs to each layer.
struct Trace {
    /// `inputs[l]` is the activation entering layer l (inputs[0] = batch).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation z per layer.
    pre: Vec<Array2<f64>>,
}

fn forward_trace(params: &Params, batch: &Array2<f64>) -> Trace {
    let last = params.layers.len() - 1;
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut pre = Vec::with_capacity(params.layers.len());
    let mut activ = batch.clone();
    for (l, layer) in params.layers.iter().enumerate() {
        inputs.push(activ.clone());
        let z = activ.dot(&layer.weights) + &layer.bias;
        pre.push(z.clone());
        activ = if l != last { z.mapv(relu) } else { z };
    }
    Trace { inputs, pre }
}

/// Sum-of-squares loss over every cell (the un-normalized batch sum).
pub fn mse_loss(pred: &Array2<f64>, target: &Array2<f64>) -> Result<f64> {
    if pred.shape() != target.shape() {
        return Err(Error::ShapeMismatch(format!(
            "pred {:?} vs target {:?}",
            pred.shape(),
            target.shape()
        )));
    }
    Ok(pred
        .iter()
        .zip(target.iter())
        .map(|(p, t)| (p - t) * (p - t))
        .sum())
}

/// [`mse_loss`] divided by the row count; this is what the trainer steps on.
pub fn mse_loss_mean(pred: &Array2<f64>, target: &Array2<f64>) -> Result<f64> {
    Ok(mse_loss(pred, target)? / pred.nrows() as f64)
}

/// Exact gradients of the mean-reduced MSE wrt every weight and bias, via
/// reverse-mode accumulation. The ReLU subgradient at exactly 0 is 0.
pub fn backward(params: &Params, batch: &Array2<f64>, targets: &Array2<f64>) -> Result<Params> {
    check_batch(params, batch)?;
    let last = params.layers.len() - 1;
    let out_dim = params.layers[last].weights.ncols();
    if targets.nrows() != batch.nrows() || targets.ncols() != out_dim {
        return Err(Error::ShapeMismatch(format!(
            "targets {:?} vs expected [{}, {}]",
            targets.shape(),
            batch.nrows(),
            out_dim
        )));
    }
    let n = batch.nrows() as f64;
    let trace = forward_trace(params, batch);
    let pred = {
        // final layer output = last pre-activation (identity output)
        trace.pre[last].clone()
    };
    let mut grads = Params::zeros(&MlpSpec {
        input_dim: params.layers[0].weights.nrows(),
        hidden_layers: params.layers[..last].iter().map(|l| l.weights.ncols()).collect(),
        output_dim: out_dim,
    });
    // dL/dz on the output layer for L = (1/n) sum (pred - y)^2
    let mut delta = (&pred - targets) * (2.0 / n);
    for l in (0..params.layers.len()).rev() {
        if l != last {
            // gate by ReLU'(z): 1 for z > 0, 0 at and below 0
            delta = &delta * &trace.pre[l].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
        }
        grads.layers[l].weights = trace.inputs[l].t().dot(&delta);
        grads.layers[l].bias = delta.sum_axis(ndarray::Axis(0));
        if l > 0 {
            delta = delta.dot(&params.layers[l].weights.t());
        }
    }
    Ok(grads)
}
