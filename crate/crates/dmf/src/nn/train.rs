//! Minibatch training loop with validation-patience early stopping.

use super::{adam_step, backward, forward, init_params, mse_loss_mean, AdamHyper, AdamState, MlpSpec, Params};
use crate::error::{Error, Result};
use crate::seed::mix_seed;
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Training hyperparameters. Defaults: learning rate 0.001, batch 64,
/// patience 500 validation evaluations, evaluation every step, and a
/// 200k-step safety cap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub batch_size: usize,
    /// Consecutive validation evaluations without a new minimum before
    /// training stops.
    pub patience: usize,
    /// Hard cap on optimizer steps.
    pub max_steps: usize,
    /// Validation cadence in steps.
    pub eval_every: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            learning_rate: 0.001,
            batch_size: 64,
            patience: 500,
            max_steps: 200_000,
            eval_every: 1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainHyper {
    pub fn adam(&self) -> AdamHyper {
        AdamHyper {
            alpha: self.learning_rate,
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EarlyStop,
    MaxSteps,
}

/// One validation evaluation. `train_loss` is the mean MSE of the minibatch
/// the step was taken on; `val_loss` is the mean MSE over the full
/// validation set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub step: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EvalRecord>,
    pub best_step: usize,
    pub best_val_loss: f64,
    pub stopped_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub spec: MlpSpec,
    pub params: Params,
}

fn gather_rows(data: &Array2<f64>, idxs: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idxs.len(), data.ncols()));
    for (i, &r) in idxs.iter().enumerate() {
        out.row_mut(i).assign(&data.row(r));
    }
    out
}

/// Train an MLP on `(train_x, train_y)`, early-stopping on `(val_x, val_y)`.
/// Parameters from the best validation step are returned. Bit-deterministic
/// for a given (seed, data, hyper) on one platform.
pub fn train(
    spec: &MlpSpec,
    train_x: &Array2<f64>,
    train_y: &Array2<f64>,
    val_x: &Array2<f64>,
    val_y: &Array2<f64>,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(TrainedModel, TrainHistory)> {
    spec.validate()?;
    if train_x.nrows() == 0 {
        return Err(Error::EmptySplit("train"));
    }
    if val_x.nrows() == 0 {
        return Err(Error::EmptySplit("validation"));
    }
    let shape_err = |what: &str| Error::ShapeMismatch(what.to_string());
    if train_x.ncols() != spec.input_dim || val_x.ncols() != spec.input_dim {
        return Err(shape_err("input width does not match spec.input_dim"));
    }
    if train_y.ncols() != spec.output_dim || val_y.ncols() != spec.output_dim {
        return Err(shape_err("target width does not match spec.output_dim"));
    }
    if train_y.nrows() != train_x.nrows() || val_y.nrows() != val_x.nrows() {
        return Err(shape_err("row counts of inputs and targets differ"));
    }
    if hyper.batch_size == 0 || hyper.eval_every == 0 || hyper.max_steps == 0 {
        return Err(Error::InvalidConfig(
            "batch_size, eval_every and max_steps must be positive".into(),
        ));
    }

    let mut params = init_params(spec, mix_seed(seed, 0))?;
    let mut state = AdamState::new(spec, hyper.adam());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 1));

    let n_train = train_x.nrows();
    let mut order: Vec<usize> = (0..n_train).collect();
    let mut cursor = n_train; // forces a shuffle before the first batch

    let mut records = Vec::new();
    let mut best_val_loss = f64::INFINITY;
    let mut best_step = 0usize;
    let mut best_params = params.clone();
    let mut evals_since_best = 0usize;
    let mut stopped_reason = StopReason::MaxSteps;

    for step in 1..=hyper.max_steps {
        if cursor >= n_train {
            order.shuffle(&mut shuffle_rng);
            cursor = 0;
        }
        let end = (cursor + hyper.batch_size).min(n_train);
        let batch_idx = &order[cursor..end];
        cursor = end;

        let bx = gather_rows(train_x, batch_idx);
        let by = gather_rows(train_y, batch_idx);
        let grads = backward(&params, &bx, &by)?;
        adam_step(&mut state, &mut params, &grads)?;

        if step % hyper.eval_every == 0 {
            let batch_loss = mse_loss_mean(&forward(&params, &bx)?, &by)?;
            let val_loss = mse_loss_mean(&forward(&params, val_x)?, val_y)?;
            records.push(EvalRecord { step, train_loss: batch_loss, val_loss });
            if val_loss < best_val_loss {
                best_val_loss = val_loss;
                best_step = step;
                best_params = params.clone();
                evals_since_best = 0;
            } else {
                evals_since_best += 1;
                if evals_since_best >= hyper.patience {
                    stopped_reason = StopReason::EarlyStop;
                    break;
                }
            }
        }
    }

    if !best_val_loss.is_finite() {
        return Err(Error::TrainingFailed(
            "validation loss never became finite".into(),
        ));
    }

    Ok((
        TrainedModel {
            spec: spec.clone(),
            params: best_params,
        },
        TrainHistory {
            records,
            best_step,
            best_val_loss,
            stopped_reason,
        },
    ))
}
