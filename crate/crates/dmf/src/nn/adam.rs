//! Adaptive moment estimation. The update keeps epsilon inside the
//! bias-corrected denominator:
//!
//! ```text
//! m <- b1*m + (1-b1)*g
//! v <- b2*v + (1-b2)*g^2
//! theta <- theta - alpha * m / ((1 - b1^k) * (sqrt(v / (1 - b2^k)) + eps))
//! ```
//!
//! with `k` the post-increment step index (first step uses k = 1).

use super::{DenseLayer, MlpSpec, Params};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamHyper {
    fn default() -> Self {
        AdamHyper {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First/second moment estimates mirroring the parameter shapes, plus the
/// step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Params,
    pub v: Params,
    pub step: u64,
    pub hyper: AdamHyper,
}

impl AdamState {
    pub fn new(spec: &MlpSpec, hyper: AdamHyper) -> AdamState {
        AdamState {
            m: Params::zeros(spec),
            v: Params::zeros(spec),
            step: 0,
            hyper,
        }
    }
}

fn update_tensor(
    theta: &mut ndarray::ArrayViewMut1<'_, f64>,
    g: ndarray::ArrayView1<'_, f64>,
    m: &mut ndarray::ArrayViewMut1<'_, f64>,
    v: &mut ndarray::ArrayViewMut1<'_, f64>,
    hyper: &AdamHyper,
    bc1: f64,
    bc2: f64,
) {
    for i in 0..theta.len() {
        let gi = g[i];
        m[i] = hyper.beta1 * m[i] + (1.0 - hyper.beta1) * gi;
        v[i] = hyper.beta2 * v[i] + (1.0 - hyper.beta2) * gi * gi;
        theta[i] -= hyper.alpha * m[i] / (bc1 * ((v[i] / bc2).sqrt() + hyper.epsilon));
    }
}

/// One in-place update of `params` from `grads`. Shapes must mirror each
/// other layer by layer.
pub fn adam_step(state: &mut AdamState, params: &mut Params, grads: &Params) -> Result<()> {
    if params.layers.len() != grads.layers.len() || params.layers.len() != state.m.layers.len() {
        return Err(Error::ShapeMismatch(
            "params, grads and optimizer state must have the same layer count".into(),
        ));
    }
    state.step += 1;
    let k = state.step as i32;
    let bc1 = 1.0 - state.hyper.beta1.powi(k);
    let bc2 = 1.0 - state.hyper.beta2.powi(k);
    let hyper = state.hyper;
    for (l, layer) in params.layers.iter_mut().enumerate() {
        let g = &grads.layers[l];
        if g.weights.dim() != layer.weights.dim() || g.bias.len() != layer.bias.len() {
            return Err(Error::ShapeMismatch(format!(
                "gradient shape mismatch at layer {l}"
            )));
        }
        let DenseLayer { weights: mw, bias: mb } = &mut state.m.layers[l];
        let DenseLayer { weights: vw, bias: vb } = &mut state.v.layers[l];
        // flatten both matrices into 1-d views; all arrays share the layout
        let mut theta = layer
            .weights
            .view_mut()
            .into_shape_with_order(g.weights.len())
            .expect("contiguous weights");
        let gw = g
            .weights
            .view()
            .into_shape_with_order(g.weights.len())
            .expect("contiguous weights");
        let mut m_flat = mw
            .view_mut()
            .into_shape_with_order(gw.len())
            .expect("contiguous moments");
        let mut v_flat = vw
            .view_mut()
            .into_shape_with_order(gw.len())
            .expect("contiguous moments");
        update_tensor(&mut theta, gw, &mut m_flat, &mut v_flat, &hyper, bc1, bc2);
        update_tensor(
            &mut layer.bias.view_mut(),
            g.bias.view(),
            &mut mb.view_mut(),
            &mut vb.view_mut(),
            &hyper,
            bc1,
            bc2,
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn scalar_params(theta: f64) -> Params {
        Params {
            layers: vec![DenseLayer {
                weights: array![[theta]],
                bias: array![0.0],
            }],
        }
    }

    #[test]
    fn zero_gradient_fresh_state_is_identity() {
        let spec = MlpSpec::new(1, vec![], 1).unwrap();
        let mut params = scalar_params(0.7);
        let grads = Params::zeros(&spec);
        let mut state = AdamState::new(&spec, AdamHyper::default());
        let before = params.clone();
        adam_step(&mut state, &mut params, &grads).unwrap();
        assert_eq!(params, before);
    }

    #[test]
    fn first_step_hand_value() {
        // theta = 0, g = 1, defaults: theta' = -0.001 / (1 + 1e-8)
        let spec = MlpSpec::new(1, vec![], 1).unwrap();
        let mut params = scalar_params(0.0);
        let grads = Params {
            layers: vec![DenseLayer { weights: array![[1.0]], bias: array![0.0] }],
        };
        let mut state = AdamState::new(&spec, AdamHyper::default());
        adam_step(&mut state, &mut params, &grads).unwrap();
        let expect = -0.001 / (1.0 + 1e-8);
        assert!(
            (params.layers[0].weights[[0, 0]] - expect).abs() < 1e-15,
            "got {}",
            params.layers[0].weights[[0, 0]]
        );
        assert_eq!(state.step, 1);
    }

    #[test]
    fn two_steps_match_straight_line_script() {
        let hyper = AdamHyper::default();
        let spec = MlpSpec::new(1, vec![], 1).unwrap();
        let mut params = scalar_params(0.3);
        let grads = Params {
            layers: vec![DenseLayer { weights: array![[1.0]], bias: array![0.5] }],
        };
        let mut state = AdamState::new(&spec, hyper);

        // independent straight-line transcription of the update rule
        let script = |theta0: f64, g: f64| -> f64 {
            let (b1, b2, a, e) = (hyper.beta1, hyper.beta2, hyper.alpha, hyper.epsilon);
            let mut m = 0.0;
            let mut v = 0.0;
            let mut theta = theta0;
            for k in 1..=2 {
                m = b1 * m + (1.0 - b1) * g;
                v = b2 * v + (1.0 - b2) * g * g;
                let bc1 = 1.0 - b1.powi(k);
                let bc2 = 1.0 - b2.powi(k);
                theta -= a * m / (bc1 * ((v / bc2).sqrt() + e));
            }
            theta
        };

        adam_step(&mut state, &mut params, &grads).unwrap();
        adam_step(&mut state, &mut params, &grads).unwrap();
        let w = params.layers[0].weights[[0, 0]];
        let b = params.layers[0].bias[0];
        assert!((w - script(0.3, 1.0)).abs() <= 1e-15 * script(0.3, 1.0).abs());
        assert!((b - script(0.0, 0.5)).abs() <= 1e-15 * script(0.0, 0.5).abs().max(1.0));
    }

    #[test]
    fn second_moment_stays_nonnegative() {
        use rand::{Rng, SeedableRng};
        let spec = MlpSpec::new(2, vec![3], 1).unwrap();
        let mut params = super::super::init_params(&spec, 5).unwrap();
        let mut state = AdamState::new(&spec, AdamHyper::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..25 {
            let grads = Params {
                layers: params
                    .layers
                    .iter()
                    .map(|l| DenseLayer {
                        weights: l.weights.mapv(|_| rng.random::<f64>() * 2.0 - 1.0),
                        bias: l.bias.mapv(|_| rng.random::<f64>() * 2.0 - 1.0),
                    })
                    .collect(),
            };
            adam_step(&mut state, &mut params, &grads).unwrap();
        }
        for l in &state.v.layers {
            assert!(l.weights.iter().all(|&x| x >= 0.0));
            assert!(l.bias.iter().all(|&x| x >= 0.0));
        }
        assert_eq!(state.step, 25);
    }
}
