//! Adam with bias correction and an exponential learning-rate schedule.

use crate::params::ParamSet;

/// Adam moment decay constants.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter first/second moments plus step counter and schedule.
#[derive(Debug, Clone)]
pub struct OptimState {
    pub lr: f64,
    /// Per-epoch multiplicative decay applied by [`lr_decay`].
    pub gamma: f64,
    pub step: u64,
    pub config: AdamConfig,
    moments: Vec<(Vec<f64>, Vec<f64>)>,
}

impl OptimState {
    pub fn new(params: &ParamSet, lr: f64, gamma: f64) -> Self {
        let moments = params
            .iter()
            .map(|(_, t)| (vec![0.0; t.numel()], vec![0.0; t.numel()]))
            .collect();
        OptimState {
            lr,
            gamma,
            step: 0,
            config: AdamConfig::default(),
            moments,
        }
    }
}

/// One bias-corrected Adam update over every parameter, consuming the
/// gradients accumulated by the last backward pass (grads are zeroed).
pub fn adam_step(params: &ParamSet, state: &mut OptimState) {
    assert_eq!(params.len(), state.moments.len(), "optimizer/model mismatch");
    state.step += 1;
    let t = state.step as f64;
    let AdamConfig { beta1, beta2, eps } = state.config;
    let bias1 = 1.0 - beta1.powf(t);
    let bias2 = 1.0 - beta2.powf(t);

    for ((_, tensor), (m, v)) in params.iter().zip(state.moments.iter_mut()) {
        let grad = tensor.grad_vec();
        let mut values = tensor.to_vec();
        for i in 0..values.len() {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let m_hat = m[i] / bias1;
            let v_hat = v[i] / bias2;
            values[i] -= state.lr * m_hat / (v_hat.sqrt() + eps);
        }
        tensor.set_data(&values);
        tensor.zero_grad();
    }
}

/// Exponential schedule: lr <- lr * gamma, applied once per epoch.
pub fn lr_decay(state: &mut OptimState) {
    state.lr *= state.gamma;
}
