use serde::{Deserialize, Serialize};

use super::mlp::Network;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            alpha: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha > 0.0
            && self.epsilon > 0.0
            && self.beta1 > 0.0
            && self.beta1 < 1.0
            && self.beta2 > 0.0
            && self.beta2 < 1.0;
        if !ok {
            return Err(Error::InvalidConfig(format!("bad Adam constants {self:?}")));
        }
        Ok(())
    }
}

/// Per-parameter moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(config: AdamConfig, net: &Network) -> Self {
        let n = net.n_params();
        AdamState {
            config,
            step: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    /// One bias-corrected Adam update of `net` with gradient `grads`.
    pub fn step(&mut self, net: &mut Network, grads: &Network) -> Result<()> {
        if grads.n_params() != self.m.len() || net.n_params() != self.m.len() {
            return Err(Error::ShapeMismatch {
                expected: self.m.len(),
                got: grads.n_params(),
            });
        }
        let c = self.config;
        self.step += 1;
        let t = self.step as i32;
        let corr1 = 1.0 - c.beta1.powi(t);
        let corr2 = 1.0 - c.beta2.powi(t);
        for (((p, g), m), v) in net
            .params_mut()
            .zip(grads.params())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = c.beta1 * *m + (1.0 - c.beta1) * g;
            *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
            let m_hat = *m / corr1;
            let v_hat = *v / corr2;
            *p -= c.alpha * m_hat / (v_hat.sqrt() + c.epsilon);
        }
        Ok(())
    }
}
