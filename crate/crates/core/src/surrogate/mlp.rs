use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense layer. `weights` is `n_out x n_in`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn zeros(n_in: usize, n_out: usize) -> Self {
        Layer {
            n_in,
            n_out,
            weights: vec![0.0; n_in * n_out],
            biases: vec![0.0; n_out],
        }
    }

    fn transposed(&self) -> Vec<f64> {
        let mut t = vec![0.0; self.weights.len()];
        for o in 0..self.n_out {
            for i in 0..self.n_in {
                t[i * self.n_out + o] = self.weights[o * self.n_in + i];
            }
        }
        t
    }
}

/// Feed-forward ReLU network with a linear output head.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Layer>,
}

pub(crate) fn check_dims(dims: &[usize]) -> Result<()> {
    if dims.len() < 2 || dims.contains(&0) {
        return Err(Error::InvalidConfig(format!("invalid layer dimensions {dims:?}")));
    }
    Ok(())
}

/// He-normal initialization: weights ~ N(0, 2 / fan_in), biases zero.
pub fn he_init(dims: &[usize], seed: u64) -> Result<Network> {
    check_dims(dims)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let layers = dims
        .windows(2)
        .map(|w| {
            let (n_in, n_out) = (w[0], w[1]);
            let normal = Normal::new(0.0, (2.0 / n_in as f64).sqrt()).expect("positive std");
            Layer {
                n_in,
                n_out,
                weights: (0..n_in * n_out).map(|_| normal.sample(&mut rng)).collect(),
                biases: vec![0.0; n_out],
            }
        })
        .collect();
    Ok(Network { layers })
}

/// Activations of every layer for one chunk of rows, kept for backprop.
pub(crate) struct Trace {
    pub rows: usize,
    /// `acts[0]` is the input; `acts[k]` is the output of layer `k - 1`.
    pub acts: Vec<Vec<f64>>,
}

impl Network {
    pub fn dims(&self) -> Vec<usize> {
        let mut d = vec![self.layers[0].n_in];
        d.extend(self.layers.iter().map(|l| l.n_out));
        d
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn zeros_like(&self) -> Network {
        Network {
            layers: self.layers.iter().map(|l| Layer::zeros(l.n_in, l.n_out)).collect(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.biases).all(|v| v.is_finite()))
    }

    /// Forward pass over `rows` inputs stored row-major in `input`.
    pub(crate) fn trace(&self, input: &[f64], rows: usize) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(input.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let wt = layer.transposed();
            let prev = &acts[k];
            let mut out = vec![0.0; rows * layer.n_out];
            for r in 0..rows {
                let a = &prev[r * layer.n_in..(r + 1) * layer.n_in];
                let z = &mut out[r * layer.n_out..(r + 1) * layer.n_out];
                z.copy_from_slice(&layer.biases);
                for (i, &ai) in a.iter().enumerate() {
                    if ai == 0.0 {
                        continue;
                    }
                    let wrow = &wt[i * layer.n_out..(i + 1) * layer.n_out];
                    for (zo, wo) in z.iter_mut().zip(wrow) {
                        *zo += ai * wo;
                    }
                }
                if k != last {
                    for v in z.iter_mut() {
                        if *v < 0.0 {
                            *v = 0.0;
                        }
                    }
                }
            }
            acts.push(out);
        }
        Trace { rows, acts }
    }

    /// Outputs for already-normalized inputs (single output column).
    pub fn forward_normalized(&self, input: &[f64]) -> Result<Vec<f64>> {
        let n_in = self.n_inputs();
        if !input.len().is_multiple_of(n_in) {
            return Err(Error::ShapeMismatch {
                expected: n_in,
                got: input.len() % n_in,
            });
        }
        let rows = input.len() / n_in;
        let mut t = self.trace(input, rows);
        Ok(t.acts.pop().expect("output layer"))
    }

    /// Accumulate into `grads` the parameter gradients given dLoss/dOutput
    /// per row. ReLU subgradient at 0 is 0.
    pub(crate) fn backprop(&self, trace: &Trace, d_out: &[f64], grads: &mut Network) {
        let rows = trace.rows;
        let mut delta = d_out.to_vec();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let g = &mut grads.layers[k];
            let a_prev = &trace.acts[k];
            for r in 0..rows {
                let a = &a_prev[r * layer.n_in..(r + 1) * layer.n_in];
                let d = &delta[r * layer.n_out..(r + 1) * layer.n_out];
                for (o, &dro) in d.iter().enumerate() {
                    if dro == 0.0 {
                        continue;
                    }
                    g.biases[o] += dro;
                    let grow = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (gw, ai) in grow.iter_mut().zip(a) {
                        *gw += dro * ai;
                    }
                }
            }
            if k == 0 {
                break;
            }
            let mut prev_delta = vec![0.0; rows * layer.n_in];
            for r in 0..rows {
                let d = &delta[r * layer.n_out..(r + 1) * layer.n_out];
                let pd = &mut prev_delta[r * layer.n_in..(r + 1) * layer.n_in];
                for (o, &dro) in d.iter().enumerate() {
                    if dro == 0.0 {
                        continue;
                    }
                    let wrow = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
                    for (p, w) in pd.iter_mut().zip(wrow) {
                        *p += dro * w;
                    }
                }
                let a = &a_prev[r * layer.n_in..(r + 1) * layer.n_in];
                for (p, ai) in pd.iter_mut().zip(a) {
                    if *ai <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev_delta;
        }
    }

    /// `self += scale * other`, parameterwise.
    pub(crate) fn add_scaled(&mut self, other: &Network, scale: f64) {
        for (a, b) in self.layers.iter_mut().zip(&other.layers) {
            for (x, y) in a.weights.iter_mut().zip(&b.weights) {
                *x += scale * y;
            }
            for (x, y) in a.biases.iter_mut().zip(&b.biases) {
                *x += scale * y;
            }
        }
    }

    /// Every parameter, layer by layer, weights before biases.
    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.biases.iter()))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }
}
