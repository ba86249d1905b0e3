//! Deep MLP surrogate for the merit coefficient.

mod adam;
mod mlp;
mod train;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydro::{FlowConditions, Fluid};

pub use adam::{AdamConfig, AdamState};
pub use mlp::{he_init, Layer, Network};
pub use train::{
    loss_and_gradient, train, train_with, EpochRecord, TrainingConfig, TrainingHistory, TrainingSet,
};

pub const MLP_FORMAT: &str = "hullopt-mlp/v1";

/// Distance outside the normalized training range, as a fraction of the
/// range, before a row counts as extrapolated.
const RANGE_SLACK: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transform {
    Identity,
    Log10,
}

impl Transform {
    fn apply(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log10 => v.log10(),
        }
    }

    fn invert(self, v: f64) -> f64 {
        match self {
            Transform::Identity => v,
            Transform::Log10 => 10f64.powf(v),
        }
    }
}

/// Affine min-max map of one transformed feature onto `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScale {
    pub name: String,
    pub transform: Transform,
    pub min: f64,
    pub max: f64,
}

impl FeatureScale {
    fn span(&self) -> f64 {
        if self.max > self.min {
            self.max - self.min
        } else {
            1.0
        }
    }

    pub fn normalize(&self, v: f64) -> f64 {
        (self.transform.apply(v) - self.min) / self.span()
    }

    pub fn denormalize(&self, u: f64) -> f64 {
        self.transform.invert(self.min + u * self.span())
    }
}

/// Input normalization over the feature vector
/// `[λ̄_1..λ̄_d, L/B, B/T, Fn, Re]`; Re enters as log10 Re.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputNorm {
    pub features: Vec<FeatureScale>,
}

pub fn feature_names(n_axes: usize) -> Vec<String> {
    let mut names: Vec<String> = (1..=n_axes).map(|j| format!("lambda{j}")).collect();
    names.extend(["L_over_B", "B_over_T", "Fn", "Re"].map(String::from));
    names
}

impl InputNorm {
    /// Statistics from row-major raw features with `n_features` columns.
    pub fn fit(raw: &[f64], n_features: usize) -> Result<Self> {
        if n_features < 5 || raw.is_empty() || !raw.len().is_multiple_of(n_features) {
            return Err(Error::ShapeMismatch {
                expected: n_features,
                got: raw.len(),
            });
        }
        let names = feature_names(n_features - 4);
        let features = names
            .into_iter()
            .enumerate()
            .map(|(j, name)| {
                let transform = if j == n_features - 1 {
                    Transform::Log10
                } else {
                    Transform::Identity
                };
                let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
                for row in raw.chunks_exact(n_features) {
                    let t = transform.apply(row[j]);
                    min = min.min(t);
                    max = max.max(t);
                }
                FeatureScale {
                    name,
                    transform,
                    min,
                    max,
                }
            })
            .collect::<Vec<_>>();
        if features.iter().any(|f| !(f.min.is_finite() && f.max.is_finite())) {
            return Err(Error::Numerical("non-finite feature statistics".into()));
        }
        Ok(InputNorm { features })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Normalize row-major raw features; the flag is set when any value
    /// falls outside the training range.
    pub fn normalize(&self, raw: &[f64]) -> (Vec<f64>, Vec<bool>) {
        let n = self.len();
        let mut flags = Vec::with_capacity(raw.len() / n);
        let mut out = Vec::with_capacity(raw.len());
        for row in raw.chunks_exact(n) {
            let mut outside = false;
            for (v, f) in row.iter().zip(&self.features) {
                let u = f.normalize(*v);
                outside |= !(-RANGE_SLACK..=1.0 + RANGE_SLACK).contains(&u);
                out.push(u);
            }
            flags.push(outside);
        }
        (out, flags)
    }

    pub fn denormalize(&self, normalized: &[f64]) -> Vec<f64> {
        normalized
            .chunks_exact(self.len())
            .flat_map(|row| row.iter().zip(&self.features).map(|(u, f)| f.denormalize(*u)))
            .collect()
    }
}

/// Mean absolute percentage error in percent.
pub fn mape(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::ShapeMismatch {
            expected: targets.len(),
            got: predictions.len(),
        });
    }
    if targets.is_empty() {
        return Err(Error::UndefinedLoss("no rows".into()));
    }
    let mut sum = 0.0;
    for (p, t) in predictions.iter().zip(targets) {
        if *t == 0.0 {
            return Err(Error::UndefinedLoss("zero target".into()));
        }
        sum += ((t - p) / t).abs();
    }
    Ok(100.0 * sum / targets.len() as f64)
}

/// Where a trained model came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config: TrainingConfig,
    pub dataset_digest: String,
    pub pca_digest: String,
    pub best_epoch: usize,
    pub best_test_mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub format: String,
    pub layer_dims: Vec<usize>,
    pub network: Network,
    pub input_norm: InputNorm,
    /// The network predicts `C̄_T / output_scale`.
    pub output_scale: f64,
    pub provenance: Provenance,
}

/// One surrogate output with its extrapolation flag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    pub out_of_range: bool,
}

/// Rows per forward chunk in batch prediction.
const PREDICT_CHUNK: usize = 256;

impl MlpModel {
    pub fn n_features(&self) -> usize {
        self.input_norm.len()
    }

    pub fn n_axes(&self) -> usize {
        self.n_features() - 4
    }

    pub fn validate(&self) -> Result<()> {
        if self.format != MLP_FORMAT {
            return Err(Error::Version {
                found: self.format.clone(),
                expected: MLP_FORMAT.into(),
            });
        }
        mlp::check_dims(&self.layer_dims)?;
        if self.network.dims() != self.layer_dims {
            return Err(Error::InvalidConfig("layer dimensions do not chain".into()));
        }
        for l in &self.network.layers {
            if l.weights.len() != l.n_in * l.n_out || l.biases.len() != l.n_out {
                return Err(Error::InvalidConfig("layer storage does not match its shape".into()));
            }
        }
        if !(self.output_scale.is_finite() && self.output_scale > 0.0) {
            return Err(Error::Numerical(format!("bad output scale {}", self.output_scale)));
        }
        if !self.network.is_finite() {
            return Err(Error::Numerical("non-finite model parameter".into()));
        }
        if self.layer_dims[0] != self.n_features() || self.n_features() < 5 {
            return Err(Error::ShapeMismatch {
                expected: self.layer_dims[0],
                got: self.n_features(),
            });
        }
        if *self.layer_dims.last().expect("checked") != 1 {
            return Err(Error::InvalidConfig("output layer must have one unit".into()));
        }
        Ok(())
    }

    /// Predictions for row-major raw feature rows. Rows are processed in
    /// fixed chunks, so results do not depend on how callers batch them.
    pub fn predict_features(&self, raw: &[f64]) -> Result<Vec<Prediction>> {
        let n = self.n_features();
        if !raw.len().is_multiple_of(n) {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: raw.len() % n,
            });
        }
        let (norm, flags) = self.input_norm.normalize(raw);
        let chunks: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            norm.par_chunks(PREDICT_CHUNK * n)
                .map(|c| self.network.forward_normalized(c))
                .collect::<Result<_>>()?
        };
        Ok(chunks
            .into_iter()
            .flatten()
            .zip(flags)
            .map(|(value, out_of_range)| Prediction {
                value: value * self.output_scale,
                out_of_range,
            })
            .collect())
    }

    /// Merit coefficient for a hull described by its design parameters
    /// `[λ̄_1..λ̄_d, L/B, B/T]` at length `length` and Froude number `froude`.
    pub fn predict(&self, params: &[f64], length: f64, froude: f64) -> Result<Prediction> {
        let row = feature_row(params, length, froude)?;
        Ok(self.predict_features(&row)?[0])
    }

    /// Predicted curve over several Froude numbers for one hull.
    pub fn predict_curve(&self, params: &[f64], length: f64, froude: &[f64]) -> Result<Vec<Prediction>> {
        let mut rows = Vec::with_capacity(froude.len() * (params.len() + 2));
        for &f in froude {
            rows.extend(feature_row(params, length, f)?);
        }
        self.predict_features(&rows)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str, path: &Path) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::format(path, e.to_string()))?;
        let found = value.get("format").and_then(|v| v.as_str()).unwrap_or("<missing>");
        if found != MLP_FORMAT {
            return Err(Error::Version {
                found: found.into(),
                expected: MLP_FORMAT.into(),
            });
        }
        let model: MlpModel = serde_json::from_value(value).map_err(|e| Error::format(path, e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }
}

/// Raw feature row `[params.., Fn, Re]` with Re derived from `(L, Fn)`.
pub fn feature_row(params: &[f64], length: f64, froude: f64) -> Result<Vec<f64>> {
    if !(length > 0.0 && froude > 0.0) {
        return Err(Error::InvalidDimension(format!("L = {length}, Fn = {froude}")));
    }
    let reynolds = FlowConditions::reynolds_for(length, froude, &Fluid::default());
    let mut row = params.to_vec();
    row.push(froude);
    row.push(reynolds);
    Ok(row)
}
