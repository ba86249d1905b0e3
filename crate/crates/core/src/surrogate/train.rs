use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::mlp::{he_init, Network};
use super::{mape, InputNorm, MlpModel, Provenance, MLP_FORMAT};
use crate::error::{Error, Result};

/// Rows per gradient chunk. Chunk gradients are summed in chunk order so
/// the result does not depend on the thread count.
const GRAD_CHUNK: usize = 128;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub hidden_layers: usize,
    pub hidden_width: usize,
    pub adam: AdamConfig,
    pub seed: u64,
}

impl Default for TrainingConfig {
    /// The full-scale setting: 36 x 32 hidden units, 8000 epochs, batches of 2000.
    fn default() -> Self {
        TrainingConfig {
            epochs: 8000,
            batch_size: 2000,
            hidden_layers: 36,
            hidden_width: 32,
            adam: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden_layers == 0 || self.hidden_width == 0 {
            return Err(Error::InvalidConfig(format!(
                "epochs, batch size and layer sizes must be positive: {self:?}"
            )));
        }
        self.adam.validate()
    }

    pub fn layer_dims(&self, n_features: usize) -> Vec<usize> {
        let mut dims = vec![n_features];
        dims.extend(std::iter::repeat_n(self.hidden_width, self.hidden_layers));
        dims.push(1);
        dims
    }
}

/// Raw features and targets, already split.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub n_features: usize,
    pub train_x: Vec<f64>,
    pub train_y: Vec<f64>,
    pub test_x: Vec<f64>,
    pub test_y: Vec<f64>,
    pub dataset_digest: String,
    pub pca_digest: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_mape: f64,
    pub test_mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_test_mape: f64,
}

impl TrainingHistory {
    /// CSV with columns `epoch,train_mape,test_mape`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_mape,test_mape\n");
        for r in &self.epochs {
            s.push_str(&format!("{},{},{}\n", r.epoch, r.train_mape, r.test_mape));
        }
        s
    }
}

/// Mean MAPE over the rows of `x` (normalized features) and its gradient
/// with respect to every parameter. The |·| subgradient at 0 is 0.
pub fn loss_and_gradient(net: &Network, x: &[f64], y: &[f64]) -> Result<(f64, Network)> {
    let n_in = net.n_inputs();
    if x.len() != y.len() * n_in || y.is_empty() {
        return Err(Error::ShapeMismatch {
            expected: y.len() * n_in,
            got: x.len(),
        });
    }
    if y.contains(&0.0) {
        return Err(Error::UndefinedLoss("zero target".into()));
    }
    let scale = 100.0 / y.len() as f64;
    let parts: Vec<(f64, Network)> = x
        .par_chunks(GRAD_CHUNK * n_in)
        .zip(y.par_chunks(GRAD_CHUNK))
        .map(|(xc, yc)| {
            let trace = net.trace(xc, yc.len());
            let out = trace.acts.last().expect("output layer");
            let mut loss = 0.0;
            let d_out: Vec<f64> = out
                .iter()
                .zip(yc)
                .map(|(p, t)| {
                    let r = (p - t) / t.abs();
                    loss += r.abs();
                    if r > 0.0 {
                        scale / t.abs()
                    } else if r < 0.0 {
                        -scale / t.abs()
                    } else {
                        0.0
                    }
                })
                .collect();
            let mut g = net.zeros_like();
            net.backprop(&trace, &d_out, &mut g);
            (loss, g)
        })
        .collect();
    let mut total = 0.0;
    let mut grads = net.zeros_like();
    for (loss, g) in &parts {
        total += loss;
        grads.add_scaled(g, 1.0);
    }
    Ok((scale * total, grads))
}

fn gather(x: &[f64], y: &[f64], idx: &[usize], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut bx = Vec::with_capacity(idx.len() * n);
    let mut by = Vec::with_capacity(idx.len());
    for &i in idx {
        bx.extend_from_slice(&x[i * n..(i + 1) * n]);
        by.push(y[i]);
    }
    (bx, by)
}

fn evaluate(net: &Network, x: &[f64], y: &[f64]) -> Result<f64> {
    let n = net.n_inputs();
    let preds: Vec<Vec<f64>> = x
        .par_chunks(GRAD_CHUNK * n)
        .map(|c| net.forward_normalized(c))
        .collect::<Result<_>>()?;
    let preds: Vec<f64> = preds.into_iter().flatten().collect();
    mape(&preds, y)
}

/// Train with minibatch Adam on MAPE and return the model from the epoch
/// with the lowest test MAPE.
pub fn train(set: &TrainingSet, config: &TrainingConfig) -> Result<(MlpModel, TrainingHistory)> {
    train_with(set, config, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_with(
    set: &TrainingSet,
    config: &TrainingConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(MlpModel, TrainingHistory)> {
    config.validate()?;
    let n = set.n_features;
    if set.train_y.is_empty() {
        return Err(Error::EmptySplit("train".into()));
    }
    if set.test_y.is_empty() {
        return Err(Error::EmptySplit("test".into()));
    }
    if set.train_x.len() != set.train_y.len() * n || set.test_x.len() != set.test_y.len() * n {
        return Err(Error::ShapeMismatch {
            expected: set.train_y.len() * n,
            got: set.train_x.len(),
        });
    }
    if config.batch_size > set.train_y.len() {
        return Err(Error::InvalidConfig(format!(
            "batch size {} exceeds {} training rows",
            config.batch_size,
            set.train_y.len()
        )));
    }
    if set.train_y.iter().chain(&set.test_y).any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::UndefinedLoss("targets must be positive".into()));
    }

    let input_norm = InputNorm::fit(&set.train_x, n)?;
    let output_scale = set.train_y.iter().sum::<f64>() / set.train_y.len() as f64;
    let train_y: Vec<f64> = set.train_y.iter().map(|t| t / output_scale).collect();
    let test_y: Vec<f64> = set.test_y.iter().map(|t| t / output_scale).collect();
    let (train_x, _) = input_norm.normalize(&set.train_x);
    let (test_x, _) = input_norm.normalize(&set.test_x);

    let dims = config.layer_dims(n);
    let mut net = he_init(&dims, config.seed)?;
    let mut adam = AdamState::new(config.adam, &net);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);

    let mut order: Vec<usize> = (0..set.train_y.len()).collect();
    let mut records = Vec::with_capacity(config.epochs);
    let mut best = (net.clone(), f64::INFINITY, 0usize);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut weighted = 0.0;
        for batch in order.chunks(config.batch_size) {
            let (bx, by) = gather(&train_x, &train_y, batch, n);
            let (loss, grads) = loss_and_gradient(&net, &bx, &by)?;
            if !loss.is_finite() {
                return Err(Error::Numerical(format!("non-finite training loss at epoch {epoch}")));
            }
            weighted += loss * batch.len() as f64;
            adam.step(&mut net, &grads)?;
        }
        let test_mape = evaluate(&net, &test_x, &test_y)?;
        if !test_mape.is_finite() {
            return Err(Error::Numerical(format!("non-finite test loss at epoch {epoch}")));
        }
        let record = EpochRecord {
            epoch,
            train_mape: weighted / set.train_y.len() as f64,
            test_mape,
        };
        if test_mape < best.1 {
            best = (net.clone(), test_mape, epoch);
        }
        log::debug!("epoch {epoch}: train {:.4}% test {:.4}%", record.train_mape, test_mape);
        on_epoch(&record);
        records.push(record);
    }

    let (network, best_test_mape, best_epoch) = best;
    let model = MlpModel {
        format: MLP_FORMAT.into(),
        layer_dims: dims,
        network,
        input_norm,
        output_scale,
        provenance: Provenance {
            seed: config.seed,
            config: config.clone(),
            dataset_digest: set.dataset_digest.clone(),
            pca_digest: set.pca_digest.clone(),
            best_epoch,
            best_test_mape,
        },
    };
    model.validate()?;
    Ok((
        model,
        TrainingHistory {
            epochs: records,
            best_epoch,
            best_test_mape,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_batch(n_in: usize, rows: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = (0..rows * n_in).map(|_| rng.gen::<f64>()).collect();
        let y = (0..rows).map(|_| rng.gen_range(0.5..2.0)).collect();
        (x, y)
    }

    fn loss(net: &Network, x: &[f64], y: &[f64]) -> f64 {
        mape(&net.forward_normalized(x).unwrap(), y).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let h = 1e-5;
        for (dims, seed) in [(vec![7, 8, 8, 1], 1u64), (vec![7, 5, 1], 2), (vec![3, 6, 4, 5, 1], 3)] {
            let mut net = he_init(&dims, seed).unwrap();
            // non-zero biases so that every parameter kind is exercised
            for l in &mut net.layers {
                for (k, b) in l.biases.iter_mut().enumerate() {
                    *b = 0.05 * (k as f64 - 1.5);
                }
            }
            let (x, y) = random_batch(dims[0], 300, seed + 10);
            let (_, grads) = loss_and_gradient(&net, &x, &y).unwrap();
            let analytic: Vec<f64> = grads.params().copied().collect();
            let n = analytic.len();
            let mut bad = 0;
            for k in 0..n {
                let mut plus = net.clone();
                *plus.params_mut().nth(k).unwrap() += h;
                let mut minus = net.clone();
                *minus.params_mut().nth(k).unwrap() -= h;
                let fd = (loss(&plus, &x, &y) - loss(&minus, &x, &y)) / (2.0 * h);
                let a = analytic[k];
                let ok = (fd - a).abs() <= 1e-8 || (fd - a).abs() <= 1e-4 * fd.abs().max(a.abs());
                if !ok {
                    bad += 1;
                    eprintln!("{dims:?} param {k}: analytic {a} fd {fd}");
                }
            }
            assert_eq!(bad, 0, "{dims:?}");
        }
    }

    #[test]
    fn zero_residual_gives_zero_gradient() {
        let net = he_init(&[4, 6, 1], 5).unwrap();
        let (x, _) = random_batch(4, 20, 6);
        let y = net.forward_normalized(&x).unwrap();
        if y.contains(&0.0) {
            return;
        }
        let (l, g) = loss_and_gradient(&net, &x, &y).unwrap();
        assert_eq!(l, 0.0);
        assert!(g.params().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_batch_has_same_gradient() {
        let net = he_init(&[4, 6, 6, 1], 7).unwrap();
        let (x, y) = random_batch(4, 50, 8);
        let (l1, g1) = loss_and_gradient(&net, &x, &y).unwrap();
        let x2 = [x.clone(), x].concat();
        let y2 = [y.clone(), y].concat();
        let (l2, g2) = loss_and_gradient(&net, &x2, &y2).unwrap();
        assert!((l1 - l2).abs() < 1e-12 * l1);
        for (a, b) in g1.params().zip(g2.params()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1e-12));
        }
    }

    fn synthetic(rows: usize, seed: u64) -> TrainingSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for _ in 0..rows {
            let row = [
                rng.gen::<f64>(),
                rng.gen::<f64>(),
                rng.gen::<f64>(),
                rng.gen_range(7.0..9.0),
                rng.gen_range(2.0..3.1),
                rng.gen_range(0.15..0.35),
                10f64.powf(rng.gen_range(8.5..9.5)),
            ];
            ys.push(0.001 * (1.0 + row[0] + row[5] * row[5]));
            xs.extend(row);
        }
        let split = rows * 4 / 5;
        TrainingSet {
            n_features: 7,
            train_x: xs[..split * 7].to_vec(),
            train_y: ys[..split].to_vec(),
            test_x: xs[split * 7..].to_vec(),
            test_y: ys[split..].to_vec(),
            dataset_digest: "synthetic".into(),
            pca_digest: "none".into(),
        }
    }

    fn small_config(epochs: usize, seed: u64) -> TrainingConfig {
        TrainingConfig {
            epochs,
            batch_size: 250,
            hidden_layers: 2,
            hidden_width: 16,
            adam: AdamConfig::default(),
            seed,
        }
    }

    #[test]
    fn learns_analytic_function() {
        let set = synthetic(5000, 21);
        let (model, history) = train(&set, &small_config(2000, 4)).unwrap();
        assert!(history.best_test_mape < 1.0, "{}", history.best_test_mape);
        let min = history.epochs.iter().map(|r| r.test_mape).fold(f64::INFINITY, f64::min);
        assert_eq!(history.best_test_mape, min);
        assert!(history.best_test_mape <= history.epochs.last().unwrap().test_mape);
        assert_eq!(model.provenance.best_epoch, history.best_epoch);
    }

    #[test]
    fn training_is_deterministic() {
        let set = synthetic(600, 3);
        let (a, ha) = train(&set, &small_config(5, 9)).unwrap();
        let (b, hb) = train(&set, &small_config(5, 9)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(ha, hb);
        let (c, _) = train(&set, &small_config(5, 10)).unwrap();
        assert_ne!(a.network, c.network);
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut set = synthetic(100, 3);
        assert!(matches!(train(&set, &small_config(1, 0)), Err(Error::InvalidConfig(_))));
        let mut cfg = small_config(1, 0);
        cfg.batch_size = 10;
        set.test_x.clear();
        set.test_y.clear();
        assert!(matches!(train(&set, &cfg), Err(Error::EmptySplit(_))));
    }

    #[test]
    fn model_file_round_trips() {
        let set = synthetic(300, 3);
        let mut cfg = small_config(2, 1);
        cfg.batch_size = 100;
        let (model, _) = train(&set, &cfg).unwrap();
        let text = model.to_json().unwrap();
        let back = MlpModel::from_json(&text, std::path::Path::new("m.json")).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json().unwrap(), text);
        let broken = text.replace(MLP_FORMAT, "hullopt-mlp/v0");
        assert!(matches!(
            MlpModel::from_json(&broken, std::path::Path::new("m.json")),
            Err(Error::Version { .. })
        ));
    }

    #[test]
    fn batched_prediction_is_invariant() {
        let set = synthetic(300, 3);
        let mut cfg = small_config(1, 1);
        cfg.batch_size = 100;
        let (model, _) = train(&set, &cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let rows: Vec<f64> = (0..15000)
            .flat_map(|_| {
                let r: [f64; 7] = [
                    rng.gen(),
                    rng.gen(),
                    rng.gen(),
                    rng.gen_range(7.0..9.0),
                    rng.gen_range(2.0..3.1),
                    rng.gen_range(0.15..0.35),
                    1e9,
                ];
                r
            })
            .collect();
        let whole = model.predict_features(&rows).unwrap();
        let parts: Vec<_> = rows
            .chunks(7000)
            .flat_map(|c| model.predict_features(c).unwrap())
            .collect();
        assert_eq!(whole, parts);
        let one = model.predict_features(&rows[..7]).unwrap();
        assert_eq!(one[0], whole[0]);
        let p = model.predict(&[0.5, 0.5, 0.5, 8.0, 2.5], 200.0, 0.25).unwrap();
        let row = super::super::feature_row(&[0.5, 0.5, 0.5, 8.0, 2.5], 200.0, 0.25).unwrap();
        assert_eq!(p, model.predict_features(&row).unwrap()[0]);
    }
}
