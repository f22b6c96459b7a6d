//! One-hidden-layer binary classifier.
//!
//! `p(z) = sigmoid(w_out · tanh(W_in z + b_in) + b_out)`, trained by full-batch
//! gradient descent on mean binary cross-entropy with early stopping on a
//! held-out validation split. Targets are 1 for high risk and 0 for low risk.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Outputs are kept this far from 0 and 1 so they stay strictly inside the interval.
const OUTPUT_MARGIN: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub input_dim: usize,
    /// Hidden units; must not exceed `input_dim`.
    pub hidden_units: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without a validation improvement; 0 disables.
    pub patience: usize,
    pub seed: u64,
}

impl NetConfig {
    pub fn new(input_dim: usize, hidden_units: usize, seed: u64) -> NetConfig {
        NetConfig { input_dim, hidden_units, learning_rate: 0.05, max_epochs: 5000, patience: 200, seed }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden_units == 0 {
            return Err(Error::InvalidArgument("input and hidden dimensions must be positive".into()));
        }
        if self.hidden_units > self.input_dim {
            return Err(Error::InvalidArgument(format!(
                "hidden units ({}) must not exceed the input dimension ({})",
                self.hidden_units, self.input_dim
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if self.max_epochs == 0 {
            return Err(Error::InvalidArgument("max_epochs must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetModel {
    /// `h × k`.
    pub weights_in: DMatrix<f64>,
    pub bias_in: DVector<f64>,
    pub weights_out: DVector<f64>,
    pub bias_out: f64,
    pub config: NetConfig,
    pub train_log: Vec<EpochLog>,
}

/// Parameter-shaped gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights_in: DMatrix<f64>,
    pub bias_in: DVector<f64>,
    pub weights_out: DVector<f64>,
    pub bias_out: f64,
}

impl Gradients {
    /// Same order as [`NetModel::flatten`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.weights_in.as_slice().to_vec();
        v.extend(self.bias_in.iter());
        v.extend(self.weights_out.iter());
        v.push(self.bias_out);
        v
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Cross-entropy of target `y` against logit `a`.
fn bce_from_logit(a: f64, y: f64) -> f64 {
    y * softplus(-a) + (1.0 - y) * softplus(a)
}

pub fn init_model(config: NetConfig) -> Result<NetModel> {
    config.validate()?;
    let (k, h) = (config.input_dim, config.hidden_units);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let in_bound = 1.0 / (k as f64).sqrt();
    let out_bound = 1.0 / (h as f64).sqrt();
    let weights_in = DMatrix::from_fn(h, k, |_, _| rng.random_range(-in_bound..in_bound));
    let weights_out = DVector::from_fn(h, |_, _| rng.random_range(-out_bound..out_bound));
    Ok(NetModel {
        weights_in,
        bias_in: DVector::zeros(h),
        weights_out,
        bias_out: 0.0,
        config,
        train_log: Vec::new(),
    })
}

impl NetModel {
    fn params_finite(&self) -> bool {
        self.weights_in.iter().chain(self.bias_in.iter()).chain(self.weights_out.iter()).all(|w| w.is_finite())
            && self.bias_out.is_finite()
    }

    pub fn param_count(&self) -> usize {
        self.weights_in.len() + self.bias_in.len() + self.weights_out.len() + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = self.weights_in.as_slice().to_vec();
        v.extend(self.bias_in.iter());
        v.extend(self.weights_out.iter());
        v.push(self.bias_out);
        v
    }

    pub fn set_flat(&mut self, params: &[f64]) {
        let (h, k) = self.weights_in.shape();
        let mut it = params.iter().copied();
        self.weights_in = DMatrix::from_iterator(h, k, it.by_ref().take(h * k));
        self.bias_in = DVector::from_iterator(h, it.by_ref().take(h));
        self.weights_out = DVector::from_iterator(h, it.by_ref().take(h));
        self.bias_out = it.next().expect("parameter vector too short");
    }

    fn check_input(&self, len: usize) -> Result<()> {
        if len != self.config.input_dim {
            return Err(Error::DimensionMismatch { expected: self.config.input_dim, actual: len });
        }
        Ok(())
    }

    fn logit(&self, z: &[f64]) -> f64 {
        let hidden = &self.weights_in * DVector::from_column_slice(z) + &self.bias_in;
        self.weights_out.dot(&hidden.map(f64::tanh)) + self.bias_out
    }

    /// Network output in the open interval (0, 1).
    pub fn predict(&self, z: &[f64]) -> Result<f64> {
        self.check_input(z.len())?;
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("network input must be finite".into()));
        }
        Ok(sigmoid(self.logit(z)).clamp(OUTPUT_MARGIN, 1.0 - OUTPUT_MARGIN))
    }

    /// Outputs for every column of a `k × n` matrix.
    pub fn predict_columns(&self, z: &DMatrix<f64>) -> Result<Vec<f64>> {
        z.column_iter().map(|c| self.predict(c.as_slice())).collect()
    }

    /// Mean cross-entropy and its gradient over the columns of `z`.
    pub fn loss_and_gradients(&self, z: &DMatrix<f64>, y: &[f64]) -> (f64, Gradients) {
        let n = z.ncols() as f64;
        let mut pre = &self.weights_in * z;
        for mut col in pre.column_iter_mut() {
            col += &self.bias_in;
        }
        let hidden = pre.map(f64::tanh);
        let logits = hidden.tr_mul(&self.weights_out).add_scalar(self.bias_out);

        let mut loss = 0.0;
        let mut delta_out = DVector::zeros(z.ncols());
        for j in 0..z.ncols() {
            loss += bce_from_logit(logits[j], y[j]);
            delta_out[j] = (sigmoid(logits[j]) - y[j]) / n;
        }

        let weights_out = &hidden * &delta_out;
        let bias_out = delta_out.sum();
        // backprop through tanh: (w_out δᵀ) ⊙ (1 − tanh²)
        let mut delta_hidden = &self.weights_out * delta_out.transpose();
        delta_hidden.zip_apply(&hidden, |d, u| *d *= 1.0 - u * u);
        let weights_in = &delta_hidden * z.transpose();
        let bias_in = DVector::from_iterator(delta_hidden.nrows(), delta_hidden.row_iter().map(|r| r.sum()));

        (loss / n, Gradients { weights_in, bias_in, weights_out, bias_out })
    }

    pub fn loss(&self, z: &DMatrix<f64>, y: &[f64]) -> f64 {
        let total: f64 = z.column_iter().zip(y).map(|(c, &t)| bce_from_logit(self.logit(c.as_slice()), t)).sum();
        total / z.ncols() as f64
    }

    fn step(&mut self, g: &Gradients, lr: f64) {
        self.weights_in -= &g.weights_in * lr;
        self.bias_in -= &g.bias_in * lr;
        self.weights_out -= &g.weights_out * lr;
        self.bias_out -= g.bias_out * lr;
    }
}

fn check_targets(z: &DMatrix<f64>, y: &[f64], k: usize) -> Result<()> {
    if z.nrows() != k {
        return Err(Error::DimensionMismatch { expected: k, actual: z.nrows() });
    }
    if z.ncols() != y.len() {
        return Err(Error::DimensionMismatch { expected: z.ncols(), actual: y.len() });
    }
    if y.iter().any(|&t| t != 0.0 && t != 1.0) {
        return Err(Error::InvalidArgument("targets must be 0 or 1".into()));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("network inputs must be finite".into()));
    }
    Ok(())
}

/// Full-batch gradient descent. With a non-empty validation set the returned
/// parameters are those with the lowest validation loss seen after any update.
pub fn train(
    mut model: NetModel,
    z_train: &DMatrix<f64>,
    y_train: &[f64],
    z_val: &DMatrix<f64>,
    y_val: &[f64],
) -> Result<NetModel> {
    let config = model.config;
    config.validate()?;
    check_targets(z_train, y_train, config.input_dim)?;
    if z_train.ncols() < 2 {
        return Err(Error::InvalidArgument("training needs at least two samples".into()));
    }
    let positives = y_train.iter().filter(|&&t| t == 1.0).count();
    if positives == 0 {
        return Err(Error::SingleClass("low risk"));
    }
    if positives == y_train.len() {
        return Err(Error::SingleClass("high risk"));
    }
    let has_val = !y_val.is_empty();
    if has_val {
        check_targets(z_val, y_val, config.input_dim)?;
    }

    model.train_log.clear();
    let (_, mut grad) = model.loss_and_gradients(z_train, y_train);
    let mut best: Option<(f64, NetModel)> = None;
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        model.step(&grad, config.learning_rate);
        let (train_loss, next) = model.loss_and_gradients(z_train, y_train);
        grad = next;
        if !train_loss.is_finite() || !model.params_finite() {
            return Err(Error::NonFiniteLoss { epoch });
        }
        let val_loss = has_val.then(|| model.loss(z_val, y_val));
        model.train_log.push(EpochLog { epoch, train_loss, val_loss });

        if let Some(v) = val_loss {
            if !v.is_finite() {
                return Err(Error::NonFiniteLoss { epoch });
            }
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, model.clone()));
                stale = 0;
            } else {
                stale += 1;
                if config.patience > 0 && stale >= config.patience {
                    break;
                }
            }
        }
    }
    Ok(match best {
        Some((_, mut kept)) => {
            kept.train_log = std::mem::take(&mut model.train_log);
            kept
        }
        None => model,
    })
}

/// Central finite-difference gradient of the single-sample loss.
pub fn numeric_gradients(model: &NetModel, z: &[f64], y: f64, step: f64) -> Vec<f64> {
    let zm = DMatrix::from_column_slice(z.len(), 1, z);
    let base = model.flatten();
    let mut probe = model.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + step;
            probe.set_flat(&p);
            let up = probe.loss(&zm, &[y]);
            p[i] = base[i] - step;
            probe.set_flat(&p);
            let down = probe.loss(&zm, &[y]);
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Largest elementwise relative error, each denominator floored at `floor`.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / a.abs().max(n.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Compares backpropagated and finite-difference gradients for one sample.
pub fn gradient_check(model: &NetModel, z: &[f64], y: f64) -> Result<f64> {
    model.check_input(z.len())?;
    let zm = DMatrix::from_column_slice(z.len(), 1, z);
    let (_, g) = model.loss_and_gradients(&zm, &[y]);
    let numeric = numeric_gradients(model, z, y, 1e-5);
    Ok(max_relative_error(&g.flatten(), &numeric, 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (DMatrix<f64>, Vec<f64>) {
        let pts = [
            (-2.0, -1.0, 0.0),
            (-1.5, 0.5, 0.0),
            (-1.0, -2.0, 0.0),
            (-0.5, -0.8, 0.0),
            (-1.2, 1.0, 0.0),
            (1.0, 0.3, 1.0),
            (1.5, -0.5, 1.0),
            (0.7, 1.8, 1.0),
            (2.0, 1.0, 1.0),
            (0.9, -1.4, 1.0),
        ];
        let z = DMatrix::from_fn(2, pts.len(), |r, c| if r == 0 { pts[c].0 } else { pts[c].1 });
        (z, pts.iter().map(|p| p.2).collect())
    }

    fn empty(k: usize) -> DMatrix<f64> {
        DMatrix::zeros(k, 0)
    }

    #[test]
    fn init_is_seeded_and_constrained() {
        let a = init_model(NetConfig::new(7, 5, 3)).unwrap();
        let b = init_model(NetConfig::new(7, 5, 3)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.weights_in, init_model(NetConfig::new(7, 5, 4)).unwrap().weights_in);
        assert_eq!(init_model(NetConfig::new(1, 1, 0)).unwrap().param_count(), 4);
        assert!(init_model(NetConfig::new(3, 4, 0)).is_err());
        let bound = 1.0 / 7f64.sqrt();
        assert!(a.weights_in.iter().all(|w| w.abs() <= bound));
    }

    #[test]
    fn zero_parameters_predict_half() {
        let mut m = init_model(NetConfig::new(3, 2, 0)).unwrap();
        m.set_flat(&vec![0.0; m.param_count()]);
        assert_eq!(m.predict(&[1.0, -4.0, 2.0]).unwrap(), 0.5);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn outputs_strictly_inside_unit_interval() {
        let mut m = init_model(NetConfig::new(2, 2, 1)).unwrap();
        m.bias_out = 1e6;
        let p = m.predict(&[0.0, 0.0]).unwrap();
        assert!(p < 1.0 && p > 0.0);
        m.bias_out = -1e6;
        let p = m.predict(&[0.0, 0.0]).unwrap();
        assert!(p > 0.0);
    }

    #[test]
    fn monotone_in_output_bias() {
        let mut m = init_model(NetConfig::new(3, 3, 2)).unwrap();
        let z = [0.3, -0.2, 0.9];
        let mut last = 0.0;
        for b in [-3.0, -1.0, 0.0, 0.5, 2.0] {
            m.bias_out = b;
            let p = m.predict(&z).unwrap();
            assert!(p > last);
            last = p;
        }
    }

    #[test]
    fn separable_toy_reaches_full_accuracy() {
        let (z, y) = toy();
        let mut config = NetConfig::new(2, 2, 17);
        config.max_epochs = 2000;
        config.patience = 0;
        let trained = train(init_model(config).unwrap(), &z, &y, &empty(2), &[]).unwrap();
        let preds = trained.predict_columns(&z).unwrap();
        let correct = preds.iter().zip(&y).filter(|(p, t)| (**p > 0.5) == (**t == 1.0)).count();
        assert_eq!(correct, 10);
        assert!(trained.train_log.len() <= 2000);
    }

    #[test]
    fn small_steps_never_increase_loss() {
        let (z, y) = toy();
        let mut config = NetConfig::new(2, 2, 5);
        config.learning_rate = 0.01;
        config.max_epochs = 1500;
        config.patience = 0;
        let trained = train(init_model(config).unwrap(), &z, &y, &empty(2), &[]).unwrap();
        for w in trained.train_log[10..].windows(2) {
            assert!(w[1].train_loss <= w[0].train_loss + 1e-9);
        }
    }

    #[test]
    fn flipped_labels_mirror_training() {
        let (z, y) = toy();
        let mut config = NetConfig::new(2, 2, 9);
        config.max_epochs = 300;
        config.patience = 0;
        let a = init_model(config).unwrap();
        let mut b = a.clone();
        b.weights_out.neg_mut();
        b.bias_out = -b.bias_out;
        let flipped: Vec<f64> = y.iter().map(|t| 1.0 - t).collect();
        let ta = train(a, &z, &y, &empty(2), &[]).unwrap();
        let tb = train(b, &z, &flipped, &empty(2), &[]).unwrap();
        for (la, lb) in ta.train_log.iter().zip(&tb.train_log) {
            assert!((la.train_loss - lb.train_loss).abs() < 1e-6);
        }
        for (pa, pb) in ta.predict_columns(&z).unwrap().iter().zip(tb.predict_columns(&z).unwrap()) {
            assert!((pa - (1.0 - pb)).abs() < 1e-9);
        }
    }

    #[test]
    fn one_epoch_is_one_update() {
        let (z, y) = toy();
        let mut config = NetConfig::new(2, 2, 4);
        config.max_epochs = 1;
        config.patience = 0;
        let init = init_model(config).unwrap();
        let (_, g) = init.loss_and_gradients(&z, &y);
        let trained = train(init.clone(), &z, &y, &z, &y).unwrap();
        assert_eq!(trained.train_log.len(), 1);
        let expected: Vec<f64> = init.flatten().iter().zip(g.flatten()).map(|(p, d)| p - config.learning_rate * d).collect();
        assert_eq!(trained.flatten(), expected);
    }

    #[test]
    fn early_stopping_keeps_best_validation_parameters() {
        let (z, y) = toy();
        // Validation set with inverted labels: loss rises as training improves.
        let yv: Vec<f64> = y.iter().map(|t| 1.0 - t).collect();
        let mut config = NetConfig::new(2, 2, 8);
        config.patience = 5;
        let trained = train(init_model(config).unwrap(), &z, &y, &z, &yv).unwrap();
        assert!(trained.train_log.len() < 100);
        let best = trained.train_log.iter().filter_map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
        assert!((trained.loss(&z, &yv) - best).abs() < 1e-12);
    }

    #[test]
    fn training_errors() {
        let (z, _) = toy();
        let ones = vec![1.0; 10];
        let m = init_model(NetConfig::new(2, 2, 0)).unwrap();
        assert!(matches!(train(m.clone(), &z, &ones, &empty(2), &[]), Err(Error::SingleClass(_))));
        assert!(train(m.clone(), &z, &[0.5; 10], &empty(2), &[]).is_err());
        assert!(train(m, &z, &[1.0; 3], &empty(2), &[]).is_err());

        let (z, y) = toy();
        let mut config = NetConfig::new(2, 2, 0);
        config.learning_rate = f64::MAX;
        let err = train(init_model(config).unwrap(), &(z * 1e300), &y, &empty(2), &[]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteLoss { .. }), "{err:?}");
    }

    #[test]
    fn deterministic_training() {
        let (z, y) = toy();
        let config = NetConfig { max_epochs: 400, ..NetConfig::new(2, 2, 12) };
        let a = train(init_model(config).unwrap(), &z, &y, &z, &y).unwrap();
        let b = train(init_model(config).unwrap(), &z, &y, &z, &y).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn gradient_check_passes_and_detects_corruption() {
        let model = init_model(NetConfig::new(4, 3, 21)).unwrap();
        let z = [0.4, -1.3, 0.8, 0.05];
        assert!(gradient_check(&model, &z, 1.0).unwrap() < 1e-4);
        assert!(gradient_check(&model, &z, 0.0).unwrap() < 1e-4);

        let zm = DMatrix::from_column_slice(4, 1, &z);
        let (_, g) = model.loss_and_gradients(&zm, &[1.0]);
        let mut corrupted = g.flatten();
        let idx = corrupted.iter().enumerate().max_by(|a, b| a.1.abs().total_cmp(&b.1.abs())).unwrap().0;
        corrupted[idx] = -corrupted[idx];
        let numeric = numeric_gradients(&model, &z, 1.0, 1e-5);
        assert!(max_relative_error(&corrupted, &numeric, 1e-8) > 1e-2);
    }

    #[test]
    fn saturated_confident_prediction() {
        let mut model = init_model(NetConfig::new(2, 2, 3)).unwrap();
        model.bias_out = 40.0;
        // gradients are ~1e-18: both sides fall under the absolute floor
        assert!(gradient_check(&model, &[0.1, 0.2], 1.0).unwrap() < 1e-4);
    }
}
