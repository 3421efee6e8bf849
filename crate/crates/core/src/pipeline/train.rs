//! Full-batch training for every model variant.
//!
//! Regression readouts are refit in closed form (ridge) at every step, so
//! gradient descent only moves the circuit parameters. Classification
//! readouts are trained jointly with the circuit by plain gradient descent
//! on the cross-entropy.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Targets};
use super::variant::{Encoded, ModelVariant};
use crate::circuit::parameter_shift_grad_with;
use crate::error::{Error, Result};
use crate::geometry::{fs_metric, natural_gradient_step, MetricTensor};

/// Consecutive loss increases tolerated before training halts.
pub const MAX_LOSS_INCREASES: usize = 5;

/// Half-width of the uniform initialization interval for θ.
pub const INIT_SCALE: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Vanilla,
    NaturalGradient,
}

impl Optimizer {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Optimizer::Vanilla),
            "natural_gradient" => Ok(Optimizer::NaturalGradient),
            other => Err(Error::invalid(format!("unknown optimizer `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Optimizer::Vanilla => "vanilla",
            Optimizer::NaturalGradient => "natural_gradient",
        }
    }
}

impl fmt::Display for Optimizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub eta: f64,
    pub seed: u64,
    /// Ridge penalty of the closed-form regression readout.
    pub ridge: f64,
    /// Tikhonov term added to the metric before the natural-gradient solve.
    pub lambda_reg: f64,
    /// Training samples whose metrics are averaged for preconditioning.
    pub metric_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Vanilla,
            epochs: 10,
            eta: 0.1,
            seed: 0,
            ridge: 1e-6,
            lambda_reg: 1e-6,
            metric_samples: 8,
        }
    }
}

/// Normalization constants fitted on the training split.
#[derive(Clone, Debug, PartialEq)]
pub struct Preprocessing {
    pub feature_mean: DVector<f64>,
    pub feature_scale: DVector<f64>,
    /// Present for regression only.
    pub target_mean: Option<DVector<f64>>,
    pub target_scale: Option<DVector<f64>>,
    pub epsilon: f64,
}

fn column_stats(m: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = m.nrows() as f64;
    let mean = DVector::from_fn(m.ncols(), |j, _| m.column(j).sum() / n);
    let scale = DVector::from_fn(m.ncols(), |j, _| {
        let var = m.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if sd > 1e-12 {
            sd
        } else {
            1.0
        }
    });
    (mean, scale)
}

impl Preprocessing {
    fn fit(data: &Dataset, epsilon: f64) -> Self {
        let (feature_mean, feature_scale) = column_stats(data.features());
        let (target_mean, target_scale) = match data.targets() {
            Targets::Regression(y) => {
                let (m, s) = column_stats(y);
                (Some(m), Some(s))
            }
            Targets::Classes(_) => (None, None),
        };
        Self { feature_mean, feature_scale, target_mean, target_scale, epsilon }
    }

    pub fn standardize(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.feature_mean).component_div(&self.feature_scale)
    }

    fn standardize_targets(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let (m, s) = (self.target_mean.as_ref().unwrap(), self.target_scale.as_ref().unwrap());
        DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| (y[(i, j)] - m[j]) / s[j])
    }

    fn restore_targets(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        match (&self.target_mean, &self.target_scale) {
            (Some(m), Some(s)) => DMatrix::from_fn(y.nrows(), y.ncols(), |i, j| y[(i, j)] * s[j] + m[j]),
            _ => y.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub variant: ModelVariant,
    pub optimizer: Optimizer,
    pub theta: Vec<f64>,
    /// Readout weights, one column per output.
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub preprocessing: Preprocessing,
    /// Full-batch loss before training and after every epoch.
    pub losses: Vec<f64>,
    pub halted_early: bool,
}

/// ±1 eigenvalue of each readout Z-string on each basis state.
fn z_signs(qubits: usize) -> DMatrix<f64> {
    let dim = 1usize << qubits;
    let bit = |i: usize, q: usize| (i >> (qubits - 1 - q)) & 1;
    let sign = |b: usize| if b == 0 { 1.0 } else { -1.0 };
    let mut rows: Vec<Vec<f64>> = (0..qubits)
        .map(|q| (0..dim).map(|i| sign(bit(i, q))).collect())
        .collect();
    for a in 0..qubits {
        for b in a + 1..qubits {
            rows.push((0..dim).map(|i| sign(bit(i, a) ^ bit(i, b))).collect());
        }
    }
    DMatrix::from_fn(rows.len(), dim, |r, i| rows[r][i])
}

/// Everything the loss needs, computed once per dataset.
struct Forward<'a> {
    variant: &'a ModelVariant,
    encoded: Vec<Encoded>,
    signs: Option<DMatrix<f64>>,
}

impl<'a> Forward<'a> {
    fn new(variant: &'a ModelVariant, prep: &Preprocessing, data: &Dataset) -> Result<Self> {
        let encoded = (0..data.len())
            .map(|i| variant.encode(&prep.standardize(&data.row(i))))
            .collect::<Result<Vec<_>>>()?;
        let signs = variant.circuit().map(|c| z_signs(c.num_qubits()));
        Ok(Self { variant, encoded, signs })
    }

    fn width(&self) -> usize {
        let q = if self.variant.circuit().is_some() { self.variant.readout_inputs().0 } else { 0 };
        q + self.encoded.first().map_or(0, |e| e.skip.len())
    }

    /// Readout inputs, one row per sample.
    fn features(&self, theta: &[f64]) -> Result<DMatrix<f64>> {
        let mut phi = DMatrix::zeros(self.encoded.len(), self.width());
        for (i, enc) in self.encoded.iter().enumerate() {
            let mut col = 0;
            if let (Some(c), Some(state), Some(signs)) = (self.variant.circuit(), &enc.state, &self.signs) {
                let out = c.apply(theta, state)?;
                let p = DVector::from_vec(out.probabilities());
                let z = signs * p;
                phi.view_mut((i, 0), (1, z.len())).copy_from(&z.transpose());
                col = z.len();
            }
            phi.view_mut((i, col), (1, enc.skip.len())).copy_from(&enc.skip.transpose());
        }
        Ok(phi)
    }

    /// `Σ_s ∂/∂θ Σ_f a_sf ⟨Z_f⟩_s` where `a_s` is the loss sensitivity to
    /// sample `s`'s quantum features.
    fn circuit_grad(&self, theta: &[f64], sens: &DMatrix<f64>) -> Result<Vec<f64>> {
        let (Some(c), Some(signs)) = (self.variant.circuit(), &self.signs) else {
            return Ok(Vec::new());
        };
        let nq = signs.nrows();
        let mut grad = vec![0.0; c.num_params()];
        for (s, enc) in self.encoded.iter().enumerate() {
            let a = sens.view((s, 0), (1, nq)).transpose();
            if a.iter().all(|v| *v == 0.0) {
                continue;
            }
            let diag = signs.transpose() * a;
            let state = enc.state.as_ref().expect("quantum variant encodes a state");
            let g = parameter_shift_grad_with(c, theta, state, |amps| {
                amps.iter().zip(diag.iter()).map(|(z, d)| z.norm_sqr() * d).sum()
            })?;
            grad.iter_mut().zip(g).for_each(|(t, v)| *t += v);
        }
        Ok(grad)
    }

    fn mean_metric(&self, theta: &[f64], samples: usize) -> Result<MetricTensor> {
        let c = self.variant.circuit().expect("quantum variant");
        let take = samples.clamp(1, self.encoded.len());
        let mut sum = DMatrix::zeros(c.num_params(), c.num_params());
        for enc in self.encoded.iter().take(take) {
            let state = enc.state.as_ref().expect("quantum variant encodes a state");
            sum += fs_metric(c, theta, state)?.into_inner();
        }
        MetricTensor::new(sum / take as f64)
    }
}

/// Ridge fit with an unpenalized intercept: returns `(W, b)`.
fn ridge_fit(phi: &DMatrix<f64>, y: &DMatrix<f64>, lambda: f64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = phi.nrows() as f64;
    let phi_mean = DVector::from_fn(phi.ncols(), |j, _| phi.column(j).sum() / n);
    let y_mean = DVector::from_fn(y.ncols(), |j, _| y.column(j).sum() / n);
    let mut pc = phi.clone();
    for j in 0..pc.ncols() {
        pc.column_mut(j).add_scalar_mut(-phi_mean[j]);
    }
    let mut yc = y.clone();
    for j in 0..yc.ncols() {
        yc.column_mut(j).add_scalar_mut(-y_mean[j]);
    }
    let f = phi.ncols();
    let gram = pc.transpose() * &pc / n + DMatrix::identity(f, f) * lambda.max(1e-12);
    let rhs = pc.transpose() * &yc / n;
    let w = gram.cholesky().ok_or(Error::Singular)?.solve(&rhs);
    let b = &y_mean - w.transpose() * phi_mean;
    Ok((w, b))
}

fn predict_raw(phi: &DMatrix<f64>, w: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let mut out = phi * w;
    for mut row in out.row_iter_mut() {
        row += b.transpose();
    }
    out
}

fn mse_loss(pred: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    (pred - y).norm_squared() / (y.nrows() * y.ncols()) as f64
}

fn softmax_rows(logits: &DMatrix<f64>) -> DMatrix<f64> {
    let mut p = logits.clone();
    for mut row in p.row_iter_mut() {
        let m = row.max();
        row.apply(|v| *v = (*v - m).exp());
        let s = row.sum();
        row /= s;
    }
    p
}

fn cross_entropy(probs: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let n = labels.len() as f64;
    -labels.iter().enumerate().map(|(i, &l)| probs[(i, l)].max(1e-300).ln()).sum::<f64>() / n
}

/// Tracks the loss history and the consecutive-increase halting rule.
struct Monitor {
    losses: Vec<f64>,
    increases: usize,
}

impl Monitor {
    fn new() -> Self {
        Self { losses: Vec::new(), increases: 0 }
    }

    /// Records the loss after `epoch`; returns `true` when training should stop.
    fn record(&mut self, epoch: usize, loss: f64) -> Result<bool> {
        if !loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
        if let Some(prev) = self.losses.last() {
            if loss > *prev {
                self.increases += 1;
            } else {
                self.increases = 0;
            }
        }
        self.losses.push(loss);
        if self.increases >= MAX_LOSS_INCREASES {
            log::warn!("loss rose for {MAX_LOSS_INCREASES} consecutive epochs; halting at epoch {epoch}");
            return Ok(true);
        }
        Ok(false)
    }
}

fn initial_theta(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-INIT_SCALE..=INIT_SCALE)).collect()
}

fn check_config(cfg: &TrainConfig) -> Result<()> {
    if !(cfg.eta > 0.0 && cfg.eta.is_finite()) {
        return Err(Error::invalid(format!("learning rate must be positive, got {}", cfg.eta)));
    }
    if !(cfg.ridge >= 0.0) || !(cfg.lambda_reg >= 0.0) {
        return Err(Error::invalid("regularization constants must be non-negative"));
    }
    Ok(())
}

fn step(cfg: &TrainConfig, fwd: &Forward, theta: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
    match cfg.optimizer {
        Optimizer::Vanilla => Ok(theta.iter().zip(grad).map(|(t, g)| t - cfg.eta * g).collect()),
        Optimizer::NaturalGradient => {
            let metric = fwd.mean_metric(theta, cfg.metric_samples)?;
            natural_gradient_step(theta, grad, &metric, cfg.eta, cfg.lambda_reg)
        }
    }
}

pub fn train(variant: &ModelVariant, data: &Dataset, cfg: &TrainConfig) -> Result<TrainedModel> {
    if data.is_empty() {
        return Err(Error::Empty);
    }
    crate::error::check_dim(variant.config().in_dim, data.in_dim())?;
    check_config(cfg)?;
    let prep = Preprocessing::fit(data, variant.config().epsilon);
    let fwd = Forward::new(variant, &prep, data)?;
    let theta = initial_theta(variant.num_circuit_params(), cfg.seed);
    match data.targets() {
        Targets::Regression(y) => {
            crate::error::check_dim(variant.config().out_dim, y.ncols())?;
            let y = prep.standardize_targets(y);
            train_regression(variant, &fwd, prep, &y, theta, cfg)
        }
        Targets::Classes(labels) => {
            if let Some(&l) = labels.iter().find(|l| **l >= variant.config().out_dim) {
                return Err(Error::invalid(format!("label {l} outside the readout's {} classes", variant.config().out_dim)));
            }
            train_classifier(variant, &fwd, prep, labels, theta, cfg)
        }
    }
}

fn train_regression(
    variant: &ModelVariant,
    fwd: &Forward,
    prep: Preprocessing,
    y: &DMatrix<f64>,
    mut theta: Vec<f64>,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    let n = y.nrows() as f64;
    let d = y.ncols() as f64;
    let nq = variant.readout_inputs().0;
    let quantum = variant.circuit().is_some() && !theta.is_empty();
    let mut monitor = Monitor::new();
    let mut phi = fwd.features(&theta)?;
    let (mut w, mut b) = ridge_fit(&phi, y, cfg.ridge)?;
    let mut halted = monitor.record(0, mse_loss(&predict_raw(&phi, &w, &b), y))?;
    let epochs = if quantum { cfg.epochs } else { 0 };
    for epoch in 1..=epochs {
        if halted {
            break;
        }
        let resid = predict_raw(&phi, &w, &b) - y;
        let sens = resid * w.rows(0, nq).transpose() * (2.0 / (n * d));
        let grad = fwd.circuit_grad(&theta, &sens)?;
        theta = step(cfg, fwd, &theta, &grad)?;
        phi = fwd.features(&theta)?;
        (w, b) = ridge_fit(&phi, y, cfg.ridge)?;
        halted = monitor.record(epoch, mse_loss(&predict_raw(&phi, &w, &b), y))?;
    }
    Ok(TrainedModel {
        variant: variant.clone(),
        optimizer: cfg.optimizer,
        theta,
        weights: w,
        bias: b,
        preprocessing: prep,
        losses: monitor.losses,
        halted_early: halted,
    })
}

fn train_classifier(
    variant: &ModelVariant,
    fwd: &Forward,
    prep: Preprocessing,
    labels: &[usize],
    mut theta: Vec<f64>,
    cfg: &TrainConfig,
) -> Result<TrainedModel> {
    let n = labels.len() as f64;
    let classes = variant.config().out_dim;
    let nq = if variant.circuit().is_some() { variant.readout_inputs().0 } else { 0 };
    let mut w = DMatrix::zeros(fwd.width(), classes);
    let mut b = DVector::zeros(classes);
    let mut monitor = Monitor::new();
    let mut phi = fwd.features(&theta)?;
    let mut probs = softmax_rows(&predict_raw(&phi, &w, &b));
    let mut halted = monitor.record(0, cross_entropy(&probs, labels))?;
    for epoch in 1..=cfg.epochs {
        if halted {
            break;
        }
        let mut g = probs;
        for (i, &l) in labels.iter().enumerate() {
            g[(i, l)] -= 1.0;
        }
        g /= n;
        if nq > 0 && !theta.is_empty() {
            let sens = &g * w.rows(0, nq).transpose();
            let grad = fwd.circuit_grad(&theta, &sens)?;
            theta = step(cfg, fwd, &theta, &grad)?;
        }
        w -= phi.transpose() * &g * cfg.eta;
        b -= g.row_sum().transpose() * cfg.eta;
        phi = fwd.features(&theta)?;
        probs = softmax_rows(&predict_raw(&phi, &w, &b));
        halted = monitor.record(epoch, cross_entropy(&probs, labels))?;
    }
    Ok(TrainedModel {
        variant: variant.clone(),
        optimizer: cfg.optimizer,
        theta,
        weights: w,
        bias: b,
        preprocessing: prep,
        losses: monitor.losses,
        halted_early: halted,
    })
}

impl TrainedModel {
    /// Raw readout outputs in target units (regression) or logits
    /// (classification), one row per sample.
    pub fn predict(&self, data: &Dataset) -> Result<DMatrix<f64>> {
        crate::error::check_dim(self.variant.config().in_dim, data.in_dim())?;
        let fwd = Forward::new(&self.variant, &self.preprocessing, data)?;
        let phi = fwd.features(&self.theta)?;
        Ok(self.preprocessing.restore_targets(&predict_raw(&phi, &self.weights, &self.bias)))
    }

    /// Arg-max class per sample.
    pub fn predict_labels(&self, data: &Dataset) -> Result<Vec<usize>> {
        let logits = self.predict(data)?;
        Ok(logits.row_iter().map(|r| r.transpose().argmax().0).collect())
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("training records the initial loss")
    }
}
