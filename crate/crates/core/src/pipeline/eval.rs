use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, Targets};
use super::train::TrainedModel;
use crate::error::{Error, Result};

/// Test-split metrics. Regression fills `mse`/`r2`; classification fills
/// `accuracy`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_samples: usize,
    pub mse: Option<f64>,
    /// Uniform average over non-constant target columns.
    pub r2: Option<f64>,
    /// `None` for constant columns, where R² is undefined.
    pub r2_per_column: Vec<Option<f64>>,
    pub constant_columns: Vec<usize>,
    pub accuracy: Option<f64>,
    /// Set when the test labels contain a single class.
    pub degenerate: bool,
}

/// Mean squared error over every entry and column-averaged R².
pub fn regression_metrics(pred: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<EvalReport> {
    if pred.shape() != truth.shape() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: pred.len() });
    }
    if truth.is_empty() {
        return Err(Error::Empty);
    }
    let n = truth.nrows() as f64;
    let mse = (pred - truth).norm_squared() / truth.len() as f64;
    let mut per_column = Vec::with_capacity(truth.ncols());
    let mut constant = Vec::new();
    for j in 0..truth.ncols() {
        let col = truth.column(j);
        let mean = col.sum() / n;
        let ss_tot: f64 = col.iter().map(|v| (v - mean).powi(2)).sum();
        let ss_res: f64 = col.iter().zip(pred.column(j).iter()).map(|(t, p)| (t - p).powi(2)).sum();
        if ss_tot <= f64::EPSILON * n * mean.abs().max(1.0).powi(2) {
            constant.push(j);
            per_column.push(None);
        } else {
            per_column.push(Some(1.0 - ss_res / ss_tot));
        }
    }
    let defined: Vec<f64> = per_column.iter().flatten().copied().collect();
    let r2 = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(EvalReport {
        n_samples: truth.nrows(),
        mse: Some(mse),
        r2,
        r2_per_column: per_column,
        constant_columns: constant,
        accuracy: None,
        degenerate: false,
    })
}

pub fn classification_metrics(pred: &[usize], truth: &[usize]) -> Result<EvalReport> {
    if pred.len() != truth.len() {
        return Err(Error::DimensionMismatch { expected: truth.len(), found: pred.len() });
    }
    if truth.is_empty() {
        return Err(Error::Empty);
    }
    let correct = pred.iter().zip(truth).filter(|(a, b)| a == b).count();
    let degenerate = truth.iter().all(|l| *l == truth[0]);
    Ok(EvalReport {
        n_samples: truth.len(),
        mse: None,
        r2: None,
        r2_per_column: Vec::new(),
        constant_columns: Vec::new(),
        accuracy: Some(correct as f64 / truth.len() as f64),
        degenerate,
    })
}

pub fn evaluate(model: &TrainedModel, data: &Dataset) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::Empty);
    }
    match data.targets() {
        Targets::Regression(y) => regression_metrics(&model.predict(data)?, y),
        Targets::Classes(labels) => classification_metrics(&model.predict_labels(data)?, labels),
    }
}
