use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dataset::{read_features_csv, Dataset, Split};
use super::eval::{evaluate, EvalReport};
use super::train::{train, TrainConfig};
use super::variant::{build_variant, VariantConfig, VariantKind};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyConfig {
    pub layers: usize,
    pub epsilon: f64,
    pub residual_readout: bool,
    /// Fraction of rows, after a seeded shuffle, used for training.
    pub train_fraction: f64,
    pub train: TrainConfig,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            layers: 1,
            epsilon: crate::spd::DEFAULT_EPSILON,
            residual_readout: true,
            train_fraction: 0.8,
            train: TrainConfig { epochs: 100, eta: 0.5, ..TrainConfig::default() },
        }
    }
}

/// Classification over precomputed feature vectors: train on a seeded
/// split, report test accuracy.
pub fn classify_features(
    features: &DMatrix<f64>,
    labels: &[usize],
    kind: VariantKind,
    cfg: &ClassifyConfig,
) -> Result<EvalReport> {
    if features.nrows() != labels.len() {
        return Err(Error::DimensionMismatch { expected: features.nrows(), found: labels.len() });
    }
    if labels.len() < 2 {
        return Err(Error::invalid("need at least two labelled rows"));
    }
    if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
        return Err(Error::invalid(format!("train_fraction must lie in (0, 1), got {}", cfg.train_fraction)));
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.train.seed));
    let n_train = ((labels.len() as f64 * cfg.train_fraction).round() as usize).clamp(1, labels.len() - 1);
    let shuffled = DMatrix::from_fn(features.nrows(), features.ncols(), |i, j| features[(order[i], j)]);
    let shuffled_labels: Vec<usize> = order.iter().map(|&i| labels[i]).collect();
    let data = Dataset::classification(shuffled, shuffled_labels, Split::Train)?;
    let (train_set, test_set) = data.split_at(n_train)?;
    let classes = labels.iter().max().map_or(1, |m| m + 1);
    let vcfg = VariantConfig {
        in_dim: features.ncols(),
        out_dim: classes,
        layers: cfg.layers,
        epsilon: cfg.epsilon,
        residual_readout: cfg.residual_readout,
        seed: cfg.train.seed,
        ..VariantConfig::default()
    };
    let variant = build_variant(kind, &vcfg)?;
    let model = train(&variant, &train_set, &cfg.train)?;
    evaluate(&model, &test_set)
}

/// [`classify_features`] on a features-only CSV (header `x0, x1, …`).
pub fn classify_pipeline(features_csv: &str, labels: &[usize], kind: VariantKind, cfg: &ClassifyConfig) -> Result<EvalReport> {
    let features = read_features_csv(features_csv.as_bytes())?;
    classify_features(&features, labels, kind, cfg)
}
