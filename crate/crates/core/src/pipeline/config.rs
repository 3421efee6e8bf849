//! Benchmark configuration files.
//!
//! Grammar, one entry per line:
//!
//! ```text
//! line    := blank | comment | entry
//! comment := '#' any*
//! entry   := key '=' value [comment]
//! ```
//!
//! Keys are the field names of [`BenchConfig`]; unknown or repeated keys
//! are errors. Whitespace around keys and values is ignored.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::train::{Optimizer, TrainConfig};
use super::variant::VariantConfig;
use crate::error::{Error, Result};
use crate::spd::DEFAULT_EPSILON;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub in_dim: usize,
    pub out_dim: usize,
    pub noise_sigma: f64,
    pub layers: usize,
    pub compressed_qubits: usize,
    pub epsilon: f64,
    pub residual_readout: bool,
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub eta: f64,
    pub ridge: f64,
    pub lambda_reg: f64,
    pub metric_samples: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            n_train: 400,
            n_test: 100,
            in_dim: 7,
            out_dim: 32,
            noise_sigma: 0.01,
            layers: 3,
            compressed_qubits: 4,
            epsilon: DEFAULT_EPSILON,
            residual_readout: true,
            optimizer: Optimizer::Vanilla,
            epochs: 20,
            eta: 0.5,
            ridge: 1e-6,
            lambda_reg: 1e-6,
            metric_samples: 8,
        }
    }
}

const KEYS: [&str; 16] = [
    "seed",
    "n_train",
    "n_test",
    "in_dim",
    "out_dim",
    "noise_sigma",
    "layers",
    "compressed_qubits",
    "epsilon",
    "residual_readout",
    "optimizer",
    "epochs",
    "eta",
    "ridge",
    "lambda_reg",
    "metric_samples",
];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn num<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    value.parse().map_err(|_| parse_err(line, format!("`{key}`: cannot parse `{value}`")))
}

impl BenchConfig {
    /// Parses a config file; keys not present keep their defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = BenchConfig::default();
        let mut seen = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| parse_err(line, format!("expected `key = value`, found `{body}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(parse_err(line, format!("unknown key `{key}`")));
            }
            if !seen.insert(key.to_string()) {
                return Err(parse_err(line, format!("duplicate key `{key}`")));
            }
            cfg.set(key, value, line)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Assigns a single key, as from a config line or a command-line
    /// override.
    pub fn set(&mut self, key: &str, value: &str, line: usize) -> Result<()> {
        match key {
            "seed" => self.seed = num(key, value, line)?,
            "n_train" => self.n_train = num(key, value, line)?,
            "n_test" => self.n_test = num(key, value, line)?,
            "in_dim" => self.in_dim = num(key, value, line)?,
            "out_dim" => self.out_dim = num(key, value, line)?,
            "noise_sigma" => self.noise_sigma = num(key, value, line)?,
            "layers" => self.layers = num(key, value, line)?,
            "compressed_qubits" => self.compressed_qubits = num(key, value, line)?,
            "epsilon" => self.epsilon = num(key, value, line)?,
            "residual_readout" => self.residual_readout = num(key, value, line)?,
            "optimizer" => {
                self.optimizer = Optimizer::parse(value).map_err(|_| parse_err(line, format!("unknown optimizer `{value}`")))?
            }
            "epochs" => self.epochs = num(key, value, line)?,
            "eta" => self.eta = num(key, value, line)?,
            "ridge" => self.ridge = num(key, value, line)?,
            "lambda_reg" => self.lambda_reg = num(key, value, line)?,
            "metric_samples" => self.metric_samples = num(key, value, line)?,
            _ => return Err(parse_err(line, format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.n_train == 0 || self.n_test == 0 {
            return fail("n_train and n_test must be at least 1".into());
        }
        if self.in_dim == 0 || self.out_dim == 0 {
            return fail("in_dim and out_dim must be at least 1".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail(format!("noise_sigma must be a non-negative number, got {}", self.noise_sigma));
        }
        if self.layers == 0 || !(1..=12).contains(&self.compressed_qubits) {
            return fail("layers must be ≥ 1 and compressed_qubits in 1..=12".into());
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return fail(format!("eta must be positive, got {}", self.eta));
        }
        if !(self.ridge >= 0.0 && self.lambda_reg >= 0.0) {
            return fail("ridge and lambda_reg must be non-negative".into());
        }
        if self.metric_samples == 0 {
            return fail("metric_samples must be at least 1".into());
        }
        Ok(())
    }

    /// Every key except `seed`, one `key = value` per line in a fixed order.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("n_train", self.n_train.to_string());
        put("n_test", self.n_test.to_string());
        put("in_dim", self.in_dim.to_string());
        put("out_dim", self.out_dim.to_string());
        put("noise_sigma", format!("{:?}", self.noise_sigma));
        put("layers", self.layers.to_string());
        put("compressed_qubits", self.compressed_qubits.to_string());
        put("epsilon", format!("{:?}", self.epsilon));
        put("residual_readout", self.residual_readout.to_string());
        put("optimizer", self.optimizer.to_string());
        put("epochs", self.epochs.to_string());
        put("eta", format!("{:?}", self.eta));
        put("ridge", format!("{:?}", self.ridge));
        put("lambda_reg", format!("{:?}", self.lambda_reg));
        put("metric_samples", self.metric_samples.to_string());
        out
    }

    /// Full config file text, seed included; parses back to `self`.
    pub fn to_text(&self) -> String {
        format!("seed = {}\n{}", self.seed, self.canonical_text())
    }

    /// SHA-256 of [`canonical_text`](Self::canonical_text), hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn variant_config(&self) -> VariantConfig {
        VariantConfig {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            layers: self.layers,
            compressed_qubits: self.compressed_qubits,
            epsilon: self.epsilon,
            residual_readout: self.residual_readout,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            optimizer: self.optimizer,
            epochs: self.epochs,
            eta: self.eta,
            seed: self.seed,
            ridge: self.ridge,
            lambda_reg: self.lambda_reg,
            metric_samples: self.metric_samples,
        }
    }
}
