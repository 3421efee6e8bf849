//! Four-variant regression benchmark on the synthetic surrogate.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::BenchConfig;
use super::dataset::synth_fem_dataset;
use super::eval::{evaluate, EvalReport};
use super::train::train;
use super::variant::{build_variant, VariantKind};
use crate::error::{Error, Result};
use crate::io::SCHEMA_VERSION;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantStatus {
    Ok,
    Diverged,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantResult {
    pub variant: VariantKind,
    pub label: String,
    pub status: VariantStatus,
    pub qubits: usize,
    pub circuit_params: usize,
    pub epochs_run: usize,
    pub halted_early: bool,
    pub initial_train_loss: Option<f64>,
    pub final_train_loss: Option<f64>,
    pub train: Option<EvalReport>,
    pub test: Option<EvalReport>,
    /// Epoch at which the loss became non-finite.
    pub diverged_at: Option<usize>,
    pub error: Option<String>,
}

/// Everything that must be identical across runs with the same config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchBody {
    pub seed: u64,
    pub config_hash: String,
    pub config: BenchConfig,
    pub variants: Vec<VariantResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariantTiming {
    pub variant: VariantKind,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchTiming {
    pub total_seconds: f64,
    pub variants: Vec<VariantTiming>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub body: BenchBody,
    pub timing: BenchTiming,
}

impl BenchReport {
    pub fn any_diverged(&self) -> bool {
        self.body.variants.iter().any(|v| v.status == VariantStatus::Diverged)
    }

    pub fn variant(&self, kind: VariantKind) -> Option<&VariantResult> {
        self.body.variants.iter().find(|v| v.variant == kind)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: BenchReport = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
        if report.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse { line: 0, message: format!("unsupported schema_version {}", report.schema_version) });
        }
        Ok(report)
    }

    /// Plain-text table with one row per variant.
    pub fn table(&self) -> String {
        let fmt = |v: Option<f64>, sci: bool| match v {
            Some(x) if sci => format!("{x:.3e}"),
            Some(x) => format!("{x:.4}"),
            None => "-".to_string(),
        };
        let mut out = String::new();
        let _ = writeln!(out, "{:<28} {:>12} {:>10} {:>10}", "Model", "MSE", "R2", "status");
        for v in &self.body.variants {
            let test = v.test.as_ref();
            let status = match v.status {
                VariantStatus::Ok => "ok",
                VariantStatus::Diverged => "diverged",
                VariantStatus::Failed => "failed",
            };
            let _ = writeln!(
                out,
                "{:<28} {:>12} {:>10} {:>10}",
                v.label,
                fmt(test.and_then(|t| t.mse), true),
                fmt(test.and_then(|t| t.r2), false),
                status
            );
        }
        out
    }
}

fn run_variant(kind: VariantKind, cfg: &BenchConfig, train_set: &super::Dataset, test_set: &super::Dataset) -> VariantResult {
    let mut result = VariantResult {
        variant: kind,
        label: kind.label().to_string(),
        status: VariantStatus::Ok,
        qubits: 0,
        circuit_params: 0,
        epochs_run: 0,
        halted_early: false,
        initial_train_loss: None,
        final_train_loss: None,
        train: None,
        test: None,
        diverged_at: None,
        error: None,
    };
    let variant = match build_variant(kind, &cfg.variant_config()) {
        Ok(v) => v,
        Err(e) => {
            result.status = VariantStatus::Failed;
            result.error = Some(e.to_string());
            return result;
        }
    };
    result.qubits = variant.num_qubits();
    result.circuit_params = variant.num_circuit_params();
    let outcome = train(&variant, train_set, &cfg.train_config()).and_then(|model| {
        let tr = evaluate(&model, train_set)?;
        let te = evaluate(&model, test_set)?;
        Ok((model, tr, te))
    });
    match outcome {
        Ok((model, tr, te)) => {
            result.epochs_run = model.losses.len() - 1;
            result.halted_early = model.halted_early;
            result.initial_train_loss = model.losses.first().copied();
            result.final_train_loss = model.losses.last().copied();
            result.train = Some(tr);
            result.test = Some(te);
        }
        Err(Error::Divergence { epoch }) => {
            result.status = VariantStatus::Diverged;
            result.diverged_at = Some(epoch);
            result.error = Some(Error::Divergence { epoch }.to_string());
        }
        Err(e) => {
            result.status = VariantStatus::Failed;
            result.error = Some(e.to_string());
        }
    }
    result
}

/// Generates the dataset for `cfg.seed`, trains and evaluates every
/// variant. Training failures are recorded per variant, not returned.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let start = Instant::now();
    let all = synth_fem_dataset(cfg.seed, cfg.n_train + cfg.n_test, cfg.in_dim, cfg.out_dim, cfg.noise_sigma)?;
    let (train_set, test_set) = all.split_at(cfg.n_train)?;
    let mut variants = Vec::with_capacity(VariantKind::ALL.len());
    let mut timings = Vec::with_capacity(VariantKind::ALL.len());
    for kind in VariantKind::ALL {
        let t = Instant::now();
        let result = run_variant(kind, cfg, &train_set, &test_set);
        log::info!("{kind}: {:?} in {:.1}s", result.status, t.elapsed().as_secs_f64());
        variants.push(result);
        timings.push(VariantTiming { variant: kind, seconds: t.elapsed().as_secs_f64() });
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        body: BenchBody { seed: cfg.seed, config_hash: cfg.hash(), config: cfg.clone(), variants },
        timing: BenchTiming { total_seconds: start.elapsed().as_secs_f64(), variants: timings },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> BenchConfig {
        BenchConfig {
            n_train: 24,
            n_test: 8,
            in_dim: 2,
            out_dim: 3,
            layers: 1,
            compressed_qubits: 2,
            epochs: 2,
            ..BenchConfig::default()
        }
    }

    #[test]
    fn report_lists_every_variant_in_order() {
        let r = run_bench(&tiny()).unwrap();
        let kinds: Vec<VariantKind> = r.body.variants.iter().map(|v| v.variant).collect();
        assert_eq!(kinds, VariantKind::ALL.to_vec());
        assert!(r.body.variants.iter().all(|v| v.status == VariantStatus::Ok));
        let table = r.table();
        let rows: Vec<&str> = table.lines().skip(1).collect();
        assert!(rows[0].starts_with("Classical (No Quantum)"));
        assert!(rows[3].starts_with("SPD-Enhanced Hybrid"));
    }

    #[test]
    fn bodies_are_deterministic_and_json_round_trips() {
        let a = run_bench(&tiny()).unwrap();
        let b = run_bench(&tiny()).unwrap();
        assert_eq!(a.body, b.body);
        let json = a.to_json();
        let back = BenchReport::from_json(&json).unwrap();
        assert_eq!(back.to_json(), json);
    }

    #[test]
    fn bad_json_is_a_parse_error() {
        assert!(matches!(BenchReport::from_json("{"), Err(Error::Parse { .. })));
    }
}
