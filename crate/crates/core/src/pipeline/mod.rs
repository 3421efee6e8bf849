//! Hybrid quantum-classical regression and classification pipelines.

pub mod bench;
pub mod classify;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod train;
pub mod variant;

pub use bench::{run_bench, BenchReport, VariantResult, VariantStatus};
pub use classify::{classify_features, classify_pipeline, ClassifyConfig};
pub use config::BenchConfig;
pub use dataset::{read_features_csv, synth_blobs, synth_fem_dataset, Dataset, FemSurrogate, Split, Targets};
pub use eval::{evaluate, EvalReport};
pub use train::{train, Optimizer, TrainConfig, TrainedModel};
pub use variant::{build_variant, ModelVariant, Stage, VariantConfig, VariantKind};
