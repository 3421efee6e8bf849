use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::circuit::{Gate, ParamCircuit, MAX_STATE_QUBITS};
use crate::error::{Error, Result};
use crate::spd::{poly_expand, spd_from_features, sym_log, FeatureVector, DEFAULT_EPSILON};
use crate::state::{amplitude_encode, StateVector};

/// The four model families compared by the benchmark, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantKind {
    ClassicalOnly,
    ClassicalQuantum,
    QuantumClassical,
    SpdEnhancedHybrid,
}

impl VariantKind {
    pub const ALL: [VariantKind; 4] = [
        VariantKind::ClassicalOnly,
        VariantKind::ClassicalQuantum,
        VariantKind::QuantumClassical,
        VariantKind::SpdEnhancedHybrid,
    ];

    pub fn name(self) -> &'static str {
        match self {
            VariantKind::ClassicalOnly => "classical_only",
            VariantKind::ClassicalQuantum => "classical_quantum",
            VariantKind::QuantumClassical => "quantum_classical",
            VariantKind::SpdEnhancedHybrid => "spd_enhanced_hybrid",
        }
    }

    /// Human-readable row label for tables.
    pub fn label(self) -> &'static str {
        match self {
            VariantKind::ClassicalOnly => "Classical (No Quantum)",
            VariantKind::ClassicalQuantum => "Classical-Quantum Hybrid",
            VariantKind::QuantumClassical => "Quantum-Classical Hybrid",
            VariantKind::SpdEnhancedHybrid => "SPD-Enhanced Hybrid",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        VariantKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown model variant `{s}`")))
    }
}

impl fmt::Display for VariantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VariantConfig {
    pub in_dim: usize,
    /// Readout width: target columns for regression, classes for
    /// classification.
    pub out_dim: usize,
    pub layers: usize,
    /// Register size of the classical-quantum variant's compressed input.
    pub compressed_qubits: usize,
    pub epsilon: f64,
    /// Feed the classical front-end features to the readout alongside the
    /// quantum measurements.
    pub residual_readout: bool,
    /// Seeds the fixed linear compressor.
    pub seed: u64,
}

impl Default for VariantConfig {
    fn default() -> Self {
        Self {
            in_dim: 7,
            out_dim: 32,
            layers: 3,
            compressed_qubits: 4,
            epsilon: DEFAULT_EPSILON,
            residual_readout: true,
            seed: 0,
        }
    }
}

/// What flows between stages.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    Vector(usize),
    Spd(usize),
    Tangent(usize),
    State(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Stage {
    Standardize { dim: usize },
    PolyExpand { input: usize, output: usize },
    LinearCompressor { input: usize, output: usize },
    AppendBias { input: usize },
    SpdFromFeatures { dim: usize, epsilon: f64 },
    SymLog { dim: usize },
    VectorizeUpper { dim: usize },
    AmplitudeEncode { input: usize, qubits: usize },
    Ansatz { qubits: usize, layers: usize, params: usize },
    PauliZFeatures { qubits: usize },
    Readout { input: usize, skip: usize, output: usize },
}

impl Stage {
    pub fn input(&self) -> Shape {
        match *self {
            Stage::Standardize { dim } => Shape::Vector(dim),
            Stage::PolyExpand { input, .. } | Stage::LinearCompressor { input, .. } => Shape::Vector(input),
            Stage::AppendBias { input } => Shape::Vector(input),
            Stage::SpdFromFeatures { dim, .. } => Shape::Vector(dim),
            Stage::SymLog { dim } => Shape::Spd(dim),
            Stage::VectorizeUpper { dim } => Shape::Tangent(dim),
            Stage::AmplitudeEncode { input, .. } => Shape::Vector(input),
            Stage::Ansatz { qubits, .. } | Stage::PauliZFeatures { qubits } => Shape::State(qubits),
            Stage::Readout { input, .. } => Shape::Vector(input),
        }
    }

    pub fn output(&self) -> Shape {
        match *self {
            Stage::Standardize { dim } => Shape::Vector(dim),
            Stage::PolyExpand { output, .. } | Stage::LinearCompressor { output, .. } => Shape::Vector(output),
            Stage::AppendBias { input } => Shape::Vector(input + 1),
            Stage::SpdFromFeatures { dim, .. } => Shape::Spd(dim),
            Stage::SymLog { dim } => Shape::Tangent(dim),
            Stage::VectorizeUpper { dim } => Shape::Vector(dim * (dim + 1) / 2),
            Stage::AmplitudeEncode { qubits, .. } | Stage::Ansatz { qubits, .. } => Shape::State(qubits),
            Stage::PauliZFeatures { qubits } => Shape::Vector(z_feature_count(qubits)),
            Stage::Readout { output, .. } => Shape::Vector(output),
        }
    }
}

/// Single-qubit Z plus all pairwise ZZ correlators.
pub fn z_feature_count(qubits: usize) -> usize {
    qubits + qubits * qubits.saturating_sub(1) / 2
}

fn qubits_for(len: usize) -> usize {
    len.next_power_of_two().trailing_zeros() as usize
}

fn poly_len(d: usize) -> usize {
    1 + d + d * (d + 1) / 2
}

/// Layered ansatz: per layer an RY and an RZ on every qubit, then a CNOT
/// ring `q → q+1 (mod n)`.
pub fn default_ansatz(qubits: usize, layers: usize) -> Result<ParamCircuit> {
    let params = 2 * qubits * layers;
    let mut c = ParamCircuit::new(qubits, params)?;
    let mut p = 0;
    for _ in 0..layers {
        for q in 0..qubits {
            c.push(Gate::ry(q, p))?;
            c.push(Gate::rz(q, p + 1))?;
            p += 2;
        }
        if qubits > 1 {
            for q in 0..qubits {
                c.push(Gate::cnot(q, (q + 1) % qubits))?;
            }
        }
    }
    Ok(c)
}

/// Input to the readout after the (θ-independent) encoding stages.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoded {
    pub state: Option<StateVector>,
    /// Classical features passed straight to the readout.
    pub skip: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelVariant {
    kind: VariantKind,
    config: VariantConfig,
    stages: Vec<Stage>,
    circuit: Option<ParamCircuit>,
    compressor: Option<DMatrix<f64>>,
}

impl ModelVariant {
    pub fn kind(&self) -> VariantKind {
        self.kind
    }

    pub fn config(&self) -> &VariantConfig {
        &self.config
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn circuit(&self) -> Option<&ParamCircuit> {
        self.circuit.as_ref()
    }

    pub fn num_circuit_params(&self) -> usize {
        self.circuit.as_ref().map_or(0, |c| c.num_params())
    }

    pub fn num_qubits(&self) -> usize {
        self.circuit.as_ref().map_or(0, |c| c.num_qubits())
    }

    /// Width of the readout's input: quantum features followed by skip
    /// features.
    pub fn readout_inputs(&self) -> (usize, usize) {
        match self.stages.last() {
            Some(Stage::Readout { input, skip, .. }) => (*input, *skip),
            _ => (0, 0),
        }
    }

    /// Runs every stage before the ansatz on a standardized input.
    pub fn encode(&self, x: &DVector<f64>) -> Result<Encoded> {
        crate::error::check_dim(self.config.in_dim, x.len())?;
        let fx = FeatureVector::new(x.clone())?;
        let poly = || -> Result<DVector<f64>> { Ok(poly_expand(&fx, 2)?.into_inner()) };
        let without_bias = |v: &DVector<f64>| v.rows(1, v.len() - 1).into_owned();
        let residual = self.config.residual_readout;
        let empty = DVector::zeros(0);
        Ok(match self.kind {
            VariantKind::ClassicalOnly => Encoded { state: None, skip: without_bias(&poly()?) },
            VariantKind::ClassicalQuantum => {
                let comp = self.compressor.as_ref().expect("built with a compressor");
                let mut with_bias = DVector::zeros(x.len() + 1);
                with_bias[0] = 1.0;
                with_bias.rows_mut(1, x.len()).copy_from(x);
                let v = comp * with_bias;
                let state = amplitude_encode(&FeatureVector::new(v.clone())?)?;
                Encoded { state: Some(state), skip: if residual { v } else { empty } }
            }
            VariantKind::QuantumClassical => {
                let mut v = DVector::zeros(x.len() + 1);
                v.rows_mut(0, x.len()).copy_from(x);
                v[x.len()] = 1.0;
                let state = amplitude_encode(&FeatureVector::new(v)?)?;
                Encoded { state: Some(state), skip: if residual { x.clone() } else { empty } }
            }
            VariantKind::SpdEnhancedHybrid => {
                let z = poly()?;
                let spd = spd_from_features(&FeatureVector::new(z.clone())?, self.config.epsilon)?;
                let v = sym_log(&spd).vectorize_upper();
                let state = amplitude_encode(&FeatureVector::new(v)?)?;
                Encoded { state: Some(state), skip: if residual { without_bias(&z) } else { empty } }
            }
        })
    }
}

/// Assembles and type-checks the stage list for `kind`.
pub fn build_variant(kind: VariantKind, config: &VariantConfig) -> Result<ModelVariant> {
    let d = config.in_dim;
    if d == 0 || config.out_dim == 0 {
        return Err(Error::invalid("variant dimensions must be at least 1"));
    }
    if !(config.epsilon > 0.0) {
        return Err(Error::invalid(format!("epsilon must be positive, got {}", config.epsilon)));
    }
    let res = config.residual_readout;
    let mut stages = vec![Stage::Standardize { dim: d }];
    let mut compressor = None;
    let quantum_tail = |stages: &mut Vec<Stage>, qubits: usize, skip: usize| -> Result<ParamCircuit> {
        if qubits > MAX_STATE_QUBITS {
            return Err(Error::Unsupported(format!("{qubits} qubits exceeds the simulator cap")));
        }
        let circuit = default_ansatz(qubits.max(1), config.layers)?;
        stages.push(Stage::Ansatz { qubits, layers: config.layers, params: circuit.num_params() });
        stages.push(Stage::PauliZFeatures { qubits });
        stages.push(Stage::Readout { input: z_feature_count(qubits), skip, output: config.out_dim });
        Ok(circuit)
    };
    let circuit = match kind {
        VariantKind::ClassicalOnly => {
            let p = poly_len(d);
            stages.push(Stage::PolyExpand { input: d, output: p });
            stages.push(Stage::Readout { input: p, skip: 0, output: config.out_dim });
            None
        }
        VariantKind::ClassicalQuantum => {
            let q = config.compressed_qubits;
            if q == 0 {
                return Err(Error::invalid("compressed register needs at least one qubit"));
            }
            let width = 1usize << q;
            stages.push(Stage::AppendBias { input: d });
            stages.push(Stage::LinearCompressor { input: d + 1, output: width });
            stages.push(Stage::AmplitudeEncode { input: width, qubits: q });
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0xc0de_c0de_0000_0002);
            let scale = 1.0 / ((d + 1) as f64).sqrt();
            compressor = Some(DMatrix::from_fn(width, d + 1, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                z * scale
            }));
            Some(quantum_tail(&mut stages, q, if res { width } else { 0 })?)
        }
        VariantKind::QuantumClassical => {
            let q = qubits_for(d + 1);
            stages.push(Stage::AppendBias { input: d });
            stages.push(Stage::AmplitudeEncode { input: d + 1, qubits: q });
            Some(quantum_tail(&mut stages, q, if res { d } else { 0 })?)
        }
        VariantKind::SpdEnhancedHybrid => {
            let p = poly_len(d);
            let vec_len = p * (p + 1) / 2;
            let q = qubits_for(vec_len);
            stages.push(Stage::PolyExpand { input: d, output: p });
            stages.push(Stage::SpdFromFeatures { dim: p, epsilon: config.epsilon });
            stages.push(Stage::SymLog { dim: p });
            stages.push(Stage::VectorizeUpper { dim: p });
            stages.push(Stage::AmplitudeEncode { input: vec_len, qubits: q });
            Some(quantum_tail(&mut stages, q, if res { p - 1 } else { 0 })?)
        }
    };
    type_check(&stages)?;
    Ok(ModelVariant { kind, config: config.clone(), stages, circuit, compressor })
}

fn type_check(stages: &[Stage]) -> Result<()> {
    for pair in stages.windows(2) {
        let out = pair[0].output();
        let expected = match pair[1] {
            // the encoder accepts any length up to its register size
            Stage::AmplitudeEncode { input, .. } => Shape::Vector(input),
            ref s => s.input(),
        };
        if out != expected {
            return Err(Error::invalid(format!(
                "stage {:?} produces {out:?} but {:?} expects {expected:?}",
                pair[0], pair[1]
            )));
        }
        if let Stage::AmplitudeEncode { input, qubits } = pair[1] {
            if input > (1usize << qubits) {
                return Err(Error::invalid(format!("{input} features do not fit {qubits} qubits")));
            }
        }
    }
    Ok(())
}
