use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

use geoqml::circuit::ParamCircuit;
use geoqml::geometry::{fs_metric, qfi_mixed, quantum_geometric_tensor, tangent_rank_sampled};
use geoqml::grassmann::dist_grassmann;
use geoqml::io::{read_spd, read_states, read_subspaces, write_matrix, write_spd, SCHEMA_VERSION};
use geoqml::pipeline::{run_bench, synth_blobs, synth_fem_dataset, BenchConfig};
use geoqml::spd::{dist_affine_invariant, dist_log_euclidean, karcher_mean, log_euclidean_mean};
use geoqml::state::{distance_to_nearest_product, schmidt_coefficients, DensityMatrix, StateVector};
use geoqml::Error;

use crate::{BenchArgs, DatasetArgs, DistanceArgs, MeanArgs, MeanMethod, Metric, QuantumArgs};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, message: String },
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_invariant_violation() => 3,
            CliError::Core(Error::Divergence { .. }) => 4,
            CliError::Core(
                Error::Parse { .. }
                | Error::Io(_)
                | Error::InvalidArgument(_)
                | Error::DimensionMismatch { .. }
                | Error::Empty
                | Error::Unsupported(_),
            ) => 2,
            CliError::Core(_) => 1,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::Core(e) => match e {
                Error::Parse { .. } => "parse",
                Error::Io(_) => "io",
                Error::Divergence { .. } => "divergence",
                Error::NotConverged { .. } => "not_converged",
                Error::Singular => "singular",
                e if e.is_invariant_violation() => "invariant",
                _ => "invalid_input",
            },
        }
    }

    /// One line, `geoqml: error[<kind>]: <message>`.
    pub fn diagnostic(&self) -> String {
        let message = match self {
            CliError::Core(e) => e.to_string(),
            CliError::Io { path, message } => format!("{}: {message}", path.display()),
            CliError::Usage(m) => m.clone(),
        };
        let flat = message.replace(['\n', '\r'], " ");
        format!("geoqml: error[{}]: {flat}", self.kind())
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Io { path: PathBuf::from("<stdout>"), message: e.to_string() })
        }
    }
}

fn pairwise<T>(points: &[T], dist: impl Fn(&T, &T) -> geoqml::Result<f64>) -> Result<DMatrix<f64>, CliError> {
    let n = points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = dist(&points[i], &points[j])?;
            m[(i, j)] = d;
            m[(j, i)] = d;
        }
    }
    Ok(m)
}

pub fn manifold_distances(args: &DistanceArgs) -> Result<ExitCode, CliError> {
    let mut texts = Vec::with_capacity(args.inputs.len());
    for p in &args.inputs {
        texts.push(read_text(p)?);
    }
    let (label, m) = match args.metric {
        Metric::Ai | Metric::Le => {
            let mut points = Vec::new();
            for t in &texts {
                points.extend(read_spd(t)?);
            }
            if args.metric == Metric::Ai {
                ("distance_ai", pairwise(&points, dist_affine_invariant)?)
            } else {
                ("distance_le", pairwise(&points, dist_log_euclidean)?)
            }
        }
        Metric::Grassmann => {
            let mut points = Vec::new();
            for t in &texts {
                points.extend(read_subspaces(t)?);
            }
            ("distance_grassmann", pairwise(&points, dist_grassmann)?)
        }
    };
    emit(args.output.as_deref(), &write_matrix(label, &m))?;
    Ok(ExitCode::SUCCESS)
}

pub fn manifold_mean(args: &MeanArgs) -> Result<ExitCode, CliError> {
    let mut points = Vec::new();
    for p in &args.inputs {
        points.extend(read_spd(&read_text(p)?)?);
    }
    let mean = match args.method {
        MeanMethod::Karcher => karcher_mean(&points, args.max_iter, args.tol)?,
        MeanMethod::LogEuclidean => log_euclidean_mean(&points)?,
    };
    emit(args.output.as_deref(), &write_spd(&[mean]))?;
    Ok(ExitCode::SUCCESS)
}

fn rows(m: &DMatrix<f64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| json!(m[(i, j)])).collect()))
            .collect(),
    )
}

fn amplitudes(s: &StateVector) -> Value {
    Value::Array(s.amplitudes().iter().map(|a| json!([a.re, a.im])).collect())
}

pub fn quantum(args: &QuantumArgs) -> Result<ExitCode, CliError> {
    let circuit = ParamCircuit::parse(&read_text(&args.circuit)?)?;
    let theta = args.theta.clone().unwrap_or_else(|| vec![0.0; circuit.num_params()]);
    if theta.len() != circuit.num_params() {
        return Err(CliError::Usage(format!(
            "--theta has {} values but the circuit declares {} parameters",
            theta.len(),
            circuit.num_params()
        )));
    }
    let input = match &args.state {
        Some(p) => read_states(&read_text(p)?)?
            .into_iter()
            .next()
            .ok_or(Error::Empty)?,
        None => StateVector::zero(circuit.num_qubits()),
    };
    if !(args.fs_metric || args.qfi || args.qgt || args.tangent_rank || args.entanglement_distance) {
        return Err(CliError::Usage(
            "choose at least one of --fs-metric, --qfi, --qgt, --tangent-rank, --entanglement-distance".into(),
        ));
    }
    let output_state = circuit.apply(&theta, &input)?;

    let mut echo = Map::new();
    echo.insert("circuit".into(), json!(circuit.to_text()));
    echo.insert("theta".into(), json!(theta));
    echo.insert("input_state".into(), amplitudes(&input));
    echo.insert("num_qubits".into(), json!(circuit.num_qubits()));
    echo.insert("num_params".into(), json!(circuit.num_params()));

    let mut results = Map::new();
    results.insert("output_state".into(), amplitudes(&output_state));
    if args.fs_metric {
        results.insert("fs_metric".into(), rows(fs_metric(&circuit, &theta, &input)?.as_matrix()));
    }
    if args.qfi {
        let family = |t: &[f64]| Ok(DensityMatrix::from_pure(&circuit.apply(t, &input)?));
        let (qfi, _) = qfi_mixed(family, &theta)?;
        results.insert("qfi".into(), rows(qfi.as_matrix()));
    }
    if args.qgt {
        let q = quantum_geometric_tensor(&circuit, &theta, &input)?;
        let m = q.as_matrix();
        results.insert(
            "qgt".into(),
            json!({ "re": rows(&m.map(|z| z.re)), "im": rows(&m.map(|z| z.im)) }),
        );
    }
    if args.tangent_rank {
        let report = tangent_rank_sampled(&circuit, &input, args.draws, args.seed, args.rank_threshold)?;
        results.insert(
            "tangent_rank".into(),
            json!({
                "draws": args.draws,
                "seed": args.seed,
                "threshold": args.rank_threshold,
                "per_draw": report.per_draw,
                "mean": report.mean,
            }),
        );
    }
    if args.entanglement_distance {
        let d = distance_to_nearest_product(&output_state)?;
        let s = schmidt_coefficients(&output_state, &[0])?;
        results.insert("entanglement_distance".into(), json!(d));
        results.insert("schmidt_coefficients".into(), json!(s));
    }

    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "input": Value::Object(echo),
        "results": Value::Object(results),
    });
    let mut text = serde_json::to_string_pretty(&report).expect("json value serializes");
    text.push('\n');
    emit(args.output.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

pub fn bench(args: &BenchArgs) -> Result<ExitCode, CliError> {
    let mut cfg = match &args.config {
        Some(p) => BenchConfig::parse(&read_text(p)?)?,
        None => BenchConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    for ov in &args.overrides {
        let (k, v) = ov
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{ov}`")))?;
        cfg.set(k.trim(), v.trim(), 0)?;
    }
    cfg.validate()?;
    let report = run_bench(&cfg)?;
    if args.output.is_some() || !args.table {
        emit(args.output.as_deref(), &report.to_json())?;
    }
    if args.table {
        emit(None, &report.table())?;
    }
    if report.any_diverged() {
        let which: Vec<String> = report
            .body
            .variants
            .iter()
            .filter_map(|v| v.diverged_at.map(|e| format!("{} at epoch {e}", v.variant)))
            .collect();
        let err = CliError::Core(Error::Divergence { epoch: report.body.variants.iter().find_map(|v| v.diverged_at).unwrap_or(0) });
        eprintln!("geoqml: error[divergence]: training diverged ({}); partial report written", which.join(", "));
        return Ok(ExitCode::from(err.exit_code()));
    }
    Ok(ExitCode::SUCCESS)
}

pub fn dataset(args: &DatasetArgs) -> Result<ExitCode, CliError> {
    let data = match args.classes {
        Some(k) => synth_blobs(args.seed, args.samples, args.in_dim, k, args.spread)?,
        None => synth_fem_dataset(args.seed, args.samples, args.in_dim, args.out_dim, args.noise)?,
    };
    let mut buf = Vec::new();
    data.write_csv(&mut buf)?;
    emit(args.output.as_deref(), &String::from_utf8(buf).expect("csv output is utf-8"))?;
    Ok(ExitCode::SUCCESS)
}
