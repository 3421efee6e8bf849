use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn geoqml(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geoqml")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn matrix(v: &Value) -> Vec<Vec<f64>> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|r| r.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect())
        .collect()
}

fn single_line_diagnostic(out: &Output) {
    let err = String::from_utf8_lossy(&out.stderr);
    let lines: Vec<&str> = err.lines().collect();
    assert_eq!(lines.len(), 1, "{err}");
    assert!(lines[0].starts_with("geoqml: error["), "{err}");
}

#[test]
fn identical_spd_files_are_at_distance_zero() {
    let dir = tempfile::tempdir().unwrap();
    let a = write(dir.path(), "a.csv", "# spd dim=2\n2,0.5\n0.5,1\n");
    let b = write(dir.path(), "b.csv", "# spd dim=2\n2,0.5\n0.5,1\n");
    let out = geoqml(&["manifold", "distances", &a, &b]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let m = geoqml::io::read_matrices(&text).unwrap();
    assert!(m[0].amax() < 1e-12);
}

#[test]
fn commuting_pair_gives_equal_ai_and_le_distances() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.csv", "# spd dim=3\n2,0,0\n0,3,0\n0,0,0.5\n# spd dim=3\n1,0,0\n0,7,0\n0,0,4\n");
    let ai = geoqml(&["manifold", "distances", &f, "--metric", "ai"]);
    let le = geoqml(&["manifold", "distances", &f, "--metric", "le"]);
    let ai = geoqml::io::read_matrices(&String::from_utf8(ai.stdout).unwrap()).unwrap();
    let le = geoqml::io::read_matrices(&String::from_utf8(le.stdout).unwrap()).unwrap();
    // independent oracle: for diagonal matrices both reduce to ‖log d₁ − log d₂‖
    let expected = ((2.0f64).ln().powi(2) + (3.0f64 / 7.0).ln().powi(2) + (0.5f64 / 4.0).ln().powi(2)).sqrt();
    assert!((ai[0][(0, 1)] - expected).abs() < 1e-12);
    assert!((ai[0][(0, 1)] - le[0][(0, 1)]).abs() < 1e-12);
}

#[test]
fn manifold_mean_and_grassmann() {
    let dir = tempfile::tempdir().unwrap();
    let f = write(dir.path(), "p.csv", "# spd dim=2\n4,0\n0,1\n# spd dim=2\n1,0\n0,9\n");
    let out = geoqml(&["manifold", "mean", &f]);
    assert!(out.status.success());
    let mean = geoqml::io::read_spd(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!((mean[0].as_matrix()[(0, 0)] - 2.0).abs() < 1e-9);
    assert!((mean[0].as_matrix()[(1, 1)] - 3.0).abs() < 1e-9);

    let g = write(dir.path(), "g.csv", "# subspace n=2 k=1\n1\n0\n# subspace n=2 k=1\n1\n1\n");
    let out = geoqml(&["manifold", "distances", &g, "--metric", "grassmann"]);
    let m = geoqml::io::read_matrices(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert!((m[0][(0, 1)] - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
}

#[test]
fn manifold_error_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let out = geoqml(&["manifold", "distances", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    single_line_diagnostic(&out);

    let bad = write(dir.path(), "bad.csv", "# spd dim=2\n1,0\n0,abc\n");
    let out = geoqml(&["manifold", "distances", &bad]);
    assert_eq!(out.status.code(), Some(2));
    single_line_diagnostic(&out);

    let non_spd = write(dir.path(), "neg.csv", "# spd dim=2\n1,2\n2,1\n");
    let out = geoqml(&["manifold", "distances", &non_spd]);
    assert_eq!(out.status.code(), Some(3));
    single_line_diagnostic(&out);
}

#[test]
fn bell_circuit_entanglement_distance() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "bell.txt", "qubits 2\nparams 0\nH q0\nCNOT q0 q1\n");
    let v = stdout_json(&geoqml(&["quantum", &c, "--entanglement-distance"]));
    let d = v["results"]["entanglement_distance"].as_f64().unwrap();
    assert!((d - (2.0 - 2f64.sqrt()).sqrt()).abs() < 1e-4);
    assert_eq!(v["schema_version"], 1);
    assert!(v["input"]["circuit"].as_str().unwrap().contains("CNOT q0 q1"));
}

#[test]
fn rz_only_circuit_has_zero_metric() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "rz.txt", "qubits 2\nparams 2\nRZ q0 p0\nRZ q1 p1\n");
    let v = stdout_json(&geoqml(&["quantum", &c, "--fs-metric", "--theta", "0.4,-1.3"]));
    let g = matrix(&v["results"]["fs_metric"]);
    assert!(g.iter().flatten().all(|x| x.abs() < 1e-12));
}

#[test]
fn qfi_is_four_times_fs_metric() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(
        dir.path(),
        "c.txt",
        "qubits 2\nparams 3\nRY q0 p0\nCNOT q0 q1\nRX q1 p1\nRZ q0 p2\nRY q1 p2\n",
    );
    let v = stdout_json(&geoqml(&["quantum", &c, "--fs-metric", "--qfi", "--qgt", "--theta", "0.3,-0.8,1.1"]));
    let g = matrix(&v["results"]["fs_metric"]);
    let f = matrix(&v["results"]["qfi"]);
    let re = matrix(&v["results"]["qgt"]["re"]);
    for i in 0..3 {
        for j in 0..3 {
            assert!((f[i][j] - 4.0 * g[i][j]).abs() < 1e-6);
            assert_eq!(re[i][j], g[i][j]);
        }
    }
}

#[test]
fn tangent_rank_report() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.txt", "qubits 2\nparams 4\nRY q0 p0\nRZ q0 p1\nRY q1 p2\nRZ q1 p3\n");
    let v = stdout_json(&geoqml(&["quantum", &c, "--tangent-rank", "--draws", "5", "--seed", "3"]));
    let per_draw = v["results"]["tangent_rank"]["per_draw"].as_array().unwrap();
    assert_eq!(per_draw.len(), 5);
    assert!(per_draw.iter().all(|r| r.as_u64().unwrap() <= 4));
}

#[test]
fn quantum_parse_error_reports_line() {
    let dir = tempfile::tempdir().unwrap();
    let c = write(dir.path(), "c.txt", "qubits 1\nparams 1\nRX q0 p0\nRW q0 p0\n");
    let out = geoqml(&["quantum", &c, "--fs-metric"]);
    assert_eq!(out.status.code(), Some(2));
    single_line_diagnostic(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 4"));

    let out = geoqml(&["quantum", &c]);
    assert_eq!(out.status.code(), Some(2));
}

const TINY: [&str; 14] = [
    "--set", "n_train=24", "--set", "n_test=8", "--set", "in_dim=2", "--set", "out_dim=3", "--set", "layers=1",
    "--set", "compressed_qubits=2", "--set", "epochs=2",
];

#[test]
fn bench_report_structure_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for p in [&a, &b] {
        let mut args = vec!["bench", "--seed", "5", "-o", p.to_str().unwrap()];
        args.extend(TINY);
        let out = geoqml(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ra: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    let rb: Value = serde_json::from_str(&fs::read_to_string(&b).unwrap()).unwrap();
    assert_eq!(ra["body"], rb["body"]);
    let names: Vec<&str> = ra["body"]["variants"].as_array().unwrap().iter().map(|v| v["variant"].as_str().unwrap()).collect();
    assert_eq!(names, ["classical_only", "classical_quantum", "quantum_classical", "spd_enhanced_hybrid"]);
    assert_eq!(ra["body"]["seed"], 5);
    assert_eq!(ra["body"]["config_hash"].as_str().unwrap().len(), 64);

    let text = fs::read_to_string(&a).unwrap();
    let report = geoqml::pipeline::BenchReport::from_json(&text).unwrap();
    assert_eq!(report.to_json(), text);
}

#[test]
fn bench_table_row_order() {
    let mut args = vec!["bench", "--table"];
    args.extend(TINY);
    let out = geoqml(&args);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let labels: Vec<&str> = text.lines().skip(1).map(|l| l.split("  ").next().unwrap().trim()).collect();
    assert_eq!(
        labels,
        ["Classical (No Quantum)", "Classical-Quantum Hybrid", "Quantum-Classical Hybrid", "SPD-Enhanced Hybrid"]
    );
}

#[test]
fn bench_config_file_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bench.cfg", "# tiny run\nn_train = 16\nn_test = 4\nin_dim = 2\nout_dim = 2\nlayers = 1\ncompressed_qubits = 2\nepochs = 1\n");
    let out = geoqml(&["bench", "--config", &cfg]);
    let v = stdout_json(&out);
    assert_eq!(v["body"]["config"]["n_train"], 16);

    let bad = write(dir.path(), "bad.cfg", "n_train = 16\nwat = 1\n");
    let out = geoqml(&["bench", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    single_line_diagnostic(&out);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    let out = geoqml(&["bench", "--set", "eta=0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dataset_command_is_deterministic() {
    let a = geoqml(&["dataset", "--samples", "5", "--in-dim", "3", "--out-dim", "2", "--seed", "4"]);
    let b = geoqml(&["dataset", "--samples", "5", "--in-dim", "3", "--out-dim", "2", "--seed", "4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let ds = geoqml::pipeline::Dataset::read_csv(text.as_bytes(), geoqml::pipeline::Split::Train).unwrap();
    assert_eq!((ds.len(), ds.in_dim()), (5, 3));

    let blobs = geoqml(&["dataset", "--samples", "6", "--in-dim", "2", "--classes", "3"]);
    assert!(String::from_utf8(blobs.stdout).unwrap().contains("label"));
    assert_eq!(geoqml(&["dataset", "--in-dim", "0"]).status.code(), Some(2));
}
