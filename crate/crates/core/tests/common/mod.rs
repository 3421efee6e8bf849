#![allow(dead_code)]

use geoqml::circuit::{Gate, ParamCircuit};
use geoqml::grassmann::{orthonormalize, Subspace};
use geoqml::spd::SpdMatrix;
use geoqml::state::{CVector, StateVector};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// `B Bᵀ + 0.1 I` with Gaussian `B`: well conditioned but far from diagonal.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> SpdMatrix {
    let b = gaussian_matrix(rng, n, n);
    SpdMatrix::new(&b * b.transpose() + DMatrix::identity(n, n) * 0.1).unwrap()
}

/// Gaussian matrix shifted away from singularity.
pub fn random_invertible(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let a = gaussian_matrix(rng, n, n);
        if a.determinant().abs() > 1e-2 {
            return a;
        }
    }
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, k: usize) -> DMatrix<f64> {
    orthonormalize(&gaussian_matrix(rng, k, k)).unwrap().basis().clone()
}

pub fn random_subspace(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Subspace {
    orthonormalize(&gaussian_matrix(rng, n, k)).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, qubits: usize) -> StateVector {
    let amps = CVector::from_fn(1 << qubits, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    StateVector::normalized(amps).unwrap()
}

pub fn random_theta(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect()
}

/// Random mix of rotations, Hadamards and CNOTs; every parameter is used
/// at least once and some are shared between gates.
pub fn random_circuit(rng: &mut ChaCha8Rng, qubits: usize, params: usize, extra_gates: usize) -> ParamCircuit {
    let mut c = ParamCircuit::new(qubits, params).unwrap();
    let rotation = |rng: &mut ChaCha8Rng, q: usize, p: usize| match rng.random_range(0..3) {
        0 => Gate::rx(q, p),
        1 => Gate::ry(q, p),
        _ => Gate::rz(q, p),
    };
    for p in 0..params {
        let q = rng.random_range(0..qubits);
        c.push(rotation(rng, q, p)).unwrap();
        if qubits > 1 && rng.random_bool(0.5) {
            let a = rng.random_range(0..qubits);
            let b = (a + rng.random_range(1..qubits)) % qubits;
            c.push(Gate::cnot(a, b)).unwrap();
        }
    }
    for _ in 0..extra_gates {
        let q = rng.random_range(0..qubits);
        match rng.random_range(0..3) {
            0 => c.push(Gate::h(q)).unwrap(),
            1 if params > 0 => {
                let p = rng.random_range(0..params);
                c.push(rotation(rng, q, p)).unwrap()
            }
            _ if qubits > 1 => c.push(Gate::cnot(q, (q + 1) % qubits)).unwrap(),
            _ => c.push(Gate::h(q)).unwrap(),
        }
    }
    c
}
