//! Pure and mixed quantum states, fidelities and state-space distances.
//!
//! Conventions:
//! - qubit 0 is the most significant bit of a basis index, so `|q0 q1 …⟩`
//!   reads left to right;
//! - fidelity between pure states is the squared overlap `|⟨ψ|φ⟩|²`;
//! - the Bures distance uses the root fidelity `Tr√(√ρ σ √ρ)`, which is
//!   `|⟨ψ|φ⟩|` (not squared) for pure states.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::circuit::ParamCircuit;
use crate::error::{check_dim, Error, Result};
use crate::spd::FeatureVector;

pub const NORM_TOL: f64 = 1e-10;
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues below this are treated as zero before taking square roots.
pub const EIGEN_CLAMP: f64 = 1e-12;

/// Below this second Schmidt coefficient a two-qubit state counts as a
/// product state.
pub const PRODUCT_TOL: f64 = 1e-9;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

fn qubits_for_len(len: usize) -> Result<usize> {
    if len == 0 || !len.is_power_of_two() {
        return Err(Error::InvalidState(format!("length {len} is not a power of two")));
    }
    Ok(len.trailing_zeros() as usize)
}

/// Normalized pure state on `num_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: CVector,
}

impl StateVector {
    pub fn new(amps: CVector) -> Result<Self> {
        let num_qubits = qubits_for_len(amps.len())?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { num_qubits, amps })
    }

    /// Normalizes `amps`; fails on the zero vector.
    pub fn normalized(amps: CVector) -> Result<Self> {
        let num_qubits = qubits_for_len(amps.len())?;
        let norm = amps.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite);
        }
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector cannot be normalized".into()));
        }
        Ok(Self { num_qubits, amps: amps / Complex64::from(norm) })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::new(CVector::from_iterator(values.len(), values.iter().map(|v| Complex64::from(*v))))
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::invalid(format!("basis index {index} out of range for {num_qubits} qubits")));
        }
        let mut amps = CVector::zeros(dim);
        amps[index] = Complex64::from(1.0);
        Ok(Self { num_qubits, amps })
    }

    pub fn zero(num_qubits: usize) -> Self {
        Self::basis(num_qubits, 0).expect("index 0 is always valid")
    }

    pub(crate) fn from_raw(num_qubits: usize, amps: CVector) -> Self {
        debug_assert_eq!(amps.len(), 1 << num_qubits);
        Self { num_qubits, amps }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amps
    }

    pub fn into_amplitudes(self) -> CVector {
        self.amps
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self.amps.dotc(&other.amps))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn with_phase(&self, alpha: f64) -> StateVector {
        Self::from_raw(self.num_qubits, &self.amps * Complex64::from_polar(1.0, alpha))
    }

    pub fn tensor(&self, other: &StateVector) -> StateVector {
        Self::from_raw(self.num_qubits + other.num_qubits, self.amps.kronecker(&other.amps))
    }
}

/// Density operator: Hermitian, unit trace, positive semidefinite.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    rho: CMatrix,
}

fn max_hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::from(0.5)
}

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), m.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Square root of a Hermitian PSD matrix with tiny eigenvalues clamped.
fn psd_sqrt(m: &CMatrix) -> CMatrix {
    let (values, vectors) = hermitian_eigen(m);
    let mut scaled = vectors.clone();
    for (j, l) in values.iter().enumerate() {
        let s = if *l < EIGEN_CLAMP { 0.0 } else { l.sqrt() };
        scaled.column_mut(j).scale_mut(s);
    }
    hermitize(&(scaled * vectors.adjoint()))
}

impl DensityMatrix {
    pub fn new(rho: CMatrix) -> Result<Self> {
        check_dim(rho.nrows(), rho.ncols())?;
        let num_qubits = qubits_for_len(rho.nrows())?;
        if rho.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        let dev = max_hermitian_deviation(&rho);
        if dev > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {dev:e})")));
        }
        let rho = hermitize(&rho);
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let (values, _) = hermitian_eigen(&rho);
        if values[0] < -HERMITIAN_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", values[0])));
        }
        Ok(Self { num_qubits, rho })
    }

    pub fn from_pure(psi: &StateVector) -> Self {
        let a = psi.amplitudes();
        Self { num_qubits: psi.num_qubits(), rho: a * a.adjoint() }
    }

    /// Diagonal (classical) state with the given probabilities.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        let diag = CVector::from_iterator(p.len(), p.iter().map(|v| Complex64::from(*v)));
        Self::new(CMatrix::from_diagonal(&diag))
    }

    pub fn maximally_mixed(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        Self {
            num_qubits,
            rho: CMatrix::identity(dim, dim) * Complex64::from(1.0 / dim as f64),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.rho
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        Self {
            num_qubits: self.num_qubits + other.num_qubits,
            rho: self.rho.kronecker(&other.rho),
        }
    }

    /// `U ρ U†`.
    pub fn conjugate_by(&self, u: &CMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim(), u.nrows())?;
        check_dim(self.dim(), u.ncols())?;
        Ok(Self {
            num_qubits: self.num_qubits,
            rho: hermitize(&(u * &self.rho * u.adjoint())),
        })
    }
}

/// Single-qubit Bloch vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlochPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochPoint {
    pub fn radius(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Zero-pads `v` to the next power of two and divides by its norm.
pub fn amplitude_encode(v: &FeatureVector) -> Result<StateVector> {
    if v.is_empty() {
        return Err(Error::Empty);
    }
    let dim = v.len().next_power_of_two();
    let mut amps = CVector::zeros(dim);
    for (a, x) in amps.iter_mut().zip(v.as_slice()) {
        *a = Complex64::from(*x);
    }
    StateVector::normalized(amps)
        .map_err(|_| Error::InvalidState("cannot amplitude-encode a zero vector".into()))
}

/// `|⟨ψ|φ⟩|²`.
pub fn fidelity_pure(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm_sqr().min(1.0))
}

/// Geodesic (angle) distance on projective Hilbert space,
/// `arccos |⟨ψ|φ⟩|`.
pub fn fubini_study_distance(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    Ok(psi.inner(phi)?.norm().clamp(0.0, 1.0).acos())
}

/// Root fidelity `Tr√(√ρ σ √ρ)`.
pub fn root_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let s = psd_sqrt(&rho.rho);
    let m = &s * &sigma.rho * &s;
    let (values, _) = hermitian_eigen(&m);
    let f: f64 = values.iter().filter(|l| **l >= EIGEN_CLAMP).map(|l| l.sqrt()).sum();
    Ok(f.min(1.0))
}

/// `√(2(1 − Tr√(√ρ σ √ρ)))`.
pub fn bures_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let f = root_fidelity(rho, sigma)?;
    Ok((2.0 * (1.0 - f)).max(0.0).sqrt())
}

/// Pure-state form of the Bures distance, `√(2(1 − |⟨ψ|φ⟩|))`.
pub fn bures_distance_pure(psi: &StateVector, phi: &StateVector) -> Result<f64> {
    let overlap = psi.inner(phi)?.norm().min(1.0);
    Ok((2.0 * (1.0 - overlap)).max(0.0).sqrt())
}

pub fn density_from_pure(psi: &StateVector) -> DensityMatrix {
    DensityMatrix::from_pure(psi)
}

fn validate_qubit_set(set: &[usize], num_qubits: usize) -> Result<Vec<usize>> {
    if set.is_empty() {
        return Err(Error::invalid("qubit set is empty"));
    }
    let mut sorted = set.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != set.len() {
        return Err(Error::invalid("qubit set contains duplicates"));
    }
    if let Some(&q) = sorted.iter().find(|&&q| q >= num_qubits) {
        return Err(Error::invalid(format!("qubit {q} out of range for {num_qubits} qubits")));
    }
    Ok(sorted)
}

/// Splits a basis index into (kept-subsystem index, traced-subsystem index).
/// Both sub-indices keep qubit 0 as the most significant bit.
fn split_index(i: usize, num_qubits: usize, keep: &[usize]) -> (usize, usize) {
    let mut k = 0;
    let mut t = 0;
    for q in 0..num_qubits {
        let bit = (i >> (num_qubits - 1 - q)) & 1;
        if keep.binary_search(&q).is_ok() {
            k = (k << 1) | bit;
        } else {
            t = (t << 1) | bit;
        }
    }
    (k, t)
}

/// Reduced state on the qubits in `keep`, ordered by ascending qubit index.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let n = rho.num_qubits();
    let keep = validate_qubit_set(keep, n)?;
    let kdim = 1usize << keep.len();
    let split: Vec<(usize, usize)> = (0..rho.dim()).map(|i| split_index(i, n, &keep)).collect();
    let mut out = CMatrix::zeros(kdim, kdim);
    for (i, &(ki, ti)) in split.iter().enumerate() {
        for (j, &(kj, tj)) in split.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += rho.rho[(i, j)];
            }
        }
    }
    Ok(DensityMatrix { num_qubits: keep.len(), rho: hermitize(&out) })
}

pub fn bloch_coordinates(rho: &DensityMatrix) -> Result<BlochPoint> {
    if rho.num_qubits() != 1 {
        return Err(Error::invalid(format!(
            "Bloch coordinates need one qubit, got {}",
            rho.num_qubits()
        )));
    }
    let m = &rho.rho;
    Ok(BlochPoint {
        x: 2.0 * m[(0, 1)].re,
        y: -2.0 * m[(0, 1)].im,
        z: m[(0, 0)].re - m[(1, 1)].re,
    })
}

/// Schmidt coefficients across the cut (`part`, rest), descending.
pub fn schmidt_coefficients(psi: &StateVector, part: &[usize]) -> Result<Vec<f64>> {
    let n = psi.num_qubits();
    if n < 2 {
        return Err(Error::invalid("Schmidt decomposition needs at least two qubits"));
    }
    let part = validate_qubit_set(part, n)?;
    if part.len() == n {
        return Err(Error::invalid("bipartition must leave a non-empty complement"));
    }
    let rows = 1usize << part.len();
    let cols = 1usize << (n - part.len());
    let mut m = CMatrix::zeros(rows, cols);
    for (i, a) in psi.amplitudes().iter().enumerate() {
        let (r, c) = split_index(i, n, &part);
        m[(r, c)] = *a;
    }
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

fn require_two_qubits(psi: &StateVector) -> Result<()> {
    if psi.num_qubits() != 2 {
        return Err(Error::invalid(format!(
            "nearest-product distance is defined for two qubits, got {}",
            psi.num_qubits()
        )));
    }
    Ok(())
}

/// Bures distance from a two-qubit pure state to the closest product state.
///
/// The best product overlap is the largest Schmidt coefficient `s₁`, so the
/// distance is `√(2(1 − s₁))`, evaluated as `√(2 s₂² / (1 + s₁))` to avoid
/// cancellation.
pub fn distance_to_nearest_product(psi: &StateVector) -> Result<f64> {
    require_two_qubits(psi)?;
    let s = schmidt_coefficients(psi, &[0])?;
    if s[1] < PRODUCT_TOL {
        return Ok(0.0);
    }
    Ok((2.0 * s[1] * s[1] / (1.0 + s[0])).sqrt())
}

fn bloch_ket(theta: f64, phi: f64) -> [Complex64; 2] {
    [
        Complex64::from((theta / 2.0).cos()),
        Complex64::from_polar((theta / 2.0).sin(), phi),
    ]
}

fn product_overlap(psi: &StateVector, p: &[f64; 4]) -> f64 {
    let a = bloch_ket(p[0], p[1]);
    let b = bloch_ket(p[2], p[3]);
    let amps = psi.amplitudes();
    let mut acc = Complex64::from(0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += (a[i] * b[j]).conj() * amps[2 * i + j];
        }
    }
    acc.norm()
}

/// Same quantity as [`distance_to_nearest_product`], found by maximizing
/// the overlap with `|a⟩⊗|b⟩` over Bloch angles: a coarse grid followed by
/// a shrinking-step pattern search. Independent of the Schmidt route.
pub fn nearest_product_by_search(psi: &StateVector) -> Result<f64> {
    require_two_qubits(psi)?;
    use std::f64::consts::PI;
    const GRID: usize = 12;
    let thetas: Vec<f64> = (0..=GRID).map(|i| PI * i as f64 / GRID as f64).collect();
    let phis: Vec<f64> = (0..GRID).map(|i| 2.0 * PI * i as f64 / GRID as f64).collect();
    let mut best = [0.0; 4];
    let mut best_val = f64::NEG_INFINITY;
    for &ta in &thetas {
        for &pa in &phis {
            for &tb in &thetas {
                for &pb in &phis {
                    let p = [ta, pa, tb, pb];
                    let v = product_overlap(psi, &p);
                    if v > best_val {
                        best_val = v;
                        best = p;
                    }
                }
            }
        }
    }
    let mut step = PI / GRID as f64;
    while step > 1e-10 {
        let mut improved = false;
        for k in 0..4 {
            for dir in [1.0, -1.0] {
                let mut trial = best;
                trial[k] += dir * step;
                let v = product_overlap(psi, &trial);
                if v > best_val {
                    best_val = v;
                    best = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok((2.0 * (1.0 - best_val.min(1.0))).max(0.0).sqrt())
}

/// Fidelity kernel `|⟨U φ(v1) | U φ(v2)⟩|²` with amplitude-encoded inputs.
pub fn quantum_kernel(
    v1: &FeatureVector,
    v2: &FeatureVector,
    circuit: &ParamCircuit,
    theta: &[f64],
) -> Result<f64> {
    let a = circuit.apply(theta, &amplitude_encode(v1)?)?;
    let b = circuit.apply(theta, &amplitude_encode(v2)?)?;
    fidelity_pure(&a, &b)
}

/// Gram matrix of [`quantum_kernel`] over a set of inputs.
pub fn kernel_gram(
    inputs: &[FeatureVector],
    circuit: &ParamCircuit,
    theta: &[f64],
) -> Result<DMatrix<f64>> {
    let states = inputs
        .iter()
        .map(|v| circuit.apply(theta, &amplitude_encode(v)?))
        .collect::<Result<Vec<_>>>()?;
    let n = states.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        gram[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let k = fidelity_pure(&states[i], &states[j])?;
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
    }
    Ok(gram)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, SQRT_2};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn plus() -> StateVector {
        StateVector::from_real(&[FRAC_1_SQRT_2, FRAC_1_SQRT_2]).unwrap()
    }

    fn bell() -> StateVector {
        StateVector::from_real(&[FRAC_1_SQRT_2, 0.0, 0.0, FRAC_1_SQRT_2]).unwrap()
    }

    #[test]
    fn encoding_pads_and_normalizes() {
        let s = amplitude_encode(&FeatureVector::from_slice(&[1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(s, StateVector::zero(1));
        let s = amplitude_encode(&FeatureVector::from_slice(&[3.0, 4.0]).unwrap()).unwrap();
        assert_abs_diff_eq!(s.amplitudes()[0].re, 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitudes()[1].re, 0.8, epsilon = 1e-15);
        let s = amplitude_encode(&FeatureVector::from_slice(&[1.0, 1.0, 1.0]).unwrap()).unwrap();
        assert_eq!(s.num_qubits(), 2);
        let r = 1.0 / 3f64.sqrt();
        for (a, e) in s.amplitudes().iter().zip([r, r, r, 0.0]) {
            assert_abs_diff_eq!(a.re, e, epsilon = 1e-15);
        }
        assert!(amplitude_encode(&FeatureVector::from_slice(&[0.0, 0.0]).unwrap()).is_err());
    }

    #[test]
    fn state_validation() {
        assert!(StateVector::from_real(&[1.0, 1.0]).is_err());
        assert!(StateVector::from_real(&[1.0, 0.0, 0.0]).is_err());
        assert!(StateVector::normalized(CVector::zeros(2)).is_err());
    }

    #[test]
    fn fidelities_and_fs_distance() {
        let zero = StateVector::zero(1);
        let one = StateVector::basis(1, 1).unwrap();
        assert_abs_diff_eq!(fidelity_pure(&zero, &zero).unwrap(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_pure(&zero, &one).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_pure(&zero, &plus()).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(fubini_study_distance(&zero, &zero.with_phase(0.7)).unwrap(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(fubini_study_distance(&zero, &one).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(fubini_study_distance(&zero, &plus()).unwrap(), FRAC_PI_4, epsilon = 1e-15);
        assert!(fidelity_pure(&zero, &bell()).is_err());
    }

    #[test]
    fn bures_special_cases() {
        let zero = density_from_pure(&StateVector::zero(1));
        let one = density_from_pure(&StateVector::basis(1, 1).unwrap());
        assert_abs_diff_eq!(bures_distance(&zero, &zero).unwrap(), 0.0, epsilon = 1e-7);
        assert_abs_diff_eq!(bures_distance(&zero, &one).unwrap(), SQRT_2, epsilon = 1e-12);
        let mixed = DensityMatrix::maximally_mixed(1);
        assert_abs_diff_eq!(bures_distance(&mixed, &mixed).unwrap(), 0.0, epsilon = 1e-7);
        assert!(bures_distance(&zero, &DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn density_validation() {
        let not_herm = CMatrix::from_row_slice(2, 2, &[c(0.5, 0.0), c(0.1, 0.1), c(0.1, 0.1), c(0.5, 0.0)]);
        assert!(DensityMatrix::new(not_herm).is_err());
        assert!(DensityMatrix::from_probabilities(&[0.6, 0.6]).is_err());
        assert!(DensityMatrix::from_probabilities(&[1.2, -0.2]).is_err());
        assert!(DensityMatrix::from_probabilities(&[0.25, 0.75]).is_ok());
    }

    #[test]
    fn pure_projectors() {
        let r = density_from_pure(&StateVector::zero(1));
        assert_eq!(r.matrix()[(0, 0)], c(1.0, 0.0));
        assert_eq!(r.matrix()[(1, 1)], c(0.0, 0.0));
        let p = density_from_pure(&plus());
        for v in p.matrix().iter() {
            assert_abs_diff_eq!(v.re, 0.5, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(p.purity(), 1.0, epsilon = 1e-14);
        let sq = p.matrix() * p.matrix();
        assert!((sq - p.matrix()).norm() < 1e-10);
    }

    #[test]
    fn partial_trace_cases() {
        let a = density_from_pure(&plus());
        let b = DensityMatrix::from_probabilities(&[0.3, 0.7]).unwrap();
        let ab = a.tensor(&b);
        let ra = partial_trace(&ab, &[0]).unwrap();
        assert!((ra.matrix() - a.matrix()).norm() < 1e-14);
        let rb = partial_trace(&ab, &[1]).unwrap();
        assert!((rb.matrix() - b.matrix()).norm() < 1e-14);
        let bell_marg = partial_trace(&density_from_pure(&bell()), &[0]).unwrap();
        assert!((bell_marg.matrix() - DensityMatrix::maximally_mixed(1).matrix()).norm() < 1e-14);
        assert!(partial_trace(&ab, &[]).is_err());
        assert!(partial_trace(&ab, &[2]).is_err());
        assert!(partial_trace(&ab, &[0, 0]).is_err());
    }

    #[test]
    fn bloch_points() {
        let z = bloch_coordinates(&density_from_pure(&StateVector::zero(1))).unwrap();
        assert_eq!((z.x, z.y, z.z), (0.0, 0.0, 1.0));
        let m = bloch_coordinates(&DensityMatrix::maximally_mixed(1)).unwrap();
        assert_abs_diff_eq!(m.radius(), 0.0, epsilon = 1e-15);
        let p = bloch_coordinates(&density_from_pure(&plus())).unwrap();
        assert_abs_diff_eq!(p.x, 1.0, epsilon = 1e-15);
        let plus_i = StateVector::new(CVector::from_vec(vec![c(FRAC_1_SQRT_2, 0.0), c(0.0, FRAC_1_SQRT_2)])).unwrap();
        let y = bloch_coordinates(&density_from_pure(&plus_i)).unwrap();
        assert_abs_diff_eq!(y.y, 1.0, epsilon = 1e-15);
        for p in [0.0, 0.2, 0.5, 0.9] {
            let b = bloch_coordinates(&DensityMatrix::from_probabilities(&[p, 1.0 - p]).unwrap()).unwrap();
            assert_eq!((b.x, b.y), (0.0, 0.0));
            assert_abs_diff_eq!(b.z, 2.0 * p - 1.0, epsilon = 1e-15);
        }
        assert!(bloch_coordinates(&DensityMatrix::maximally_mixed(2)).is_err());
    }

    #[test]
    fn schmidt_and_product_distance() {
        let prod = plus().tensor(&StateVector::zero(1));
        let s = schmidt_coefficients(&prod, &[0]).unwrap();
        assert_abs_diff_eq!(s[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(s[1], 0.0, epsilon = 1e-14);
        let s = schmidt_coefficients(&bell(), &[1]).unwrap();
        assert_abs_diff_eq!(s[0], FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!(s[1], FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_eq!(distance_to_nearest_product(&prod).unwrap(), 0.0);
        assert_abs_diff_eq!(distance_to_nearest_product(&bell()).unwrap(), (2.0 - SQRT_2).sqrt(), epsilon = 1e-12);
        assert!(schmidt_coefficients(&StateVector::zero(1), &[0]).is_err());
        assert!(schmidt_coefficients(&bell(), &[0, 1]).is_err());
        assert!(distance_to_nearest_product(&StateVector::zero(3)).is_err());
    }

    #[test]
    fn product_distance_grows_with_entanglement() {
        let mut last = -1.0;
        for k in 0..=20 {
            let t = FRAC_PI_4 * k as f64 / 20.0;
            let psi = StateVector::from_real(&[t.cos(), 0.0, 0.0, t.sin()]).unwrap();
            let d = distance_to_nearest_product(&psi).unwrap();
            assert!(d > last || (k == 0 && d == 0.0));
            let searched = nearest_product_by_search(&psi).unwrap();
            assert_abs_diff_eq!(d, searched, epsilon = 1e-4);
            last = d;
        }
    }
}
