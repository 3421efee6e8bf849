//! Information geometry of parametrized quantum states.
//!
//! For a family `θ ↦ |ψ(θ)⟩` the quantum geometric tensor is
//!
//! ```text
//! G_ij = ⟨∂_i ψ|∂_j ψ⟩ − ⟨∂_i ψ|ψ⟩⟨ψ|∂_j ψ⟩
//! ```
//!
//! Its real part is the Fubini-Study metric `g`, its imaginary part the Berry
//! curvature, and the quantum Fisher information of a pure family is `4g`.
//! Mixed families go through the symmetric logarithmic derivative instead.
//!
//! Derivatives default to central differences with step [`FD_STEP`]; an
//! exact generator-insertion Jacobian is available for circuits.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{apply_pauli, ParamCircuit};
use crate::error::{check_dim, Error, Result};
use crate::state::{hermitian_eigen, hermitize, CMatrix, CVector, DensityMatrix, StateVector};

pub const FD_STEP: f64 = 1e-5;
pub const METRIC_TOL: f64 = 1e-9;
pub const SLD_CUTOFF: f64 = 1e-12;
pub const DEFAULT_RANK_THRESHOLD: f64 = 1e-8;

/// Step used when recovering a metric from finite Bures distances.
const BURES_STEP: f64 = 1e-4;

/// Real symmetric positive semidefinite matrix over parameter space.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricTensor(DMatrix<f64>);

impl MetricTensor {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let asym = (&m - m.transpose()).amax();
        if asym > METRIC_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        let sym = (&m + m.transpose()) * 0.5;
        if sym.nrows() > 0 {
            let min = SymmetricEigen::new(sym.clone()).eigenvalues.min();
            if min < -METRIC_TOL {
                return Err(Error::NotPositiveDefinite(min));
            }
        }
        Ok(Self(sym))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = SymmetricEigen::new(self.0.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    pub fn scaled(&self, s: f64) -> MetricTensor {
        MetricTensor(&self.0 * s)
    }
}

/// Hermitian quantum geometric tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct QGTensor(CMatrix);

impl QGTensor {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        let dev = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if dev > METRIC_TOL {
            return Err(Error::NotSymmetric(dev));
        }
        let m = hermitize(&m);
        MetricTensor::new(m.map(|z| z.re))?;
        Ok(Self(m))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    /// Real part: the Fubini-Study metric.
    pub fn metric(&self) -> MetricTensor {
        MetricTensor(self.0.map(|z| z.re))
    }

    /// Imaginary part: the Berry curvature (antisymmetric).
    pub fn berry_curvature(&self) -> DMatrix<f64> {
        self.0.map(|z| z.im)
    }
}

/// Symmetric logarithmic derivatives, one Hermitian operator per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct SldSet(Vec<CMatrix>);

impl SldSet {
    pub fn operators(&self) -> &[CMatrix] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn offset(theta: &[f64], k: usize, h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    t[k] += h;
    t
}

/// Central-difference Jacobian `|∂_k ψ⟩` of an arbitrary state family.
/// The result is gauge dependent: it includes any θ-dependent global phase.
pub fn state_jacobian_of<F>(family: F, theta: &[f64]) -> Result<Vec<CVector>>
where
    F: Fn(&[f64]) -> Result<StateVector>,
{
    (0..theta.len())
        .map(|k| {
            let plus = family(&offset(theta, k, FD_STEP))?;
            let minus = family(&offset(theta, k, -FD_STEP))?;
            Ok((plus.amplitudes() - minus.amplitudes()) / Complex64::from(2.0 * FD_STEP))
        })
        .collect()
}

pub fn state_jacobian(circuit: &ParamCircuit, theta: &[f64], input: &StateVector) -> Result<Vec<CVector>> {
    circuit.apply(theta, input)?;
    state_jacobian_of(|t| circuit.apply(t, input), theta)
}

/// Exact Jacobian by inserting `−iG` after each rotation gate.
pub fn state_jacobian_exact(circuit: &ParamCircuit, theta: &[f64], input: &StateVector) -> Result<Vec<CVector>> {
    circuit.apply(theta, input)?;
    let n = circuit.num_qubits();
    let gates = circuit.gates();
    let mut jac = vec![CVector::zeros(input.dim()); circuit.num_params()];
    let mut prefix = input.amplitudes().clone();
    let minus_i = Complex64::new(0.0, -1.0);
    for (idx, g) in gates.iter().enumerate() {
        circuit.run(theta, &mut prefix, idx..idx + 1, None);
        if let (Some(p), Some(pauli)) = (g.param(), g.kind().generator()) {
            let mut branch = prefix.clone();
            apply_pauli(n, g.wires()[0], pauli, &mut branch);
            branch *= minus_i;
            circuit.run(theta, &mut branch, idx + 1..gates.len(), None);
            jac[p] += branch;
        }
    }
    Ok(jac)
}

/// Quantum geometric tensor from a state and its Jacobian.
pub fn qgt_from_jacobian(psi: &StateVector, jac: &[CVector]) -> Result<QGTensor> {
    let amps = psi.amplitudes();
    for d in jac {
        check_dim(amps.len(), d.len())?;
    }
    let proj: Vec<Complex64> = jac.iter().map(|d| amps.dotc(d)).collect();
    let m = jac.len();
    let g = CMatrix::from_fn(m, m, |i, j| jac[i].dotc(&jac[j]) - proj[i].conj() * proj[j]);
    QGTensor::new(g)
}

pub fn quantum_geometric_tensor_of<F>(family: F, theta: &[f64]) -> Result<QGTensor>
where
    F: Fn(&[f64]) -> Result<StateVector>,
{
    let psi = family(theta)?;
    let jac = state_jacobian_of(&family, theta)?;
    qgt_from_jacobian(&psi, &jac)
}

pub fn quantum_geometric_tensor(circuit: &ParamCircuit, theta: &[f64], input: &StateVector) -> Result<QGTensor> {
    quantum_geometric_tensor_of(|t| circuit.apply(t, input), theta)
}

/// QGT through the exact Jacobian; cross-check for the finite-difference path.
pub fn quantum_geometric_tensor_exact(
    circuit: &ParamCircuit,
    theta: &[f64],
    input: &StateVector,
) -> Result<QGTensor> {
    let psi = circuit.apply(theta, input)?;
    qgt_from_jacobian(&psi, &state_jacobian_exact(circuit, theta, input)?)
}

/// Fubini-Study metric, the real part of the QGT.
pub fn fs_metric(circuit: &ParamCircuit, theta: &[f64], input: &StateVector) -> Result<MetricTensor> {
    Ok(quantum_geometric_tensor(circuit, theta, input)?.metric())
}

/// Pure-state quantum Fisher information, `4 × fs_metric`.
pub fn qfi_pure(circuit: &ParamCircuit, theta: &[f64], input: &StateVector) -> Result<MetricTensor> {
    Ok(fs_metric(circuit, theta, input)?.scaled(4.0))
}

/// Quantum Fisher information of a density-matrix family via symmetric
/// logarithmic derivatives.
///
/// With `ρ = Σ λ_i |i⟩⟨i|`, each SLD has eigenbasis entries
/// `2⟨i|∂ρ|j⟩ / (λ_i + λ_j)` (zero when `λ_i + λ_j ≤ 1e-12`), and
/// `J_μν = Tr[ρ (L_μ L_ν + L_ν L_μ) / 2]`.
pub fn qfi_mixed<F>(family: F, theta: &[f64]) -> Result<(MetricTensor, SldSet)>
where
    F: Fn(&[f64]) -> Result<DensityMatrix>,
{
    let rho = family(theta)?;
    let dim = rho.dim();
    let (values, vectors) = hermitian_eigen(rho.matrix());
    let mut slds = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let plus = family(&offset(theta, k, FD_STEP))?;
        let minus = family(&offset(theta, k, -FD_STEP))?;
        check_dim(dim, plus.dim())?;
        let d_rho = (plus.matrix() - minus.matrix()) / Complex64::from(2.0 * FD_STEP);
        let d_eig = vectors.adjoint() * d_rho * &vectors;
        let l_eig = CMatrix::from_fn(dim, dim, |i, j| {
            let denom = values[i] + values[j];
            if denom > SLD_CUTOFF {
                d_eig[(i, j)] * (2.0 / denom)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        slds.push(hermitize(&(&vectors * l_eig * vectors.adjoint())));
    }
    let m = theta.len();
    let mut j = DMatrix::zeros(m, m);
    for a in 0..m {
        for b in a..m {
            let anti = &slds[a] * &slds[b] + &slds[b] * &slds[a];
            let v = (rho.matrix() * anti).trace().re * 0.5;
            j[(a, b)] = v;
            j[(b, a)] = v;
        }
    }
    Ok((MetricTensor::new(j)?, SldSet(slds)))
}

/// Bures metric recovered from finite Bures distances:
/// `g_μν ≈ D_B(ρ(θ − h u), ρ(θ + h u))² / (2h)²` along `u = e_μ`, with
/// off-diagonals by polarization along `e_μ ± e_ν`.
pub fn bures_metric<F>(family: F, theta: &[f64]) -> Result<MetricTensor>
where
    F: Fn(&[f64]) -> Result<DensityMatrix>,
{
    let m = theta.len();
    let h = BURES_STEP;
    let along = |dir: &[f64]| -> Result<f64> {
        let plus: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t + h * d).collect();
        let minus: Vec<f64> = theta.iter().zip(dir).map(|(t, d)| t - h * d).collect();
        let d = crate::state::bures_distance(&family(&minus)?, &family(&plus)?)?;
        Ok(d * d / (4.0 * h * h))
    };
    let unit = |k: usize| {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        e
    };
    let mut g = DMatrix::zeros(m, m);
    for a in 0..m {
        g[(a, a)] = along(&unit(a))?;
    }
    for a in 0..m {
        for b in (a + 1)..m {
            let mut sum = unit(a);
            sum[b] = 1.0;
            let mut diff = unit(a);
            diff[b] = -1.0;
            let v = (along(&sum)? - along(&diff)?) / 4.0;
            g[(a, b)] = v;
            g[(b, a)] = v;
        }
    }
    MetricTensor::new(g)
}

/// Classical Fisher information `Σ_x ∂_μ p_x ∂_ν p_x / p_x`.
pub fn classical_fisher<F>(family: F, theta: &[f64]) -> Result<MetricTensor>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let p = family(theta)?;
    if let Some(x) = p.iter().position(|v| *v <= 0.0) {
        return Err(Error::ZeroProbability(x));
    }
    let derivs = (0..theta.len())
        .map(|k| {
            let plus = family(&offset(theta, k, FD_STEP))?;
            let minus = family(&offset(theta, k, -FD_STEP))?;
            check_dim(p.len(), plus.len())?;
            check_dim(p.len(), minus.len())?;
            Ok(plus.iter().zip(&minus).map(|(a, b)| (a - b) / (2.0 * FD_STEP)).collect::<Vec<f64>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let m = theta.len();
    let f = DMatrix::from_fn(m, m, |a, b| {
        p.iter()
            .enumerate()
            .map(|(x, px)| derivs[a][x] * derivs[b][x] / px)
            .sum::<f64>()
    });
    MetricTensor::new(f)
}

/// `θ′ = θ − η (metric + λI)⁻¹ grad` via Cholesky, falling back to LU when
/// the regularized metric is only semidefinite.
pub fn natural_gradient_step(
    theta: &[f64],
    grad: &[f64],
    metric: &MetricTensor,
    eta: f64,
    reg: f64,
) -> Result<Vec<f64>> {
    check_dim(theta.len(), grad.len())?;
    check_dim(theta.len(), metric.dim())?;
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("learning rate must be positive, got {eta}")));
    }
    if !(reg >= 0.0) {
        return Err(Error::invalid(format!("regularization must be non-negative, got {reg}")));
    }
    let n = theta.len();
    let a = metric.as_matrix() + DMatrix::identity(n, n) * reg;
    let g = DVector::from_column_slice(grad);
    let dir = match a.clone().cholesky() {
        Some(ch) => ch.solve(&g),
        None => {
            let lu = a.lu();
            let scale = metric.as_matrix().amax().max(1.0);
            let singular = (0..n).any(|i| lu.u()[(i, i)].abs() <= 1e-14 * scale);
            if singular {
                return Err(Error::Singular);
            }
            lu.solve(&g).ok_or(Error::Singular)?
        }
    };
    if dir.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular);
    }
    Ok(theta.iter().zip(dir.iter()).map(|(t, d)| t - eta * d).collect())
}

/// Number of Fubini-Study metric eigenvalues above `threshold`: the local
/// dimension of the state manifold the circuit reaches at `θ`.
pub fn tangent_rank(circuit: &ParamCircuit, theta: &[f64], input: &StateVector, threshold: f64) -> Result<usize> {
    let g = fs_metric(circuit, theta, input)?;
    Ok(g.eigenvalues().iter().filter(|l| **l > threshold).count())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankReport {
    pub per_draw: Vec<usize>,
    pub mean: f64,
}

impl RankReport {
    pub fn count_equal(&self, rank: usize) -> usize {
        self.per_draw.iter().filter(|r| **r == rank).count()
    }
}

/// [`tangent_rank`] at `draws` parameter vectors drawn uniformly from
/// `[0, 2π)`.
pub fn tangent_rank_sampled(
    circuit: &ParamCircuit,
    input: &StateVector,
    draws: usize,
    seed: u64,
    threshold: f64,
) -> Result<RankReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_draw = Vec::with_capacity(draws);
    for _ in 0..draws {
        let theta: Vec<f64> = (0..circuit.num_params())
            .map(|_| rng.random_range(0.0..std::f64::consts::TAU))
            .collect();
        per_draw.push(tangent_rank(circuit, &theta, input, threshold)?);
    }
    let mean = if draws == 0 { 0.0 } else { per_draw.iter().sum::<usize>() as f64 / draws as f64 };
    Ok(RankReport { per_draw, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::Gate;
    use approx::assert_abs_diff_eq;

    fn single(gate: Gate) -> ParamCircuit {
        ParamCircuit::with_gates(1, 1, vec![gate]).unwrap()
    }

    #[test]
    fn empty_circuit_has_empty_jacobian() {
        let c = ParamCircuit::new(1, 0).unwrap();
        assert!(state_jacobian(&c, &[], &StateVector::zero(1)).unwrap().is_empty());
        assert_eq!(fs_metric(&c, &[], &StateVector::zero(1)).unwrap().dim(), 0);
    }

    #[test]
    fn rz_jacobian_matches_analytic_derivative() {
        let theta = 0.4;
        let jac = state_jacobian(&single(Gate::rz(0, 0)), &[theta], &StateVector::zero(1)).unwrap();
        let expect = Complex64::new(0.0, -1.0) * Complex64::from_polar(1.0, -theta);
        assert!((jac[0][0] - expect).norm() < 1e-10);
        assert!(jac[0][1].norm() < 1e-15);
    }

    #[test]
    fn rz_moves_only_phase() {
        let c = single(Gate::rz(0, 0));
        let q = quantum_geometric_tensor(&c, &[0.9], &StateVector::zero(1)).unwrap();
        assert!(q.as_matrix()[(0, 0)].norm() < 1e-10);
        assert!(qfi_pure(&c, &[0.9], &StateVector::zero(1)).unwrap().as_matrix()[(0, 0)].abs() < 1e-9);
    }

    #[test]
    fn rx_metric_is_one() {
        let c = single(Gate::rx(0, 0));
        for theta in [0.0, 0.3, 1.2, 2.5] {
            let g = fs_metric(&c, &[theta], &StateVector::zero(1)).unwrap();
            assert_abs_diff_eq!(g.as_matrix()[(0, 0)], 1.0, epsilon = 1e-9);
            let j = qfi_pure(&c, &[theta], &StateVector::zero(1)).unwrap();
            assert_abs_diff_eq!(j.as_matrix()[(0, 0)], 4.0, epsilon = 4e-9);
        }
    }

    #[test]
    fn two_parameter_metric_is_curved() {
        // exp(−iθ₂Y) exp(−iθ₁X) |0⟩ has g = diag(1, cos² 2θ₁).
        let c = ParamCircuit::with_gates(1, 2, vec![Gate::rx(0, 0), Gate::ry(0, 1)]).unwrap();
        let theta = [0.35, 0.8];
        let g = fs_metric(&c, &theta, &StateVector::zero(1)).unwrap();
        assert_abs_diff_eq!(g.as_matrix()[(0, 0)], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(g.as_matrix()[(1, 1)], (2.0 * theta[0]).cos().powi(2), epsilon = 1e-9);
        assert_abs_diff_eq!(g.as_matrix()[(0, 1)], 0.0, epsilon = 1e-9);
        let g2 = fs_metric(&c, &[1.1, 0.8], &StateVector::zero(1)).unwrap();
        assert!((g.as_matrix()[(1, 1)] - g2.as_matrix()[(1, 1)]).abs() > 0.1);
        let exact = quantum_geometric_tensor_exact(&c, &theta, &StateVector::zero(1)).unwrap();
        assert!((exact.metric().as_matrix() - g.as_matrix()).amax() < 1e-9);
    }

    #[test]
    fn bernoulli_family_reduces_to_classical_fisher() {
        for p in [0.1, 0.3, 0.5] {
            let (j, slds) = qfi_mixed(|t| DensityMatrix::from_probabilities(&[t[0], 1.0 - t[0]]), &[p]).unwrap();
            assert_abs_diff_eq!(j.as_matrix()[(0, 0)], 1.0 / (p * (1.0 - p)), epsilon = 1e-6);
            assert_eq!(slds.len(), 1);
            let f = classical_fisher(|t| Ok(vec![t[0], 1.0 - t[0]]), &[p]).unwrap();
            assert_abs_diff_eq!(f.as_matrix()[(0, 0)], 1.0 / (p * (1.0 - p)), epsilon = 1e-6);
        }
    }

    #[test]
    fn constant_families_have_zero_information() {
        let (j, _) = qfi_mixed(|_| Ok(DensityMatrix::maximally_mixed(1)), &[0.2, 0.4]).unwrap();
        assert_eq!(j.as_matrix().amax(), 0.0);
        let f = classical_fisher(|_| Ok(vec![0.25, 0.75]), &[0.2]).unwrap();
        assert_eq!(f.as_matrix().amax(), 0.0);
    }

    #[test]
    fn zero_probability_reported() {
        let err = classical_fisher(|t| Ok(vec![t[0], 0.0, 1.0 - t[0]]), &[0.5]).unwrap_err();
        assert_eq!(err, Error::ZeroProbability(1));
    }

    #[test]
    fn natural_gradient_reductions() {
        let theta = [1.0, -2.0];
        let out = natural_gradient_step(&theta, &[0.5, 0.25], &MetricTensor::identity(2), 0.1, 0.0).unwrap();
        assert_eq!(out, vec![1.0 - 0.1 * 0.5, -2.0 - 0.1 * 0.25]);
        let metric = MetricTensor::new(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]))).unwrap();
        let out = natural_gradient_step(&theta, &[4.0, 1.0], &metric, 1.0, 0.0).unwrap();
        assert_abs_diff_eq!(out[0], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(out[1], -3.0, epsilon = 1e-14);
        assert_eq!(natural_gradient_step(&theta, &[0.0, 0.0], &metric, 0.3, 0.0).unwrap(), theta.to_vec());
        let zero = MetricTensor::new(DMatrix::zeros(2, 2)).unwrap();
        assert_eq!(natural_gradient_step(&theta, &[1.0, 1.0], &zero, 0.1, 0.0), Err(Error::Singular));
        assert!(natural_gradient_step(&theta, &[1.0, 1.0], &zero, 0.1, 1e-6).is_ok());
    }

    #[test]
    fn metric_validation() {
        assert!(MetricTensor::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0])).is_err());
        assert!(MetricTensor::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0])).is_err());
    }

    #[test]
    fn rz_only_circuit_has_zero_rank() {
        let c = ParamCircuit::with_gates(2, 2, vec![Gate::rz(0, 0), Gate::rz(1, 1)]).unwrap();
        let r = tangent_rank_sampled(&c, &StateVector::zero(2), 5, 3, DEFAULT_RANK_THRESHOLD).unwrap();
        assert_eq!(r.per_draw, vec![0; 5]);
    }
}
