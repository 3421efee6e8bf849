//! Riemannian geometry on the cone of symmetric positive definite matrices.
//!
//! Two metrics are provided:
//!
//! ```text
//! affine-invariant   <A, B>_P = tr(P⁻¹ A P⁻¹ B)
//!                    d(P, Q)  = ‖log(P^{-1/2} Q P^{-1/2})‖_F
//! log-Euclidean      d(P, Q)  = ‖log P − log Q‖_F
//! ```
//!
//! All matrix functions go through a symmetric eigendecomposition of the
//! symmetrized input, `f(P) = V f(Λ) Vᵀ`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};

/// Absolute tolerance for the symmetry check on inputs.
pub const SYMMETRY_TOL: f64 = 1e-10;

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_KARCHER_TOL: f64 = 1e-10;
pub const DEFAULT_KARCHER_MAX_ITER: usize = 100;

/// A real feature vector with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector(DVector<f64>);

impl FeatureVector {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn into_inner(self) -> DVector<f64> {
        self.0
    }
}

/// Point on Sym⁺(n).
#[derive(Clone, Debug, PartialEq)]
pub struct SpdMatrix(DMatrix<f64>);

/// Symmetric matrix, an element of the tangent space of Sym⁺(n).
#[derive(Clone, Debug, PartialEq)]
pub struct TangentSym(DMatrix<f64>);

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn validate_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() == 0 {
        return Err(Error::Empty);
    }
    check_dim(m.nrows(), m.ncols())?;
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// `V f(Λ) Vᵀ` for a symmetric eigendecomposition.
fn eigen_map(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let fl = f(*lambda);
        scaled.column_mut(j).scale_mut(fl);
    }
    symmetrize(&(scaled * v.transpose()))
}

fn sym_eigen(m: &DMatrix<f64>) -> SymmetricEigen<f64, nalgebra::Dyn> {
    SymmetricEigen::new(symmetrize(m))
}

impl SpdMatrix {
    /// Validates symmetry (absolute tolerance 1e-10) and positive
    /// definiteness of the symmetrized matrix.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        validate_symmetric(&m)?;
        Self::from_symmetric_unchecked_pd(symmetrize(&m))
    }

    fn from_symmetric_unchecked_pd(m: DMatrix<f64>) -> Result<Self> {
        let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
        if min.is_nan() || min <= 0.0 {
            return Err(Error::NotPositiveDefinite(min));
        }
        Ok(Self(m))
    }

    /// Builds an SPD matrix from a result computed internally; symmetrizes
    /// away floating-point drift but still checks positive definiteness.
    pub(crate) fn from_computed(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Self::from_symmetric_unchecked_pd(symmetrize(&m))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
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

    pub fn eigenvalues(&self) -> DVector<f64> {
        let mut ev = sym_eigen(&self.0).eigenvalues;
        ev.as_mut_slice().sort_by(|a, b| a.total_cmp(b));
        ev
    }

    fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        eigen_map(&sym_eigen(&self.0), f)
    }

    pub fn inverse(&self) -> SpdMatrix {
        SpdMatrix(self.map_spectrum(|l| 1.0 / l))
    }

    /// `P^t` for real `t`.
    pub fn powf(&self, t: f64) -> SpdMatrix {
        SpdMatrix(self.map_spectrum(|l| l.powf(t)))
    }

    /// Congruence `A P Aᵀ`; `A` must be square and invertible.
    pub fn congruence(&self, a: &DMatrix<f64>) -> Result<SpdMatrix> {
        check_dim(self.dim(), a.nrows())?;
        check_dim(self.dim(), a.ncols())?;
        SpdMatrix::from_computed(a * &self.0 * a.transpose())
    }
}

impl TangentSym {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        validate_symmetric(&m)?;
        Ok(Self(symmetrize(&m)))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
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

    /// Upper triangle in row-major order, off-diagonal entries scaled by √2,
    /// so the Euclidean inner product of two vectorizations equals the
    /// Frobenius inner product of the matrices.
    pub fn vectorize_upper(&self) -> DVector<f64> {
        let n = self.dim();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                let v = self.0[(i, j)];
                out.push(if i == j { v } else { v * std::f64::consts::SQRT_2 });
            }
        }
        DVector::from_vec(out)
    }
}

/// Polynomial feature expansion.
///
/// Degree 1 gives `[1, x_1..x_d]`. Degree 2 appends the products
/// `x_i x_j` for `i ≤ j` in row-major upper-triangular order, for a total
/// length of `1 + d + d(d+1)/2`.
pub fn poly_expand(x: &FeatureVector, degree: u32) -> Result<FeatureVector> {
    if x.is_empty() {
        return Err(Error::Empty);
    }
    if !(1..=2).contains(&degree) {
        return Err(Error::invalid(format!("unsupported polynomial degree {degree}")));
    }
    let d = x.len();
    let xs = x.as_slice();
    let mut out = Vec::with_capacity(1 + d + d * (d + 1) / 2);
    out.push(1.0);
    out.extend_from_slice(xs);
    if degree == 2 {
        for i in 0..d {
            for j in i..d {
                out.push(xs[i] * xs[j]);
            }
        }
    }
    FeatureVector::new(DVector::from_vec(out))
}

/// `Z = z zᵀ + εI`.
pub fn spd_from_features(z: &FeatureVector, epsilon: f64) -> Result<SpdMatrix> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    if z.is_empty() {
        return Err(Error::Empty);
    }
    let v = z.as_vector();
    let n = v.len();
    let m = v * v.transpose() + DMatrix::identity(n, n) * epsilon;
    SpdMatrix::from_computed(m)
}

pub fn sym_log(p: &SpdMatrix) -> TangentSym {
    TangentSym(p.map_spectrum(f64::ln))
}

pub fn sym_exp(a: &TangentSym) -> SpdMatrix {
    SpdMatrix(eigen_map(&sym_eigen(&a.0), f64::exp))
}

pub fn sym_sqrt(p: &SpdMatrix) -> SpdMatrix {
    SpdMatrix(p.map_spectrum(f64::sqrt))
}

/// Affine-invariant inner product `tr(P⁻¹ A P⁻¹ B)`.
pub fn ai_inner(p: &SpdMatrix, a: &TangentSym, b: &TangentSym) -> Result<f64> {
    check_dim(p.dim(), a.dim())?;
    check_dim(p.dim(), b.dim())?;
    let pinv = p.inverse().0;
    let left = &pinv * &a.0;
    let right = &pinv * &b.0;
    Ok((left * right).trace())
}

/// `P^{-1/2} Q P^{-1/2}`, the whitened second argument.
fn whiten(p: &SpdMatrix, q: &SpdMatrix) -> DMatrix<f64> {
    let p_isqrt = p.powf(-0.5).0;
    symmetrize(&(&p_isqrt * &q.0 * &p_isqrt))
}

pub fn dist_affine_invariant(p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    let ev = SymmetricEigen::new(whiten(p, q)).eigenvalues;
    Ok(ev.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt())
}

pub fn dist_log_euclidean(p: &SpdMatrix, q: &SpdMatrix) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    Ok((sym_log(p).0 - sym_log(q).0).norm())
}

/// Point at parameter `t` on the affine-invariant geodesic from `p` to `q`.
pub fn geodesic_ai(p: &SpdMatrix, q: &SpdMatrix, t: f64) -> Result<SpdMatrix> {
    check_dim(p.dim(), q.dim())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("geodesic parameter {t} outside [0, 1]")));
    }
    let p_sqrt = p.powf(0.5).0;
    let inner = eigen_map(&SymmetricEigen::new(whiten(p, q)), |l| l.powf(t));
    SpdMatrix::from_computed(&p_sqrt * inner * &p_sqrt)
}

pub fn log_euclidean_mean(points: &[SpdMatrix]) -> Result<SpdMatrix> {
    let first = points.first().ok_or(Error::Empty)?;
    let n = first.dim();
    let mut acc = DMatrix::zeros(n, n);
    for p in points {
        check_dim(n, p.dim())?;
        acc += sym_log(p).0;
    }
    acc /= points.len() as f64;
    Ok(sym_exp(&TangentSym(acc)))
}

/// Affine-invariant Karcher mean by fixed-point iteration, started at the
/// log-Euclidean mean.
///
/// Each step maps every point to the tangent space at the current iterate,
/// averages there and maps back. Stops when the Frobenius norm of the
/// averaged tangent vector drops below `tol`. On failure the last iterate is
/// carried in [`Error::NotConverged`].
pub fn karcher_mean(points: &[SpdMatrix], max_iter: usize, tol: f64) -> Result<SpdMatrix> {
    let mut mean = log_euclidean_mean(points)?;
    let n = mean.dim();
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let m_sqrt = mean.powf(0.5).0;
        let m_isqrt = mean.powf(-0.5).0;
        let mut tangent = DMatrix::zeros(n, n);
        for p in points {
            let w = symmetrize(&(&m_isqrt * &p.0 * &m_isqrt));
            tangent += eigen_map(&SymmetricEigen::new(w), f64::ln);
        }
        tangent /= points.len() as f64;
        residual = tangent.norm();
        if residual < tol {
            return Ok(mean);
        }
        let step = eigen_map(&SymmetricEigen::new(tangent), f64::exp);
        mean = SpdMatrix::from_computed(&m_sqrt * step * &m_sqrt)?;
    }
    Err(Error::NotConverged {
        iterations: max_iter,
        residual,
        last: Box::new(mean.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::E;

    fn fv(x: &[f64]) -> FeatureVector {
        FeatureVector::from_slice(x).unwrap()
    }

    #[test]
    fn poly_expand_orders_monomials() {
        let out = poly_expand(&fv(&[2.0, 3.0]), 2).unwrap();
        assert_eq!(out.as_slice(), &[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
        let zero = poly_expand(&fv(&[0.0, 0.0]), 2).unwrap();
        assert_eq!(zero.as_slice(), &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(poly_expand(&fv(&[0.5; 7]), 2).unwrap().len(), 36);
        assert_eq!(poly_expand(&fv(&[1.0, 2.0]), 1).unwrap().as_slice(), &[1.0, 1.0, 2.0]);
    }

    #[test]
    fn poly_expand_rejects_bad_input() {
        assert_eq!(poly_expand(&fv(&[]), 2), Err(Error::Empty));
        assert!(matches!(poly_expand(&fv(&[1.0]), 3), Err(Error::InvalidArgument(_))));
        assert!(FeatureVector::from_slice(&[f64::NAN]).is_err());
    }

    #[test]
    fn spd_from_features_spectrum() {
        let z = spd_from_features(&fv(&[0.0, 0.0]), 0.1).unwrap();
        assert_abs_diff_eq!(z.as_matrix(), &(DMatrix::identity(2, 2) * 0.1), epsilon = 1e-15);
        let z = spd_from_features(&fv(&[1.0, 0.0]), 0.01).unwrap();
        assert_abs_diff_eq!(z.as_matrix()[(0, 0)], 1.01, epsilon = 1e-15);
        assert_abs_diff_eq!(z.as_matrix()[(1, 1)], 0.01, epsilon = 1e-15);
        assert_eq!(z.as_matrix()[(0, 1)], 0.0);
        let ev = spd_from_features(&fv(&[1.0, 2.0]), 1e-3).unwrap().eigenvalues();
        assert_abs_diff_eq!(ev[0], 1e-3, epsilon = 1e-12);
        assert_abs_diff_eq!(ev[1], 5.001, epsilon = 1e-12);
        assert!(spd_from_features(&fv(&[1.0]), 0.0).is_err());
        assert!(spd_from_features(&fv(&[1.0]), -1.0).is_err());
    }

    #[test]
    fn rejects_invalid_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.4, 1.0]);
        assert!(matches!(SpdMatrix::new(asym), Err(Error::NotSymmetric(_))));
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(matches!(SpdMatrix::new(indef), Err(Error::NotPositiveDefinite(_))));
        let rect = DMatrix::<f64>::zeros(2, 3);
        assert!(matches!(SpdMatrix::new(rect), Err(Error::DimensionMismatch { .. })));
        let tiny_drift = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0 + 1e-12, 2.0]);
        assert!(SpdMatrix::new(tiny_drift).is_ok());
    }

    #[test]
    fn matrix_functions_on_simple_inputs() {
        let i2 = SpdMatrix::identity(2);
        assert_abs_diff_eq!(sym_log(&i2).as_matrix(), &DMatrix::zeros(2, 2), epsilon = 1e-15);
        assert_abs_diff_eq!(sym_exp(&TangentSym::zeros(2)).as_matrix(), i2.as_matrix(), epsilon = 1e-15);
        let d = SpdMatrix::from_diagonal(&[E, E * E]).unwrap();
        let l = sym_log(&d);
        assert_abs_diff_eq!(l.as_matrix()[(0, 0)], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(l.as_matrix()[(1, 1)], 2.0, epsilon = 1e-14);
        let s = sym_sqrt(&SpdMatrix::from_diagonal(&[4.0, 9.0]).unwrap());
        assert_abs_diff_eq!(s.as_matrix()[(1, 1)], 3.0, epsilon = 1e-14);
    }

    #[test]
    fn affine_invariant_inner_product() {
        let i2 = SpdMatrix::identity(2);
        let id = TangentSym::new(DMatrix::identity(2, 2)).unwrap();
        assert_abs_diff_eq!(ai_inner(&i2, &id, &id).unwrap(), 2.0, epsilon = 1e-14);
        let p = SpdMatrix::from_diagonal(&[2.0, 2.0]).unwrap();
        assert_abs_diff_eq!(ai_inner(&p, &id, &id).unwrap(), 0.5, epsilon = 1e-14);
        let a = TangentSym::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0])).unwrap();
        let b = TangentSym::new(DMatrix::from_row_slice(2, 2, &[0.5, -1.0, -1.0, 4.0])).unwrap();
        let frob = a.as_matrix().dot(b.as_matrix());
        assert_abs_diff_eq!(ai_inner(&i2, &a, &b).unwrap(), frob, epsilon = 1e-13);
        assert!(ai_inner(&SpdMatrix::identity(3), &a, &b).is_err());
    }

    #[test]
    fn distances_on_diagonal_pair() {
        let i2 = SpdMatrix::identity(2);
        let q = SpdMatrix::from_diagonal(&[E * E, 1.0]).unwrap();
        assert_abs_diff_eq!(dist_affine_invariant(&i2, &q).unwrap(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(dist_log_euclidean(&i2, &q).unwrap(), 2.0, epsilon = 1e-13);
        assert_abs_diff_eq!(dist_affine_invariant(&q, &q).unwrap(), 0.0, epsilon = 1e-13);
        assert!(dist_affine_invariant(&i2, &SpdMatrix::identity(3)).is_err());
    }

    #[test]
    fn geodesic_endpoints_and_midpoint() {
        let i2 = SpdMatrix::identity(2);
        let q = SpdMatrix::from_diagonal(&[E * E, 1.0]).unwrap();
        let mid = geodesic_ai(&i2, &q, 0.5).unwrap();
        assert_abs_diff_eq!(mid.as_matrix()[(0, 0)], E, epsilon = 1e-13);
        assert_abs_diff_eq!(mid.as_matrix()[(1, 1)], 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(geodesic_ai(&i2, &q, 1.0).unwrap().as_matrix(), q.as_matrix(), epsilon = 1e-12);
        assert_abs_diff_eq!(geodesic_ai(&i2, &q, 0.0).unwrap().as_matrix(), i2.as_matrix(), epsilon = 1e-12);
        assert!(geodesic_ai(&i2, &q, 1.5).is_err());
        assert!(geodesic_ai(&i2, &q, -0.1).is_err());
    }

    #[test]
    fn karcher_mean_of_single_point() {
        let p = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let m = karcher_mean(std::slice::from_ref(&p), 100, 1e-10).unwrap();
        assert_abs_diff_eq!(m.as_matrix(), p.as_matrix(), epsilon = 1e-12);
        assert_eq!(karcher_mean(&[], 10, 1e-10), Err(Error::Empty));
    }

    #[test]
    fn karcher_reports_last_iterate_when_budget_exhausted() {
        let p = SpdMatrix::new(DMatrix::from_row_slice(2, 2, &[2.0, 0.9, 0.9, 1.0])).unwrap();
        let q = SpdMatrix::from_diagonal(&[0.2, 5.0]).unwrap();
        match karcher_mean(&[p, q], 0, 1e-10) {
            Err(Error::NotConverged { iterations, last, .. }) => {
                assert_eq!(iterations, 0);
                assert_eq!(last.nrows(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn vectorization_preserves_frobenius_product() {
        let a = TangentSym::new(DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, -3.0])).unwrap();
        let b = TangentSym::new(DMatrix::from_row_slice(2, 2, &[0.5, -1.0, -1.0, 4.0])).unwrap();
        let va = a.vectorize_upper();
        assert_eq!(va.len(), 3);
        assert_abs_diff_eq!(va.dot(&b.vectorize_upper()), a.as_matrix().dot(b.as_matrix()), epsilon = 1e-13);
    }
}
