//! Principal angles and geodesic distance on the Grassmannian Gr(k, n).

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Relative threshold on |R_ii| below which a frame is rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Orthonormal n×k frame spanning a point of Gr(k, n).
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    basis: DMatrix<f64>,
}

/// Principal angles in radians, ascending, each in [0, π/2].
#[derive(Clone, Debug, PartialEq)]
pub struct AngleVector(Vec<f64>);

impl AngleVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl Subspace {
    /// Wraps a frame that is already orthonormal.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let (n, k) = basis.shape();
        if k == 0 || n == 0 {
            return Err(Error::Empty);
        }
        if k > n {
            return Err(Error::invalid(format!("subspace dimension {k} exceeds ambient dimension {n}")));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let gram = basis.transpose() * &basis;
        let dev = (gram - DMatrix::identity(k, k)).amax();
        if dev > ORTHONORMAL_TOL {
            return Err(Error::InvalidArgument(format!(
                "frame is not orthonormal (max deviation {dev:e})"
            )));
        }
        Ok(Self { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn sub_dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Orthogonal projector `X Xᵀ`, independent of the choice of frame.
    pub fn projector(&self) -> DMatrix<f64> {
        &self.basis * self.basis.transpose()
    }

    /// Frame right-multiplied by a k×k matrix (e.g. a rotation).
    pub fn rotate(&self, r: &DMatrix<f64>) -> Result<Subspace> {
        check_dim(self.sub_dim(), r.nrows())?;
        Subspace::new(&self.basis * r)
    }
}

/// Thin QR with the diagonal of R made positive, so the same spanning set
/// always yields the same frame.
pub fn orthonormalize(raw: &DMatrix<f64>) -> Result<Subspace> {
    let (n, k) = raw.shape();
    if n == 0 || k == 0 {
        return Err(Error::Empty);
    }
    if k > n {
        return Err(Error::RankDeficient);
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let qr = raw.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    let scale = raw.amax().max(f64::MIN_POSITIVE);
    for j in 0..k {
        let d = r[(j, j)];
        if d.abs() <= RANK_TOL * scale {
            return Err(Error::RankDeficient);
        }
        if d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(Subspace { basis: q })
}

pub fn principal_angles(x: &Subspace, y: &Subspace) -> Result<AngleVector> {
    check_dim(x.ambient_dim(), y.ambient_dim())?;
    check_dim(x.sub_dim(), y.sub_dim())?;
    let overlap = x.basis.transpose() * &y.basis;
    let sv: DVector<f64> = overlap.singular_values();
    let mut angles: Vec<f64> = sv.iter().map(|s| s.clamp(0.0, 1.0).acos()).collect();
    angles.sort_by(|a, b| a.total_cmp(b));
    Ok(AngleVector(angles))
}

/// `√(θ₁² + ⋯ + θ_k²)`.
pub fn dist_grassmann(x: &Subspace, y: &Subspace) -> Result<f64> {
    let angles = principal_angles(x, y)?;
    Ok(angles.0.iter().map(|t| t * t).sum::<f64>().sqrt())
}
