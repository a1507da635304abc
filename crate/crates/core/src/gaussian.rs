//! Unnormalized anisotropic Gaussians in 3D (world) and 2D (pixels).

use alloc::format;

use crate::error::{Error, Result};
use crate::linalg::{sym_eigen3, Mat2, Mat3, Vec2, Vec3};
use crate::scalar::Real;

/// Smallest admissible covariance eigenvalue.
pub const MIN_EIGENVALUE: f64 = 1e-8;
/// Largest tolerated asymmetry of a covariance matrix.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// `exp(-(x-mu)ᵀ cov⁻¹ (x-mu))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian3<T = f64> {
    pub mu: Vec3<T>,
    pub cov: Mat3<T>,
}

/// Projected Gaussian on the image plane, in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian2<T = f64> {
    pub mu_px: Vec2<T>,
    pub cov_px: Mat2<T>,
}

impl<T: Real> Gaussian3<T> {
    pub fn new(mu: Vec3<T>, cov: Mat3<T>) -> Self {
        Self { mu, cov }
    }

    pub fn values(&self) -> Gaussian3<f64> {
        Gaussian3 { mu: self.mu.values(), cov: self.cov.values() }
    }
}

impl Gaussian3<f64> {
    pub fn lift<T: Real>(&self) -> Gaussian3<T> {
        Gaussian3 { mu: self.mu.lift(), cov: self.cov.lift() }
    }

    pub fn isotropic(mu: Vec3, variance: f64) -> Self {
        Self { mu, cov: Mat3::diag(&Vec3([variance; 3])) }
    }

    /// Checks finiteness, symmetry and strict positive definiteness.
    /// `field` names the value in error messages.
    pub fn validate(&self, field: &str) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::invariant(format!("{field}.mu"), "non-finite entry"));
        }
        validate_cov(&self.cov, &format!("{field}.cov"))
    }

    /// Eigen-factorization `cov = (U S)(U S)ᵀ` computed numerically.
    pub fn eigen_factor(&self) -> EigenFactor {
        let (vals, basis) = sym_eigen3(&self.cov);
        EigenFactor { basis, scales: Vec3(vals.map(|v| libm::sqrt(v.max(0.0)))) }
    }
}

pub fn validate_cov(cov: &Mat3, field: &str) -> Result<()> {
    if !cov.is_finite() {
        return Err(Error::invariant(field, "non-finite entry"));
    }
    if cov.asymmetry() > SYMMETRY_TOL {
        return Err(Error::invariant(field, "symmetry"));
    }
    let (vals, _) = sym_eigen3(cov);
    if vals[0] < MIN_EIGENVALUE {
        return Err(Error::invariant(
            field,
            format!("positive definiteness (min eigenvalue {:e})", vals[0]),
        ));
    }
    Ok(())
}

/// Orthonormal basis `U` (columns) and per-axis standard deviations `S`
/// such that `cov = U diag(S)² Uᵀ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenFactor<T = f64> {
    pub basis: Mat3<T>,
    pub scales: Vec3<T>,
}

impl<T: Real> EigenFactor<T> {
    pub fn covariance(&self) -> Mat3<T> {
        let us = self.basis * Mat3::diag(&self.scales);
        us * us.transpose()
    }
}

impl EigenFactor<f64> {
    pub fn lift<T: Real>(&self) -> EigenFactor<T> {
        EigenFactor { basis: self.basis.lift(), scales: self.scales.lift() }
    }
}

/// A canonical Gaussian carried together with its eigen-factorization, the
/// form consumed by [`crate::transform::compose_transform`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalGaussian<T = f64> {
    pub mu: Vec3<T>,
    pub factor: EigenFactor<T>,
}

impl<T: Real> CanonicalGaussian<T> {
    pub fn gaussian(&self) -> Gaussian3<T> {
        Gaussian3 { mu: self.mu, cov: self.factor.covariance() }
    }
}

impl CanonicalGaussian<f64> {
    pub fn from_gaussian(g: &Gaussian3) -> Self {
        Self { mu: g.mu, factor: g.eigen_factor() }
    }

    pub fn lift<T: Real>(&self) -> CanonicalGaussian<T> {
        CanonicalGaussian { mu: self.mu.lift(), factor: self.factor.lift() }
    }
}

/// Density of a 3D Gaussian at `x`, in (0, 1].
pub fn eval_density3<T: Real>(g: &Gaussian3<T>, x: &Vec3<T>) -> T {
    let d = *x - g.mu;
    (-g.cov.inverse().quad(&d)).exp()
}

impl<T: Real> Gaussian2<T> {
    pub fn values(&self) -> Gaussian2<f64> {
        Gaussian2 { mu_px: self.mu_px.values(), cov_px: self.cov_px.values() }
    }

    /// Inverse covariance as `(a, b, c)` with `q = a dx² + 2b dx dy + c dy²`.
    pub fn conic(&self) -> [T; 3] {
        let inv = self.cov_px.inverse();
        [inv.0[0][0], (inv.0[0][1] + inv.0[1][0]) * 0.5, inv.0[1][1]]
    }
}

impl Gaussian2<f64> {
    pub fn is_valid(&self) -> bool {
        let c = &self.cov_px;
        let finite = self.mu_px.0.iter().chain(c.0.iter().flatten()).all(|x| x.is_finite());
        finite && (c.0[0][1] - c.0[1][0]).abs() <= 1e-9 * (c.0[0][0].abs() + c.0[1][1].abs()) && c.sym_eigenvalues()[0] > 0.0
    }
}
