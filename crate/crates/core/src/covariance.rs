//! Three ways of building a symmetric positive definite covariance from
//! unconstrained parameters: rotated eigenvalues, a clamped Cholesky factor,
//! and standard deviations with conditional (partial) correlations.

use crate::error::{Error, Result};
use crate::gaussian::EigenFactor;
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

/// Admissible range for covariance eigenvalues (variances).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovBounds {
    pub eig_lo: f64,
    pub eig_hi: f64,
}

impl Default for CovBounds {
    fn default() -> Self {
        Self { eig_lo: 0.01, eig_hi: 0.51 }
    }
}

impl CovBounds {
    pub fn validate(&self) -> Result<()> {
        if !(self.eig_lo > 0.0 && self.eig_hi > self.eig_lo) {
            return Err(Error::ConfigInvalid(alloc::format!(
                "covariance bounds need 0 < eig_lo < eig_hi, got [{}, {}]",
                self.eig_lo,
                self.eig_hi
            )));
        }
        Ok(())
    }

    pub fn sigma_lo(&self) -> f64 {
        libm::sqrt(self.eig_lo)
    }

    pub fn sigma_hi(&self) -> f64 {
        libm::sqrt(self.eig_hi)
    }
}

/// Norm below which `v1 × v2_raw` is treated as degenerate.
pub const DEGENERATE_CROSS: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovParamsEig<T = f64> {
    pub v1_raw: Vec3<T>,
    pub v2_raw: Vec3<T>,
    pub eig_raw: Vec3<T>,
    pub bounds: CovBounds,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovParamsChol<T = f64> {
    pub diag_raw: Vec3<T>,
    /// Strictly lower entries of the factor: (2,1), (3,1), (3,2).
    pub offdiag: Vec3<T>,
    /// `None` disables clamping of the factor's diagonal.
    pub bounds: Option<CovBounds>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovParamsCondCorr<T = f64> {
    pub sigma_raw: Vec3<T>,
    pub c12_raw: T,
    pub c13_raw: T,
    pub c23g1_raw: T,
    pub bounds: CovBounds,
}

impl<T: Real> CovParamsEig<T> {
    /// Eigenvalues mapped into `[eig_lo, eig_hi]` by a scaled sigmoid.
    pub fn eigenvalues(&self) -> Vec3<T> {
        let CovBounds { eig_lo, eig_hi } = self.bounds;
        self.eig_raw.map(|r| r.sigmoid() * (eig_hi - eig_lo) + eig_lo)
    }

    /// Orthonormal basis from two free vectors via cross products.
    pub fn basis(&self) -> Result<Mat3<T>> {
        let v1 = self.v1_raw;
        let v2 = v1.cross(&self.v2_raw);
        let n2 = v2.norm();
        if !(n2.value() >= DEGENERATE_CROSS) {
            return Err(Error::DegenerateBasis);
        }
        let v3 = v1.cross(&v2);
        let u1 = v1.scale(v1.norm().recip());
        let u2 = v2.scale(n2.recip());
        let u3 = v3.scale(v3.norm().recip());
        Ok(Mat3::from_cols(&u1, &u2, &u3))
    }

    pub fn factor(&self) -> Result<EigenFactor<T>> {
        Ok(EigenFactor { basis: self.basis()?, scales: self.eigenvalues().map(Real::sqrt) })
    }

    /// Like [`Self::factor`], but a degenerate orientation falls back to the
    /// deterministic basis built from `e1` and `e2` (the identity).
    pub fn factor_or_fallback(&self) -> (EigenFactor<T>, bool) {
        match self.factor() {
            Ok(f) => (f, false),
            Err(_) => (
                EigenFactor { basis: Mat3::identity(), scales: self.eigenvalues().map(Real::sqrt) },
                true,
            ),
        }
    }
}

/// `V diag(λ) Vᵀ` with `V` from [`CovParamsEig::basis`], formed as `F Fᵀ`
/// so the result is exactly symmetric.
pub fn build_cov_eig<T: Real>(p: &CovParamsEig<T>) -> Result<Mat3<T>> {
    Ok(p.factor()?.covariance())
}

impl<T: Real> CovParamsChol<T> {
    pub fn factor_l(&self) -> Mat3<T> {
        let d = self.diag_raw.map(|r| {
            let e = r.exp();
            match self.bounds {
                Some(b) if e.value() < b.sigma_lo() => T::from_f64(b.sigma_lo()),
                Some(b) if e.value() > b.sigma_hi() => T::from_f64(b.sigma_hi()),
                _ => e,
            }
        });
        let z = T::zero();
        let o = self.offdiag;
        Mat3([[d[0], z, z], [o[0], d[1], z], [o[1], o[2], d[2]]])
    }
}

/// `L Lᵀ` for the lower-triangular factor of [`CovParamsChol::factor_l`].
pub fn build_cov_cholesky<T: Real>(p: &CovParamsChol<T>) -> Mat3<T> {
    let l = p.factor_l();
    l * l.transpose()
}

impl<T: Real> CovParamsCondCorr<T> {
    pub fn sigmas(&self) -> Vec3<T> {
        let lo = self.bounds.sigma_lo();
        let hi = self.bounds.sigma_hi();
        self.sigma_raw.map(|r| r.sigmoid() * (hi - lo) + lo)
    }

    /// `(c12, c13, c23)`, with `c23` recovered from the partial correlation
    /// `c23|1` so that the correlation matrix stays positive definite.
    pub fn correlations(&self) -> (T, T, T) {
        let c12 = self.c12_raw.tanh();
        let c13 = self.c13_raw.tanh();
        let c23g1 = self.c23g1_raw.tanh();
        let one = T::one();
        let c23 = c12 * c13 + c23g1 * ((one - c12 * c12) * (one - c13 * c13)).sqrt();
        (c12, c13, c23)
    }
}

pub fn build_cov_condcorr<T: Real>(p: &CovParamsCondCorr<T>) -> Mat3<T> {
    let s = p.sigmas();
    let (c12, c13, c23) = p.correlations();
    let s12 = c12 * s[0] * s[1];
    let s13 = c13 * s[0] * s[2];
    let s23 = c23 * s[1] * s[2];
    Mat3([
        [s[0] * s[0], s12, s13],
        [s12, s[1] * s[1], s23],
        [s13, s23, s[2] * s[2]],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vec3([x, y, z])
    }

    #[test]
    fn eig_zero_raw_is_isotropic_mid_range() {
        let p = CovParamsEig {
            v1_raw: v(1.0, 0.0, 0.0),
            v2_raw: v(0.0, 1.0, 0.0),
            eig_raw: v(0.0, 0.0, 0.0),
            bounds: CovBounds::default(),
        };
        let s = build_cov_eig(&p).unwrap();
        assert!((s - Mat3::diag(&v(0.26, 0.26, 0.26))).max_abs() < 1e-15);
    }

    #[test]
    fn eig_basis_is_orthonormal() {
        let p = CovParamsEig {
            v1_raw: v(0.3, -1.2, 0.5),
            v2_raw: v(2.0, 0.1, -0.7),
            eig_raw: v(-1.0, 0.5, 3.0),
            bounds: CovBounds::default(),
        };
        let b = p.basis().unwrap();
        assert!((b.transpose() * b - Mat3::identity()).max_abs() < 1e-12);
    }

    #[test]
    fn eig_parallel_inputs_are_degenerate() {
        let p = CovParamsEig {
            v1_raw: v(1.0, 2.0, 3.0),
            v2_raw: v(2.0, 4.0, 6.0),
            eig_raw: v(0.0, 0.0, 0.0),
            bounds: CovBounds::default(),
        };
        assert_eq!(build_cov_eig(&p), Err(Error::DegenerateBasis));
        let (f, fell_back) = p.factor_or_fallback();
        assert!(fell_back);
        assert_eq!(f.basis, Mat3::identity());
    }

    #[test]
    fn cholesky_clamps_diagonal() {
        let p = CovParamsChol {
            diag_raw: v(0.0, 0.0, 0.0),
            offdiag: v(0.0, 0.0, 0.0),
            bounds: Some(CovBounds::default()),
        };
        let s = build_cov_cholesky(&p);
        assert!((s - Mat3::diag(&v(0.51, 0.51, 0.51))).max_abs() < 1e-15);
        let unclamped = CovParamsChol { bounds: None, ..p };
        assert_eq!(build_cov_cholesky(&unclamped), Mat3::identity());
    }

    #[test]
    fn condcorr_zero_raw_is_diagonal_mid_sigma() {
        let b = CovBounds::default();
        let p = CovParamsCondCorr {
            sigma_raw: v(0.0, 0.0, 0.0),
            c12_raw: 0.0,
            c13_raw: 0.0,
            c23g1_raw: 0.0,
            bounds: b,
        };
        let mid = 0.5 * (b.sigma_lo() + b.sigma_hi());
        let s = build_cov_condcorr(&p);
        assert!((s - Mat3::diag(&v(mid * mid, mid * mid, mid * mid))).max_abs() < 1e-15);
    }

    #[test]
    fn condcorr_partial_correlation_passes_through() {
        let rho: f64 = 0.42;
        let p = CovParamsCondCorr {
            sigma_raw: v(0.0, 0.0, 0.0),
            c12_raw: 0.0,
            c13_raw: 0.0,
            c23g1_raw: libm::atanh(rho),
            bounds: CovBounds::default(),
        };
        let (_, _, c23) = p.correlations();
        assert!((c23 - rho).abs() < 1e-15);
    }
}
