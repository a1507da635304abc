//! Per-image pose transforms and their composition with canonical Gaussians.

use alloc::format;
use core::f64::consts::{FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::gaussian::{CanonicalGaussian, Gaussian3};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;

pub const SCALE_MIN: f64 = 0.5;
pub const SCALE_MAX: f64 = 2.0;
pub const TRANSLATION_MAX: f64 = 0.3;
pub const ROTATION_MAX: f64 = FRAC_PI_4;

/// Rotation by `phi` about world +y.
pub fn yaw_matrix<T: Real>(phi: T) -> Mat3<T> {
    let (c, s) = (phi.cos(), phi.sin());
    let (z, o) = (T::zero(), T::one());
    Mat3([[c, z, s], [z, o, z], [-s, z, c]])
}

/// Euler angles applied X first, then Y, then Z: `Rz · Ry · Rx`.
pub fn euler_xyz<T: Real>(theta: &Vec3<T>) -> Mat3<T> {
    let (cx, sx) = (theta[0].cos(), theta[0].sin());
    let (cy, sy) = (theta[1].cos(), theta[1].sin());
    let (cz, sz) = (theta[2].cos(), theta[2].sin());
    let (z, o) = (T::zero(), T::one());
    let rx = Mat3([[o, z, z], [z, cx, -sx], [z, sx, cx]]);
    let ry = Mat3([[cy, z, sy], [z, o, z], [-sy, z, cy]]);
    let rz = Mat3([[cz, -sz, z], [sz, cz, z], [z, z, o]]);
    rz * ry * rx
}

/// Per-Gaussian scale, translation and rotation plus the object yaw.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoseTransform<T = f64> {
    pub s: Vec3<T>,
    pub t: Vec3<T>,
    pub theta: Vec3<T>,
    pub yaw: T,
}

impl<T: Real> PoseTransform<T> {
    pub fn identity() -> Self {
        Self { s: Vec3([T::one(); 3]), t: Vec3::zeros(), theta: Vec3::zeros(), yaw: T::zero() }
    }

    pub fn with_yaw(yaw: T) -> Self {
        Self { yaw, ..Self::identity() }
    }

    pub fn values(&self) -> PoseTransform<f64> {
        PoseTransform { s: self.s.values(), t: self.t.values(), theta: self.theta.values(), yaw: self.yaw.value() }
    }
}

impl PoseTransform<f64> {
    pub fn lift<T: Real>(&self) -> PoseTransform<T> {
        PoseTransform { s: self.s.lift(), t: self.t.lift(), theta: self.theta.lift(), yaw: T::from_f64(self.yaw) }
    }

    /// Checks the (s, t, θ) bounds; `field` prefixes error paths.
    pub fn validate_local(&self, field: &str) -> Result<()> {
        check_range(&self.s, SCALE_MIN, SCALE_MAX, &format!("{field}.s"))?;
        check_range(&self.t, -TRANSLATION_MAX, TRANSLATION_MAX, &format!("{field}.t"))?;
        check_range(&self.theta, -ROTATION_MAX, ROTATION_MAX, &format!("{field}.theta"))
    }

    pub fn validate(&self, field: &str) -> Result<()> {
        self.validate_local(field)?;
        validate_yaw(self.yaw, &format!("{field}.yaw"))
    }
}

pub fn validate_yaw(yaw: f64, field: &str) -> Result<()> {
    if !(-PI..PI).contains(&yaw) {
        return Err(Error::invariant(field, format!("yaw {yaw} outside [-pi, pi)")));
    }
    Ok(())
}

fn check_range(v: &Vec3, lo: f64, hi: f64, field: &str) -> Result<()> {
    for (i, &x) in v.0.iter().enumerate() {
        if !(lo..=hi).contains(&x) {
            return Err(Error::invariant(format!("{field}[{i}]"), format!("{x} outside [{lo}, {hi}]")));
        }
    }
    Ok(())
}

/// Per-image Gaussian from a canonical one:
/// `mu = R_yaw (mu_c + t)` and `cov = F Fᵀ` with `F = R_yaw R_theta U diag(s) S`.
pub fn compose_transform<T: Real>(canonical: &CanonicalGaussian<T>, tf: &PoseTransform<T>) -> Gaussian3<T> {
    let r_yaw = yaw_matrix(tf.yaw);
    let mu = r_yaw.mul_vec(&(canonical.mu + tf.t));
    let scales = Vec3(core::array::from_fn(|i| tf.s[i] * canonical.factor.scales[i]));
    let f = r_yaw * euler_xyz(&tf.theta) * canonical.factor.basis * Mat3::diag(&scales);
    Gaussian3 { mu, cov: f * f.transpose() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
        (0..3).all(|i| (a[i] - b[i]).abs() <= tol)
    }

    #[test]
    fn yaw_examples() {
        assert_eq!(yaw_matrix(0.0), Mat3::identity());
        let x = Vec3([1.0, 0.0, 0.0]);
        assert!(close(&yaw_matrix(FRAC_PI_2).mul_vec(&x), &Vec3([0.0, 0.0, -1.0]), 1e-15));
        assert!(close(&yaw_matrix(PI).mul_vec(&x), &Vec3([-1.0, 0.0, 0.0]), 1e-15));
        let r = yaw_matrix(0.7);
        assert!((r.det() - 1.0).abs() < 1e-15);
        assert!((r.transpose() * r - Mat3::identity()).max_abs() < 1e-15);
    }

    #[test]
    fn euler_applies_x_first() {
        // rotating e_y by +90° about x gives e_z, then +90° about y sends e_z to e_x
        let r = euler_xyz(&Vec3([FRAC_PI_2, FRAC_PI_2, 0.0]));
        assert!(close(&r.mul_vec(&Vec3([0.0, 1.0, 0.0])), &Vec3([1.0, 0.0, 0.0]), 1e-15));
    }

    fn sample_canonical() -> CanonicalGaussian {
        let g = Gaussian3::new(Vec3([0.2, -0.1, 0.3]), Mat3([[0.2, 0.03, 0.01], [0.03, 0.1, -0.02], [0.01, -0.02, 0.3]]));
        CanonicalGaussian::from_gaussian(&g)
    }

    #[test]
    fn identity_transform_is_fixed_point() {
        let c = sample_canonical();
        let out = compose_transform(&c, &PoseTransform::identity());
        let g = c.gaussian();
        assert!(close(&out.mu, &g.mu, 1e-12));
        assert!((out.cov - Mat3([[0.2, 0.03, 0.01], [0.03, 0.1, -0.02], [0.01, -0.02, 0.3]])).max_abs() < 1e-12);
    }

    #[test]
    fn translation_shifts_mean_only() {
        let c = sample_canonical();
        let tf = PoseTransform { t: Vec3([0.1, 0.0, 0.0]), ..PoseTransform::identity() };
        let out = compose_transform(&c, &tf);
        assert!(close(&out.mu, &Vec3([0.3, -0.1, 0.3]), 1e-15));
        assert!((out.cov - c.gaussian().cov).max_abs() < 1e-15);
    }

    #[test]
    fn yaw_rotates_isotropic_mean() {
        let c = CanonicalGaussian::from_gaussian(&Gaussian3::isotropic(Vec3([1.0, 0.0, 0.0]), 0.25));
        let out = compose_transform(&c, &PoseTransform::with_yaw(FRAC_PI_2));
        assert!(close(&out.mu, &Vec3([0.0, 0.0, -1.0]), 1e-15));
        assert!((out.cov - Mat3::diag(&Vec3([0.25; 3]))).max_abs() < 1e-15);
    }

    #[test]
    fn bounds_are_enforced() {
        let mut tf = PoseTransform::<f64>::identity();
        assert!(tf.validate("tf").is_ok());
        tf.t = Vec3([0.5, 0.0, 0.0]);
        assert!(matches!(tf.validate("tf"), Err(Error::InvariantViolation { field, .. }) if field == "tf.t[0]"));
        tf = PoseTransform::with_yaw(PI);
        assert!(tf.validate("tf").is_err());
    }
}
