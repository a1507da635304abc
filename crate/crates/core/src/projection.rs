//! Analytic perspective projection of a 3D Gaussian's 1-level ellipsoid.
//!
//! The rays from the camera center tangent to the ellipsoid form a cone
//! `xᵀ M x = 0`; intersecting it with the canonical image plane z = 1 gives a
//! conic whose center and shape are the projected 2D Gaussian.

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::{Gaussian2, Gaussian3};
use crate::linalg::{Mat2, Mat3, Vec2};
use crate::scalar::Real;

/// Minimum camera-frame depth of a projectable mean.
pub const MIN_DEPTH: f64 = 0.05;
/// Margin by which the camera must lie outside the 1-level ellipsoid.
pub const OUTSIDE_MARGIN: f64 = 1e-9;

/// Camera-frame tangent cone, equivalently the conic
/// `p x² + q xy + r y² + s x + t y + u = 0` on the plane z = 1 with
/// `M = [[p, q/2, s/2], [q/2, r, t/2], [s/2, t/2, u]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConicMatrix<T = f64> {
    pub m: Mat3<T>,
}

impl<T: Real> ConicMatrix<T> {
    /// Polynomial coefficients `[p, q, r, s, t, u]`.
    pub fn coefficients(&self) -> [T; 6] {
        let m = &self.m.0;
        [m[0][0], m[0][1] * 2.0, m[1][1], m[0][2] * 2.0, m[1][2] * 2.0, m[2][2]]
    }
}

pub fn cone_matrix<T: Real>(g: &Gaussian3<T>, cam: &Camera) -> Result<ConicMatrix<T>> {
    let rot: Mat3<T> = cam.rot.lift();
    let mu = cam.to_camera(&g.mu);
    if !(mu[2].value() >= MIN_DEPTH) {
        return Err(Error::BehindCamera { depth: mu[2].value() });
    }
    let cov = rot * g.cov * rot.transpose();
    let prec = cov.inverse();
    let prec_mu = prec.mul_vec(&mu);
    let k = mu.dot(&prec_mu);
    if !(k.value() > 1.0 + OUTSIDE_MARGIN) {
        return Err(Error::CameraInsideGaussian);
    }
    let m = Mat3::outer(&prec_mu, &prec_mu) - prec.scale(k - 1.0);
    Ok(ConicMatrix { m })
}

/// Center and shape of the ellipse cut from the cone by the plane z = 1.
pub fn conic_to_ellipse<T: Real>(c: &ConicMatrix<T>) -> Result<(Vec2<T>, Mat2<T>)> {
    let [p, q, r, s, t, _u] = c.coefficients();
    let block = c.m.upper_left();
    let det_block = block.det();
    if !(det_block.value() > 0.0) {
        return Err(Error::NotAnEllipse);
    }
    let den = p * r * 4.0 - q * q;
    let mu = Vec2([(q * t - r * s * 2.0) / den, (s * q - p * t * 2.0) / den]);
    let cov = block.inverse().scale(-(c.m.det() / det_block));
    let cv = cov.values();
    if !(cv.0[0][0] > 0.0 && cv.det() > 0.0) || !mu.values().0.iter().all(|x| x.is_finite()) {
        return Err(Error::NotAnEllipse);
    }
    Ok((mu, cov))
}

/// Full projection to pixel coordinates through the camera intrinsics.
pub fn project<T: Real>(g: &Gaussian3<T>, cam: &Camera) -> Result<Gaussian2<T>> {
    let (mu, cov) = conic_to_ellipse(&cone_matrix(g, cam)?)?;
    let k = cam.k33::<T>();
    let m = k.mul_vec(&mu);
    let c = cam.principal_point::<T>();
    Ok(Gaussian2 {
        mu_px: Vec2([m.0[0] + c.0[0], m.0[1] + c.0[1]]),
        cov_px: k * cov * k.transpose(),
    })
}
