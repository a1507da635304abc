use crate::error::{Error, Result};
use crate::linalg::{Mat2, Mat3, Vec2, Vec3};
use crate::scalar::Real;
use crate::transform::yaw_matrix;

/// Perspective pinhole camera. `rot` maps world directions to the camera
/// frame, whose +z axis is the viewing direction and +y points down the image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub skew: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub rot: Mat3,
    pub pos: Vec3,
}

/// Distance from the camera center to the world origin in the default setup.
pub const DEFAULT_DISTANCE: f64 = 2.0;

impl Default for Camera {
    fn default() -> Self {
        Self::with_resolution(256, 256)
    }
}

impl Camera {
    /// Default rig at `width x height`: 90° vertical angle of view, looking
    /// down +z at the origin from distance 2.
    pub fn with_resolution(width: usize, height: usize) -> Self {
        let (w, h) = (width as f64, height as f64);
        Self {
            fx: h / 2.0,
            fy: h / 2.0,
            skew: 0.0,
            cx: w / 2.0,
            cy: h / 2.0,
            width,
            height,
            rot: Mat3::identity(),
            pos: Vec3([0.0, 0.0, -DEFAULT_DISTANCE]),
        }
    }

    /// Same pose, intrinsics rescaled to a new raster size.
    pub fn resized(&self, width: usize, height: usize) -> Self {
        let sx = width as f64 / self.width as f64;
        let sy = height as f64 / self.height as f64;
        Self {
            fx: self.fx * sx,
            fy: self.fy * sy,
            skew: self.skew * sx,
            cx: self.cx * sx,
            cy: self.cy * sy,
            width,
            height,
            ..*self
        }
    }

    /// The camera that sees the unrotated scene exactly as this camera sees
    /// the scene rotated by `yaw_matrix(phi)`: it orbits the origin by `-phi`.
    pub fn orbit_yaw(&self, phi: f64) -> Self {
        let r = yaw_matrix(phi);
        Self { rot: self.rot * r, pos: r.transpose().mul_vec(&self.pos), ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.fx, self.fy, self.skew, self.cx, self.cy].iter().all(|x| x.is_finite())
            && self.rot.is_finite()
            && self.pos.is_finite();
        if !finite {
            return Err(Error::invariant("camera", "non-finite entry"));
        }
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::invariant("camera", "focal lengths must be positive"));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::invariant("camera", "empty raster"));
        }
        if (self.rot.transpose() * self.rot - Mat3::identity()).max_abs() > 1e-10 {
            return Err(Error::invariant("camera.rot", "not orthonormal"));
        }
        Ok(())
    }

    /// Upper-left 2x2 block of the intrinsic matrix.
    pub fn k33<T: Real>(&self) -> Mat2<T> {
        Mat2([[self.fx, self.skew], [0.0, self.fy]]).lift()
    }

    pub fn principal_point<T: Real>(&self) -> Vec2<T> {
        Vec2([T::from_f64(self.cx), T::from_f64(self.cy)])
    }

    /// World point into camera coordinates.
    pub fn to_camera<T: Real>(&self, x: &Vec3<T>) -> Vec3<T> {
        self.rot.lift().mul_vec(&(*x - self.pos.lift()))
    }

    /// Pinhole projection of a point; `None` behind the image plane.
    pub fn project_point(&self, x: &Vec3) -> Option<Vec2> {
        let c = self.to_camera(x);
        if c[2] <= 0.0 {
            return None;
        }
        let (u, v) = (c[0] / c[2], c[1] / c[2]);
        Some(Vec2([self.fx * u + self.skew * v + self.cx, self.fy * v + self.cy]))
    }

    /// Direction (camera frame, on the plane z = 1) of the ray through pixel
    /// coordinates `(u, v)`.
    pub fn canonical_point(&self, u: f64, v: f64) -> Vec3 {
        let y = (v - self.cy) / self.fy;
        let x = (u - self.cx - self.skew * y) / self.fx;
        Vec3([x, y, 1.0])
    }

    /// World-space ray `(origin, direction)` through pixel coordinates `(u, v)`.
    pub fn pixel_ray(&self, u: f64, v: f64) -> (Vec3, Vec3) {
        (self.pos, self.rot.transpose().mul_vec(&self.canonical_point(u, v)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_camera_has_90_degree_view() {
        let c = Camera::default();
        assert_eq!((c.fx, c.cx, c.cy, c.width), (128.0, 128.0, 128.0, 256));
        // top edge of the image at depth 1 is at y = -1: half-angle 45°
        let p = c.canonical_point(128.0, 0.0);
        assert_eq!(p.0, [0.0, -1.0, 1.0]);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn orbit_matches_rotated_point() {
        let c = Camera::default();
        let x = Vec3([0.3, -0.2, 0.4]);
        let phi = 0.9;
        let rotated = yaw_matrix(phi).mul_vec(&x);
        let a = c.project_point(&rotated).unwrap();
        let b = c.orbit_yaw(phi).project_point(&x).unwrap();
        assert!((a.0[0] - b.0[0]).abs() < 1e-12 && (a.0[1] - b.0[1]).abs() < 1e-12);
    }

    #[test]
    fn ray_passes_through_projected_point() {
        let c = Camera { skew: 3.0, ..Camera::default() };
        let x = Vec3([0.2, 0.1, -0.3]);
        let px = c.project_point(&x).unwrap();
        let (o, d) = c.pixel_ray(px.0[0], px.0[1]);
        let to_x = x - o;
        assert!(to_x.cross(&d).norm() < 1e-12 * to_x.norm() * d.norm());
    }
}
