//! Exact silhouettes of ellipsoid scenes by ray casting.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussian::validate_cov;
use crate::linalg::{Mat3, Vec3};
use crate::raster::MaskImage;

/// Solid ellipsoid `{x : (x - center)ᵀ shape⁻¹ (x - center) <= 1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub shape: Mat3,
}

impl Ellipsoid {
    pub fn sphere(center: Vec3, radius: f64) -> Self {
        Self { center, shape: Mat3::diag(&Vec3([radius * radius; 3])) }
    }

    pub fn axis_aligned(center: Vec3, semi_axes: Vec3) -> Self {
        Self { center, shape: Mat3::diag(&semi_axes.map(|a| a * a)) }
    }

    /// Spheroid with semi-axis `length` along unit `axis` and `radius` across it.
    pub fn spheroid(center: Vec3, axis: Vec3, length: f64, radius: f64) -> Self {
        let u = axis.scale(1.0 / axis.norm());
        let uu = Mat3::outer(&u, &u);
        let across = (Mat3::identity() - uu).scale(radius * radius);
        Self { center, shape: across + uu.scale(length * length) }
    }

    /// Half-width of the axis-aligned bounding box.
    pub fn extent(&self) -> Vec3 {
        Vec3(core::array::from_fn(|i| libm::sqrt(self.shape.0[i][i])))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub name: String,
    pub ellipsoids: Vec<Ellipsoid>,
}

pub const BUILTIN_SCENES: [&str; 3] = ["sphere", "tripod", "quad"];

impl SceneSpec {
    pub fn new(name: impl Into<String>, ellipsoids: Vec<Ellipsoid>) -> Self {
        Self { name: name.into(), ellipsoids }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let v = |x, y, z| Vec3([x, y, z]);
        let ellipsoids = match name {
            "sphere" => alloc::vec![Ellipsoid::sphere(v(0.0, 0.0, 0.0), 0.5)],
            "tripod" => {
                // image +y points down, so the legs hang below the body
                let mut parts = alloc::vec![Ellipsoid::axis_aligned(v(0.0, -0.35, 0.0), v(0.3, 0.15, 0.3))];
                let tilt: f64 = 0.25;
                for i in 0..3 {
                    let a = PI / 2.0 + i as f64 * 2.0 * PI / 3.0;
                    let (ca, sa) = (libm::cos(a), libm::sin(a));
                    let axis = v(libm::sin(tilt) * ca, libm::cos(tilt), libm::sin(tilt) * sa);
                    parts.push(Ellipsoid::spheroid(v(0.35 * ca, 0.3, 0.35 * sa), axis, 0.3, 0.16));
                }
                parts
            }
            "quad" => {
                let r = 0.45;
                alloc::vec![
                    Ellipsoid::axis_aligned(v(r, r, r), v(0.22, 0.16, 0.18)),
                    Ellipsoid::axis_aligned(v(r, -r, -r), v(0.16, 0.24, 0.16)),
                    Ellipsoid::spheroid(v(-r, r, -r), v(1.0, 0.0, 1.0), 0.26, 0.15),
                    Ellipsoid::spheroid(v(-r, -r, r), v(0.0, 1.0, 1.0), 0.24, 0.16),
                ]
            }
            _ => return None,
        };
        Some(Self::new(name, ellipsoids))
    }

    pub fn validate(&self) -> Result<()> {
        for (i, e) in self.ellipsoids.iter().enumerate() {
            validate_cov(&e.shape, &format!("ellipsoids[{i}].shape"))?;
            let ext = e.extent();
            if (0..3).any(|k| libm::fabs(e.center[k]) + ext[k] > 1.0) {
                return Err(Error::invariant(format!("ellipsoids[{i}]"), "does not fit in [-1, 1]^3"));
            }
        }
        Ok(())
    }
}

/// Binary silhouette of the scene rotated by `yaw_matrix(yaw)`: a pixel is
/// foreground iff the ray through its center hits an ellipsoid in front of
/// the camera.
///
/// Rotating the object is carried out as the equivalent camera orbit, so
/// `render_gt_mask(s, phi, cam)` and `render_gt_mask(s, 0, &cam.orbit_yaw(phi))`
/// are bit-identical.
pub fn render_gt_mask(scene: &SceneSpec, yaw: f64, cam: &Camera) -> MaskImage {
    let view = cam.orbit_yaw(yaw);
    let rot_t = view.rot.transpose();
    struct Prepared {
        prec: Mat3,
        prec_oc: Vec3,
        c: f64,
    }
    let prepared: Vec<Prepared> = scene
        .ellipsoids
        .iter()
        .map(|e| {
            let prec = e.shape.inverse();
            let oc = view.pos - e.center;
            let prec_oc = prec.mul_vec(&oc);
            Prepared { prec, prec_oc, c: oc.dot(&prec_oc) - 1.0 }
        })
        .collect();
    MaskImage::from_fn(cam.width, cam.height, |i, j| {
        let d = rot_t.mul_vec(&view.canonical_point(j as f64 + 0.5, i as f64 + 0.5));
        let hit = prepared.iter().any(|p| {
            let a = p.prec.quad(&d);
            let b = d.dot(&p.prec_oc);
            let disc = b * b - a * p.c;
            // the far root -b + sqrt(disc) must lie in front of the camera
            disc >= 0.0 && -b + libm::sqrt(disc) > 0.0
        });
        if hit {
            1.0
        } else {
            0.0
        }
    })
    .expect("binary values are in range")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_are_valid() {
        for name in BUILTIN_SCENES {
            let s = SceneSpec::builtin(name).unwrap();
            s.validate().unwrap();
        }
        assert_eq!(SceneSpec::builtin("tripod").unwrap().ellipsoids.len(), 4);
        assert!(SceneSpec::builtin("teapot").is_none());
    }

    #[test]
    fn sphere_silhouette_matches_tangent_cone() {
        let cam = Camera::default();
        let mask = render_gt_mask(&SceneSpec::builtin("sphere").unwrap(), 0.0, &cam);
        let r = 128.0 * 0.5 / (4.0f64 - 0.25).sqrt();
        let expected = PI * r * r;
        let count = mask.count_above(0.5) as f64;
        assert!((count - expected).abs() < 0.02 * expected, "{count} vs {expected}");
        // centered: symmetric about the image center
        for i in 0..256 {
            for j in 0..256 {
                assert_eq!(mask.get(i, j), mask.get(255 - i, j));
                assert_eq!(mask.get(i, j), mask.get(i, 255 - j));
            }
        }
    }

    #[test]
    fn empty_scene_is_blank() {
        let mask = render_gt_mask(&SceneSpec::new("empty", Vec::new()), 0.3, &Camera::with_resolution(32, 32));
        assert_eq!(mask.count_above(0.5), 0);
    }

    #[test]
    fn object_yaw_equals_camera_orbit() {
        let cam = Camera::with_resolution(64, 64);
        let scene = SceneSpec::builtin("tripod").unwrap();
        for phi in [0.4, -2.0, 3.0] {
            assert_eq!(render_gt_mask(&scene, phi, &cam), render_gt_mask(&scene, 0.0, &cam.orbit_yaw(phi)));
        }
    }

    #[test]
    fn scene_outside_unit_cube_is_rejected() {
        let s = SceneSpec::new("big", alloc::vec![Ellipsoid::sphere(Vec3([0.8, 0.0, 0.0]), 0.3)]);
        assert!(s.validate().is_err());
    }
}
