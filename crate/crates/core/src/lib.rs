//! Anisotropic 3D Gaussian mixtures seen through a perspective camera.
//!
//! Gaussians are projected analytically to 2D ellipses, sampled into
//! per-Gaussian density maps and fit to binary silhouettes by gradient
//! descent. The crate is `no_std` (with `alloc`); enable `std` or
//! `parallel` for host conveniences.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` style checks are meant to reject NaN too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod camera;
pub mod covariance;
pub mod error;
pub mod fit;
pub mod gaussian;
pub mod linalg;
pub mod metrics;
pub mod projection;
pub mod raster;
pub mod scalar;
pub mod scene;
pub mod transform;

pub use camera::Camera;
pub use covariance::{
    build_cov_cholesky, build_cov_condcorr, build_cov_eig, CovBounds, CovParamsChol, CovParamsCondCorr, CovParamsEig,
};
pub use error::{Error, Result};
pub use gaussian::{eval_density3, CanonicalGaussian, EigenFactor, Gaussian2, Gaussian3};
pub use linalg::{Mat2, Mat3, Vec2, Vec3};
pub use metrics::{dssim, iou};
pub use projection::{cone_matrix, conic_to_ellipse, project, ConicMatrix};
pub use raster::{coarse_silhouette, density_loss, eval_density2, rasterize_maps, sum_map, GaussianMaps, MaskImage};
pub use scalar::{Dual, Real};
pub use scene::{render_gt_mask, Ellipsoid, SceneSpec};
pub use transform::{compose_transform, yaw_matrix, PoseTransform};
