//! Flat optimization vector, its layout, and the bounded reparameterization.
//!
//! Every free variable is unbounded; bounds are imposed by smooth maps:
//! means `tanh`, yaw `pi * tanh`, scale `exp(ln 2 * tanh)`, translation
//! `0.3 * tanh`, rotation `pi/4 * tanh`, covariances by the configured
//! construction.

use alloc::vec::Vec;
use core::f64::consts::{LN_2, PI};

use crate::covariance::{
    build_cov_cholesky, build_cov_condcorr, CovBounds, CovParamsChol, CovParamsCondCorr, CovParamsEig,
};
use crate::error::{Error, Result};
use crate::fit::config::{FitMode, Parameterization};
use crate::gaussian::{CanonicalGaussian, EigenFactor, Gaussian3};
use crate::linalg::{Mat3, Vec3};
use crate::scalar::Real;
use crate::transform::{compose_transform, PoseTransform, ROTATION_MAX, TRANSLATION_MAX};

/// Upper bound on the raw variables one (image, Gaussian) pair depends on.
pub const MAX_LOCAL: usize = 22;
/// Raw variables of one per-Gaussian transform (s, t, theta).
pub const TRANSFORM_LEN: usize = 9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    pub mode: FitMode,
    pub parameterization: Parameterization,
    pub k: usize,
    pub n_images: usize,
}

/// Global indices of the raw variables feeding one (image, Gaussian) pair,
/// in local slot order: mean, covariance, then (canonical mode) yaw and
/// transform.
#[derive(Clone, Copy, Debug)]
pub struct LocalIndices {
    pub slots: [usize; MAX_LOCAL],
    pub len: usize,
}

impl LocalIndices {
    pub fn as_slice(&self) -> &[usize] {
        &self.slots[..self.len]
    }
}

impl ParamLayout {
    pub fn new(mode: FitMode, parameterization: Parameterization, k: usize, n_images: usize) -> Self {
        Self { mode, parameterization, k, n_images }
    }

    pub fn gaussian_len(&self) -> usize {
        3 + self.parameterization.cov_len()
    }

    fn image_len(&self) -> usize {
        1 + self.k * TRANSFORM_LEN
    }

    /// Number of Gaussian groups: one per image in single mode, one shared.
    pub fn groups(&self) -> usize {
        match self.mode {
            FitMode::Single => self.n_images,
            FitMode::Canonical => 1,
        }
    }

    pub fn len(&self) -> usize {
        let gaussians = self.groups() * self.k * self.gaussian_len();
        match self.mode {
            FitMode::Single => gaussians,
            FitMode::Canonical => gaussians + self.n_images * self.image_len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group_of(&self, image: usize) -> usize {
        match self.mode {
            FitMode::Single => image,
            FitMode::Canonical => 0,
        }
    }

    pub fn gaussian_offset(&self, group: usize, k: usize) -> usize {
        (group * self.k + k) * self.gaussian_len()
    }

    pub fn yaw_offset(&self, image: usize) -> Option<usize> {
        match self.mode {
            FitMode::Single => None,
            FitMode::Canonical => Some(self.k * self.gaussian_len() + image * self.image_len()),
        }
    }

    pub fn transform_offset(&self, image: usize, k: usize) -> Option<usize> {
        self.yaw_offset(image).map(|y| y + 1 + k * TRANSFORM_LEN)
    }

    pub fn local_len(&self) -> usize {
        match self.mode {
            FitMode::Single => self.gaussian_len(),
            FitMode::Canonical => self.gaussian_len() + 1 + TRANSFORM_LEN,
        }
    }

    pub fn local_indices(&self, image: usize, k: usize) -> LocalIndices {
        let mut slots = [0usize; MAX_LOCAL];
        let g = self.gaussian_offset(self.group_of(image), k);
        let mut n = 0;
        for i in 0..self.gaussian_len() {
            slots[n] = g + i;
            n += 1;
        }
        if let (Some(y), Some(t)) = (self.yaw_offset(image), self.transform_offset(image, k)) {
            slots[n] = y;
            n += 1;
            for i in 0..TRANSFORM_LEN {
                slots[n] = t + i;
                n += 1;
            }
        }
        LocalIndices { slots, len: n }
    }
}

/// Raw covariance variables of one Gaussian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CovRaw {
    Eig { v1: [f64; 3], v2: [f64; 3], eig: [f64; 3] },
    Cholesky { diag: [f64; 3], offdiag: [f64; 3] },
    CondCorr { sigma: [f64; 3], c12: f64, c13: f64, c23g1: f64 },
}

impl CovRaw {
    pub fn parameterization(&self) -> Parameterization {
        match self {
            CovRaw::Eig { .. } => Parameterization::Eig,
            CovRaw::Cholesky { .. } => Parameterization::Cholesky,
            CovRaw::CondCorr { .. } => Parameterization::CondCorr,
        }
    }

    fn write(&self, out: &mut Vec<f64>) {
        match self {
            CovRaw::Eig { v1, v2, eig } => {
                out.extend_from_slice(v1);
                out.extend_from_slice(v2);
                out.extend_from_slice(eig);
            }
            CovRaw::Cholesky { diag, offdiag } => {
                out.extend_from_slice(diag);
                out.extend_from_slice(offdiag);
            }
            CovRaw::CondCorr { sigma, c12, c13, c23g1 } => {
                out.extend_from_slice(sigma);
                out.extend_from_slice(&[*c12, *c13, *c23g1]);
            }
        }
    }

    fn read(p: Parameterization, s: &[f64]) -> Self {
        let v3 = |o: usize| [s[o], s[o + 1], s[o + 2]];
        match p {
            Parameterization::Eig => CovRaw::Eig { v1: v3(0), v2: v3(3), eig: v3(6) },
            Parameterization::Cholesky => CovRaw::Cholesky { diag: v3(0), offdiag: v3(3) },
            Parameterization::CondCorr => CovRaw::CondCorr { sigma: v3(0), c12: s[3], c13: s[4], c23g1: s[5] },
        }
    }
}

/// Raw variables of one Gaussian: mean pre-image and covariance raws.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianRaw {
    pub mean: [f64; 3],
    pub cov: CovRaw,
}

/// Raw variables of one image (canonical mode).
#[derive(Clone, Debug, PartialEq)]
pub struct ImageRaw {
    pub yaw: f64,
    pub transforms: Vec<[f64; TRANSFORM_LEN]>,
}

/// Structured view of a [`ParamVector`].
#[derive(Clone, Debug, PartialEq)]
pub struct RawModel {
    pub groups: Vec<Vec<GaussianRaw>>,
    pub images: Vec<ImageRaw>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamVector {
    pub layout: ParamLayout,
    pub values: Vec<f64>,
}

impl ParamVector {
    pub fn zeros(layout: ParamLayout) -> Self {
        Self { layout, values: alloc::vec![0.0; layout.len()] }
    }

    pub fn unpack(&self) -> RawModel {
        let l = &self.layout;
        let groups = (0..l.groups())
            .map(|g| {
                (0..l.k)
                    .map(|k| {
                        let o = l.gaussian_offset(g, k);
                        let s = &self.values[o..o + l.gaussian_len()];
                        GaussianRaw { mean: [s[0], s[1], s[2]], cov: CovRaw::read(l.parameterization, &s[3..]) }
                    })
                    .collect()
            })
            .collect();
        let images = match l.mode {
            FitMode::Single => Vec::new(),
            FitMode::Canonical => (0..l.n_images)
                .map(|i| {
                    let y = l.yaw_offset(i).unwrap();
                    let transforms = (0..l.k)
                        .map(|k| {
                            let o = l.transform_offset(i, k).unwrap();
                            core::array::from_fn(|j| self.values[o + j])
                        })
                        .collect();
                    ImageRaw { yaw: self.values[y], transforms }
                })
                .collect(),
        };
        RawModel { groups, images }
    }

    pub fn pack(layout: ParamLayout, model: &RawModel) -> Result<Self> {
        let shape_ok = model.groups.len() == layout.groups()
            && model.groups.iter().all(|g| g.len() == layout.k)
            && model.groups.iter().flatten().all(|g| g.cov.parameterization() == layout.parameterization)
            && match layout.mode {
                FitMode::Single => model.images.is_empty(),
                FitMode::Canonical => {
                    model.images.len() == layout.n_images && model.images.iter().all(|i| i.transforms.len() == layout.k)
                }
            };
        if !shape_ok {
            return Err(Error::DimensionMismatch(alloc::string::String::from("raw model does not match layout")));
        }
        let mut values = Vec::with_capacity(layout.len());
        for g in model.groups.iter().flatten() {
            values.extend_from_slice(&g.mean);
            g.cov.write(&mut values);
        }
        for img in &model.images {
            values.push(img.yaw);
            for t in &img.transforms {
                values.extend_from_slice(t);
            }
        }
        Ok(Self { layout, values })
    }

    /// Raw values of one (image, Gaussian) pair, lifted into `T`.
    pub fn local<T: Real>(&self, image: usize, k: usize) -> ([T; MAX_LOCAL], usize) {
        let idx = self.layout.local_indices(image, k);
        let mut out = [T::zero(); MAX_LOCAL];
        for (o, &i) in out.iter_mut().zip(idx.as_slice()) {
            *o = T::from_f64(self.values[i]);
        }
        (out, idx.len)
    }
}

pub fn mean_from_raw<T: Real>(raw: &[T]) -> Vec3<T> {
    Vec3([raw[0].tanh(), raw[1].tanh(), raw[2].tanh()])
}

pub fn yaw_from_raw<T: Real>(raw: T) -> T {
    raw.tanh() * PI
}

pub fn transform_from_raw<T: Real>(raw: &[T], yaw: T) -> PoseTransform<T> {
    let v = |o: usize, f: &dyn Fn(T) -> T| Vec3([f(raw[o]), f(raw[o + 1]), f(raw[o + 2])]);
    PoseTransform {
        s: v(0, &|r: T| (r.tanh() * LN_2).exp()),
        t: v(3, &|r: T| r.tanh() * TRANSLATION_MAX),
        theta: v(6, &|r: T| r.tanh() * ROTATION_MAX),
        yaw,
    }
}

/// `atanh` clamped away from the asymptotes; inverse of the `tanh` maps.
pub fn atanh_clamped(x: f64) -> f64 {
    libm::atanh(x.clamp(-1.0 + 1e-12, 1.0 - 1e-12))
}

pub fn raw_from_yaw(yaw: f64) -> f64 {
    // wrap into [-pi, pi) first
    let wrapped = yaw - 2.0 * PI * libm::floor((yaw + PI) / (2.0 * PI));
    atanh_clamped(wrapped / PI)
}

fn vec3<T: Real>(s: &[T]) -> Vec3<T> {
    Vec3([s[0], s[1], s[2]])
}

/// Covariance (and eigen-factor when the construction provides one) from
/// raw covariance variables. Returns `true` in the flag when the eig
/// orientation was degenerate and the fallback basis was used.
pub fn cov_from_raw<T: Real>(
    p: Parameterization,
    bounds: CovBounds,
    raw: &[T],
) -> (Mat3<T>, Option<EigenFactor<T>>, bool) {
    match p {
        Parameterization::Eig => {
            let params = CovParamsEig { v1_raw: vec3(raw), v2_raw: vec3(&raw[3..]), eig_raw: vec3(&raw[6..]), bounds };
            let (factor, degenerate) = params.factor_or_fallback();
            (factor.covariance(), Some(factor), degenerate)
        }
        Parameterization::Cholesky => {
            let params = CovParamsChol { diag_raw: vec3(raw), offdiag: vec3(&raw[3..]), bounds: Some(bounds) };
            (build_cov_cholesky(&params), None, false)
        }
        Parameterization::CondCorr => {
            let params = CovParamsCondCorr {
                sigma_raw: vec3(raw),
                c12_raw: raw[3],
                c13_raw: raw[4],
                c23g1_raw: raw[5],
                bounds,
            };
            (build_cov_condcorr(&params), None, false)
        }
    }
}

/// The world-space Gaussian of one (image, Gaussian) pair from its local
/// raw slots (see [`LocalIndices`]).
pub fn local_gaussian<T: Real>(layout: &ParamLayout, bounds: CovBounds, local: &[T]) -> Result<Gaussian3<T>> {
    let mu = mean_from_raw(local);
    let cov_end = layout.gaussian_len();
    let (cov, factor, _) = cov_from_raw(layout.parameterization, bounds, &local[3..cov_end]);
    match layout.mode {
        FitMode::Single => Ok(Gaussian3 { mu, cov }),
        FitMode::Canonical => {
            let factor = factor.ok_or_else(|| {
                Error::ConfigInvalid(alloc::string::String::from("canonical mode needs an eigen-factor"))
            })?;
            let yaw = yaw_from_raw(local[cov_end]);
            let tf = transform_from_raw(&local[cov_end + 1..], yaw);
            Ok(compose_transform(&CanonicalGaussian { mu, factor }, &tf))
        }
    }
}

/// A fitted Gaussian in model units with the raws it came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FittedGaussian {
    pub canonical: CanonicalGaussian,
    pub cov: Mat3,
    pub raw: GaussianRaw,
}

impl FittedGaussian {
    pub fn gaussian(&self) -> Gaussian3 {
        Gaussian3 { mu: self.canonical.mu, cov: self.cov }
    }
}

/// Per-image yaw and part transforms.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePose {
    pub yaw: f64,
    pub transforms: Vec<PoseTransform>,
}

/// Bounded model values realized from a raw vector.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelValues {
    pub mode: FitMode,
    pub parameterization: Parameterization,
    /// One set of K Gaussians per group (per image in single mode).
    pub groups: Vec<Vec<FittedGaussian>>,
    pub images: Vec<ImagePose>,
}

impl ModelValues {
    /// World-space Gaussians seen in image `i`.
    pub fn image_gaussians(&self, i: usize) -> Vec<Gaussian3> {
        match self.mode {
            FitMode::Single => self.groups[i].iter().map(FittedGaussian::gaussian).collect(),
            FitMode::Canonical => self.groups[0]
                .iter()
                .zip(&self.images[i].transforms)
                .map(|(g, tf)| compose_transform(&g.canonical, tf))
                .collect(),
        }
    }
}

pub fn reparameterize(raw: &ParamVector, bounds: CovBounds) -> ModelValues {
    let l = raw.layout;
    let unpacked = raw.unpack();
    let groups = unpacked
        .groups
        .iter()
        .enumerate()
        .map(|(g, set)| {
            set.iter()
                .enumerate()
                .map(|(k, gr)| {
                    let o = l.gaussian_offset(g, k);
                    let s = &raw.values[o..o + l.gaussian_len()];
                    let mu = mean_from_raw(s);
                    let (cov, factor, _) = cov_from_raw(l.parameterization, bounds, &s[3..]);
                    let factor = factor.unwrap_or_else(|| Gaussian3 { mu, cov }.eigen_factor());
                    FittedGaussian { canonical: CanonicalGaussian { mu, factor }, cov, raw: *gr }
                })
                .collect()
        })
        .collect();
    let images = match l.mode {
        FitMode::Single => (0..l.n_images)
            .map(|_| ImagePose { yaw: 0.0, transforms: alloc::vec![PoseTransform::identity(); l.k] })
            .collect(),
        FitMode::Canonical => unpacked
            .images
            .iter()
            .map(|img| {
                let yaw = yaw_from_raw(img.yaw);
                ImagePose { yaw, transforms: img.transforms.iter().map(|t| transform_from_raw(t, yaw)).collect() }
            })
            .collect(),
    };
    ModelValues { mode: l.mode, parameterization: l.parameterization, groups, images }
}
