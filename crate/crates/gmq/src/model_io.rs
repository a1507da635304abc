//! Versioned JSON model files.
//!
//! Floats are written in shortest round-trip form, so a parse of a written
//! file reproduces every value bit for bit.

use std::path::Path;

use gmq_core::fit::layout::{CovRaw, GaussianRaw};
use gmq_core::fit::{FitMode, FitResult, Parameterization};
use gmq_core::gaussian::validate_cov;
use gmq_core::transform::validate_yaw;
use gmq_core::{Camera, CanonicalGaussian, Gaussian3, Mat3, PoseTransform, Vec3};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{GmqError, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraRecord {
    pub fx: f64,
    pub fy: f64,
    pub skew: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    pub pos: [f64; 3],
    pub rot: [[f64; 3]; 3],
}

impl From<&Camera> for CameraRecord {
    fn from(c: &Camera) -> Self {
        Self {
            fx: c.fx,
            fy: c.fy,
            skew: c.skew,
            cx: c.cx,
            cy: c.cy,
            width: c.width,
            height: c.height,
            pos: c.pos.0,
            rot: c.rot.0,
        }
    }
}

impl CameraRecord {
    pub fn to_camera(&self) -> Result<Camera> {
        let cam = Camera {
            fx: self.fx,
            fy: self.fy,
            skew: self.skew,
            cx: self.cx,
            cy: self.cy,
            width: self.width,
            height: self.height,
            rot: Mat3(self.rot),
            pos: Vec3(self.pos),
        };
        cam.validate()?;
        Ok(cam)
    }
}

/// Raw optimizer variables behind a fitted Gaussian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawRecord {
    Eig { mean: [f64; 3], v1: [f64; 3], v2: [f64; 3], eig: [f64; 3] },
    Cholesky { mean: [f64; 3], diag: [f64; 3], offdiag: [f64; 3] },
    CondCorr { mean: [f64; 3], sigma: [f64; 3], c12: f64, c13: f64, c23g1: f64 },
}

impl From<&GaussianRaw> for RawRecord {
    fn from(g: &GaussianRaw) -> Self {
        let mean = g.mean;
        match g.cov {
            CovRaw::Eig { v1, v2, eig } => RawRecord::Eig { mean, v1, v2, eig },
            CovRaw::Cholesky { diag, offdiag } => RawRecord::Cholesky { mean, diag, offdiag },
            CovRaw::CondCorr { sigma, c12, c13, c23g1 } => RawRecord::CondCorr { mean, sigma, c12, c13, c23g1 },
        }
    }
}

impl RawRecord {
    pub fn parameterization(&self) -> Parameterization {
        match self {
            RawRecord::Eig { .. } => Parameterization::Eig,
            RawRecord::Cholesky { .. } => Parameterization::Cholesky,
            RawRecord::CondCorr { .. } => Parameterization::CondCorr,
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            RawRecord::Eig { mean, v1, v2, eig } => [*mean, *v1, *v2, *eig].concat(),
            RawRecord::Cholesky { mean, diag, offdiag } => [*mean, *diag, *offdiag].concat(),
            RawRecord::CondCorr { mean, sigma, c12, c13, c23g1 } => [&mean[..], &sigma[..], &[*c12, *c13, *c23g1]].concat(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianRecord {
    pub mu: [f64; 3],
    pub cov: [[f64; 3]; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawRecord>,
}

impl GaussianRecord {
    pub fn gaussian(&self) -> Gaussian3 {
        Gaussian3 { mu: Vec3(self.mu), cov: Mat3(self.cov) }
    }

    pub fn from_gaussian(g: &Gaussian3) -> Self {
        Self { mu: g.mu.0, cov: g.cov.0, raw: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformRecord {
    pub s: [f64; 3],
    pub t: [f64; 3],
    pub theta: [f64; 3],
}

impl TransformRecord {
    pub fn identity() -> Self {
        Self::from_transform(&PoseTransform::identity())
    }

    pub fn from_transform(tf: &PoseTransform) -> Self {
        Self { s: tf.s.0, t: tf.t.0, theta: tf.theta.0 }
    }

    pub fn with_yaw(&self, yaw: f64) -> PoseTransform {
        PoseTransform { s: Vec3(self.s), t: Vec3(self.t), theta: Vec3(self.theta), yaw }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageRecord {
    pub id: String,
    pub yaw_rad: f64,
    pub transforms: Vec<TransformRecord>,
    /// Independently fitted Gaussians of this image (single mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gaussians: Option<Vec<GaussianRecord>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub version: u32,
    pub k: usize,
    pub parameterization: String,
    #[serde(default = "default_mode")]
    pub mode: String,
    pub camera: CameraRecord,
    pub canonical: Vec<GaussianRecord>,
    pub images: Vec<ImageRecord>,
    /// Edit counter of a posing session the file was exported from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub revision: Option<u64>,
}

fn default_mode() -> String {
    FitMode::Canonical.as_str().to_string()
}

/// Parses JSON, reporting the path of the offending field on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str, file: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| GmqError::Parse {
        file: file.to_string(),
        field: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("model records serialize");
    s.push('\n');
    s
}

fn check_finite(values: &[f64], field: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(GmqError::invariant(field, "non-finite value"))
    }
}

fn validate_gaussian(g: &GaussianRecord, field: &str, p: Parameterization) -> Result<()> {
    check_finite(&g.mu, &format!("{field}.mu"))?;
    if g.mu.iter().any(|m| m.abs() > 1.0) {
        return Err(GmqError::invariant(format!("{field}.mu"), "outside [-1, 1]"));
    }
    validate_cov(&Mat3(g.cov), &format!("{field}.cov"))?;
    if let Some(raw) = &g.raw {
        if raw.parameterization() != p {
            return Err(GmqError::invariant(format!("{field}.raw"), format!("does not match parameterization {p}")));
        }
        check_finite(&raw.values(), &format!("{field}.raw"))?;
    }
    Ok(())
}

impl ModelFile {
    pub fn parameterization(&self) -> Result<Parameterization> {
        self.parameterization
            .parse()
            .map_err(|_| GmqError::invariant("parameterization", format!("unknown value {:?}", self.parameterization)))
    }

    pub fn mode(&self) -> Result<FitMode> {
        self.mode.parse().map_err(|_| GmqError::invariant("mode", format!("unknown value {:?}", self.mode)))
    }

    pub fn camera(&self) -> Result<Camera> {
        self.camera.to_camera()
    }

    /// Structural and numerical checks beyond the JSON schema.
    pub fn validate(&self) -> Result<()> {
        if self.version != MODEL_VERSION {
            return Err(GmqError::invariant("version", format!("unsupported version {}", self.version)));
        }
        let p = self.parameterization()?;
        self.mode()?;
        self.camera()?;
        if self.k != self.canonical.len() {
            return Err(GmqError::invariant("k", format!("k = {} but {} canonical gaussians", self.k, self.canonical.len())));
        }
        for (i, g) in self.canonical.iter().enumerate() {
            validate_gaussian(g, &format!("canonical[{i}]"), p)?;
        }
        for (i, img) in self.images.iter().enumerate() {
            let field = format!("images[{i}]");
            validate_yaw(img.yaw_rad, &format!("{field}.yaw_rad"))?;
            if img.transforms.len() != self.k {
                return Err(GmqError::invariant(format!("{field}.transforms"), format!("expected {} entries", self.k)));
            }
            for (j, tf) in img.transforms.iter().enumerate() {
                let f = format!("{field}.transforms[{j}]");
                check_finite(&[tf.s, tf.t, tf.theta].concat(), &f)?;
                tf.with_yaw(0.0).validate_local(&f)?;
            }
            if let Some(gs) = &img.gaussians {
                if gs.len() != self.k {
                    return Err(GmqError::invariant(format!("{field}.gaussians"), format!("expected {} entries", self.k)));
                }
                for (j, g) in gs.iter().enumerate() {
                    validate_gaussian(g, &format!("{field}.gaussians[{j}]"), p)?;
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str, file: &str) -> Result<Self> {
        let m: ModelFile = parse_json(text, file)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| GmqError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, to_json(self)).map_err(|e| GmqError::io(path, e))
    }

    pub fn canonical_gaussians(&self) -> Vec<CanonicalGaussian> {
        self.canonical.iter().map(|g| CanonicalGaussian::from_gaussian(&g.gaussian())).collect()
    }

    /// Builds a model file from a fit. `ids` name the fitted images in order.
    pub fn from_fit(result: &FitResult, camera: &Camera, ids: &[String]) -> Self {
        let cfg = &result.config;
        let record = |g: &gmq_core::fit::FittedGaussian| GaussianRecord {
            mu: g.canonical.mu.0,
            cov: g.cov.0,
            raw: Some(RawRecord::from(&g.raw)),
        };
        let canonical = result.model.groups[0].iter().map(record).collect();
        let images = result
            .model
            .images
            .iter()
            .enumerate()
            .map(|(i, pose)| ImageRecord {
                id: ids.get(i).cloned().unwrap_or_else(|| format!("image-{i}")),
                yaw_rad: pose.yaw,
                transforms: pose.transforms.iter().map(TransformRecord::from_transform).collect(),
                gaussians: match cfg.mode {
                    FitMode::Single => Some(result.model.groups[i].iter().map(record).collect()),
                    FitMode::Canonical => None,
                },
            })
            .collect();
        Self {
            version: MODEL_VERSION,
            k: cfg.k,
            parameterization: cfg.parameterization.as_str().to_string(),
            mode: cfg.mode.as_str().to_string(),
            camera: CameraRecord::from(camera),
            canonical,
            images,
            revision: None,
        }
    }

    /// A model of fixed canonical Gaussians and no images.
    pub fn from_gaussians(gaussians: &[Gaussian3], camera: &Camera) -> Self {
        Self {
            version: MODEL_VERSION,
            k: gaussians.len(),
            parameterization: Parameterization::Eig.as_str().to_string(),
            mode: FitMode::Canonical.as_str().to_string(),
            camera: CameraRecord::from(camera),
            canonical: gaussians.iter().map(GaussianRecord::from_gaussian).collect(),
            images: Vec::new(),
            revision: None,
        }
    }
}
