//! Synthetic datasets: seeded views of an ellipsoid scene written as PNG
//! masks plus a JSON manifest.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use gmq_core::fit::{Dataset, Observation};
use gmq_core::transform::validate_yaw;
use gmq_core::{render_gt_mask, Camera, Ellipsoid, MaskImage, Mat3, SceneSpec, Vec3};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GmqError, Result};
use crate::mask_io::{downsample, load_mask, save_mask};
use crate::model_io::{parse_json, to_json, CameraRecord};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = GmqError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(GmqError::Usage(format!("unknown split {other:?} (expected train or test)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipsoidRecord {
    pub center: [f64; 3],
    pub shape: [[f64; 3]; 3],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecord {
    pub name: String,
    pub ellipsoids: Vec<EllipsoidRecord>,
}

impl From<&SceneSpec> for SceneRecord {
    fn from(s: &SceneSpec) -> Self {
        Self {
            name: s.name.clone(),
            ellipsoids: s
                .ellipsoids
                .iter()
                .map(|e| EllipsoidRecord { center: e.center.0, shape: e.shape.0 })
                .collect(),
        }
    }
}

impl SceneRecord {
    pub fn to_scene(&self) -> Result<SceneSpec> {
        let scene = SceneSpec::new(
            self.name.clone(),
            self.ellipsoids
                .iter()
                .map(|e| Ellipsoid { center: Vec3(e.center), shape: Mat3(e.shape) })
                .collect(),
        );
        scene.validate()?;
        Ok(scene)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    /// Mask path, relative to the manifest's directory.
    pub mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub yaw_rad: Option<f64>,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub camera: CameraRecord,
    pub entries: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene: Option<SceneRecord>,
}

/// One loaded view.
#[derive(Clone, Debug, PartialEq)]
pub struct View {
    pub id: String,
    pub mask: MaskImage,
    pub yaw: Option<f64>,
    pub split: Split,
}

/// A manifest together with the directory its mask paths are relative to.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadedManifest {
    pub manifest: Manifest,
    pub base: PathBuf,
}

/// Seeded yaws in [-pi, pi) and a 90/10 train/test split (test count
/// rounded, at least one test view from 10 views on).
pub fn plan_views(n_views: usize, seed: u64) -> (Vec<f64>, Vec<Split>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let yaws: Vec<f64> = (0..n_views).map(|_| rng.gen_range(-PI..PI)).collect();
    let n_test = (n_views as f64 * 0.1).round() as usize;
    let mut order: Vec<usize> = (0..n_views).collect();
    order.shuffle(&mut rng);
    let mut splits = vec![Split::Train; n_views];
    for &i in &order[..n_test] {
        splits[i] = Split::Test;
    }
    (yaws, splits)
}

/// Renders `n_views` masks of `scene` and writes them with a manifest into
/// `out_dir`.
pub fn make_dataset(scene: &SceneSpec, n_views: usize, seed: u64, out_dir: &Path, camera: &Camera) -> Result<Manifest> {
    if n_views == 0 {
        return Err(GmqError::Usage("--views must be at least 1".into()));
    }
    scene.validate()?;
    camera.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| GmqError::io(out_dir, e))?;
    let (yaws, splits) = plan_views(n_views, seed);
    let mut entries = Vec::with_capacity(n_views);
    for (i, (yaw, split)) in yaws.iter().zip(splits).enumerate() {
        let name = format!("mask_{i:03}.png");
        save_mask(&out_dir.join(&name), &render_gt_mask(scene, *yaw, camera))?;
        entries.push(ManifestEntry { mask: name, yaw_rad: Some(*yaw), split });
    }
    let manifest = Manifest {
        version: MANIFEST_VERSION,
        camera: CameraRecord::from(camera),
        entries,
        scene: Some(SceneRecord::from(scene)),
    };
    let path = out_dir.join(MANIFEST_NAME);
    std::fs::write(&path, to_json(&manifest)).map_err(|e| GmqError::io(&path, e))?;
    Ok(manifest)
}

impl LoadedManifest {
    /// Accepts the manifest file itself or a directory containing one.
    pub fn load(path: &Path) -> Result<Self> {
        let file = if path.is_dir() { path.join(MANIFEST_NAME) } else { path.to_path_buf() };
        let text = std::fs::read_to_string(&file).map_err(|e| GmqError::io(&file, e))?;
        let manifest: Manifest = parse_json(&text, &file.display().to_string())?;
        let base = file.parent().map(Path::to_path_buf).unwrap_or_default();
        let loaded = Self { manifest, base };
        loaded.validate()?;
        Ok(loaded)
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.manifest;
        if m.version != MANIFEST_VERSION {
            return Err(GmqError::invariant("version", format!("unsupported version {}", m.version)));
        }
        m.camera.to_camera()?;
        if m.entries.is_empty() {
            return Err(GmqError::invariant("entries", "no entries"));
        }
        for (i, e) in m.entries.iter().enumerate() {
            if let Some(y) = e.yaw_rad {
                validate_yaw(y, &format!("entries[{i}].yaw_rad"))?;
            }
            if !self.base.join(&e.mask).is_file() {
                return Err(GmqError::invariant(format!("entries[{i}].mask"), format!("{} does not exist", e.mask)));
            }
        }
        if let Some(s) = &m.scene {
            s.to_scene()?;
        }
        Ok(())
    }

    pub fn camera(&self) -> Result<Camera> {
        self.manifest.camera.to_camera()
    }

    /// Views of one split, or all views when `split` is `None`.
    pub fn views(&self, split: Option<Split>) -> Result<Vec<View>> {
        let cam = self.camera()?;
        self.manifest
            .entries
            .iter()
            .filter(|e| split.is_none_or(|s| s == e.split))
            .map(|e| {
                let mask = load_mask(&self.base.join(&e.mask))?;
                if mask.width() != cam.width || mask.height() != cam.height {
                    return Err(GmqError::Core(gmq_core::Error::DimensionMismatch(format!(
                        "{}: mask is {}x{}, camera is {}x{}",
                        e.mask,
                        mask.width(),
                        mask.height(),
                        cam.width,
                        cam.height
                    ))));
                }
                Ok(View { id: e.mask.clone(), mask, yaw: e.yaw_rad, split: e.split })
            })
            .collect()
    }
}

/// Fitting dataset from views, optionally box-downsampled to `resolution`
/// (which must divide the mask size).
pub fn to_dataset(views: &[View], camera: &Camera, resolution: Option<usize>) -> Result<(Dataset, Camera)> {
    let mut cam = *camera;
    let mut factor = 1;
    if let Some(r) = resolution {
        if r == 0 || !camera.width.is_multiple_of(r) || !camera.height.is_multiple_of(r) || camera.width != camera.height {
            return Err(GmqError::Usage(format!(
                "resolution {r} must divide the square mask size {}x{}",
                camera.width, camera.height
            )));
        }
        factor = camera.width / r;
        cam = camera.resized(r, r);
    }
    let observations = views
        .iter()
        .map(|v| Ok(Observation { mask: downsample(&v.mask, factor)?, camera: cam, yaw_hint: v.yaw }))
        .collect::<Result<Vec<_>>>()?;
    Ok((Dataset::new(observations), cam))
}
