use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use gmq_core::raster::DEFAULT_TAU;

use crate::error::{GmqError, Result};
use crate::model_io::{ModelFile, TransformRecord};
use crate::render::{posed_gaussians, render};

/// Renders `frames` evenly spaced yaws in [0, 2pi) and writes
/// `frame_NNN_sum.png` and `frame_NNN_sil.png` into `out_dir`.
pub fn turntable(
    model: &ModelFile,
    frames: usize,
    out_dir: &Path,
    transforms: Option<&[TransformRecord]>,
) -> Result<Vec<PathBuf>> {
    if frames == 0 {
        return Err(GmqError::Usage("--frames must be at least 1".into()));
    }
    let camera = model.camera()?;
    let canonical = model.canonical_gaussians();
    std::fs::create_dir_all(out_dir).map_err(|e| GmqError::io(out_dir, e))?;
    let mut written = Vec::new();
    for i in 0..frames {
        let yaw = 2.0 * PI * i as f64 / frames as f64;
        let r = render(&posed_gaussians(&canonical, transforms, yaw), &camera);
        for (suffix, bytes) in [("sum", r.sum_png()), ("sil", r.silhouette_png(DEFAULT_TAU))] {
            let path = out_dir.join(format!("frame_{i:03}_{suffix}.png"));
            std::fs::write(&path, bytes).map_err(|e| GmqError::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}
