//! Silhouette agreement of a model with ground-truth masks.

use gmq_core::{dssim, iou, Camera};

use crate::dataset::View;
use crate::error::{GmqError, Result};
use crate::model_io::ModelFile;
use crate::render::{posed_gaussians, render};

#[derive(Clone, Debug, PartialEq)]
pub struct EvalEntry {
    pub id: String,
    pub iou: f64,
    pub dssim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub tau: f64,
    pub entries: Vec<EvalEntry>,
}

impl EvalReport {
    pub fn mean_iou(&self) -> f64 {
        mean(self.entries.iter().map(|e| e.iou))
    }

    pub fn mean_dssim(&self) -> f64 {
        mean(self.entries.iter().map(|e| e.dssim))
    }
}

fn mean(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len();
    if n == 0 {
        f64::NAN
    } else {
        it.sum::<f64>() / n as f64
    }
}

/// Renders the canonical model (identity part transforms) at each view's
/// yaw and compares its coarse silhouette with the view's mask.
pub fn evaluate(model: &ModelFile, views: &[View], camera: &Camera, tau: f64) -> Result<EvalReport> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(GmqError::Usage(format!("tau {tau} must lie in (0, 1)")));
    }
    let canonical = model.canonical_gaussians();
    let entries = views
        .iter()
        .map(|v| {
            let yaw = v.yaw.ok_or_else(|| GmqError::invariant(format!("{}.yaw_rad", v.id), "evaluation needs a yaw"))?;
            let sil = render(&posed_gaussians(&canonical, None, yaw), camera).silhouette(tau);
            Ok(EvalEntry { id: v.id.clone(), iou: iou(&sil, &v.mask)?, dssim: dssim(&sil, &v.mask)? })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EvalReport { tau, entries })
}
