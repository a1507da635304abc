//! Loss and exact gradient of the silhouette objective.
//!
//! Per (image, Gaussian) pair the projected ellipse parameters
//! `(mu_x, mu_y, a, b, c)` are computed in forward mode with respect to the
//! pair's local raws. The pixel sum is then differentiated in reverse with
//! respect to those five values only, and chained through the tangents.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::LN_2;

use crate::camera::Camera;
use crate::covariance::CovBounds;
use crate::error::{Error, Result};
use crate::fit::config::{FitConfig, FitMode};
use crate::fit::layout::{local_gaussian, ParamLayout, ParamVector, MAX_LOCAL, TRANSFORM_LEN};
use crate::gaussian::Gaussian2;
use crate::projection::project;
use crate::raster::{CompensatedSum, Footprint, MaskImage, DENSITY_CUTOFF};
use crate::scalar::{Dual, Real};
use crate::transform::{ROTATION_MAX, TRANSLATION_MAX};

type D = Dual<MAX_LOCAL>;

/// One training view.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub mask: MaskImage,
    pub camera: Camera,
    /// Known object yaw, used to initialize the per-image yaw in canonical mode.
    pub yaw_hint: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub observations: Vec<Observation>,
}

impl Dataset {
    pub fn new(observations: Vec<Observation>) -> Self {
        Self { observations }
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let first = self
            .observations
            .first()
            .ok_or_else(|| Error::ConfigInvalid("dataset is empty".to_string()))?;
        let (w, h) = (first.mask.width(), first.mask.height());
        for (i, obs) in self.observations.iter().enumerate() {
            obs.camera.validate()?;
            obs.mask.same_shape(w, h)?;
            if obs.camera.width != w || obs.camera.height != h {
                return Err(Error::DimensionMismatch(alloc::format!(
                    "observation {i}: camera is {}x{}, mask is {w}x{h}",
                    obs.camera.width,
                    obs.camera.height
                )));
            }
        }
        Ok(())
    }
}

/// Result of one objective evaluation.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    /// Data term alone (mean density loss over images).
    pub data_loss: f64,
    pub grad: Vec<f64>,
    /// Number of (image, Gaussian) pairs whose projection failed.
    pub degenerate: usize,
}

fn check_layout(raw: &ParamVector, data: &Dataset) -> Result<()> {
    if data.is_empty() {
        return Err(Error::ConfigInvalid("dataset is empty".to_string()));
    }
    if raw.layout.n_images != data.len() || raw.values.len() != raw.layout.len() {
        return Err(Error::DimensionMismatch("parameter layout does not match dataset".to_string()));
    }
    Ok(())
}

/// Regularizer contribution of one transform's raws, scaled by `w`, with
/// its gradient added into `grad`.
fn transform_reg(raw: &[f64], w: f64, grad: &mut [f64]) -> f64 {
    let scale = [LN_2, TRANSLATION_MAX, ROTATION_MAX];
    let mut acc = 0.0;
    for (j, r) in raw.iter().enumerate() {
        let c = scale[j / 3];
        let t = libm::tanh(*r);
        acc += c * c * t * t;
        grad[j] += w * 2.0 * c * c * t * (1.0 - t * t);
    }
    w * acc
}

struct ImageTerm {
    loss: f64,
    /// `(global index, partial)` pairs in deterministic order.
    grad: Vec<(usize, f64)>,
    degenerate: usize,
}

fn projected(layout: &ParamLayout, bounds: CovBounds, raw: &ParamVector, cam: &Camera, image: usize, k: usize) -> Option<Gaussian2<D>> {
    let (vals, n) = raw.local::<f64>(image, k);
    let mut local = [D::constant(0.0); MAX_LOCAL];
    for j in 0..n {
        local[j] = D::variable(vals[j], j);
    }
    let g = local_gaussian(layout, bounds, &local[..n]).ok()?;
    let g2 = project(&g, cam).ok()?;
    if g2.values().is_valid() {
        Some(g2)
    } else {
        None
    }
}

struct Splat {
    idx: u32,
    g: f64,
    dx: f64,
    dy: f64,
}

fn image_term(raw: &ParamVector, image: usize, obs: &Observation, bounds: CovBounds, need_grad: bool) -> ImageTerm {
    let layout = raw.layout;
    let (w, h) = (obs.mask.width(), obs.mask.height());
    let n_px = (w * h) as f64;
    let mut sum = alloc::vec![0.0; w * h];
    let mut splats: Vec<Vec<Splat>> = Vec::with_capacity(layout.k);
    let mut projections = Vec::with_capacity(layout.k);
    let mut degenerate = 0;
    for k in 0..layout.k {
        let g2 = projected(&layout, bounds, raw, &obs.camera, image, k);
        let mut list = Vec::new();
        match &g2 {
            Some(g) => {
                Footprint::new(&g.values(), w, h).for_each(w, |idx, v, dx, dy| {
                    sum[idx] += v;
                    if need_grad {
                        list.push(Splat { idx: idx as u32, g: v, dx, dy });
                    }
                });
            }
            None => degenerate += 1,
        }
        splats.push(list);
        projections.push(g2);
    }
    let mut acc = CompensatedSum::default();
    for (s, m) in sum.iter_mut().zip(obs.mask.data()) {
        let r = *s - m;
        acc.add(r.abs());
        // reuse the buffer for dL/dS
        *s = if r > 0.0 {
            1.0
        } else if r < 0.0 {
            -1.0
        } else {
            0.0
        };
    }
    let loss = acc.total() / n_px;
    let mut grad = Vec::new();
    if need_grad {
        let scale = 1.0 / n_px;
        for (k, (g2, list)) in projections.iter().zip(&splats).enumerate() {
            let Some(g2) = g2 else { continue };
            let [a, b, c] = g2.conic();
            let (av, bv, cv) = (a.v, b.v, c.v);
            // adjoints of (mu_x, mu_y, a, b, c)
            let mut adj = [0.0f64; 5];
            for s in list {
                let dg = sum[s.idx as usize] * s.g;
                if dg == 0.0 {
                    continue;
                }
                adj[0] += dg * 2.0 * (av * s.dx + bv * s.dy);
                adj[1] += dg * 2.0 * (bv * s.dx + cv * s.dy);
                adj[2] -= dg * s.dx * s.dx;
                adj[3] -= dg * 2.0 * s.dx * s.dy;
                adj[4] -= dg * s.dy * s.dy;
            }
            let params = [g2.mu_px.0[0], g2.mu_px.0[1], a, b, c];
            let idx = layout.local_indices(image, k);
            for (slot, &gi) in idx.as_slice().iter().enumerate() {
                let mut d = 0.0;
                for (p, adj_p) in params.iter().zip(&adj) {
                    d += adj_p * p.d[slot];
                }
                grad.push((gi, d * scale));
            }
        }
    }
    ImageTerm { loss, grad, degenerate }
}

#[cfg(feature = "parallel")]
fn image_terms(raw: &ParamVector, data: &Dataset, bounds: CovBounds, need_grad: bool) -> Vec<ImageTerm> {
    use rayon::prelude::*;
    data.observations
        .par_iter()
        .enumerate()
        .map(|(i, obs)| image_term(raw, i, obs, bounds, need_grad))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn image_terms(raw: &ParamVector, data: &Dataset, bounds: CovBounds, need_grad: bool) -> Vec<ImageTerm> {
    data.observations
        .iter()
        .enumerate()
        .map(|(i, obs)| image_term(raw, i, obs, bounds, need_grad))
        .collect()
}

fn evaluate(raw: &ParamVector, data: &Dataset, cfg: &FitConfig, need_grad: bool) -> Result<LossGrad> {
    check_layout(raw, data)?;
    let layout = raw.layout;
    let n = data.len() as f64;
    let terms = image_terms(raw, data, cfg.bounds, need_grad);
    let mut grad = alloc::vec![0.0; layout.len()];
    let mut data_loss = 0.0;
    let mut degenerate = 0;
    // images are reduced in index order so the result does not depend on
    // how the terms were scheduled
    for term in &terms {
        data_loss += term.loss;
        degenerate += term.degenerate;
        for &(i, d) in &term.grad {
            grad[i] += d / n;
        }
    }
    data_loss /= n;
    if degenerate == layout.k * data.len() {
        return Err(Error::AllProjectionsDegenerate);
    }
    let mut reg = 0.0;
    if layout.mode == FitMode::Canonical && cfg.reg_weight > 0.0 {
        let w = cfg.reg_weight / (n * layout.k as f64);
        let mut scratch = [0.0; TRANSFORM_LEN];
        for i in 0..data.len() {
            for k in 0..layout.k {
                let o = layout.transform_offset(i, k).unwrap();
                scratch.fill(0.0);
                reg += transform_reg(&raw.values[o..o + TRANSFORM_LEN], w, &mut scratch);
                for (g, s) in grad[o..o + TRANSFORM_LEN].iter_mut().zip(&scratch) {
                    *g += s;
                }
            }
        }
    }
    if !need_grad {
        grad.clear();
    }
    Ok(LossGrad { loss: data_loss + reg, data_loss, grad, degenerate })
}

/// Objective value and its exact gradient with respect to every raw.
pub fn loss_and_grad(raw: &ParamVector, data: &Dataset, cfg: &FitConfig) -> Result<LossGrad> {
    evaluate(raw, data, cfg, true)
}

/// Objective value only; `grad` is left empty.
pub fn loss(raw: &ParamVector, data: &Dataset, cfg: &FitConfig) -> Result<LossGrad> {
    evaluate(raw, data, cfg, false)
}

/// Reference evaluation of the full objective in any scalar type.
///
/// Visits every pixel and keeps the same cutoff rule as the fast path, so
/// the two agree to rounding. Useful for checking gradients in extended
/// precision. Failed projections contribute nothing.
pub fn forward_loss<T: Real>(layout: &ParamLayout, raws: &[T], data: &Dataset, cfg: &FitConfig) -> Result<T> {
    if raws.len() != layout.len() || layout.n_images != data.len() {
        return Err(Error::DimensionMismatch("parameter layout does not match dataset".to_string()));
    }
    let n = data.len() as f64;
    let mut total = T::zero();
    let mut degenerate = 0;
    for (image, obs) in data.observations.iter().enumerate() {
        let (w, h) = (obs.mask.width(), obs.mask.height());
        let mut sum = alloc::vec![T::zero(); w * h];
        for k in 0..layout.k {
            let idx = layout.local_indices(image, k);
            let local: Vec<T> = idx.as_slice().iter().map(|&i| raws[i]).collect();
            let g2 = local_gaussian(layout, cfg.bounds, &local).and_then(|g| project(&g, &obs.camera));
            let g2 = match g2 {
                Ok(g) if g.values().is_valid() => g,
                _ => {
                    degenerate += 1;
                    continue;
                }
            };
            let [a, b, c] = g2.conic();
            for i in 0..h {
                let dy = T::from_f64(i as f64 + 0.5) - g2.mu_px.0[1];
                for j in 0..w {
                    let dx = T::from_f64(j as f64 + 0.5) - g2.mu_px.0[0];
                    let q = a * dx * dx + b * dx * dy * 2.0 + c * dy * dy;
                    if q.value() <= DENSITY_CUTOFF {
                        sum[i * w + j] += (-q).exp();
                    }
                }
            }
        }
        let mut img = T::zero();
        for (s, m) in sum.iter().zip(obs.mask.data()) {
            img += (*s - *m).abs();
        }
        total += img / (w * h) as f64;
    }
    if degenerate == layout.k * data.len() {
        return Err(Error::AllProjectionsDegenerate);
    }
    let mut loss = total / n;
    if layout.mode == FitMode::Canonical && cfg.reg_weight > 0.0 {
        let w = cfg.reg_weight / (n * layout.k as f64);
        let scale = [LN_2, TRANSLATION_MAX, ROTATION_MAX];
        for i in 0..data.len() {
            for k in 0..layout.k {
                let o = layout.transform_offset(i, k).unwrap();
                for j in 0..TRANSFORM_LEN {
                    let v = raws[o + j].tanh() * scale[j / 3];
                    loss += v * v * w;
                }
            }
        }
    }
    Ok(loss)
}
