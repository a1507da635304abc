//! Silhouette agreement: intersection over union and structural dissimilarity.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::raster::MaskImage;

/// Side of the SSIM window.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn same_dims(a: &MaskImage, b: &MaskImage) -> Result<()> {
    b.same_shape(a.width(), a.height())
}

/// `|A ∩ B| / |A ∪ B|` after binarizing both masks at 0.5. Two empty masks
/// agree perfectly.
pub fn iou(a: &MaskImage, b: &MaskImage) -> Result<f64> {
    same_dims(a, b)?;
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.data().iter().zip(b.data()) {
        let (x, y) = (x >= 0.5, y >= 0.5);
        inter += (x && y) as usize;
        union += (x || y) as usize;
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// Normalized 1D Gaussian taps of the SSIM window.
pub fn ssim_kernel() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut k = [0.0; SSIM_WINDOW];
    for (i, w) in k.iter_mut().enumerate() {
        let x = i as f64 - half;
        *w = libm::exp(-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA));
    }
    let s: f64 = k.iter().sum();
    k.map(|w| w / s)
}

/// Separable Gaussian filter keeping only fully covered window positions.
fn filter_valid(data: &[f64], width: usize, height: usize, k: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = width - SSIM_WINDOW + 1;
    let oh = height - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; ow * height];
    for i in 0..height {
        let src = &data[i * width..(i + 1) * width];
        for j in 0..ow {
            rows[i * ow + j] = k.iter().zip(&src[j..j + SSIM_WINDOW]).map(|(w, v)| w * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for i in 0..oh {
        for j in 0..ow {
            out[i * ow + j] = k.iter().enumerate().map(|(t, w)| w * rows[(i + t) * ow + j]).sum();
        }
    }
    out
}

/// Mean SSIM over all window positions (dynamic range 1, 11x11 Gaussian
/// window with sigma 1.5, constants `(0.01)²` and `(0.03)²`).
pub fn mean_ssim(a: &MaskImage, b: &MaskImage) -> Result<f64> {
    same_dims(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::TooSmall { width: w, height: h, min: SSIM_WINDOW });
    }
    let k = ssim_kernel();
    let (x, y) = (a.data(), b.data());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mx = filter_valid(x, w, h, &k);
    let my = filter_valid(y, w, h, &k);
    let sxx = filter_valid(&xx, w, h, &k);
    let syy = filter_valid(&yy, w, h, &k);
    let sxy = filter_valid(&xy, w, h, &k);
    let mut total = 0.0;
    for i in 0..mx.len() {
        let (ux, uy) = (mx[i], my[i]);
        let vx = sxx[i] - ux * ux;
        let vy = syy[i] - uy * uy;
        let cxy = sxy[i] - ux * uy;
        total += ((2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2))
            / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    Ok(total / mx.len() as f64)
}

/// `(1 - SSIM) / 2`.
pub fn dssim(a: &MaskImage, b: &MaskImage) -> Result<f64> {
    Ok((1.0 - mean_ssim(a, b)?) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(w: usize, h: usize, f: impl Fn(usize, usize) -> bool) -> MaskImage {
        MaskImage::from_fn(w, h, |i, j| if f(i, j) { 1.0 } else { 0.0 }).unwrap()
    }

    #[test]
    fn iou_examples() {
        let b = mask(16, 16, |i, j| (4..12).contains(&i) && (4..12).contains(&j));
        assert_eq!(iou(&b, &b).unwrap(), 1.0);
        let left = mask(16, 16, |i, j| (4..12).contains(&i) && (4..8).contains(&j));
        assert_eq!(iou(&left, &b).unwrap(), 0.5);
        let far = mask(16, 16, |i, j| i < 2 && j < 2);
        assert_eq!(iou(&far, &b).unwrap(), 0.0);
        let empty = MaskImage::zeros(16, 16);
        assert_eq!(iou(&empty, &empty).unwrap(), 1.0);
        assert!(iou(&empty, &MaskImage::zeros(8, 16)).is_err());
    }

    #[test]
    fn iou_binarizes_at_half() {
        let a = MaskImage::new(2, 1, vec![128.0 / 255.0, 0.49]).unwrap();
        let b = MaskImage::new(2, 1, vec![1.0, 0.0]).unwrap();
        assert_eq!(iou(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn dssim_examples() {
        let a = mask(32, 24, |i, j| (i * 7 + j * 3) % 5 < 2);
        assert_eq!(dssim(&a, &a).unwrap(), 0.0);
        let zeros = MaskImage::zeros(16, 16);
        let ones = MaskImage::new(16, 16, vec![1.0; 256]).unwrap();
        let expected = (1.0 - SSIM_C1 / (1.0 + SSIM_C1)) / 2.0;
        assert!((dssim(&zeros, &ones).unwrap() - expected).abs() < 1e-12);
        assert!(matches!(dssim(&MaskImage::zeros(10, 20), &MaskImage::zeros(10, 20)), Err(Error::TooSmall { .. })));
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = ssim_kernel();
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for i in 0..SSIM_WINDOW {
            assert_eq!(k[i], k[SSIM_WINDOW - 1 - i]);
        }
    }
}
