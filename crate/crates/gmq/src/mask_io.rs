//! 8-bit grayscale PNG masks: 255 is foreground, values map to `v / 255`.

use std::io::Cursor;
use std::path::Path;

use gmq_core::MaskImage;
use image::{GrayImage, ImageFormat, Luma};

use crate::error::{GmqError, Result};

fn to_gray(mask: &MaskImage) -> GrayImage {
    let (w, h) = (mask.width() as u32, mask.height() as u32);
    GrayImage::from_fn(w, h, |x, y| {
        let v = mask.get(y as usize, x as usize);
        Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8])
    })
}

/// Grayscale pixels of `values` (clamped to [0, 1]) as PNG bytes.
pub fn encode_png(width: usize, height: usize, values: &[f64]) -> Vec<u8> {
    let img = GrayImage::from_fn(width as u32, height as u32, |x, y| {
        let v = values[y as usize * width + x as usize];
        Luma([(v.clamp(0.0, 1.0) * 255.0).round() as u8])
    });
    let mut out = Cursor::new(Vec::new());
    img.write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

pub fn mask_to_png(mask: &MaskImage) -> Vec<u8> {
    let mut out = Cursor::new(Vec::new());
    to_gray(mask).write_to(&mut out, ImageFormat::Png).expect("in-memory PNG encoding");
    out.into_inner()
}

pub fn decode_mask(bytes: &[u8], path: &Path) -> Result<MaskImage> {
    let img = image::load_from_memory(bytes)
        .map_err(|e| GmqError::UnsupportedFormat { path: path.to_path_buf(), message: e.to_string() })?
        .into_luma8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| p.0[0] as f64 / 255.0).collect();
    Ok(MaskImage::new(w, h, data)?)
}

pub fn load_mask(path: &Path) -> Result<MaskImage> {
    let bytes = std::fs::read(path).map_err(|e| GmqError::io(path, e))?;
    decode_mask(&bytes, path)
}

pub fn save_mask(path: &Path, mask: &MaskImage) -> Result<()> {
    std::fs::write(path, mask_to_png(mask)).map_err(|e| GmqError::io(path, e))
}

/// Box-filter downsampling by an integer factor.
pub fn downsample(mask: &MaskImage, factor: usize) -> Result<MaskImage> {
    if factor == 0 || !mask.width().is_multiple_of(factor) || !mask.height().is_multiple_of(factor) {
        return Err(GmqError::Usage(format!(
            "cannot downsample {}x{} by {factor}",
            mask.width(),
            mask.height()
        )));
    }
    if factor == 1 {
        return Ok(mask.clone());
    }
    let area = (factor * factor) as f64;
    Ok(MaskImage::from_fn(mask.width() / factor, mask.height() / factor, |i, j| {
        let mut s = 0.0;
        for di in 0..factor {
            for dj in 0..factor {
                s += mask.get(i * factor + di, j * factor + dj);
            }
        }
        s / area
    })?)
}
