//! Sampling projected Gaussians on pixel grids and the density loss.
//!
//! Pixel `(row i, column j)` samples the point `(j + 0.5, i + 0.5)`; the
//! origin is the top-left image corner.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::gaussian::Gaussian2;
use crate::linalg::Vec2;
use crate::scalar::Real;

/// Quadratic-form values beyond this are flushed to zero density
/// (`exp(-40) ≈ 4e-18`).
pub const DENSITY_CUTOFF: f64 = 40.0;

/// Default silhouette threshold.
pub const DEFAULT_TAU: f64 = 0.5;

/// Row-major grid of values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskImage {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl MaskImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DimensionMismatch(format!("empty mask {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} mask",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invariant(format!("mask[{i}]"), format!("value {} outside [0, 1]", data[i])));
        }
        Ok(Self { width, height, data })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        assert!(width > 0 && height > 0, "mask dimensions must be positive");
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    /// 1 where the value is at least `threshold`, else 0.
    pub fn binarized(&self, threshold: f64) -> MaskImage {
        let data = self.data.iter().map(|&v| if v >= threshold { 1.0 } else { 0.0 }).collect();
        MaskImage { width: self.width, height: self.height, data }
    }

    pub fn count_above(&self, threshold: f64) -> usize {
        self.data.iter().filter(|&&v| v >= threshold).count()
    }

    pub fn same_shape(&self, width: usize, height: usize) -> Result<()> {
        if self.width != width || self.height != height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// One density map per Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMaps {
    pub width: usize,
    pub height: usize,
    pub maps: Vec<Vec<f64>>,
}

impl GaussianMaps {
    pub fn k(&self) -> usize {
        self.maps.len()
    }
}

/// Unclamped pointwise sum of Gaussian maps.
#[derive(Clone, Debug, PartialEq)]
pub struct SumMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

/// `exp(-(p - mu)ᵀ cov⁻¹ (p - mu))` at pixel coordinates `p`.
pub fn eval_density2<T: Real>(g: &Gaussian2<T>, p: &Vec2<T>) -> T {
    let [a, b, c] = g.conic();
    let dx = p.0[0] - g.mu_px.0[0];
    let dy = p.0[1] - g.mu_px.0[1];
    let q = a * dx * dx + b * dx * dy * 2.0 + c * dy * dy;
    (-q).exp()
}

/// Pixel window outside of which a Gaussian's density is below the cutoff.
#[derive(Clone, Copy, Debug)]
pub struct Footprint {
    pub mu: [f64; 2],
    pub conic: [f64; 3],
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

impl Footprint {
    pub fn new(g: &Gaussian2, width: usize, height: usize) -> Self {
        let conic = g.conic();
        let mu = g.mu_px.0;
        let ext_x = libm::sqrt(DENSITY_CUTOFF * g.cov_px.0[0][0]);
        let ext_y = libm::sqrt(DENSITY_CUTOFF * g.cov_px.0[1][1]);
        let span = |center: f64, ext: f64, n: usize| -> (usize, usize) {
            // pixel k covers center k + 0.5
            let lo = libm::ceil(center - ext - 0.5).max(0.0);
            let hi = libm::floor(center + ext - 0.5) + 1.0;
            let hi = hi.min(n as f64);
            if !(lo < hi) {
                (0, 0)
            } else {
                (lo as usize, hi as usize)
            }
        };
        Self { mu, conic, rows: span(mu[1], ext_y, height), cols: span(mu[0], ext_x, width) }
    }

    /// Calls `f(pixel_index, density, dx, dy)` for every pixel within the
    /// cutoff, row by row.
    #[inline]
    pub fn for_each(&self, width: usize, mut f: impl FnMut(usize, f64, f64, f64)) {
        let [a, b, c] = self.conic;
        for i in self.rows.0..self.rows.1 {
            let dy = i as f64 + 0.5 - self.mu[1];
            let row = i * width;
            for j in self.cols.0..self.cols.1 {
                let dx = j as f64 + 0.5 - self.mu[0];
                let q = a * dx * dx + 2.0 * b * dx * dy + c * dy * dy;
                if q <= DENSITY_CUTOFF {
                    f(row + j, libm::exp(-q), dx, dy);
                }
            }
        }
    }
}

/// Rasterizes each Gaussian into its own map; `None` entries (failed
/// projections) become all-zero maps.
pub fn rasterize_maps(gs: &[Option<Gaussian2>], width: usize, height: usize) -> GaussianMaps {
    let maps = gs
        .iter()
        .map(|g| {
            let mut map = vec![0.0; width * height];
            if let Some(g) = g {
                Footprint::new(g, width, height).for_each(width, |idx, v, _, _| map[idx] = v);
            }
            map
        })
        .collect();
    GaussianMaps { width, height, maps }
}

pub fn sum_map(maps: &GaussianMaps) -> SumMap {
    let mut data = vec![0.0; maps.width * maps.height];
    for map in &maps.maps {
        for (s, v) in data.iter_mut().zip(map) {
            *s += v;
        }
    }
    SumMap { width: maps.width, height: maps.height, data }
}

/// Compensated (Neumaier) running sum.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Mean absolute difference between a mask and the summed maps.
pub fn density_loss(mask: &MaskImage, maps: &GaussianMaps) -> Result<f64> {
    mask.same_shape(maps.width, maps.height)?;
    let sum = sum_map(maps);
    let mut acc = CompensatedSum::default();
    for (m, s) in mask.data.iter().zip(&sum.data) {
        acc.add((m - s).abs());
    }
    Ok(acc.total() / mask.data.len() as f64)
}

/// Binary mask of pixels where the summed density reaches `tau`.
pub fn coarse_silhouette(maps: &GaussianMaps, tau: f64) -> MaskImage {
    let sum = sum_map(maps);
    let data = sum.data.iter().map(|&s| if s >= tau { 1.0 } else { 0.0 }).collect();
    MaskImage { width: maps.width, height: maps.height, data }
}

/// Threshold at which an L1-optimal Gaussian fit to a solid ellipse crosses
/// the ellipse boundary: the root of `tau (1 - ln tau) = 1/2` in (0, 1).
///
/// For a filled ellipse the density loss is minimized by the Gaussian whose
/// value on the ellipse boundary is this constant (about 0.187), so
/// thresholding at it reproduces the fitted outline.
pub fn l1_matched_threshold() -> f64 {
    let mut tau: f64 = 0.2;
    for _ in 0..50 {
        let f = tau * (1.0 - libm::log(tau)) - 0.5;
        let df = -libm::log(tau);
        tau -= f / df;
    }
    tau
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;

    fn g2(mu: [f64; 2], cov: [[f64; 2]; 2]) -> Gaussian2 {
        Gaussian2 { mu_px: Vec2(mu), cov_px: Mat2(cov) }
    }

    #[test]
    fn density2_examples() {
        let e = (-1.0f64).exp();
        let g = g2([3.0, 4.0], [[9.0, 0.0], [0.0, 9.0]]);
        assert_eq!(eval_density2(&g, &Vec2([3.0, 4.0])), 1.0);
        assert!((eval_density2(&g, &Vec2([6.0, 4.0])) - e).abs() < 1e-15);
        let g = g2([0.0, 0.0], [[4.0, 0.0], [0.0, 1.0]]);
        assert!((eval_density2(&g, &Vec2([2.0, 0.0])) - e).abs() < 1e-15);
    }

    #[test]
    fn empty_list_gives_no_maps() {
        let maps = rasterize_maps(&[], 8, 8);
        assert_eq!(maps.k(), 0);
        assert!(sum_map(&maps).data.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn centered_gaussian_peaks_on_the_four_center_pixels() {
        let s2: f64 = 20.0;
        let maps = rasterize_maps(&[Some(g2([128.0, 128.0], [[s2, 0.0], [0.0, s2]]))], 256, 256);
        let m = &maps.maps[0];
        let (arg, max) = m.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let (row, col) = (arg / 256, arg % 256);
        assert!((127..=128).contains(&row) && (127..=128).contains(&col));
        assert!((max - (-0.5 / s2).exp()).abs() < 1e-15);
        for (r, c) in [(127, 127), (127, 128), (128, 127), (128, 128)] {
            assert_eq!(m[r * 256 + c], max);
        }
    }

    #[test]
    fn map_symmetric_under_axis_swap_for_round_gaussians() {
        let a = rasterize_maps(&[Some(g2([10.3, 10.3], [[6.0, 1.5], [1.5, 6.0]]))], 21, 21);
        let m = &a.maps[0];
        for i in 0..21 {
            for j in 0..21 {
                assert!((m[i * 21 + j] - m[j * 21 + i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn one_pixel_raster_matches_density() {
        let g = g2([0.2, 0.9], [[0.5, 0.1], [0.1, 0.3]]);
        let maps = rasterize_maps(&[Some(g)], 1, 1);
        assert_eq!(maps.maps[0][0], eval_density2(&g, &Vec2([0.5, 0.5])));
    }

    #[test]
    fn failed_projection_is_zero_map() {
        let maps = rasterize_maps(&[None, Some(g2([2.0, 2.0], [[1.0, 0.0], [0.0, 1.0]]))], 4, 4);
        assert!(maps.maps[0].iter().all(|&v| v == 0.0));
        assert!(maps.maps[1].iter().any(|&v| v > 0.0));
    }

    #[test]
    fn sum_and_loss_examples() {
        let g = Some(g2([4.0, 4.0], [[3.0, 0.0], [0.0, 3.0]]));
        let one = rasterize_maps(&[g], 8, 8);
        let three = rasterize_maps(&[g, g, g], 8, 8);
        let s1 = sum_map(&one);
        let s3 = sum_map(&three);
        for (a, b) in s1.data.iter().zip(&s3.data) {
            assert!((3.0 * a - b).abs() < 1e-15);
            assert!(b >= a);
        }
        let zero = rasterize_maps(&[None], 8, 8);
        assert_eq!(density_loss(&MaskImage::zeros(8, 8), &zero).unwrap(), 0.0);
        let ones = MaskImage::new(8, 8, vec![1.0; 64]).unwrap();
        assert_eq!(density_loss(&ones, &zero).unwrap(), 1.0);
        let exact = MaskImage::new(8, 8, s1.data.clone()).unwrap();
        assert_eq!(density_loss(&exact, &one).unwrap(), 0.0);
        assert!(matches!(density_loss(&MaskImage::zeros(4, 8), &one), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn silhouette_examples() {
        let zero = rasterize_maps(&[None], 8, 8);
        assert_eq!(coarse_silhouette(&zero, 0.5).count_above(0.5), 0);
        let maps = rasterize_maps(&[Some(g2([16.0, 16.0], [[30.0, 0.0], [0.0, 30.0]]))], 32, 32);
        let hi = coarse_silhouette(&maps, 0.5);
        let lo = coarse_silhouette(&maps, 0.2);
        assert_eq!(hi.get(15, 15), 1.0);
        for (h, l) in hi.data().iter().zip(lo.data()) {
            assert!(h <= l);
        }
        assert!(lo.count_above(0.5) > hi.count_above(0.5));
    }

    #[test]
    fn matched_threshold_root() {
        let t = l1_matched_threshold();
        assert!((t * (1.0 - t.ln()) - 0.5).abs() < 1e-15);
        assert!((t - 0.1867).abs() < 1e-3, "{t}");
    }

    #[test]
    fn mask_rejects_out_of_range() {
        assert!(MaskImage::new(2, 1, vec![0.0, 1.5]).is_err());
        assert!(MaskImage::new(2, 2, vec![0.0, 1.0]).is_err());
        assert!(MaskImage::new(0, 2, vec![]).is_err());
    }
}
