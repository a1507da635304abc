//! Model rendering shared by eval, turntable and the service.

use gmq_core::raster::sum_map;
use gmq_core::{
    coarse_silhouette, compose_transform, project, rasterize_maps, Camera, CanonicalGaussian, Gaussian2, Gaussian3,
    GaussianMaps, MaskImage, PoseTransform,
};

use crate::mask_io::encode_png;
use crate::model_io::TransformRecord;

/// Per-image Gaussians: canonical ones posed by `transforms` (identity when
/// `None`) and the object yaw.
pub fn posed_gaussians(canonical: &[CanonicalGaussian], transforms: Option<&[TransformRecord]>, yaw: f64) -> Vec<Gaussian3> {
    canonical
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let tf = match transforms {
                Some(t) => t[k].with_yaw(yaw),
                None => PoseTransform::with_yaw(yaw),
            };
            compose_transform(g, &tf)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct Rendered {
    /// Projection of each Gaussian; `None` where it failed.
    pub projections: Vec<Option<Gaussian2>>,
    pub maps: GaussianMaps,
}

impl Rendered {
    pub fn sum(&self) -> Vec<f64> {
        sum_map(&self.maps).data
    }

    pub fn silhouette(&self, tau: f64) -> MaskImage {
        coarse_silhouette(&self.maps, tau)
    }

    pub fn sum_png(&self) -> Vec<u8> {
        encode_png(self.maps.width, self.maps.height, &self.sum())
    }

    pub fn silhouette_png(&self, tau: f64) -> Vec<u8> {
        crate::mask_io::mask_to_png(&self.silhouette(tau))
    }

    /// The per-Gaussian maps side by side, left to right.
    pub fn strip_png(&self) -> Vec<u8> {
        let (w, h) = (self.maps.width, self.maps.height);
        let k = self.maps.maps.len().max(1);
        let mut data = vec![0.0; w * k * h];
        for (m, map) in self.maps.maps.iter().enumerate() {
            for i in 0..h {
                data[i * w * k + m * w..i * w * k + (m + 1) * w].copy_from_slice(&map[i * w..(i + 1) * w]);
            }
        }
        encode_png(w * k, h, &data)
    }
}

pub fn render(gaussians: &[Gaussian3], camera: &Camera) -> Rendered {
    let projections: Vec<Option<Gaussian2>> = gaussians
        .iter()
        .map(|g| project(g, camera).ok().filter(Gaussian2::is_valid))
        .collect();
    let maps = rasterize_maps(&projections, camera.width, camera.height);
    Rendered { projections, maps }
}
