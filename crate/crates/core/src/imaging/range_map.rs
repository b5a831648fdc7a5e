//! Range-image baseline: one scalar range per pixel, reconstructed along the
//! pixel-centre ray. Used only to quantify the discretization error that the
//! vertex map avoids.

use super::{build_vertex_map, ProjectionConfig};
use crate::geom::Vec3;
use crate::ingest::PointCloud;

/// A retained point and its range-image reconstruction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeSample {
    pub original: Vec3,
    pub reconstructed: Vec3,
}

impl RangeSample {
    pub fn error(&self) -> f64 {
        (self.reconstructed - self.original).norm()
    }
}

/// Per-pixel pairs of (nearest point, range-image reconstruction), in
/// pixel-scan order.
pub fn range_map_pairs(cloud: &PointCloud, cfg: &ProjectionConfig) -> Vec<RangeSample> {
    let vmap = build_vertex_map(cloud, cfg);
    vmap.iter_valid()
        .map(|(u, v, vx)| {
            let range = vx.point.norm();
            RangeSample {
                original: vx.point,
                reconstructed: cfg.pixel_ray(u, v) * range,
            }
        })
        .collect()
}

/// Cloud rebuilt from a range image of `cloud`.
pub fn range_map_roundtrip(cloud: &PointCloud, cfg: &ProjectionConfig) -> PointCloud {
    PointCloud::from_points(
        range_map_pairs(cloud, cfg)
            .into_iter()
            .map(|s| s.reconstructed)
            .collect(),
    )
}
