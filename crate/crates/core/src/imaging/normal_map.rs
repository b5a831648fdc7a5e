use super::{ProjectionConfig, VertexMap};
use crate::geom::Vec3;

/// Neighbours whose depth differs from the centre by more than this are
/// treated as belonging to another surface.
pub const DEFAULT_GAP_THRESHOLD_M: f64 = 0.5;

/// Unit surface normals aligned with a [`VertexMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormalMap {
    config: ProjectionConfig,
    cells: Vec<Option<Vec3>>,
}

impl NormalMap {
    pub fn config(&self) -> &ProjectionConfig {
        &self.config
    }

    pub fn get(&self, u: usize, v: usize) -> Option<&Vec3> {
        self.cells[self.config.index(u, v)].as_ref()
    }

    pub fn cells(&self) -> &[Option<Vec3>] {
        &self.cells
    }

    pub fn valid_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }
}

/// Estimates a normal per valid vertex from its 4-neighbourhood.
///
/// The horizontal tangent is taken from the right neighbour (or the left one
/// when the right is unusable), the vertical tangent from the neighbour below
/// (or above). A neighbour is usable when valid and within `gap_threshold_m`
/// of the centre depth. Normals point toward the sensor (`n . v < 0`).
pub fn build_normal_map(vmap: &VertexMap, gap_threshold_m: f64) -> NormalMap {
    let cfg = *vmap.config();
    let (w, h) = (cfg.width(), cfg.height());
    let mut cells = vec![None; cfg.num_pixels()];

    let usable = |u: usize, v: usize, depth: f64| -> Option<Vec3> {
        vmap.get(u, v)
            .filter(|n| (n.depth - depth).abs() <= gap_threshold_m)
            .map(|n| n.point)
    };

    for (u, v, center) in vmap.iter_valid() {
        let c = center.point;
        let right = if u + 1 < w {
            Some(u + 1)
        } else if cfg.wraps() {
            Some(0)
        } else {
            None
        };
        let left = if u > 0 {
            Some(u - 1)
        } else if cfg.wraps() {
            Some(w - 1)
        } else {
            None
        };
        let horizontal = right
            .and_then(|ur| usable(ur, v, center.depth).map(|p| p - c))
            .or_else(|| left.and_then(|ul| usable(ul, v, center.depth).map(|p| c - p)));
        let vertical = (v + 1 < h)
            .then(|| usable(u, v + 1, center.depth).map(|p| p - c))
            .flatten()
            .or_else(|| (v > 0).then(|| usable(u, v - 1, center.depth).map(|p| c - p)).flatten());

        let (Some(dh), Some(dv)) = (horizontal, vertical) else {
            continue;
        };
        let cross = dh.cross(&dv);
        let norm = cross.norm();
        if !(norm > 1e-12 * dh.norm() * dv.norm()) {
            continue;
        }
        let mut n = cross / norm;
        let facing = n.dot(&c);
        if facing == 0.0 {
            continue;
        }
        if facing > 0.0 {
            n = -n;
        }
        cells[cfg.index(u, v)] = Some(n);
    }
    NormalMap { config: cfg, cells }
}
