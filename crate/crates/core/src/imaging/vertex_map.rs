use super::ProjectionConfig;
use crate::geom::Vec3;
use crate::ingest::PointCloud;

/// One occupied pixel: the exact source point and its horizontal depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub point: Vec3,
    pub depth: f64,
}

/// Row-major `w x h` grid of nearest points.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMap {
    config: ProjectionConfig,
    cells: Vec<Option<Vertex>>,
}

impl VertexMap {
    pub fn empty(config: &ProjectionConfig) -> Self {
        VertexMap {
            config: *config,
            cells: vec![None; config.num_pixels()],
        }
    }

    pub fn config(&self) -> &ProjectionConfig {
        &self.config
    }

    pub fn width(&self) -> usize {
        self.config.width()
    }

    pub fn height(&self) -> usize {
        self.config.height()
    }

    pub fn get(&self, u: usize, v: usize) -> Option<&Vertex> {
        self.cells[self.config.index(u, v)].as_ref()
    }

    /// Cells in pixel-scan order (row by row).
    pub fn cells(&self) -> &[Option<Vertex>] {
        &self.cells
    }

    /// Valid cells with their `(u, v)` in pixel-scan order.
    pub fn iter_valid(&self) -> impl Iterator<Item = (usize, usize, &Vertex)> + '_ {
        let w = self.width();
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.as_ref().map(|vx| (i % w, i / w, vx)))
    }

    pub fn valid_count(&self) -> usize {
        self.cells.iter().filter(|c| c.is_some()).count()
    }

    /// Inserts `p` if its pixel is empty or holds a strictly farther point.
    /// Returns whether the point was stored.
    pub fn insert(&mut self, p: Vec3) -> bool {
        let Some(hit) = self.config.project(&p) else {
            return false;
        };
        let idx = self.config.index(hit.u, hit.v);
        match &self.cells[idx] {
            Some(existing) if existing.depth <= hit.depth => false,
            _ => {
                self.cells[idx] = Some(Vertex {
                    point: p,
                    depth: hit.depth,
                });
                true
            }
        }
    }
}

/// Nearest-point projection of `cloud`. Ties keep the earlier point.
pub fn build_vertex_map(cloud: &PointCloud, cfg: &ProjectionConfig) -> VertexMap {
    let mut map = VertexMap::empty(cfg);
    for p in cloud.points() {
        map.insert(*p);
    }
    map
}

/// Stored points of all valid pixels, in pixel-scan order.
pub fn reconstruct_cloud(vmap: &VertexMap) -> PointCloud {
    PointCloud::from_points(vmap.iter_valid().map(|(_, _, vx)| vx.point).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_point_wins() {
        let cfg = ProjectionConfig::default();
        let far = Vec3::new(7.0, 0.0, 0.0);
        let near = Vec3::new(5.0, 0.0, 0.0);
        let map = build_vertex_map(&PointCloud::from_points(vec![far, near]), &cfg);
        assert_eq!(map.valid_count(), 1);
        assert_eq!(map.get(360, 4).unwrap().point, near);
        assert_eq!(map.get(360, 4).unwrap().depth, 5.0);
    }

    #[test]
    fn ties_keep_first() {
        let cfg = ProjectionConfig::default();
        // Equal horizontal depth, same pixel, different height.
        let a = Vec3::new(5.0, 0.001, -0.01);
        let b = Vec3::new(5.0, 0.001, -0.02);
        assert_eq!(cfg.project(&a), cfg.project(&b));
        let map = build_vertex_map(&PointCloud::from_points(vec![a, b]), &cfg);
        let hit = cfg.project(&a).unwrap();
        assert_eq!(map.get(hit.u, hit.v).unwrap().point, a);
        let map = build_vertex_map(&PointCloud::from_points(vec![b, a]), &cfg);
        assert_eq!(map.get(hit.u, hit.v).unwrap().point, b);
    }

    #[test]
    fn empty_cloud_gives_empty_map() {
        let cfg = ProjectionConfig::default();
        let map = build_vertex_map(&PointCloud::default(), &cfg);
        assert_eq!(map.valid_count(), 0);
        assert_eq!((map.width(), map.height()), (720, 52));
        assert!(reconstruct_cloud(&map).is_empty());
    }

    #[test]
    fn reconstruct_counts_valid_pixels() {
        let cfg = ProjectionConfig::default();
        let pts: Vec<Vec3> = (0..200)
            .map(|i| {
                let a = i as f64 * 0.031;
                Vec3::new(8.0 * a.cos(), 8.0 * a.sin(), -1.0 + 0.01 * i as f64)
            })
            .collect();
        let map = build_vertex_map(&PointCloud::from_points(pts.clone()), &cfg);
        let rec = reconstruct_cloud(&map);
        assert_eq!(rec.len(), map.valid_count());
        for p in rec.points() {
            assert!(pts.contains(p));
        }
    }
}
