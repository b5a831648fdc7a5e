//! Spherical frame representation.
//!
//! A scan is projected onto a `w x h` image on spherical coordinates. Each
//! pixel of a [`VertexMap`] keeps the real-valued coordinates of the nearest
//! point that falls into it, so no discretization offset is introduced. The
//! companion [`NormalMap`] is estimated from neighbouring pixels.

mod dump;
mod normal_map;
mod range_map;
mod vertex_map;

pub use dump::{write_normal_csv, write_normal_ppm, write_vertex_csv, write_vertex_ppm, PPM_DEPTH_SCALE_M};
pub use normal_map::{build_normal_map, NormalMap, DEFAULT_GAP_THRESHOLD_M};
pub use range_map::{range_map_pairs, range_map_roundtrip, RangeSample};
pub use vertex_map::{build_vertex_map, reconstruct_cloud, Vertex, VertexMap};

use thiserror::Error;

use crate::geom::Vec3;
use crate::ingest::PointCloud;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{0} must be positive and finite (got {1})")]
    NotPositive(&'static str, f64),
    #[error("{name} / resolution = {ratio} is not an integer pixel count")]
    NonIntegral { name: &'static str, ratio: f64 },
    #[error("horizontal field of view {0} exceeds 360 degrees")]
    HorizontalTooWide(f64),
}

/// Spherical image geometry. Angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionConfig {
    fov_h: f64,
    fov_up: f64,
    fov_down: f64,
    res_h: f64,
    res_v: f64,
    min_depth: f64,
    width: usize,
    height: usize,
}

impl Default for ProjectionConfig {
    /// HDL-64E geometry: 360 x 26 degrees at 0.5 degree per pixel (720 x 52).
    fn default() -> Self {
        ProjectionConfig::new(360.0, 2.0, 24.0, 0.5, 0.5, 0.5).expect("default projection config is valid")
    }
}

impl ProjectionConfig {
    /// `fov_up` and `fov_down` are the parts of the vertical field of view
    /// above and below the horizon; `min_depth` rejects returns closer than
    /// that horizontal distance (m).
    pub fn new(
        fov_h: f64,
        fov_up: f64,
        fov_down: f64,
        res_h: f64,
        res_v: f64,
        min_depth: f64,
    ) -> Result<Self, ConfigError> {
        for (name, v) in [
            ("fov_h", fov_h),
            ("fov_v", fov_up + fov_down),
            ("res_h", res_h),
            ("res_v", res_v),
            ("min_depth", min_depth),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ConfigError::NotPositive(name, v));
            }
        }
        if !fov_up.is_finite() || !fov_down.is_finite() {
            return Err(ConfigError::NotPositive("fov_v", fov_up + fov_down));
        }
        if fov_h > 360.0 {
            return Err(ConfigError::HorizontalTooWide(fov_h));
        }
        let width = integral_ratio("fov_h", fov_h, res_h)?;
        let height = integral_ratio("fov_v", fov_up + fov_down, res_v)?;
        Ok(ProjectionConfig {
            fov_h,
            fov_up,
            fov_down,
            res_h,
            res_v,
            min_depth,
            width,
            height,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn fov_h(&self) -> f64 {
        self.fov_h
    }
    pub fn fov_up(&self) -> f64 {
        self.fov_up
    }
    pub fn fov_down(&self) -> f64 {
        self.fov_down
    }
    pub fn fov_v(&self) -> f64 {
        self.fov_up + self.fov_down
    }
    pub fn res_h(&self) -> f64 {
        self.res_h
    }
    pub fn res_v(&self) -> f64 {
        self.res_v
    }
    pub fn min_depth(&self) -> f64 {
        self.min_depth
    }
    pub fn num_pixels(&self) -> usize {
        self.width * self.height
    }

    /// Whether the horizontal axis closes on itself (360 degree scanner).
    pub fn wraps(&self) -> bool {
        self.fov_h == 360.0
    }

    /// Continuous image coordinates and horizontal depth of `p`.
    pub fn image_coords(&self, p: &Vec3) -> (f64, f64, f64) {
        let depth = p.x.hypot(p.y);
        let azimuth = p.y.atan2(p.x).to_degrees();
        let elevation = p.z.atan2(depth).to_degrees();
        let u = (0.5 * self.fov_h - azimuth) / self.res_h;
        let v = (self.fov_up - elevation) / self.res_v;
        (u, v, depth)
    }

    /// Whether `p` lands inside `[0, w) x [0, h)`, ignoring the depth limit.
    pub fn in_fov(&self, p: &Vec3) -> bool {
        let (u, v, _) = self.image_coords(p);
        self.pixel_of(u, v).is_some()
    }

    fn pixel_of(&self, u: f64, v: f64) -> Option<(usize, usize)> {
        if !(u.is_finite() && v.is_finite()) {
            return None;
        }
        let (uf, vf) = (u.floor(), v.floor());
        if vf < 0.0 || vf >= self.height as f64 {
            return None;
        }
        let w = self.width as f64;
        let uf = if self.wraps() {
            uf.rem_euclid(w)
        } else if uf < 0.0 || uf >= w {
            return None;
        } else {
            uf
        };
        Some((uf as usize, vf as usize))
    }

    /// Projects a point to its pixel. `None` when it is outside the image or
    /// closer than the minimum depth.
    pub fn project(&self, p: &Vec3) -> Option<Projected> {
        let (u, v, depth) = self.image_coords(p);
        if !(depth >= self.min_depth) {
            return None;
        }
        let (u, v) = self.pixel_of(u, v)?;
        Some(Projected { u, v, depth })
    }

    /// Unit direction through the centre of pixel `(u, v)`.
    pub fn pixel_ray(&self, u: usize, v: usize) -> Vec3 {
        let azimuth = (0.5 * self.fov_h - (u as f64 + 0.5) * self.res_h).to_radians();
        let elevation = (self.fov_up - (v as f64 + 0.5) * self.res_v).to_radians();
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Vec3::new(ce * ca, ce * sa, se)
    }

    pub(crate) fn index(&self, u: usize, v: usize) -> usize {
        v * self.width + u
    }
}

fn integral_ratio(name: &'static str, fov: f64, res: f64) -> Result<usize, ConfigError> {
    let ratio = fov / res;
    let rounded = ratio.round();
    if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
        return Err(ConfigError::NonIntegral { name, ratio });
    }
    Ok(rounded as usize)
}

/// Pixel hit of a projected point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projected {
    pub u: usize,
    pub v: usize,
    /// Horizontal distance `sqrt(x^2 + y^2)` (m).
    pub depth: f64,
}

/// Projects `p` with `cfg`; `None` means out of bounds.
pub fn project_point(p: &Vec3, cfg: &ProjectionConfig) -> Option<Projected> {
    cfg.project(p)
}

/// Paired vertex and normal maps of one scan.
#[derive(Debug, Clone)]
pub struct Frame {
    vertex_map: VertexMap,
    normal_map: NormalMap,
}

impl Frame {
    pub fn new(vertex_map: VertexMap, normal_map: NormalMap) -> Self {
        assert_eq!(
            vertex_map.config(),
            normal_map.config(),
            "vertex and normal maps must share a projection"
        );
        Frame { vertex_map, normal_map }
    }

    /// Projects `cloud` and estimates normals with the given gap threshold.
    pub fn from_cloud(cloud: &PointCloud, cfg: &ProjectionConfig, gap_threshold_m: f64) -> Self {
        let vertex_map = build_vertex_map(cloud, cfg);
        let normal_map = build_normal_map(&vertex_map, gap_threshold_m);
        Frame { vertex_map, normal_map }
    }

    pub fn vertex_map(&self) -> &VertexMap {
        &self.vertex_map
    }

    pub fn normal_map(&self) -> &NormalMap {
        &self.normal_map
    }

    pub fn config(&self) -> &ProjectionConfig {
        self.vertex_map.config()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_720_by_52() {
        let cfg = ProjectionConfig::default();
        assert_eq!((cfg.width(), cfg.height()), (720, 52));
    }

    #[test]
    fn eq1_examples() {
        let cfg = ProjectionConfig::default();
        let p = project_point(&Vec3::new(10.0, 0.0, 0.0), &cfg).unwrap();
        assert_eq!((p.u, p.v, p.depth), (360, 4, 10.0));
        let p = project_point(&Vec3::new(0.0, 10.0, 0.0), &cfg).unwrap();
        assert_eq!(p.u, 180);
        assert!(project_point(&Vec3::new(1.0, 0.0, 1.0), &cfg).is_none());
    }

    #[test]
    fn azimuth_180_wraps_into_image() {
        let cfg = ProjectionConfig::default();
        // atan2(-0, -x) = -180 gives u = w exactly before wrapping.
        let p = project_point(&Vec3::new(-10.0, -0.0, 0.0), &cfg).unwrap();
        assert_eq!(p.u, 0);
        let p = project_point(&Vec3::new(-10.0, 1e-9, 0.0), &cfg).unwrap();
        assert_eq!(p.u, 0);
        let p = project_point(&Vec3::new(-10.0, -1e-9, 0.0), &cfg).unwrap();
        assert_eq!(p.u, 719);
    }

    #[test]
    fn below_fov_and_min_depth_rejected() {
        let cfg = ProjectionConfig::default();
        assert!(project_point(&Vec3::new(1.0, 0.0, -1.0), &cfg).is_none());
        assert!(project_point(&Vec3::new(0.3, 0.0, 0.0), &cfg).is_none());
        assert!(cfg.in_fov(&Vec3::new(0.3, 0.0, 0.0)));
    }

    #[test]
    fn narrow_fov_does_not_wrap() {
        let cfg = ProjectionConfig::new(90.0, 2.0, 24.0, 0.5, 0.5, 0.5).unwrap();
        assert_eq!(cfg.width(), 180);
        assert!(project_point(&Vec3::new(10.0, 0.0, 0.0), &cfg).is_some());
        assert!(project_point(&Vec3::new(-10.0, 0.0, 0.0), &cfg).is_none());
        assert!(project_point(&Vec3::new(0.0, 10.0, 0.0), &cfg).is_none());
    }

    #[test]
    fn invalid_configs() {
        assert!(ProjectionConfig::new(360.0, 2.0, 24.0, 0.7, 0.5, 0.5).is_err());
        assert!(ProjectionConfig::new(-1.0, 2.0, 24.0, 0.5, 0.5, 0.5).is_err());
        assert!(ProjectionConfig::new(400.0, 2.0, 24.0, 0.5, 0.5, 0.5).is_err());
        assert!(ProjectionConfig::new(360.0, 2.0, 24.0, 0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn pixel_ray_projects_to_its_pixel() {
        let cfg = ProjectionConfig::default();
        for (u, v) in [(0, 0), (359, 4), (719, 51), (100, 30)] {
            let p = cfg.project(&(cfg.pixel_ray(u, v) * 20.0)).unwrap();
            assert_eq!((p.u, p.v), (u, v));
        }
    }
}
