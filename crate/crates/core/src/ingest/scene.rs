//! Synthetic scenes made of planar patches and cuboids.
//!
//! Each surface is sampled on a stratified lattice: one point per cell,
//! jittered inside the cell by a seeded generator. Points are built in the
//! surface's local frame (where they satisfy the surface equation exactly)
//! and then mapped to the world by the surface pose.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::PointCloud;
use crate::geom::{EulerDeg, Pose, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub enum Surface {
    /// Rectangle in the local `z = 0` plane, centred on the origin,
    /// `size = [x extent, y extent]`.
    Plane { pose: Pose, size: [f64; 2], spacing: f64 },
    /// Closed box centred on the local origin, all six faces sampled.
    Cuboid { pose: Pose, size: [f64; 3], spacing: f64 },
}

impl Surface {
    pub fn plane(center: Vec3, rpy_deg: [f64; 3], size: [f64; 2], spacing: f64) -> Self {
        Surface::Plane {
            pose: Pose::from_euler(&EulerDeg::new(rpy_deg[0], rpy_deg[1], rpy_deg[2]), center),
            size,
            spacing,
        }
    }

    pub fn cuboid(center: Vec3, yaw_deg: f64, size: [f64; 3], spacing: f64) -> Self {
        Surface::Cuboid {
            pose: Pose::from_euler(&EulerDeg::new(0.0, 0.0, yaw_deg), center),
            size,
            spacing,
        }
    }

    fn spacing(&self) -> f64 {
        match self {
            Surface::Plane { spacing, .. } | Surface::Cuboid { spacing, .. } => *spacing,
        }
    }

    fn extents(&self) -> &[f64] {
        match self {
            Surface::Plane { size, .. } => size,
            Surface::Cuboid { size, .. } => size,
        }
    }

    fn pose(&self) -> &Pose {
        match self {
            Surface::Plane { pose, .. } | Surface::Cuboid { pose, .. } => pose,
        }
    }

    /// Distance from `p` to the sampled surface (world frame).
    pub fn distance(&self, p: &Vec3) -> f64 {
        let local = self.pose().inverse().transform_point(p);
        match self {
            Surface::Plane { size, .. } => {
                let dx = (local.x.abs() - 0.5 * size[0]).max(0.0);
                let dy = (local.y.abs() - 0.5 * size[1]).max(0.0);
                (dx * dx + dy * dy + local.z * local.z).sqrt()
            }
            Surface::Cuboid { size, .. } => {
                let h = Vec3::new(0.5 * size[0], 0.5 * size[1], 0.5 * size[2]);
                let q = local.abs() - h;
                let outside = q.map(|c| c.max(0.0)).norm();
                let inside = q.max().min(0.0);
                (outside + inside).abs()
            }
        }
    }
}

/// Surfaces plus the seed that drives in-cell jitter.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub surfaces: Vec<Surface>,
    pub seed: u64,
    /// Jitter amplitude as a fraction of the cell size, in `[0, 1]`.
    pub jitter: f64,
}

impl SceneSpec {
    pub fn new(surfaces: Vec<Surface>, seed: u64) -> Self {
        SceneSpec {
            surfaces,
            seed,
            jitter: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(format!("jitter {} outside [0, 1]", self.jitter));
        }
        for (i, s) in self.surfaces.iter().enumerate() {
            if !(s.spacing() > 0.0 && s.spacing().is_finite()) {
                return Err(format!("surface {i}: spacing must be positive"));
            }
            if s.extents().iter().any(|e| !(*e > 0.0 && e.is_finite())) {
                return Err(format!("surface {i}: extents must be positive"));
            }
        }
        Ok(())
    }

    /// A 40 x 24 m hall seen from inside: floor 1.7 m below the sensor
    /// origin, four walls, and crates and pillars of assorted sizes.
    pub fn room(seed: u64) -> Self {
        let floor = -1.7;
        let wall_h = 5.0;
        let zc = floor + 0.5 * wall_h;
        let mut s = vec![
            Surface::plane(Vec3::new(0.0, 0.0, floor), [0.0, 0.0, 0.0], [40.0, 24.0], 0.1),
            Surface::plane(Vec3::new(20.0, 0.0, zc), [0.0, 90.0, 0.0], [wall_h, 24.0], 0.08),
            Surface::plane(Vec3::new(-20.0, 0.0, zc), [0.0, 90.0, 0.0], [wall_h, 24.0], 0.08),
            Surface::plane(Vec3::new(0.0, 12.0, zc), [90.0, 0.0, 0.0], [40.0, wall_h], 0.08),
            Surface::plane(Vec3::new(0.0, -12.0, zc), [90.0, 0.0, 0.0], [40.0, wall_h], 0.08),
        ];
        let crates = [
            (Vec3::new(6.0, 4.0, floor + 1.0), 20.0, [2.0, 1.5, 2.0]),
            (Vec3::new(-7.0, -5.0, floor + 0.75), -35.0, [3.0, 2.0, 1.5]),
            (Vec3::new(11.0, -6.5, floor + 1.5), 5.0, [1.2, 4.0, 3.0]),
            (Vec3::new(-12.0, 6.0, floor + 1.25), 60.0, [2.5, 2.5, 2.5]),
            (Vec3::new(2.5, -8.0, floor + 0.6), 0.0, [1.0, 1.0, 1.2]),
            (Vec3::new(-3.0, 8.5, floor + 2.0), 45.0, [0.6, 0.6, 4.0]),
            (Vec3::new(15.0, 7.0, floor + 2.0), 0.0, [0.6, 0.6, 4.0]),
        ];
        s.extend(
            crates
                .iter()
                .map(|(c, yaw, size)| Surface::cuboid(*c, *yaw, *size, 0.05)),
        );
        SceneSpec::new(s, seed)
    }

    /// A straight corridor along +x starting 10 m behind the origin,
    /// 7 m wide, with pillars at irregular spacing on both walls and closed
    /// ends.
    pub fn corridor(length: f64, seed: u64) -> Self {
        let floor = -1.7;
        let wall_h = 4.0;
        let half_w = 3.5;
        let zc = floor + 0.5 * wall_h;
        let x0 = -10.0;
        let xc = x0 + 0.5 * length;
        let mut s = vec![
            Surface::plane(Vec3::new(xc, 0.0, floor), [0.0, 0.0, 0.0], [length, 2.0 * half_w], 0.1),
            Surface::plane(Vec3::new(xc, half_w, zc), [90.0, 0.0, 0.0], [length, wall_h], 0.08),
            Surface::plane(Vec3::new(xc, -half_w, zc), [90.0, 0.0, 0.0], [length, wall_h], 0.08),
            Surface::plane(Vec3::new(x0, 0.0, zc), [0.0, 90.0, 0.0], [wall_h, 2.0 * half_w], 0.08),
            Surface::plane(
                Vec3::new(x0 + length, 0.0, zc),
                [0.0, 90.0, 0.0],
                [wall_h, 2.0 * half_w],
                0.08,
            ),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_c0de);
        let mut x = x0 + 2.0;
        let mut left = true;
        while x < x0 + length - 2.0 {
            let side = if left { half_w - 0.4 } else { -(half_w - 0.4) };
            let depth = rng.gen_range(0.4..0.9);
            let width = rng.gen_range(0.4..1.2);
            let height = rng.gen_range(1.0..wall_h);
            s.push(Surface::cuboid(
                Vec3::new(x, side, floor + 0.5 * height),
                rng.gen_range(-15.0..15.0),
                [width, depth, height],
                0.05,
            ));
            x += rng.gen_range(2.0..5.0);
            left = !left;
        }
        SceneSpec::new(s, seed)
    }

    /// Open street block: a large ground plane and buildings of varied
    /// footprint and orientation around the origin.
    pub fn urban(seed: u64) -> Self {
        let ground = -1.73;
        let mut s = vec![Surface::plane(
            Vec3::new(0.0, 0.0, ground),
            [0.0, 0.0, 0.0],
            [90.0, 90.0],
            0.15,
        )];
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb10c);
        for i in 0..14 {
            let angle = i as f64 * std::f64::consts::TAU / 14.0 + rng.gen_range(-0.15..0.15);
            let radius = rng.gen_range(12.0..30.0);
            let size = [
                rng.gen_range(3.0..10.0),
                rng.gen_range(3.0..10.0),
                rng.gen_range(3.0..10.0),
            ];
            let center = Vec3::new(radius * angle.cos(), radius * angle.sin(), ground + 0.5 * size[2]);
            s.push(Surface::cuboid(center, rng.gen_range(0.0..90.0), size, 0.1));
        }
        for _ in 0..10 {
            let c = Vec3::new(rng.gen_range(-25.0..25.0), rng.gen_range(-25.0..25.0), ground + 1.5);
            if c.xy().norm() < 4.0 {
                continue;
            }
            s.push(Surface::cuboid(c, rng.gen_range(0.0..90.0), [0.4, 0.4, 3.0], 0.04));
        }
        SceneSpec::new(s, seed)
    }
}

fn lattice(extent: f64, spacing: f64) -> (usize, f64) {
    let n = ((extent / spacing).round() as usize).max(1);
    (n, extent / n as f64)
}

fn sample_rect(rng: &mut ChaCha8Rng, jitter: f64, a: f64, b: f64, spacing: f64, mut emit: impl FnMut(f64, f64)) {
    let (na, ca) = lattice(a, spacing);
    let (nb, cb) = lattice(b, spacing);
    for i in 0..na {
        for j in 0..nb {
            let ja = 0.5 + jitter * (rng.gen::<f64>() - 0.5);
            let jb = 0.5 + jitter * (rng.gen::<f64>() - 0.5);
            emit(-0.5 * a + (i as f64 + ja) * ca, -0.5 * b + (j as f64 + jb) * cb);
        }
    }
}

/// Samples every surface of `spec`. Deterministic for a fixed seed.
pub fn synth_scene(spec: &SceneSpec) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut points = Vec::new();
    for surface in &spec.surfaces {
        match surface {
            Surface::Plane { pose, size, spacing } => {
                sample_rect(&mut rng, spec.jitter, size[0], size[1], *spacing, |x, y| {
                    points.push(pose.transform_point(&Vec3::new(x, y, 0.0)));
                });
            }
            Surface::Cuboid { pose, size, spacing } => {
                let [lx, ly, lz] = *size;
                for sign in [1.0, -1.0] {
                    sample_rect(&mut rng, spec.jitter, ly, lz, *spacing, |y, z| {
                        points.push(pose.transform_point(&Vec3::new(sign * 0.5 * lx, y, z)));
                    });
                    sample_rect(&mut rng, spec.jitter, lx, lz, *spacing, |x, z| {
                        points.push(pose.transform_point(&Vec3::new(x, sign * 0.5 * ly, z)));
                    });
                    sample_rect(&mut rng, spec.jitter, lx, ly, *spacing, |x, y| {
                        points.push(pose.transform_point(&Vec3::new(x, y, sign * 0.5 * lz)));
                    });
                }
            }
        }
    }
    PointCloud::from_points(points)
}
