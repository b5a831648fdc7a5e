//! Built-in synthetic sequences: `<scene>[:key=value,...]`.
//!
//! Scenes are `room`, `corridor` and `urban`. Keys: `frames` (default 10),
//! `step` (m per frame along the heading, default 1), `yaw` (deg per frame,
//! default 0) and, for the corridor, `length` (m). The sensor moves with a
//! constant per-frame motion from a scene-specific start pose.

use lidar_odometry::geom::{EulerDeg, Pose, Vec3};
use lidar_odometry::imaging::ProjectionConfig;
use lidar_odometry::ingest::{simulate_scan, synth_scene, PointCloud, SceneSpec, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SceneKind {
    Room,
    Corridor,
    Urban,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub scene: SceneKind,
    pub frames: usize,
    pub step: f64,
    pub yaw: f64,
    pub length: Option<f64>,
}

impl std::str::FromStr for SynthSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, rest) = s.split_once(':').unwrap_or((s, ""));
        let scene = match name.trim() {
            "room" => SceneKind::Room,
            "corridor" => SceneKind::Corridor,
            "urban" => SceneKind::Urban,
            other => return Err(format!("synth: unknown scene `{other}` (room | corridor | urban)")),
        };
        let mut spec = SynthSpec {
            scene,
            frames: 10,
            step: 1.0,
            yaw: 0.0,
            length: None,
        };
        for kv in rest.split(',').map(str::trim).filter(|kv| !kv.is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| format!("synth: expected key=value, got `{kv}`"))?;
            let (k, v) = (k.trim(), v.trim());
            let real = || -> Result<f64, String> {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| format!("synth: {k}: cannot parse `{v}`"))
            };
            match k {
                "frames" => spec.frames = v.parse().map_err(|_| format!("synth: frames: cannot parse `{v}`"))?,
                "step" => spec.step = real()?,
                "yaw" => spec.yaw = real()?,
                "length" if scene == SceneKind::Corridor => spec.length = Some(real()?),
                _ => return Err(format!("synth: unknown key `{k}` for {name}")),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<(), String> {
        if self.frames == 0 {
            return Err("synth: frames must be at least 1".into());
        }
        if self.step < 0.0 || self.yaw.abs() > 45.0 {
            return Err("synth: need step >= 0 and |yaw| <= 45".into());
        }
        let travel = self.step * (self.frames - 1) as f64;
        let room_for = match self.scene {
            SceneKind::Room => 26.0,
            SceneKind::Urban => 40.0,
            SceneKind::Corridor => self.corridor_length() - 12.0,
        };
        if travel > room_for {
            return Err(format!(
                "synth: {travel} m of travel leaves the scene (at most {room_for} m)"
            ));
        }
        if let Some(l) = self.length {
            if !(20.0..=2000.0).contains(&l) {
                return Err("synth: corridor length must be within 20..2000 m".into());
            }
        }
        Ok(())
    }

    fn corridor_length(&self) -> f64 {
        self.length
            .unwrap_or_else(|| (self.step * (self.frames - 1) as f64 + 30.0).max(60.0))
    }

    pub fn scene_spec(&self, seed: u64) -> SceneSpec {
        match self.scene {
            SceneKind::Room => SceneSpec::room(seed),
            SceneKind::Corridor => SceneSpec::corridor(self.corridor_length(), seed),
            SceneKind::Urban => SceneSpec::urban(seed),
        }
    }

    fn start(&self) -> Pose {
        let x = match self.scene {
            SceneKind::Room => -14.0,
            SceneKind::Corridor => -5.0,
            SceneKind::Urban => -20.0,
        };
        Pose::from_translation(Vec3::new(x, 0.0, 0.0))
    }

    /// Motion between consecutive frames.
    pub fn motion(&self) -> Pose {
        Pose::from_euler(&EulerDeg::new(0.0, 0.0, self.yaw), Vec3::new(self.step, 0.0, 0.0))
    }

    pub fn poses(&self) -> Vec<Pose> {
        let step = self.motion();
        let mut poses = vec![self.start()];
        for _ in 1..self.frames {
            let next = (*poses.last().expect("non-empty") * step).orthonormalized();
            poses.push(next);
        }
        poses
    }
}

/// Simulated scans and their ground truth.
pub struct Sequence {
    pub scans: Vec<PointCloud>,
    pub ground_truth: Trajectory,
}

pub fn generate(spec: &SynthSpec, seed: u64, cfg: &ProjectionConfig) -> Sequence {
    let scene = synth_scene(&spec.scene_spec(seed));
    let poses = spec.poses();
    let scans = poses.iter().map(|p| simulate_scan(&scene, p, cfg)).collect();
    Sequence {
        scans,
        ground_truth: Trajectory::from_poses(poses).expect("constant-motion poses are valid"),
    }
}
