//! Trajectories and their text formats.
//!
//! - KITTI: 12 whitespace-separated reals per line, the row-major 3x4
//!   `[R | t]`; the line index (from 0) is the stamp.
//! - TUM: `timestamp tx ty tz qx qy qz qw`.
//!
//! Lines starting with `#` and blank lines are skipped in both formats.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::IngestError;
use crate::geom::{Mat3, Pose, Quaternion, Vec3};

/// Rotation blocks deviating from orthonormal by more than this are
/// reported before being re-orthonormalized.
const ORTHONORMAL_WARN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrajectoryFormat {
    Kitti,
    Tum,
}

impl std::str::FromStr for TrajectoryFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "kitti" => Ok(TrajectoryFormat::Kitti),
            "tum" => Ok(TrajectoryFormat::Tum),
            other => Err(format!("unknown trajectory format `{other}` (expected tum or kitti)")),
        }
    }
}

/// Stamped world-frame poses with strictly increasing stamps.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    stamps: Vec<f64>,
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(stamps: Vec<f64>, poses: Vec<Pose>) -> Result<Self, IngestError> {
        if stamps.len() != poses.len() {
            return Err(IngestError::Trajectory(format!(
                "{} stamps for {} poses",
                stamps.len(),
                poses.len()
            )));
        }
        if let Some(i) = stamps.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(IngestError::Trajectory(format!(
                "stamps not strictly increasing at index {}",
                i + 1
            )));
        }
        if stamps.iter().any(|s| !s.is_finite()) {
            return Err(IngestError::Trajectory("non-finite stamp".into()));
        }
        for p in &poses {
            Pose::new(*p.matrix())?;
        }
        Ok(Trajectory { stamps, poses })
    }

    /// Stamps `0, 1, 2, ...`.
    pub fn from_poses(poses: Vec<Pose>) -> Result<Self, IngestError> {
        let stamps = (0..poses.len()).map(|i| i as f64).collect();
        Trajectory::new(stamps, poses)
    }

    pub fn stamps(&self) -> &[f64] {
        &self.stamps
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.poses.iter().map(Pose::translation).collect()
    }

    /// Applies `g` on the left of every pose.
    pub fn transformed(&self, g: &Pose) -> Trajectory {
        Trajectory {
            stamps: self.stamps.clone(),
            poses: self.poses.iter().map(|p| (*g * *p).orthonormalized()).collect(),
        }
    }
}

fn parse_fields(line: &str, origin: &str, lineno: usize) -> Result<Vec<f64>, IngestError> {
    line.split_whitespace()
        .map(|s| {
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| IngestError::format(origin, lineno, format!("not a finite number: `{s}`")))
        })
        .collect()
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn checked_pose(r: Mat3, t: Vec3, origin: &str, lineno: usize) -> Result<Pose, IngestError> {
    let (pose, dev) =
        Pose::from_parts_orthonormalized(r, t).map_err(|e| IngestError::format(origin, lineno, e.to_string()))?;
    if dev > ORTHONORMAL_WARN {
        warn!("{origin}:{lineno}: rotation deviates from orthonormal by {dev:.3e}; re-orthonormalized");
    }
    Ok(pose)
}

pub fn parse_kitti_poses(text: &str, origin: &str) -> Result<Trajectory, IngestError> {
    let mut poses = Vec::new();
    for (lineno, line) in data_lines(text) {
        let v = parse_fields(line, origin, lineno)?;
        if v.len() != 12 {
            return Err(IngestError::format(
                origin,
                lineno,
                format!("expected 12 values, found {}", v.len()),
            ));
        }
        let r = Mat3::new(v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10]);
        let t = Vec3::new(v[3], v[7], v[11]);
        poses.push(checked_pose(r, t, origin, lineno)?);
    }
    Trajectory::from_poses(poses)
}

pub fn parse_tum(text: &str, origin: &str) -> Result<Trajectory, IngestError> {
    let mut stamps = Vec::new();
    let mut poses = Vec::new();
    for (lineno, line) in data_lines(text) {
        let v = parse_fields(line, origin, lineno)?;
        if v.len() != 8 {
            return Err(IngestError::format(
                origin,
                lineno,
                format!("expected 8 values, found {}", v.len()),
            ));
        }
        let q =
            Quaternion::new(v[7], v[4], v[5], v[6]).map_err(|e| IngestError::format(origin, lineno, e.to_string()))?;
        stamps.push(v[0]);
        poses.push(Pose::from_quaternion(&q, Vec3::new(v[1], v[2], v[3])));
    }
    Trajectory::new(stamps, poses)
}

/// Detects the format from the first data line (12 columns KITTI, 8 TUM)
/// and parses the whole text with it.
pub fn parse_trajectory(text: &str, origin: &str) -> Result<(Trajectory, TrajectoryFormat), IngestError> {
    let Some((lineno, first)) = data_lines(text).next() else {
        return Err(IngestError::format(origin, 0, "no trajectory data"));
    };
    match first.split_whitespace().count() {
        12 => Ok((parse_kitti_poses(text, origin)?, TrajectoryFormat::Kitti)),
        8 => Ok((parse_tum(text, origin)?, TrajectoryFormat::Tum)),
        n => Err(IngestError::format(
            origin,
            lineno,
            format!("{n} columns: expected 12 (KITTI) or 8 (TUM)"),
        )),
    }
}

fn read_text(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|e| IngestError::io(path, e))
}

pub fn load_kitti_poses(path: impl AsRef<Path>) -> Result<Trajectory, IngestError> {
    let path = path.as_ref();
    parse_kitti_poses(&read_text(path)?, &path.display().to_string())
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<(Trajectory, TrajectoryFormat), IngestError> {
    let path = path.as_ref();
    parse_trajectory(&read_text(path)?, &path.display().to_string())
}

/// KITTI text, shortest round-trip scientific notation.
pub fn write_kitti_poses(traj: &Trajectory) -> String {
    let mut out = String::new();
    for pose in traj.poses() {
        let m = pose.matrix();
        let row: Vec<String> = (0..3)
            .flat_map(|r| (0..4).map(move |c| (r, c)))
            .map(|(r, c)| format!("{:e}", m[(r, c)]))
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn write_tum(traj: &Trajectory) -> String {
    let mut out = String::new();
    for (stamp, pose) in traj.stamps().iter().zip(traj.poses()) {
        let t = pose.translation();
        let q = pose.quaternion();
        let _ = writeln!(
            out,
            "{stamp} {:e} {:e} {:e} {:e} {:e} {:e} {:e}",
            t.x,
            t.y,
            t.z,
            q.x(),
            q.y(),
            q.z(),
            q.w()
        );
    }
    out
}

pub fn write_trajectory(traj: &Trajectory, format: TrajectoryFormat) -> String {
    match format {
        TrajectoryFormat::Kitti => write_kitti_poses(traj),
        TrajectoryFormat::Tum => write_tum(traj),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{se3_exp, Twist};
    use nalgebra::Matrix4;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_trajectory(n: usize, seed: u64) -> Trajectory {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poses = (0..n)
            .map(|_| {
                se3_exp(&Twist::new(
                    Vec3::new(
                        rng.gen_range(-50.0..50.0),
                        rng.gen_range(-50.0..50.0),
                        rng.gen_range(-5.0..5.0),
                    ),
                    Vec3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                    ),
                ))
            })
            .collect();
        Trajectory::from_poses(poses).unwrap()
    }

    #[test]
    fn identity_and_translation_lines() {
        let t = parse_kitti_poses("1 0 0 0 0 1 0 0 0 0 1 0\n1 0 0 5 0 1 0 0 0 0 1 0\n", "mem").unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(*t.poses()[0].matrix(), Matrix4::identity());
        assert_eq!(t.poses()[1].translation(), Vec3::new(5.0, 0.0, 0.0));
        assert_eq!(t.poses()[1].rotation(), Mat3::identity());
        assert_eq!(t.stamps(), &[0.0, 1.0]);
    }

    #[test]
    fn wrong_field_count() {
        let err = parse_kitti_poses("1 0 0 0 0 1 0 0 0 0 1\n", "mem").unwrap_err();
        assert!(matches!(err, IngestError::Format { line: 1, .. }), "{err}");
    }

    #[test]
    fn skewed_rotation_is_repaired() {
        let t = parse_kitti_poses("1.01 0 0 0 0 1 0 0 0 0 1 0\n", "mem").unwrap();
        assert!(Pose::new(*t.poses()[0].matrix()).is_ok());
    }

    #[test]
    fn kitti_roundtrip() {
        let traj = random_trajectory(50, 1);
        let back = parse_kitti_poses(&write_kitti_poses(&traj), "mem").unwrap();
        for (a, b) in traj.poses().iter().zip(back.poses()) {
            assert!((a.matrix() - b.matrix()).abs().max() < 1e-9);
        }
    }

    #[test]
    fn tum_roundtrip_and_autodetect() {
        let traj = random_trajectory(50, 2);
        let text = write_tum(&traj);
        let (back, fmt) = parse_trajectory(&text, "mem").unwrap();
        assert_eq!(fmt, TrajectoryFormat::Tum);
        assert_eq!(back.stamps(), traj.stamps());
        for (a, b) in traj.poses().iter().zip(back.poses()) {
            assert!((a.matrix() - b.matrix()).abs().max() < 1e-9);
        }
        let (_, fmt) = parse_trajectory(&write_kitti_poses(&traj), "mem").unwrap();
        assert_eq!(fmt, TrajectoryFormat::Kitti);
    }

    #[test]
    fn mixed_columns_name_the_line() {
        let text = "# comment\n0 0 0 0 0 0 0 1\n1 0 0 0 0 0 0 1 9\n";
        match parse_trajectory(text, "est.txt").unwrap_err() {
            IngestError::Format { line, origin, .. } => {
                assert_eq!(line, 3);
                assert_eq!(origin, "est.txt");
            }
            e => panic!("{e}"),
        }
        assert!(parse_trajectory("1 2 3\n", "mem").is_err());
    }

    #[test]
    fn stamps_must_increase() {
        let p = Pose::identity();
        assert!(Trajectory::new(vec![0.0, 0.0], vec![p, p]).is_err());
        assert!(Trajectory::new(vec![0.0], vec![p, p]).is_err());
    }
}
