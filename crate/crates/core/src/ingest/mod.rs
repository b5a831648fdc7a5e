//! Data sources: KITTI scans and poses, TUM trajectories, CSV clouds,
//! synthetic scenes and simulated scans, and submap assembly.

mod scene;
mod simulate;
mod submap;
mod trajectory;

pub use scene::{synth_scene, SceneSpec, Surface};
pub use simulate::simulate_scan;
pub use submap::{build_submap, path_distances};
pub use trajectory::{
    load_kitti_poses, load_trajectory, parse_kitti_poses, parse_trajectory, parse_tum, write_kitti_poses,
    write_trajectory, write_tum, Trajectory, TrajectoryFormat,
};

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::geom::{GeomError, Vec3};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{origin}:{line}: {message}")]
    Format {
        origin: String,
        line: usize,
        message: String,
    },
    #[error("invalid trajectory: {0}")]
    Trajectory(String),
    #[error("invalid pose: {0}")]
    Pose(#[from] GeomError),
    #[error("submap: {0}")]
    Submap(String),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(origin: &str, line: usize, message: impl Into<String>) -> Self {
        IngestError::Format {
            origin: origin.to_string(),
            line,
            message: message.into(),
        }
    }
}

/// Unordered 3D points in a sensor or robot frame (m), with optional
/// per-point intensity. Coordinates are always finite.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    points: Vec<Vec3>,
    intensity: Option<Vec<f32>>,
}

impl PointCloud {
    /// Builds a cloud, dropping nothing. Panics on non-finite coordinates;
    /// use [`PointCloud::try_from_points`] for untrusted input.
    pub fn from_points(points: Vec<Vec3>) -> Self {
        Self::try_from_points(points).expect("point cloud coordinates must be finite")
    }

    pub fn try_from_points(points: Vec<Vec3>) -> Result<Self, IngestError> {
        if let Some(i) = points.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(IngestError::format("points", i, "non-finite coordinate"));
        }
        Ok(PointCloud {
            points,
            intensity: None,
        })
    }

    pub fn with_intensity(mut self, intensity: Vec<f32>) -> Self {
        assert_eq!(intensity.len(), self.points.len(), "one intensity per point");
        self.intensity = Some(intensity);
        self
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    pub fn intensity(&self) -> Option<&[f32]> {
        self.intensity.as_deref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn into_points(self) -> Vec<Vec3> {
        self.points
    }

    /// Appends another cloud. Intensity is kept only if both sides have it.
    pub fn extend(&mut self, other: PointCloud) {
        self.intensity = match (self.intensity.take(), other.intensity) {
            (Some(mut a), Some(b)) => {
                a.extend(b);
                Some(a)
            }
            (None, b) if self.points.is_empty() => b,
            _ => None,
        };
        self.points.extend(other.points);
    }

    pub fn transformed(&self, pose: &crate::geom::Pose) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| pose.transform_point(p)).collect(),
            intensity: self.intensity.clone(),
        }
    }
}

const KITTI_RECORD: usize = 16;

/// Decodes little-endian `x, y, z, intensity` float32 records.
pub fn decode_kitti_bin(bytes: &[u8], origin: &str) -> Result<PointCloud, IngestError> {
    if !bytes.len().is_multiple_of(KITTI_RECORD) {
        return Err(IngestError::format(
            origin,
            bytes.len() / KITTI_RECORD,
            format!(
                "truncated record: {} bytes is not a multiple of {KITTI_RECORD}",
                bytes.len()
            ),
        ));
    }
    let n = bytes.len() / KITTI_RECORD;
    let mut points = Vec::with_capacity(n);
    let mut intensity = Vec::with_capacity(n);
    for (i, rec) in bytes.chunks_exact(KITTI_RECORD).enumerate() {
        let f = |k: usize| f32::from_le_bytes([rec[4 * k], rec[4 * k + 1], rec[4 * k + 2], rec[4 * k + 3]]);
        let p = Vec3::new(f(0) as f64, f(1) as f64, f(2) as f64);
        if !p.iter().all(|c| c.is_finite()) {
            return Err(IngestError::format(origin, i, "non-finite coordinate"));
        }
        points.push(p);
        intensity.push(f(3));
    }
    Ok(PointCloud {
        points,
        intensity: Some(intensity),
    })
}

pub fn load_kitti_bin(path: impl AsRef<Path>) -> Result<PointCloud, IngestError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| IngestError::io(path, e))?;
    decode_kitti_bin(&bytes, &path.display().to_string())
}

/// Encodes a cloud as KITTI float32 records; missing intensity is written as 0.
pub fn encode_kitti_bin(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * KITTI_RECORD);
    for (i, p) in cloud.points.iter().enumerate() {
        let it = cloud.intensity.as_ref().map_or(0.0, |v| v[i]);
        for c in [p.x as f32, p.y as f32, p.z as f32, it] {
            out.extend_from_slice(&c.to_le_bytes());
        }
    }
    out
}

pub fn write_kitti_bin(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<(), IngestError> {
    let path = path.as_ref();
    fs::write(path, encode_kitti_bin(cloud)).map_err(|e| IngestError::io(path, e))
}

/// Reads `x,y,z` lines. A non-numeric first line is treated as a header;
/// extra columns are ignored.
pub fn read_csv_cloud<R: BufRead>(reader: R, origin: &str) -> Result<PointCloud, IngestError> {
    let mut points = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| IngestError::format(origin, i + 1, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().take(3).map(|s| s.parse::<f64>()).collect();
        match parsed {
            Ok(v) if v.len() == 3 => {
                let p = Vec3::new(v[0], v[1], v[2]);
                if !p.iter().all(|c| c.is_finite()) {
                    return Err(IngestError::format(origin, i + 1, "non-finite coordinate"));
                }
                points.push(p);
            }
            Err(_) if i == 0 => continue,
            _ => return Err(IngestError::format(origin, i + 1, "expected x,y,z")),
        }
    }
    Ok(PointCloud {
        points,
        intensity: None,
    })
}

pub fn load_csv_cloud(path: impl AsRef<Path>) -> Result<PointCloud, IngestError> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_csv_cloud(io::BufReader::new(file), &path.display().to_string())
}

pub fn write_csv_cloud<W: Write>(cloud: &PointCloud, out: &mut W) -> io::Result<()> {
    writeln!(out, "x,y,z")?;
    for p in &cloud.points {
        writeln!(out, "{},{},{}", p.x, p.y, p.z)?;
    }
    Ok(())
}

/// Loads a scan by extension: `.bin` (KITTI) or `.csv`.
pub fn load_cloud(path: impl AsRef<Path>) -> Result<PointCloud, IngestError> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") | Some("txt") => load_csv_cloud(path),
        _ => load_kitti_bin(path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(v: [f32; 4]) -> Vec<u8> {
        v.iter().flat_map(|c| c.to_le_bytes()).collect()
    }

    #[test]
    fn decode_two_records() {
        let mut bytes = record([1.0, 2.0, 3.0, 0.5]);
        bytes.extend(record([4.0, 5.0, 6.0, 0.1]));
        assert_eq!(bytes.len(), 32);
        let cloud = decode_kitti_bin(&bytes, "mem").unwrap();
        assert_eq!(cloud.points(), &[Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)]);
        assert_eq!(cloud.intensity().unwrap(), &[0.5, 0.1]);
    }

    #[test]
    fn empty_and_truncated() {
        assert!(decode_kitti_bin(&[], "mem").unwrap().is_empty());
        assert!(matches!(
            decode_kitti_bin(&[0u8; 17], "mem"),
            Err(IngestError::Format { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_kitti_bin("/nonexistent/scan.bin"),
            Err(IngestError::Io { .. })
        ));
    }

    #[test]
    fn file_size_matches_record_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("scan.bin");
        let cloud = PointCloud::from_points((0..37).map(|i| Vec3::new(i as f64, 0.5, -1.25)).collect());
        write_kitti_bin(&cloud, &path).unwrap();
        assert_eq!(fs::metadata(&path).unwrap().len(), 37 * 16);
        let back = load_kitti_bin(&path).unwrap();
        assert_eq!(back.points(), cloud.points());
    }

    #[test]
    fn csv_roundtrip_and_header() {
        let cloud = PointCloud::from_points(vec![Vec3::new(0.1, -2.5, 1e-7), Vec3::new(3.0, 4.0, 5.0)]);
        let mut out = Vec::new();
        write_csv_cloud(&cloud, &mut out).unwrap();
        let back = read_csv_cloud(io::Cursor::new(out), "mem").unwrap();
        assert_eq!(back.points(), cloud.points());
        assert!(read_csv_cloud(io::Cursor::new("x,y,z\n1,2\n"), "mem").is_err());
    }

    #[test]
    fn non_finite_rejected() {
        assert!(PointCloud::try_from_points(vec![Vec3::new(f64::NAN, 0.0, 0.0)]).is_err());
        assert!(decode_kitti_bin(&record([f32::INFINITY, 0.0, 0.0, 0.0]), "mem").is_err());
    }
}
