//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; unknown or repeated keys are errors. Command-line flags are
//! applied on top of the file.

use std::path::{Path, PathBuf};

use lidar_odometry::analysis::{Axis, AxisSpec, KITTI_LENGTHS};
use lidar_odometry::geom::{EulerDeg, Pose, Vec3};
use lidar_odometry::imaging::{ProjectionConfig, DEFAULT_GAP_THRESHOLD_M};
use lidar_odometry::ingest::TrajectoryFormat;
use lidar_odometry::registration::LossScales;
use lidar_odometry::solver::{InitMode, SolverOptions};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub fov_h: f64,
    pub fov_up: f64,
    pub fov_down: f64,
    pub res_h: f64,
    pub res_v: f64,
    pub min_depth: f64,
    pub gap_threshold: f64,
    pub solver: SolverOptions,
    pub scales: LossScales,
    /// Directory of `.bin` / `.csv` scans.
    pub scans: Option<PathBuf>,
    pub out: PathBuf,
    pub synth: Option<String>,
    pub seed: u64,
    /// Format of ground-truth trajectories written by `synth`.
    pub format: TrajectoryFormat,
    pub axis1: AxisSpec,
    pub axis2: AxisSpec,
    /// Landscape reference motion; `None` means identity, or ground truth
    /// for synthetic pairs.
    pub reference: Option<[f64; 6]>,
    pub lengths: Vec<f64>,
    pub distances: Option<Vec<f64>>,
    pub align: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fov_h: 360.0,
            fov_up: 2.0,
            fov_down: 24.0,
            res_h: 0.5,
            res_v: 0.5,
            min_depth: 0.5,
            gap_threshold: DEFAULT_GAP_THRESHOLD_M,
            solver: SolverOptions::default(),
            scales: LossScales::default(),
            scans: None,
            out: PathBuf::from("out"),
            synth: None,
            seed: 0,
            format: TrajectoryFormat::Kitti,
            axis1: AxisSpec {
                axis: Axis::Tx,
                min: -10.0,
                max: 10.0,
                step: 1.0,
            },
            axis2: AxisSpec {
                axis: Axis::Ty,
                min: -10.0,
                max: 10.0,
                step: 1.0,
            },
            reference: None,
            lengths: KITTI_LENGTHS.to_vec(),
            distances: None,
            align: true,
        }
    }
}

/// Keys in the order [`RunConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "fov_h",
    "fov_up",
    "fov_down",
    "res_h",
    "res_v",
    "min_depth",
    "gap_threshold",
    "max_iterations",
    "tolerance",
    "damping",
    "min_correspondences",
    "fov_reject_fraction",
    "init",
    "max_correspondence_distance",
    "min_correspondence_distance",
    "max_step_translation",
    "max_step_rotation_deg",
    "s_icp",
    "s_fov",
    "s_t",
    "s_r",
    "scans",
    "out",
    "synth",
    "seed",
    "format",
    "axis1",
    "axis2",
    "reference",
    "lengths",
    "distances",
    "align",
];

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("{key}: cannot parse `{v}`"))
}

fn finite(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{key}: `{v}` is not finite"))
    }
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, String> {
    v.split(',').map(|s| finite(key, s.trim())).collect()
}

/// `name:min:max:step`, e.g. `yaw:-10:10:1`.
pub fn parse_axis(v: &str) -> Result<AxisSpec, String> {
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("axis `{v}`: expected name:min:max:step"));
    }
    let axis: Axis = parts[0].parse().map_err(|e| format!("{e}"))?;
    let [min, max, step] = [parts[1], parts[2], parts[3]].map(|s| finite("axis", s));
    AxisSpec::new(axis, min?, max?, step?).map_err(|e| e.to_string())
}

fn format_axis(a: &AxisSpec) -> String {
    format!("{}:{}:{}:{}", a.axis, a.min, a.max, a.step)
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// `tx,ty,tz,roll,pitch,yaw` in m and degrees.
pub fn parse_reference(v: &str) -> Result<[f64; 6], String> {
    let vals = list("reference", v)?;
    <[f64; 6]>::try_from(vals).map_err(|_| format!("reference `{v}`: expected tx,ty,tz,roll,pitch,yaw"))
}

pub fn reference_pose(r: &[f64; 6]) -> Pose {
    Pose::from_euler(&EulerDeg::new(r[3], r[4], r[5]), Vec3::new(r[0], r[1], r[2]))
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        let s = &mut self.solver;
        match key {
            "fov_h" => self.fov_h = finite(key, v)?,
            "fov_up" => self.fov_up = finite(key, v)?,
            "fov_down" => self.fov_down = finite(key, v)?,
            "res_h" => self.res_h = finite(key, v)?,
            "res_v" => self.res_v = finite(key, v)?,
            "min_depth" => self.min_depth = finite(key, v)?,
            "gap_threshold" => self.gap_threshold = finite(key, v)?,
            "max_iterations" => s.max_iterations = num(key, v)?,
            "tolerance" => s.tolerance = finite(key, v)?,
            "damping" => s.damping = finite(key, v)?,
            "min_correspondences" => s.min_correspondences = num(key, v)?,
            "fov_reject_fraction" => s.fov_reject_fraction = finite(key, v)?,
            "init" => s.init = v.parse::<InitMode>()?,
            "max_correspondence_distance" => s.max_correspondence_distance = finite(key, v)?,
            "min_correspondence_distance" => s.min_correspondence_distance = finite(key, v)?,
            "max_step_translation" => s.max_step_translation = finite(key, v)?,
            "max_step_rotation_deg" => s.max_step_rotation_deg = finite(key, v)?,
            "s_icp" => self.scales.icp = finite(key, v)?,
            "s_fov" => self.scales.fov = finite(key, v)?,
            "s_t" => self.scales.t = finite(key, v)?,
            "s_r" => self.scales.r = finite(key, v)?,
            "scans" => self.scans = (!v.is_empty()).then(|| PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "synth" => self.synth = (!v.is_empty()).then(|| v.to_string()),
            "seed" => self.seed = num(key, v)?,
            "format" => self.format = v.parse().map_err(|e| format!("format: {e}"))?,
            "axis1" => self.axis1 = parse_axis(v)?,
            "axis2" => self.axis2 = parse_axis(v)?,
            "reference" => self.reference = if v.is_empty() { None } else { Some(parse_reference(v)?) },
            "lengths" => self.lengths = list(key, v)?,
            "distances" => self.distances = if v.is_empty() { None } else { Some(list(key, v)?) },
            "align" => {
                self.align = match v {
                    "true" => true,
                    "false" => false,
                    _ => return Err(format!("align: expected true or false, got `{v}`")),
                }
            }
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Parses `text` over the defaults. `origin` prefixes error messages.
    pub fn parse(text: &str, origin: &str) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| CliError::Config(format!("{origin}:{}: {m}", i + 1));
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected `key = value`, got `{line}`")));
            };
            let key = key.trim();
            if seen.iter().any(|k| k == key) {
                return Err(err(format!("duplicate key `{key}`")));
            }
            cfg.set(key, value.trim()).map_err(err)?;
            seen.push(key.to_string());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        RunConfig::parse(&text, &path.display().to_string())
    }

    pub fn projection(&self) -> Result<ProjectionConfig, CliError> {
        ProjectionConfig::new(
            self.fov_h,
            self.fov_up,
            self.fov_down,
            self.res_h,
            self.res_v,
            self.min_depth,
        )
        .map_err(|e| CliError::Config(format!("projection: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.projection()?;
        self.solver.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.gap_threshold > 0.0) {
            return Err(CliError::Config("gap_threshold must be positive".into()));
        }
        if self.axis1.axis == self.axis2.axis {
            return Err(CliError::Config(format!(
                "axis1 and axis2 are both {}",
                self.axis1.axis
            )));
        }
        if self.lengths.is_empty() || self.lengths.iter().any(|l| !(*l > 0.0)) {
            return Err(CliError::Config("lengths must be positive".into()));
        }
        if let Some(d) = &self.distances {
            if d.iter().any(|l| !(*l > 0.0)) {
                return Err(CliError::Config("distances must be positive".into()));
            }
        }
        Ok(())
    }

    fn value(&self, key: &str) -> String {
        let s = &self.solver;
        let opt_path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        match key {
            "fov_h" => self.fov_h.to_string(),
            "fov_up" => self.fov_up.to_string(),
            "fov_down" => self.fov_down.to_string(),
            "res_h" => self.res_h.to_string(),
            "res_v" => self.res_v.to_string(),
            "min_depth" => self.min_depth.to_string(),
            "gap_threshold" => self.gap_threshold.to_string(),
            "max_iterations" => s.max_iterations.to_string(),
            "tolerance" => s.tolerance.to_string(),
            "damping" => s.damping.to_string(),
            "min_correspondences" => s.min_correspondences.to_string(),
            "fov_reject_fraction" => s.fov_reject_fraction.to_string(),
            "init" => s.init.to_string(),
            "max_correspondence_distance" => s.max_correspondence_distance.to_string(),
            "min_correspondence_distance" => s.min_correspondence_distance.to_string(),
            "max_step_translation" => s.max_step_translation.to_string(),
            "max_step_rotation_deg" => s.max_step_rotation_deg.to_string(),
            "s_icp" => self.scales.icp.to_string(),
            "s_fov" => self.scales.fov.to_string(),
            "s_t" => self.scales.t.to_string(),
            "s_r" => self.scales.r.to_string(),
            "scans" => opt_path(&self.scans),
            "out" => self.out.display().to_string(),
            "synth" => self.synth.clone().unwrap_or_default(),
            "seed" => self.seed.to_string(),
            "format" => match self.format {
                TrajectoryFormat::Kitti => "kitti".into(),
                TrajectoryFormat::Tum => "tum".into(),
            },
            "axis1" => format_axis(&self.axis1),
            "axis2" => format_axis(&self.axis2),
            "reference" => self.reference.map(|r| join(&r)).unwrap_or_default(),
            "lengths" => join(&self.lengths),
            "distances" => self.distances.as_deref().map(join).unwrap_or_default(),
            "align" => self.align.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    /// Every key with its effective value; parses back to `self`.
    pub fn to_text(&self) -> String {
        KEYS.iter().map(|k| format!("{k} = {}\n", self.value(k))).collect()
    }
}
