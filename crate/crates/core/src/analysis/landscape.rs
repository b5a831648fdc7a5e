use std::fmt::Write as _;

use rayon::prelude::*;

use super::AnalysisError;
use crate::geom::{EulerDeg, Pose, Vec3};
use crate::imaging::Frame;
use crate::registration::{fov_loss, icp_loss, unsupervised_loss, LossScales};

pub const LOSS_GRID_HEADER: &str = "axis1,axis2,L_icp,L_fov,L_uns";

const MAX_TRANSLATION_M: f64 = 100.0;
const MAX_ROTATION_DEG: f64 = 180.0;
const MAX_SAMPLES_PER_AXIS: usize = 10_001;

/// Perturbation axis. Translations in m, rotations in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    Tx,
    Ty,
    Tz,
    Roll,
    Pitch,
    Yaw,
}

impl Axis {
    pub fn is_rotation(self) -> bool {
        matches!(self, Axis::Roll | Axis::Pitch | Axis::Yaw)
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::Tx => "x",
            Axis::Ty => "y",
            Axis::Tz => "z",
            Axis::Roll => "roll",
            Axis::Pitch => "pitch",
            Axis::Yaw => "yaw",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "x" | "tx" => Axis::Tx,
            "y" | "ty" => Axis::Ty,
            "z" | "tz" => Axis::Tz,
            "roll" | "rx" => Axis::Roll,
            "pitch" | "ry" => Axis::Pitch,
            "yaw" | "rz" => Axis::Yaw,
            _ => return Err(AnalysisError::InvalidAxis(format!("unknown axis `{s}`"))),
        })
    }
}

impl std::fmt::Display for Axis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Regular samples `min, min + step, ..., max` along one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSpec {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl AxisSpec {
    pub fn new(axis: Axis, min: f64, max: f64, step: f64) -> Result<Self, AnalysisError> {
        let spec = AxisSpec { axis, min, max, step };
        spec.validate()?;
        Ok(spec)
    }

    /// `-half_range..=half_range`.
    pub fn symmetric(axis: Axis, half_range: f64, step: f64) -> Result<Self, AnalysisError> {
        AxisSpec::new(axis, -half_range, half_range, step)
    }

    pub fn validate(&self) -> Result<(), AnalysisError> {
        let bad = |m: String| Err(AnalysisError::InvalidAxis(format!("{}: {m}", self.axis)));
        if ![self.min, self.max, self.step].iter().all(|v| v.is_finite()) {
            return bad("bounds and step must be finite".into());
        }
        if !(self.step > 0.0) || self.max < self.min {
            return bad(format!(
                "need step > 0 and min <= max (got {}..{} by {})",
                self.min, self.max, self.step
            ));
        }
        let limit = if self.axis.is_rotation() {
            MAX_ROTATION_DEG
        } else {
            MAX_TRANSLATION_M
        };
        if self.min < -limit || self.max > limit {
            return bad(format!("range {}..{} exceeds +-{limit}", self.min, self.max));
        }
        if self.count() > MAX_SAMPLES_PER_AXIS {
            return bad(format!("{} samples exceeds {MAX_SAMPLES_PER_AXIS}", self.count()));
        }
        Ok(())
    }

    /// Number of samples.
    pub fn count(&self) -> usize {
        ((self.max - self.min) / self.step + 1e-9).floor() as usize + 1
    }

    /// Sample `i`, snapped to 1e-9 so that decimal steps print cleanly.
    pub fn value(&self, i: usize) -> f64 {
        let v = self.min + i as f64 * self.step;
        let snapped = (v * 1e9).round() / 1e9;
        if snapped == 0.0 {
            0.0
        } else {
            snapped
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count()).map(|i| self.value(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSample {
    pub l_icp: f64,
    pub l_fov: usize,
    pub l_uns: f64,
}

/// Losses on a 2D perturbation grid, `axes[0]` major.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrid {
    axes: [AxisSpec; 2],
    reference: Pose,
    samples: Vec<LossSample>,
}

impl LossGrid {
    pub fn axes(&self) -> &[AxisSpec; 2] {
        &self.axes
    }

    pub fn reference(&self) -> &Pose {
        &self.reference
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.axes[0].count(), self.axes[1].count())
    }

    pub fn samples(&self) -> &[LossSample] {
        &self.samples
    }

    pub fn get(&self, i: usize, j: usize) -> &LossSample {
        &self.samples[i * self.axes[1].count() + j]
    }

    /// Cell with the smallest `L_uns`; the first in scan order on ties.
    pub fn argmin(&self) -> (usize, usize) {
        let mut best = 0;
        for (k, s) in self.samples.iter().enumerate() {
            if s.l_uns < self.samples[best].l_uns {
                best = k;
            }
        }
        let n2 = self.axes[1].count();
        (best / n2, best % n2)
    }

    /// Perturbation values of [`LossGrid::argmin`].
    pub fn min_offset(&self) -> (f64, f64) {
        let (i, j) = self.argmin();
        (self.axes[0].value(i), self.axes[1].value(j))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.samples.len() + 1));
        out.push_str(LOSS_GRID_HEADER);
        out.push('\n');
        let (n1, n2) = self.shape();
        for i in 0..n1 {
            for j in 0..n2 {
                let s = self.get(i, j);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.axes[0].value(i),
                    self.axes[1].value(j),
                    s.l_icp,
                    s.l_fov,
                    s.l_uns
                );
            }
        }
        out
    }
}

/// Left perturbation `Delta` with the given axis values.
fn perturbation(axes: &[AxisSpec; 2], a: f64, b: f64) -> Pose {
    let mut t = Vec3::zeros();
    let mut r = EulerDeg::new(0.0, 0.0, 0.0);
    for (spec, v) in axes.iter().zip([a, b]) {
        match spec.axis {
            Axis::Tx => t.x = v,
            Axis::Ty => t.y = v,
            Axis::Tz => t.z = v,
            Axis::Roll => r.rx = v,
            Axis::Pitch => r.ry = v,
            Axis::Yaw => r.rz = v,
        }
    }
    Pose::from_euler(&r, t)
}

/// Evaluates the unsupervised loss terms at `Delta * t_ref` for every cell
/// of the two-axis grid; the remaining four axes stay at `t_ref`.
pub fn loss_landscape(
    frame_t: &Frame,
    frame_next: &Frame,
    t_ref: &Pose,
    axes: [AxisSpec; 2],
    scales: &LossScales,
) -> Result<LossGrid, AnalysisError> {
    for a in &axes {
        a.validate()?;
    }
    if axes[0].axis == axes[1].axis {
        return Err(AnalysisError::InvalidAxis(format!("both axes are {}", axes[0].axis)));
    }
    if frame_t.config() != frame_next.config() {
        return Err(AnalysisError::InvalidArgument(
            "frames use different projection configurations".into(),
        ));
    }
    let (n1, n2) = (axes[0].count(), axes[1].count());
    let vmap_next = frame_next.vertex_map();
    let samples = (0..n1 * n2)
        .into_par_iter()
        .map(|k| {
            let t = perturbation(&axes, axes[0].value(k / n2), axes[1].value(k % n2)) * *t_ref;
            let l_icp = icp_loss(frame_t, vmap_next, &t).sum;
            let l_fov = fov_loss(vmap_next, &t, frame_t.config());
            LossSample {
                l_icp,
                l_fov,
                l_uns: unsupervised_loss(l_icp, l_fov as f64, scales),
            }
        })
        .collect();
    Ok(LossGrid {
        axes,
        reference: *t_ref,
        samples,
    })
}
