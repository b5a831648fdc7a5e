use std::fmt::Write as _;

use log::warn;

use super::metrics::{ate_rmse, kitti_relative_errors, relative_errors_subtraj, usable_lengths, BoxStats};
use super::{AnalysisError, KittiErrors, SubtrajErrors, KITTI_LENGTHS};
use crate::ingest::{path_distances, Trajectory};

#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    /// Segment lengths (m) for drift; lengths longer than the path are dropped.
    pub lengths: Vec<f64>,
    /// Sub-trajectory travel distances (m). `None` uses 10..50% of the path.
    pub distances: Option<Vec<f64>>,
    /// Rigidly align before computing ATE.
    pub align: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            lengths: KITTI_LENGTHS.to_vec(),
            distances: None,
            align: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub poses: usize,
    /// Ground-truth path length (m).
    pub path_length: f64,
    /// `None` when the path is shorter than every requested length.
    pub kitti: Option<KittiErrors>,
    pub ate_rmse: f64,
    pub ate_aligned: bool,
    pub subtraj: Vec<SubtrajErrors>,
}

pub fn evaluate(est: &Trajectory, gt: &Trajectory, opts: &EvalOptions) -> Result<MetricReport, AnalysisError> {
    let ate = ate_rmse(est, gt, opts.align)?;
    let path_length = path_distances(gt.poses()).last().copied().unwrap_or(0.0);
    let lengths = usable_lengths(gt, &opts.lengths);
    if lengths.is_empty() {
        warn!("path of {path_length:.3} m is shorter than every segment length; drift not computed");
    } else if lengths.len() < opts.lengths.len() {
        warn!("path of {path_length:.3} m: drift computed for {lengths:?} only");
    }
    let kitti = if lengths.is_empty() {
        None
    } else {
        Some(kitti_relative_errors(est, gt, &lengths)?)
    };
    let distances = match &opts.distances {
        Some(d) => d.clone(),
        None if path_length > 0.0 => [0.1, 0.2, 0.3, 0.4, 0.5]
            .iter()
            .map(|f| (f * path_length * 1e6).round() / 1e6)
            .collect(),
        None => Vec::new(),
    };
    let subtraj = relative_errors_subtraj(est, gt, &distances)?;
    Ok(MetricReport {
        poses: gt.len(),
        path_length,
        kitti,
        ate_rmse: ate,
        ate_aligned: opts.align,
        subtraj,
    })
}

fn stats_fields(s: &BoxStats) -> [(&'static str, f64); 5] {
    [
        ("median", s.median),
        ("q25", s.q25),
        ("q75", s.q75),
        ("min", s.min),
        ("max", s.max),
    ]
}

impl MetricReport {
    /// Fixed-width summary, six decimals.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "poses: {}", self.poses);
        let _ = writeln!(out, "path length (m): {:.6}", self.path_length);
        match &self.kitti {
            Some(k) => {
                let _ = writeln!(out, "segment drift:");
                let _ = writeln!(
                    out,
                    "  {:>10} {:>9} {:>12} {:>16}",
                    "length_m", "segments", "t_rel_pct", "r_rel_deg_100m"
                );
                for e in &k.per_length {
                    let _ = writeln!(
                        out,
                        "  {:>10} {:>9} {:>12.6} {:>16.6}",
                        e.length, e.segments, e.t_rel, e.r_rel
                    );
                }
                let _ = writeln!(out, "t_rel (%): {:.6}", k.t_rel);
                let _ = writeln!(out, "r_rel (deg/100m): {:.6}", k.r_rel);
            }
            None => {
                let _ = writeln!(out, "t_rel (%): n/a (path shorter than every segment length)");
                let _ = writeln!(out, "r_rel (deg/100m): n/a");
            }
        }
        let how = if self.ate_aligned { "aligned" } else { "unaligned" };
        let _ = writeln!(out, "ATE RMSE (m, {how}): {:.6}", self.ate_rmse);
        if !self.subtraj.is_empty() {
            let _ = writeln!(out, "sub-trajectory errors:");
            let _ = writeln!(
                out,
                "  {:>12} {:>6} {:>10} {:>10} {:>10} {:>10} {:>10}",
                "distance_m", "count", "metric", "median", "q25", "q75", "max"
            );
            for e in &self.subtraj {
                for (name, s) in [("trans_pct", &e.translation_pct), ("yaw_deg", &e.heading_deg)] {
                    let _ = writeln!(
                        out,
                        "  {:>12} {:>6} {:>10} {:>10.6} {:>10.6} {:>10.6} {:>10.6}",
                        e.distance, s.count, name, s.median, s.q25, s.q75, s.max
                    );
                }
            }
        }
        out
    }

    /// Long-format CSV with header `section,key,metric,value`. Sections are
    /// `summary`, `drift` (key = segment length, or `mean`), `ate`, and
    /// `subtraj` (key = travel distance). Values use shortest round-trip
    /// formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("section,key,metric,value\n");
        let _ = writeln!(out, "summary,,poses,{}", self.poses);
        let _ = writeln!(out, "summary,,path_length_m,{}", self.path_length);
        if let Some(k) = &self.kitti {
            for e in &k.per_length {
                let _ = writeln!(out, "drift,{},segments,{}", e.length, e.segments);
                let _ = writeln!(out, "drift,{},t_rel_pct,{}", e.length, e.t_rel);
                let _ = writeln!(out, "drift,{},r_rel_deg_per_100m,{}", e.length, e.r_rel);
            }
            let _ = writeln!(out, "drift,mean,t_rel_pct,{}", k.t_rel);
            let _ = writeln!(out, "drift,mean,r_rel_deg_per_100m,{}", k.r_rel);
        }
        let metric = if self.ate_aligned { "rmse_aligned_m" } else { "rmse_m" };
        let _ = writeln!(out, "ate,,{metric},{}", self.ate_rmse);
        for e in &self.subtraj {
            let _ = writeln!(out, "subtraj,{},count,{}", e.distance, e.translation_pct.count);
            for (prefix, s) in [("trans_pct", &e.translation_pct), ("yaw_deg", &e.heading_deg)] {
                for (name, v) in stats_fields(s) {
                    let _ = writeln!(out, "subtraj,{},{prefix}_{name},{v}", e.distance);
                }
            }
        }
        out
    }
}
