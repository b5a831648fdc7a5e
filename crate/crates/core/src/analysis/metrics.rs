use log::warn;
use nalgebra::Matrix3;
use rayon::prelude::*;

use super::AnalysisError;
use crate::geom::{quat_to_euler, relative_pose, rotation_angle, Pose, Vec3};
use crate::ingest::{path_distances, Trajectory};

/// Segment lengths (m) of the KITTI odometry benchmark.
pub const KITTI_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

/// Slack when comparing accumulated path length against a target distance.
const LENGTH_EPS: f64 = 1e-9;

fn check_pair(est: &Trajectory, gt: &Trajectory) -> Result<(), AnalysisError> {
    if est.len() != gt.len() {
        return Err(AnalysisError::LengthMismatch {
            est: est.len(),
            gt: gt.len(),
        });
    }
    if gt.is_empty() {
        return Err(AnalysisError::Empty);
    }
    Ok(())
}

/// Index of the first frame at least `length` of path beyond frame `first`.
fn segment_end(dist: &[f64], first: usize, length: f64) -> Option<usize> {
    let target = dist[first] + length - LENGTH_EPS;
    let j = first + 1 + dist[first + 1..].partition_point(|&d| d < target);
    (j < dist.len()).then_some(j)
}

/// Drift over one segment length.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthError {
    pub length: f64,
    pub segments: usize,
    /// RMSE of translation error over length, in percent.
    pub t_rel: f64,
    /// RMSE of rotation error per 100 m, in degrees.
    pub r_rel: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KittiErrors {
    pub per_length: Vec<LengthError>,
    /// Mean of the per-length values.
    pub t_rel: f64,
    pub r_rel: f64,
}

/// The lengths in `lengths` for which `gt` has at least one segment.
pub fn usable_lengths(gt: &Trajectory, lengths: &[f64]) -> Vec<f64> {
    let dist = path_distances(gt.poses());
    let total = dist.last().copied().unwrap_or(0.0);
    lengths
        .iter()
        .copied()
        .filter(|&l| l > 0.0 && total >= l - LENGTH_EPS)
        .collect()
}

/// Segment drift in the style of the KITTI devkit, with every frame as a
/// segment start. Segment ends are chosen by ground-truth path distance; the
/// error of a segment is `(est_i^-1 est_j)^-1 (gt_i^-1 gt_j)`.
pub fn kitti_relative_errors(est: &Trajectory, gt: &Trajectory, lengths: &[f64]) -> Result<KittiErrors, AnalysisError> {
    check_pair(est, gt)?;
    if lengths.is_empty() || lengths.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
        return Err(AnalysisError::InvalidArgument(format!(
            "segment lengths must be positive: {lengths:?}"
        )));
    }
    let dist = path_distances(gt.poses());
    let usable = usable_lengths(gt, lengths);
    if usable.len() < lengths.len() {
        return Err(AnalysisError::TooShort {
            path_length: *dist.last().expect("non-empty"),
            missing: lengths.iter().copied().filter(|l| !usable.contains(l)).collect(),
            usable,
        });
    }

    let (ep, gp) = (est.poses(), gt.poses());
    let per_start: Vec<Vec<Option<(f64, f64)>>> = (0..gp.len())
        .into_par_iter()
        .map(|i| {
            lengths
                .iter()
                .map(|&len| {
                    let j = segment_end(&dist, i, len)?;
                    let err = relative_pose(&relative_pose(&ep[i], &ep[j]), &relative_pose(&gp[i], &gp[j]));
                    let t = err.translation().norm() / len;
                    let r = rotation_angle(&err.rotation()).to_degrees() / len * 100.0;
                    Some((t * t, r * r))
                })
                .collect()
        })
        .collect();

    let mut per_length = Vec::with_capacity(lengths.len());
    for (k, &length) in lengths.iter().enumerate() {
        let (mut st, mut sr, mut n) = (0.0, 0.0, 0usize);
        for (t2, r2) in per_start.iter().filter_map(|row| row[k]) {
            st += t2;
            sr += r2;
            n += 1;
        }
        per_length.push(LengthError {
            length,
            segments: n,
            t_rel: 100.0 * (st / n as f64).sqrt(),
            r_rel: (sr / n as f64).sqrt(),
        });
    }
    let m = per_length.len() as f64;
    Ok(KittiErrors {
        t_rel: per_length.iter().map(|e| e.t_rel).sum::<f64>() / m,
        r_rel: per_length.iter().map(|e| e.r_rel).sum::<f64>() / m,
        per_length,
    })
}

/// Least-squares rigid transform `G` minimizing `sum |G src_i - dst_i|^2`,
/// with the rank of the centred source scatter.
fn fit_rigid(src: &[Vec3], dst: &[Vec3]) -> (Pose, usize) {
    let n = src.len() as f64;
    let mu_s = src.iter().sum::<Vec3>() / n;
    let mu_d = dst.iter().sum::<Vec3>() / n;
    let mut cross = Matrix3::zeros();
    let mut scatter = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        let (cs, cd) = (s - mu_s, d - mu_d);
        cross += cd * cs.transpose();
        scatter += cs * cs.transpose();
    }
    let sv = scatter.singular_values();
    let top = sv.max();
    let rank = sv.iter().filter(|&&s| s > 1e-24 && s > 1e-12 * top).count();

    let svd = cross.svd(true, true);
    let (u, v_t) = (svd.u.expect("requested U"), svd.v_t.expect("requested V^T"));
    let mut fix = Matrix3::identity();
    if (u.determinant() * v_t.determinant()) < 0.0 {
        fix[(svd.singular_values.imin(), svd.singular_values.imin())] = -1.0;
    }
    let r = u * fix * v_t;
    (Pose::from_parts(r, mu_d - r * mu_s), rank)
}

/// Rigid (no scale) alignment of `est` positions onto `gt` positions:
/// `G` minimizing `sum |G p_est - p_gt|^2`.
pub fn umeyama_align(est: &Trajectory, gt: &Trajectory) -> Result<Pose, AnalysisError> {
    check_pair(est, gt)?;
    if est.len() < 3 {
        return Err(AnalysisError::Degenerate(format!("{} positions, need 3", est.len())));
    }
    let (g, rank) = fit_rigid(&est.positions(), &gt.positions());
    if rank < 2 {
        return Err(AnalysisError::Degenerate(format!(
            "estimated positions span rank {rank}, need 2 (non-collinear)"
        )));
    }
    Ok(g)
}

/// Position RMSE, optionally after rigid alignment. Collinear or coincident
/// positions leave the alignment non-unique but the minimum well defined,
/// so they are accepted here.
pub fn ate_rmse(est: &Trajectory, gt: &Trajectory, align: bool) -> Result<f64, AnalysisError> {
    check_pair(est, gt)?;
    let (pe, pg) = (est.positions(), gt.positions());
    let g = if align { fit_rigid(&pe, &pg).0 } else { Pose::identity() };
    let sum: f64 = pe
        .iter()
        .zip(&pg)
        .map(|(e, p)| (g.transform_point(e) - p).norm_squared())
        .sum();
    Ok((sum / pe.len() as f64).sqrt())
}

/// Box-plot statistics; quantiles interpolate linearly between order
/// statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub count: usize,
    pub median: f64,
    pub q25: f64,
    pub q75: f64,
    pub min: f64,
    pub max: f64,
}

impl BoxStats {
    pub fn from_samples(samples: &[f64]) -> Option<BoxStats> {
        if samples.is_empty() {
            return None;
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = p * (s.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = (lo + 1).min(s.len() - 1);
            s[lo] + (pos - lo as f64) * (s[hi] - s[lo])
        };
        Some(BoxStats {
            count: s.len(),
            median: q(0.5),
            q25: q(0.25),
            q75: q(0.75),
            min: s[0],
            max: s[s.len() - 1],
        })
    }
}

/// Sub-trajectory errors at one travel distance.
#[derive(Debug, Clone, PartialEq)]
pub struct SubtrajErrors {
    pub distance: f64,
    /// End-point position error as a percentage of `distance`.
    pub translation_pct: BoxStats,
    /// Absolute yaw of the end-point rotation error (deg).
    pub heading_deg: BoxStats,
}

/// For each travel distance, every sub-trajectory starting at a frame and
/// ending at the first frame `distance` further along the ground-truth path
/// is aligned by its first state and scored at its end point. Distances
/// longer than the path are skipped with a warning.
pub fn relative_errors_subtraj(
    est: &Trajectory,
    gt: &Trajectory,
    distances: &[f64],
) -> Result<Vec<SubtrajErrors>, AnalysisError> {
    check_pair(est, gt)?;
    if distances.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(AnalysisError::InvalidArgument(format!(
            "distances must be positive: {distances:?}"
        )));
    }
    let dist = path_distances(gt.poses());
    let (ep, gp) = (est.poses(), gt.poses());
    let mut out = Vec::with_capacity(distances.len());
    for &d in distances {
        let errors: Vec<(f64, f64)> = (0..gp.len())
            .into_par_iter()
            .filter_map(|i| {
                let j = segment_end(&dist, i, d)?;
                let de = relative_pose(&ep[i], &ep[j]);
                let dg = relative_pose(&gp[i], &gp[j]);
                let t = (de.translation() - dg.translation()).norm() / d * 100.0;
                let yaw = quat_to_euler(&relative_pose(&dg, &de).quaternion()).rz.abs();
                Some((t, yaw))
            })
            .collect();
        if errors.is_empty() {
            warn!(
                "travel distance {d} m exceeds the {:.3} m path; skipped",
                dist.last().copied().unwrap_or(0.0)
            );
            continue;
        }
        let (t, yaw): (Vec<f64>, Vec<f64>) = errors.into_iter().unzip();
        out.push(SubtrajErrors {
            distance: d,
            translation_pct: BoxStats::from_samples(&t).expect("non-empty"),
            heading_deg: BoxStats::from_samples(&yaw).expect("non-empty"),
        });
    }
    Ok(out)
}
