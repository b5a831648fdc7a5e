use super::{IngestError, PointCloud};
use crate::geom::{relative_pose, Pose};

/// Cumulative translation along `poses`, starting at 0.
pub fn path_distances(poses: &[Pose]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(poses.len());
    for (i, p) in poses.iter().enumerate() {
        if i > 0 {
            acc += (p.translation() - poses[i - 1].translation()).norm();
        }
        out.push(acc);
    }
    out
}

/// Accumulates the scans within `window_length_m / 2` of path distance on
/// either side of `center_index`, expressed in the centre scan's frame.
pub fn build_submap(
    scans: &[PointCloud],
    poses: &[Pose],
    center_index: usize,
    window_length_m: f64,
) -> Result<PointCloud, IngestError> {
    if scans.len() != poses.len() {
        return Err(IngestError::Submap(format!(
            "{} scans but {} poses",
            scans.len(),
            poses.len()
        )));
    }
    if !(window_length_m > 0.0 && window_length_m.is_finite()) {
        return Err(IngestError::Submap(format!(
            "window length {window_length_m} must be positive"
        )));
    }
    if center_index >= poses.len() {
        return Err(IngestError::Submap(format!(
            "centre index {center_index} outside {} scans",
            poses.len()
        )));
    }
    let dist = path_distances(poses);
    let half = 0.5 * window_length_m;
    let center = &poses[center_index];
    let mut out = PointCloud::default();
    let mut selected = 0;
    for (i, scan) in scans.iter().enumerate() {
        if (dist[i] - dist[center_index]).abs() > half {
            continue;
        }
        selected += 1;
        out.extend(scan.transformed(&relative_pose(center, &poses[i])));
    }
    if selected == 0 {
        return Err(IngestError::Submap("no scans inside the window".into()));
    }
    Ok(out)
}
