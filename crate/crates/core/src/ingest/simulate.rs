use super::PointCloud;
use crate::geom::Pose;
use crate::imaging::{reconstruct_cloud, ProjectionConfig, VertexMap};

/// Scan of `scene` (world frame) from a sensor at `sensor_pose`.
///
/// The scene is moved into the sensor frame, projected, and only the nearest
/// point per pixel is kept. The result is in sensor coordinates and in
/// pixel-scan order, so its own vertex map holds every point.
pub fn simulate_scan(scene: &PointCloud, sensor_pose: &Pose, cfg: &ProjectionConfig) -> PointCloud {
    let world_to_sensor = sensor_pose.inverse();
    let mut map = VertexMap::empty(cfg);
    for p in scene.points() {
        map.insert(world_to_sensor.transform_point(p));
    }
    reconstruct_cloud(&map)
}
