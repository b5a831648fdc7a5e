//! Relative pose by direct minimization of the point-to-plane objective.
//!
//! Each iteration re-associates at the current motion, builds the normal
//! equations from the analytic residual Jacobians of the correspondences
//! inside the current distance gate, and takes a damped Gauss-Newton step
//! applied on the left (`T <- exp(dxi) T`). The step is accepted only if the
//! squared point-to-plane cost of those same correspondences does not
//! increase and the FOV count does not jump; association is refreshed on the
//! next iteration.
//!
//! The gate shrinks geometrically from `max_correspondence_distance` to
//! `min_correspondence_distance` with every accepted step, and drops
//! straight to the minimum once a step falls below the tolerance.

use std::fmt::Write as _;

use log::{debug, warn};
use nalgebra::{Matrix6, Vector6};
use thiserror::Error;

use crate::geom::{relative_pose, se3_exp, Pose, Twist, Vec3};
use crate::imaging::{Frame, VertexMap};
use crate::ingest::Trajectory;
use crate::registration::{associate_all, fov_loss, icp_loss, icp_residual_jacobian, Correspondence};

/// Per accepted step.
const GATE_DECAY: f64 = 0.85;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("insufficient overlap: {found} correspondences, need {required}")]
    InsufficientOverlap { found: usize, required: usize },
    #[error("non-finite normal equations at iteration {0}")]
    Numerical(usize),
    #[error("frames use different projection configurations")]
    ConfigMismatch,
    #[error("no frames to process")]
    NoFrames,
    #[error("invalid solver options: {0}")]
    InvalidOptions(String),
}

/// How each pair's optimization is started.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitMode {
    Identity,
    /// Reuse the previous pair's estimate.
    ConstantVelocity,
    /// Straight ahead along +x by the given distance (m), no rotation.
    FixedForward(f64),
}

impl std::str::FromStr for InitMode {
    type Err = String;

    /// `identity`, `constant-velocity`, or `forward:<meters>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "identity" => Ok(InitMode::Identity),
            "constant-velocity" => Ok(InitMode::ConstantVelocity),
            _ => match s.strip_prefix("forward:").map(str::parse::<f64>) {
                Some(Ok(d)) if d.is_finite() => Ok(InitMode::FixedForward(d)),
                _ => Err(format!(
                    "unknown init mode `{s}` (identity | constant-velocity | forward:<m>)"
                )),
            },
        }
    }
}

impl std::fmt::Display for InitMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitMode::Identity => f.write_str("identity"),
            InitMode::ConstantVelocity => f.write_str("constant-velocity"),
            InitMode::FixedForward(d) => write!(f, "forward:{d}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Stop a phase once an accepted update has twist norm below this.
    pub tolerance: f64,
    /// Initial Levenberg-Marquardt damping.
    pub damping: f64,
    /// Correspondences required inside the initial gate.
    pub min_correspondences: usize,
    /// Reject a step whose FOV count grows by more than this fraction of
    /// the valid source vertices.
    pub fov_reject_fraction: f64,
    pub init: InitMode,
    /// Initial association gate (m).
    pub max_correspondence_distance: f64,
    /// Final association gate (m).
    pub min_correspondence_distance: f64,
    /// Per-iteration step clamp: translation (m).
    pub max_step_translation: f64,
    /// Per-iteration step clamp: rotation (deg).
    pub max_step_rotation_deg: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 30,
            tolerance: 1e-6,
            damping: 1e-4,
            min_correspondences: 100,
            fov_reject_fraction: 0.5,
            init: InitMode::Identity,
            max_correspondence_distance: 2.0,
            min_correspondence_distance: 0.5,
            max_step_translation: 2.0,
            max_step_rotation_deg: 10.0,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidOptions(m.to_string()));
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.tolerance > 0.0) || !(self.damping > 0.0) {
            return bad("tolerance and damping must be positive");
        }
        if self.min_correspondences < 6 {
            return bad("min_correspondences must be at least 6");
        }
        if !(self.fov_reject_fraction > 0.0) {
            return bad("fov_reject_fraction must be positive");
        }
        if !(self.min_correspondence_distance > 0.0)
            || !(self.max_correspondence_distance >= self.min_correspondence_distance)
        {
            return bad("correspondence gates must satisfy 0 < min <= max");
        }
        if !(self.max_step_translation > 0.0) || !(self.max_step_rotation_deg > 0.0) {
            return bad("step clamps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Sum of absolute point-to-plane distances at the result (m).
    pub final_loss: f64,
    /// `final_loss / n_corr` (m).
    pub mean_residual: f64,
    pub n_corr: usize,
    pub fov_count: usize,
    pub converged: bool,
}

fn inliers_at(frame_t: &Frame, vmap_next: &VertexMap, t: &Pose, gate: f64) -> Vec<Correspondence> {
    let mut corrs = associate_all(frame_t, vmap_next, t);
    corrs.retain(|c| c.distance() <= gate);
    corrs
}

/// Squared point-to-plane cost of fixed pairs under motion `t`.
fn fixed_cost(corrs: &[Correspondence], t: &Pose) -> f64 {
    corrs
        .iter()
        .map(|c| {
            let r = c.normal.dot(&(t.transform_point(&c.source) - c.target));
            r * r
        })
        .sum()
}

fn normal_equations(inliers: &[Correspondence], t: &Pose) -> (Matrix6<f64>, Vector6<f64>) {
    let mut h = Matrix6::zeros();
    let mut g = Vector6::zeros();
    for c in inliers {
        let (r, j) = icp_residual_jacobian(c, t);
        h += j.transpose() * j;
        g += j.transpose() * r;
    }
    (h, g)
}

fn twist_distance(a: &Pose, b: &Pose) -> f64 {
    let d = relative_pose(a, b);
    let (dt, dr) = d.magnitude();
    (dt * dt + dr * dr).sqrt()
}

fn clamp_step(step: Vector6<f64>, opts: &SolverOptions) -> Vector6<f64> {
    let tn = step.fixed_rows::<3>(0).norm();
    let rn = step.fixed_rows::<3>(3).norm();
    let mut scale: f64 = 1.0;
    if tn > opts.max_step_translation {
        scale = scale.min(opts.max_step_translation / tn);
    }
    let rmax = opts.max_step_rotation_deg.to_radians();
    if rn > rmax {
        scale = scale.min(rmax / rn);
    }
    step * scale
}

/// Estimates `T` mapping `frame_next` points into `frame_t`.
pub fn estimate_relative_pose(
    frame_t: &Frame,
    frame_next: &Frame,
    init: &Pose,
    opts: &SolverOptions,
) -> Result<(Pose, SolveStats), SolverError> {
    opts.validate()?;
    if frame_t.config() != frame_next.config() {
        return Err(SolverError::ConfigMismatch);
    }
    let vmap_next = frame_next.vertex_map();
    let n_source = vmap_next.valid_count();

    let initial_corr = inliers_at(frame_t, vmap_next, init, opts.max_correspondence_distance).len();
    if initial_corr < opts.min_correspondences {
        return Err(SolverError::InsufficientOverlap {
            found: initial_corr,
            required: opts.min_correspondences,
        });
    }

    let mut t = *init;
    let mut gate = opts.max_correspondence_distance;
    let mut fov = fov_loss(vmap_next, &t, frame_t.config());
    let mut lambda = opts.damping;
    let mut iterations = 0;
    let mut converged = false;
    let mut two_back: Option<Pose> = None;

    while iterations < opts.max_iterations {
        iterations += 1;
        let inliers = inliers_at(frame_t, vmap_next, &t, gate);
        if inliers.len() < 6 {
            debug!("only {} correspondences inside the {gate} m gate", inliers.len());
            break;
        }
        let (h, g) = normal_equations(&inliers, &t);
        if h.iter().chain(g.iter()).any(|v| !v.is_finite()) {
            return Err(SolverError::Numerical(iterations));
        }
        let mut damped = h;
        for k in 0..6 {
            damped[(k, k)] += lambda * (h[(k, k)] + 1e-9);
        }
        let step = match damped.cholesky() {
            Some(ch) => clamp_step(-ch.solve(&g), opts),
            None => {
                lambda *= 10.0;
                continue;
            }
        };

        let candidate = (se3_exp(&Twist(step)) * t).orthonormalized();
        let next_fov = fov_loss(vmap_next, &candidate, frame_t.config());
        let fov_jump = next_fov as f64 - fov as f64 > opts.fov_reject_fraction * n_source as f64;
        let (before, after) = (fixed_cost(&inliers, &t), fixed_cost(&inliers, &candidate));
        debug!(
            "iteration {iterations}: gate {gate:.3} m, {} pairs, cost {before:.6} -> {after:.6}, |step| {:.3e}",
            inliers.len(),
            step.norm()
        );
        if !fov_jump && after <= before {
            // Re-association can settle into a two-state cycle; returning to
            // the pose of two accepted steps ago counts as a stalled step.
            let cycled = two_back.is_some_and(|p: Pose| twist_distance(&p, &candidate) < opts.tolerance);
            two_back = Some(t);
            t = candidate;
            fov = next_fov;
            lambda = (lambda / 10.0).max(1e-12);
            if step.norm() < opts.tolerance || cycled {
                if gate <= opts.min_correspondence_distance {
                    converged = true;
                    break;
                }
                gate = opts.min_correspondence_distance;
            }
            gate = (GATE_DECAY * gate).max(opts.min_correspondence_distance);
        } else {
            lambda *= 10.0;
            if lambda > 1e12 {
                debug!("damping saturated at iteration {iterations}");
                converged = gate <= opts.min_correspondence_distance;
                break;
            }
        }
    }

    let final_loss = icp_loss(frame_t, vmap_next, &t);
    Ok((
        t,
        SolveStats {
            iterations,
            final_loss: final_loss.sum,
            mean_residual: final_loss.mean(),
            n_corr: final_loss.n_corr,
            fov_count: fov,
            converged,
        },
    ))
}

/// Outcome of one frame pair in [`run_odometry`].
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    /// Index of the later frame of the pair.
    pub index: usize,
    pub motion: Pose,
    pub stats: Option<SolveStats>,
    /// Set when the solve failed and the initialization motion was used.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Odometry {
    pub trajectory: Trajectory,
    pub pairs: Vec<PairRecord>,
}

/// Incremental frame-to-frame odometry holding only the latest frame.
#[derive(Debug)]
pub struct Odometer {
    opts: SolverOptions,
    last: Option<Frame>,
    previous: Pose,
    poses: Vec<Pose>,
    pairs: Vec<PairRecord>,
}

impl Odometer {
    pub fn new(opts: SolverOptions) -> Result<Self, SolverError> {
        opts.validate()?;
        Ok(Odometer {
            opts,
            last: None,
            previous: Pose::identity(),
            poses: Vec::new(),
            pairs: Vec::new(),
        })
    }

    /// Adds the next frame; returns the record of the pair it closes.
    pub fn push(&mut self, frame: Frame) -> Option<&PairRecord> {
        let closed = match self.last.take() {
            None => {
                self.poses.push(Pose::identity());
                false
            }
            Some(prev) => {
                self.advance(&prev, &frame);
                true
            }
        };
        self.last = Some(frame);
        if closed {
            self.pairs.last()
        } else {
            None
        }
    }

    fn advance(&mut self, prev: &Frame, next: &Frame) {
        let k = self.pairs.len();
        let init = match self.opts.init {
            InitMode::Identity => Pose::identity(),
            InitMode::ConstantVelocity => self.previous,
            InitMode::FixedForward(d) => Pose::from_translation(Vec3::new(d, 0.0, 0.0)),
        };
        let record = match estimate_relative_pose(prev, next, &init, &self.opts) {
            Ok((motion, stats)) => PairRecord {
                index: k + 1,
                motion,
                stats: Some(stats),
                failure: None,
            },
            Err(e) => {
                warn!("pair {}-{}: {e}; using the initialization motion", k, k + 1);
                PairRecord {
                    index: k + 1,
                    motion: init,
                    stats: None,
                    failure: Some(e.to_string()),
                }
            }
        };
        self.previous = record.motion;
        let last = *self.poses.last().expect("at least one pose");
        self.poses.push((last * record.motion).orthonormalized());
        self.pairs.push(record);
    }

    /// Poses so far, starting at identity.
    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn finish(self) -> Result<Odometry, SolverError> {
        if self.poses.is_empty() {
            return Err(SolverError::NoFrames);
        }
        let trajectory = Trajectory::from_poses(self.poses).expect("chained poses are valid");
        Ok(Odometry {
            trajectory,
            pairs: self.pairs,
        })
    }
}

/// Frame-to-frame odometry: `pose_0 = I`, `pose_{k+1} = pose_k * T_{k,k+1}`.
/// A pair that fails to register keeps its initialization motion and is
/// flagged in its [`PairRecord`].
pub fn run_odometry(frames: &[Frame], opts: &SolverOptions) -> Result<Odometry, SolverError> {
    let mut odo = Odometer::new(opts.clone())?;
    if !frames.is_empty() {
        odo.poses.push(Pose::identity());
    }
    for pair in frames.windows(2) {
        odo.advance(&pair[0], &pair[1]);
    }
    odo.finish()
}

/// CSV with header
/// `index,iterations,final_loss,mean_residual,n_corr,fov_count,converged,failed`.
pub fn pair_stats_csv(pairs: &[PairRecord]) -> String {
    let mut out = String::from("index,iterations,final_loss,mean_residual,n_corr,fov_count,converged,failed\n");
    for p in pairs {
        match &p.stats {
            Some(s) => {
                let _ = writeln!(
                    out,
                    "{},{},{:e},{:e},{},{},{},0",
                    p.index, s.iterations, s.final_loss, s.mean_residual, s.n_corr, s.fov_count, s.converged as u8
                );
            }
            None => {
                let _ = writeln!(out, "{},0,,,0,0,0,1", p.index);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{relative_pose, rotation_angle, EulerDeg};
    use crate::imaging::ProjectionConfig;
    use crate::ingest::{simulate_scan, synth_scene, SceneSpec};

    fn frame_at(scene: &crate::ingest::PointCloud, pose: &Pose) -> Frame {
        let cfg = ProjectionConfig::default();
        Frame::from_cloud(&simulate_scan(scene, pose, &cfg), &cfg, 0.5)
    }

    #[test]
    fn self_pair_stays_at_identity() {
        let scene = synth_scene(&SceneSpec::room(1));
        let f = frame_at(&scene, &Pose::identity());
        let (t, stats) = estimate_relative_pose(&f, &f, &Pose::identity(), &SolverOptions::default()).unwrap();
        let (dt, dr) = t.magnitude();
        assert!(dt < 1e-6 && dr < 1e-6);
        assert!(stats.converged);
        assert!(stats.iterations <= 2, "{} iterations", stats.iterations);
    }

    #[test]
    fn recovers_forward_and_yaw() {
        let scene = synth_scene(&SceneSpec::room(2));
        let truth = Pose::from_euler(&EulerDeg::new(0.0, 0.0, 5.0), Vec3::new(1.0, 0.0, 0.0));
        let f0 = frame_at(&scene, &Pose::identity());
        let f1 = frame_at(&scene, &truth);
        let (t, stats) = estimate_relative_pose(&f0, &f1, &Pose::identity(), &SolverOptions::default()).unwrap();
        let err = relative_pose(&truth, &t);
        assert!(err.translation().norm() < 0.05, "{:?} {:?}", t, stats);
        assert!(rotation_angle(&err.rotation()).to_degrees() < 0.5, "{:?}", t);
    }

    #[test]
    fn common_rigid_motion_conjugates_result() {
        let cfg = ProjectionConfig::default();
        let scene = synth_scene(&SceneSpec::room(6));
        let truth = Pose::from_euler(&EulerDeg::new(0.0, 1.0, -3.0), Vec3::new(0.8, 0.3, 0.0));
        let s0 = simulate_scan(&scene, &Pose::identity(), &cfg);
        let s1 = simulate_scan(&scene, &truth, &cfg);
        let g = Pose::from_euler(&EulerDeg::new(0.0, 0.0, 30.0), Vec3::new(0.2, -0.1, 0.0));
        let opts = SolverOptions::default();
        let solve = |a: &crate::ingest::PointCloud, b: &crate::ingest::PointCloud| {
            let fa = Frame::from_cloud(a, &cfg, 0.5);
            let fb = Frame::from_cloud(b, &cfg, 0.5);
            estimate_relative_pose(&fa, &fb, &Pose::identity(), &opts).unwrap().0
        };
        let plain = solve(&s0, &s1);
        let moved = solve(&s0.transformed(&g), &s1.transformed(&g));
        let back = g.inverse() * moved * g;
        let err = relative_pose(&plain, &back);
        assert!(err.translation().norm() < 0.01, "{:?}", err);
        assert!(rotation_angle(&err.rotation()).to_degrees() < 0.1);
    }

    #[test]
    fn empty_space_is_insufficient_overlap() {
        let scene = synth_scene(&SceneSpec::room(3));
        let f = frame_at(&scene, &Pose::identity());
        let lifted = Pose::from_translation(Vec3::new(0.0, 0.0, 10.0));
        let err = estimate_relative_pose(&f, &f, &lifted, &SolverOptions::default()).unwrap_err();
        assert!(matches!(err, SolverError::InsufficientOverlap { found: 0, .. }));
    }

    #[test]
    fn odometry_trivial_cases() {
        let scene = synth_scene(&SceneSpec::room(4));
        let f = frame_at(&scene, &Pose::identity());
        let single = run_odometry(std::slice::from_ref(&f), &SolverOptions::default()).unwrap();
        assert_eq!(single.trajectory.poses(), &[Pose::identity()]);
        let copies = vec![f.clone(), f.clone(), f];
        let out = run_odometry(&copies, &SolverOptions::default()).unwrap();
        for p in out.trajectory.poses() {
            let (dt, dr) = p.magnitude();
            assert!(dt < 1e-6 && dr < 1e-6);
        }
        assert!(run_odometry(&[], &SolverOptions::default()).is_err());
    }

    #[test]
    fn streaming_matches_batch() {
        let scene = synth_scene(&SceneSpec::room(7));
        let step = Pose::from_euler(&EulerDeg::new(0.0, 0.0, 2.0), Vec3::new(0.8, 0.1, 0.0));
        let frames: Vec<Frame> = (0..3)
            .map(|k| {
                let mut p = Pose::identity();
                for _ in 0..k {
                    p = p * step;
                }
                frame_at(&scene, &p)
            })
            .collect();
        let opts = SolverOptions {
            init: InitMode::ConstantVelocity,
            ..SolverOptions::default()
        };
        let batch = run_odometry(&frames, &opts).unwrap();
        let mut odo = Odometer::new(opts).unwrap();
        assert!(odo.push(frames[0].clone()).is_none());
        assert_eq!(odo.push(frames[1].clone()).unwrap().index, 1);
        odo.push(frames[2].clone());
        assert_eq!(odo.poses().len(), 3);
        assert_eq!(odo.finish().unwrap(), batch);
        assert!(matches!(
            Odometer::new(SolverOptions::default()).unwrap().finish(),
            Err(SolverError::NoFrames)
        ));
    }

    #[test]
    fn init_mode_parsing() {
        assert_eq!("identity".parse::<InitMode>(), Ok(InitMode::Identity));
        assert_eq!("constant-velocity".parse::<InitMode>(), Ok(InitMode::ConstantVelocity));
        assert_eq!("forward:1".parse::<InitMode>(), Ok(InitMode::FixedForward(1.0)));
        assert!("forward:x".parse::<InitMode>().is_err());
        assert_eq!(InitMode::FixedForward(1.5).to_string(), "forward:1.5");
    }

    #[test]
    fn failed_pairs_fall_back() {
        let scene = synth_scene(&SceneSpec::room(5));
        let f = frame_at(&scene, &Pose::identity());
        let opts = SolverOptions {
            init: InitMode::FixedForward(500.0),
            ..SolverOptions::default()
        };
        let out = run_odometry(&[f.clone(), f], &opts).unwrap();
        assert!(out.pairs[0].failure.is_some());
        assert_eq!(out.trajectory.poses()[1].translation(), Vec3::new(500.0, 0.0, 0.0));
        assert!(pair_stats_csv(&out.pairs).lines().nth(1).unwrap().ends_with(",1"));
    }
}
