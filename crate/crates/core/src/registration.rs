//! Projective data association and the odometry losses.
//!
//! A source vertex `v` of frame `t+1` is moved into frame `t` by the
//! candidate motion `T` and projected; the vertex and normal stored at that
//! pixel of frame `t` form its correspondence. No search structure is
//! involved.
//!
//! Reductions over pixels are evaluated in parallel but summed sequentially
//! in pixel-scan order, so repeated evaluations are bit-identical.

use nalgebra::RowVector6;
use rayon::prelude::*;

use crate::geom::{quat_to_euler, wrap_degrees, Pose, Quaternion, Vec3};
use crate::imaging::{Frame, ProjectionConfig, VertexMap};

/// A source vertex paired with the target vertex and normal it projects onto.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    /// Source vertex in frame `t+1` (m).
    pub source: Vec3,
    /// `T * source`, in frame `t` (m).
    pub transformed: Vec3,
    /// Target vertex in frame `t` (m).
    pub target: Vec3,
    /// Unit target normal.
    pub normal: Vec3,
    pub u: usize,
    pub v: usize,
}

impl Correspondence {
    /// Signed point-to-plane distance `n . (T v - v_target)`.
    pub fn residual(&self) -> f64 {
        self.normal.dot(&(self.transformed - self.target))
    }

    /// Point-to-point distance `|T v - v_target|`.
    pub fn distance(&self) -> f64 {
        (self.transformed - self.target).norm()
    }
}

/// Associates one source vertex with frame `t` under motion `t_motion`.
pub fn associate(frame_t: &Frame, v_next: &Vec3, t_motion: &Pose) -> Option<Correspondence> {
    let transformed = t_motion.transform_point(v_next);
    let hit = frame_t.config().project(&transformed)?;
    let target = frame_t.vertex_map().get(hit.u, hit.v)?;
    let normal = frame_t.normal_map().get(hit.u, hit.v)?;
    Some(Correspondence {
        source: *v_next,
        transformed,
        target: target.point,
        normal: *normal,
        u: hit.u,
        v: hit.v,
    })
}

/// Correspondences of every valid source vertex, in source pixel-scan order.
pub fn associate_all(frame_t: &Frame, vmap_next: &VertexMap, t_motion: &Pose) -> Vec<Correspondence> {
    vmap_next
        .cells()
        .par_iter()
        .map(|cell| cell.as_ref().and_then(|vx| associate(frame_t, &vx.point, t_motion)))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Sum of absolute point-to-plane distances and the number of terms.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IcpLoss {
    /// Summed absolute normal distance (m).
    pub sum: f64,
    pub n_corr: usize,
}

impl IcpLoss {
    /// Mean absolute residual (m); 0 when there are no correspondences.
    pub fn mean(&self) -> f64 {
        if self.n_corr == 0 {
            0.0
        } else {
            self.sum / self.n_corr as f64
        }
    }

    /// No correspondences: the loss is 0 but carries no information.
    pub fn is_degenerate(&self) -> bool {
        self.n_corr == 0
    }
}

/// ICP loss of `vmap_next` against `frame_t` under `t_motion`.
pub fn icp_loss(frame_t: &Frame, vmap_next: &VertexMap, t_motion: &Pose) -> IcpLoss {
    let residuals: Vec<Option<f64>> = vmap_next
        .cells()
        .par_iter()
        .map(|cell| {
            cell.as_ref()
                .and_then(|vx| associate(frame_t, &vx.point, t_motion))
                .map(|c| c.residual().abs())
        })
        .collect();
    residuals
        .into_iter()
        .flatten()
        .fold(IcpLoss::default(), |acc, r| IcpLoss {
            sum: acc.sum + r,
            n_corr: acc.n_corr + 1,
        })
}

/// Number of valid source vertices whose transformed projection leaves the
/// `[0, w) x [0, h)` image. Each point counts once.
pub fn fov_loss(vmap_next: &VertexMap, t_motion: &Pose, cfg: &ProjectionConfig) -> usize {
    vmap_next
        .cells()
        .par_iter()
        .filter(|cell| matches!(cell, Some(vx) if !cfg.in_fov(&t_motion.transform_point(&vx.point))))
        .count()
}

/// Log-variance style balancing weights, one per loss term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossScales {
    pub icp: f64,
    pub fov: f64,
    pub t: f64,
    pub r: f64,
}

impl LossScales {
    pub const DEFAULT: f64 = -3.0;

    pub fn uniform(s: f64) -> Self {
        LossScales {
            icp: s,
            fov: s,
            t: s,
            r: s,
        }
    }
}

impl Default for LossScales {
    fn default() -> Self {
        LossScales::uniform(LossScales::DEFAULT)
    }
}

fn balanced(loss: f64, scale: f64) -> f64 {
    loss * (-scale).exp() + scale
}

/// `L_icp e^{-s_icp} + s_icp + L_fov e^{-s_fov} + s_fov`.
pub fn unsupervised_loss(l_icp: f64, l_fov: f64, scales: &LossScales) -> f64 {
    balanced(l_icp, scales.icp) + balanced(l_fov, scales.fov)
}

/// Relative motion as translation plus unit quaternion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelativeMotion {
    pub t: Vec3,
    pub q: Quaternion,
}

impl RelativeMotion {
    pub fn new(t: Vec3, q: Quaternion) -> Self {
        RelativeMotion { t, q }
    }

    pub fn from_pose(pose: &Pose) -> Self {
        RelativeMotion {
            t: pose.translation(),
            q: pose.quaternion(),
        }
    }

    pub fn to_pose(&self) -> Pose {
        Pose::from_quaternion(&self.q, self.t)
    }
}

/// Unweighted parts of the supervised loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupervisedTerms {
    /// L1 translation error (m).
    pub translation: f64,
    /// L1 Euler-angle error with per-axis wrap (deg).
    pub rotation: f64,
}

pub fn supervised_terms(pred: &RelativeMotion, gt: &RelativeMotion) -> SupervisedTerms {
    let translation = (pred.t - gt.t).abs().sum();
    let a = quat_to_euler(&pred.q).to_array();
    let b = quat_to_euler(&gt.q).to_array();
    let rotation = a.iter().zip(b).map(|(x, y)| wrap_degrees(x - y).abs()).sum();
    SupervisedTerms { translation, rotation }
}

/// `L_t e^{-s_t} + s_t + L_r e^{-s_r} + s_r` with L1 translation and Euler
/// errors. Quaternion signs do not matter.
pub fn supervised_loss(pred: &RelativeMotion, gt: &RelativeMotion, scales: &LossScales) -> f64 {
    let terms = supervised_terms(pred, gt);
    balanced(terms.translation, scales.t) + balanced(terms.rotation, scales.r)
}

/// Component-wise L1 distance of two quaternions; unlike
/// [`supervised_loss`] it scores `q` and `-q` as different.
pub fn quaternion_difference_l1(a: &Quaternion, b: &Quaternion) -> f64 {
    a.to_array().iter().zip(b.to_array()).map(|(x, y)| (x - y).abs()).sum()
}

/// Point-to-plane residual and its Jacobian with respect to a left
/// perturbation `exp(dxi) * T`, ordered (translation, rotation).
pub fn icp_residual_jacobian(corr: &Correspondence, t_motion: &Pose) -> (f64, RowVector6<f64>) {
    let p = t_motion.transform_point(&corr.source);
    let n = corr.normal;
    let r = n.dot(&(p - corr.target));
    let w = p.cross(&n);
    (r, RowVector6::new(n.x, n.y, n.z, w.x, w.y, w.z))
}
