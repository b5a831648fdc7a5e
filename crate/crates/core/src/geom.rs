//! Rigid-body math: quaternions, Euler angles, SE(3) poses and the
//! exponential/logarithm maps used to parameterize pose updates.
//!
//! Conventions:
//! - quaternions are scalar-first `(w, x, y, z)` and always unit norm;
//! - Euler angles are intrinsic Z-Y-X (yaw, pitch, roll), stored as
//!   `(rx, ry, rz)` in degrees, so `R = Rz(rz) * Ry(ry) * Rx(rx)`;
//! - twists are ordered `(rho, omega)`: translation first, rotation second.

use std::fmt;
use std::ops::{Mul, Neg};

use nalgebra::{Matrix3, Matrix4, Vector3, Vector6};
use thiserror::Error;

pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;

/// Tolerance used when validating rotation blocks.
pub const ROTATION_TOLERANCE: f64 = 1e-9;

const SMALL_ANGLE: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("quaternion norm {0:e} is too small to normalize")]
    ZeroQuaternion(f64),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("rotation block is not orthonormal (deviation {0:e})")]
    NotOrthonormal(f64),
    #[error("rotation block has determinant {0}, expected 1")]
    BadDeterminant(f64),
    #[error("last row of homogeneous matrix must be (0, 0, 0, 1)")]
    BadLastRow,
    #[error("rotation angle {0} rad is too close to pi for a stable logarithm")]
    IllConditioned(f64),
}

/// Unit quaternion, scalar first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    w: f64,
    x: f64,
    y: f64,
    z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion {
        w: 1.0,
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    /// Builds a unit quaternion, normalizing the input.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self, GeomError> {
        if !(w.is_finite() && x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(GeomError::NonFinite("quaternion"));
        }
        let norm = (w * w + x * x + y * y + z * z).sqrt();
        if norm <= 1e-12 {
            return Err(GeomError::ZeroQuaternion(norm));
        }
        Ok(Quaternion {
            w: w / norm,
            x: x / norm,
            y: y / norm,
            z: z / norm,
        })
    }

    /// Quaternion from an (assumed orthonormal) rotation matrix.
    pub fn from_rotation_matrix(r: &Mat3) -> Self {
        // Shepperd: branch on the largest diagonal term for stability.
        let trace = r[(0, 0)] + r[(1, 1)] + r[(2, 2)];
        let (w, x, y, z) = if trace > r[(0, 0)] && trace > r[(1, 1)] && trace > r[(2, 2)] {
            let s = 2.0 * (1.0 + trace).sqrt();
            (
                0.25 * s,
                (r[(2, 1)] - r[(1, 2)]) / s,
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(1, 0)] - r[(0, 1)]) / s,
            )
        } else if r[(0, 0)] > r[(1, 1)] && r[(0, 0)] > r[(2, 2)] {
            let s = 2.0 * (1.0 + r[(0, 0)] - r[(1, 1)] - r[(2, 2)]).sqrt();
            (
                (r[(2, 1)] - r[(1, 2)]) / s,
                0.25 * s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
            )
        } else if r[(1, 1)] > r[(2, 2)] {
            let s = 2.0 * (1.0 - r[(0, 0)] + r[(1, 1)] - r[(2, 2)]).sqrt();
            (
                (r[(0, 2)] - r[(2, 0)]) / s,
                (r[(0, 1)] + r[(1, 0)]) / s,
                0.25 * s,
                (r[(1, 2)] + r[(2, 1)]) / s,
            )
        } else {
            let s = 2.0 * (1.0 - r[(0, 0)] - r[(1, 1)] + r[(2, 2)]).sqrt();
            (
                (r[(1, 0)] - r[(0, 1)]) / s,
                (r[(0, 2)] + r[(2, 0)]) / s,
                (r[(1, 2)] + r[(2, 1)]) / s,
                0.25 * s,
            )
        };
        Quaternion::new(w, x, y, z).expect("rotation matrix yields a finite quaternion")
    }

    pub fn w(&self) -> f64 {
        self.w
    }
    pub fn x(&self) -> f64 {
        self.x
    }
    pub fn y(&self) -> f64 {
        self.y
    }
    pub fn z(&self) -> f64 {
        self.z
    }

    /// Components as `[w, x, y, z]`.
    pub fn to_array(&self) -> [f64; 4] {
        [self.w, self.x, self.y, self.z]
    }

    pub fn to_rotation_matrix(&self) -> Mat3 {
        let (w, x, y, z) = (self.w, self.x, self.y, self.z);
        Mat3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        )
    }
}

impl Neg for Quaternion {
    type Output = Quaternion;

    fn neg(self) -> Quaternion {
        Quaternion {
            w: -self.w,
            x: -self.x,
            y: -self.y,
            z: -self.z,
        }
    }
}

impl Mul for Quaternion {
    type Output = Quaternion;

    /// Hamilton product, renormalized.
    fn mul(self, o: Quaternion) -> Quaternion {
        let (a, b) = (self, o);
        Quaternion::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
        .expect("product of unit quaternions is a unit quaternion")
    }
}

/// Euler angles in degrees, intrinsic yaw (z), pitch (y), roll (x).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EulerDeg {
    pub rx: f64,
    pub ry: f64,
    pub rz: f64,
}

impl EulerDeg {
    pub fn new(rx: f64, ry: f64, rz: f64) -> Self {
        EulerDeg { rx, ry, rz }
    }

    pub fn to_array(&self) -> [f64; 3] {
        [self.rx, self.ry, self.rz]
    }
}

/// Converts a unit quaternion to canonical-range Euler angles.
///
/// Every term is a product of two quaternion components, so the result is
/// bit-identical for `q` and `-q`.
pub fn quat_to_euler(q: &Quaternion) -> EulerDeg {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    let r00 = 1.0 - 2.0 * (y * y + z * z);
    let r10 = 2.0 * (x * y + w * z);
    let r20 = 2.0 * (x * z - w * y);
    let r21 = 2.0 * (y * z + w * x);
    let r22 = 1.0 - 2.0 * (x * x + y * y);

    let roll = r21.atan2(r22);
    let pitch = (-r20).atan2(r00.hypot(r10));
    let yaw = r10.atan2(r00);
    EulerDeg {
        rx: roll.to_degrees(),
        ry: pitch.to_degrees(),
        rz: yaw.to_degrees(),
    }
}

/// Inverse of [`quat_to_euler`]: `q = qz(rz) * qy(ry) * qx(rx)`.
pub fn euler_to_quat(r: &EulerDeg) -> Quaternion {
    let (sr, cr) = (r.rx.to_radians() * 0.5).sin_cos();
    let (sp, cp) = (r.ry.to_radians() * 0.5).sin_cos();
    let (sy, cy) = (r.rz.to_radians() * 0.5).sin_cos();
    Quaternion::new(
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    )
    .expect("finite Euler angles give a unit quaternion")
}

/// Rotation matrix for intrinsic Z-Y-X Euler angles.
pub fn euler_to_rotation(r: &EulerDeg) -> Mat3 {
    euler_to_quat(r).to_rotation_matrix()
}

/// Wraps an angle in degrees to `[-180, 180]`.
pub fn wrap_degrees(a: f64) -> f64 {
    let w = (a + 180.0).rem_euclid(360.0) - 180.0;
    if w == -180.0 && a > 0.0 {
        180.0
    } else {
        w
    }
}

/// Skew-symmetric cross-product matrix: `hat(a) * b == a x b`.
pub fn hat(v: &Vec3) -> Mat3 {
    Mat3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

fn vee(m: &Mat3) -> Vec3 {
    Vec3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]) * 0.5
}

/// Rotation angle in radians of a rotation matrix, in `[0, pi]`.
pub fn rotation_angle(r: &Mat3) -> f64 {
    let s = vee(r).norm();
    let c = 0.5 * (r.trace() - 1.0);
    s.atan2(c)
}

/// Homogeneous rigid transform. The last row is exactly `(0, 0, 0, 1)`.
#[derive(Clone, Copy, PartialEq)]
pub struct Pose(Matrix4<f64>);

impl fmt::Debug for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.translation();
        let e = quat_to_euler(&self.quaternion());
        write!(
            f,
            "Pose(t=[{:.6}, {:.6}, {:.6}], rpy_deg=[{:.6}, {:.6}, {:.6}])",
            t.x, t.y, t.z, e.rx, e.ry, e.rz
        )
    }
}

impl Default for Pose {
    fn default() -> Self {
        Pose::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Pose(Matrix4::identity())
    }

    /// Validates a homogeneous matrix against the rigid-transform invariants.
    pub fn new(m: Matrix4<f64>) -> Result<Self, GeomError> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite("pose"));
        }
        if m[(3, 0)] != 0.0 || m[(3, 1)] != 0.0 || m[(3, 2)] != 0.0 || m[(3, 3)] != 1.0 {
            return Err(GeomError::BadLastRow);
        }
        let r: Mat3 = m.fixed_view::<3, 3>(0, 0).into_owned();
        let dev = orthonormality_error(&r);
        if dev > ROTATION_TOLERANCE {
            return Err(GeomError::NotOrthonormal(dev));
        }
        let det = r.determinant();
        if (det - 1.0).abs() > ROTATION_TOLERANCE {
            return Err(GeomError::BadDeterminant(det));
        }
        Ok(Pose(m))
    }

    /// Builds a pose from a rotation block assumed to be orthonormal.
    pub fn from_parts(rotation: Mat3, translation: Vec3) -> Self {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Pose(m)
    }

    /// Builds a pose after projecting `rotation` onto SO(3).
    ///
    /// Returns the pose and the Frobenius deviation of the input from the
    /// projected rotation.
    pub fn from_parts_orthonormalized(rotation: Mat3, translation: Vec3) -> Result<(Self, f64), GeomError> {
        if rotation.iter().chain(translation.iter()).any(|v| !v.is_finite()) {
            return Err(GeomError::NonFinite("pose"));
        }
        let projected = project_to_so3(&rotation)?;
        let dev = (projected - rotation).norm();
        Ok((Pose::from_parts(projected, translation), dev))
    }

    pub fn from_translation(t: Vec3) -> Self {
        Pose::from_parts(Mat3::identity(), t)
    }

    pub fn from_quaternion(q: &Quaternion, t: Vec3) -> Self {
        Pose::from_parts(q.to_rotation_matrix(), t)
    }

    pub fn from_euler(r: &EulerDeg, t: Vec3) -> Self {
        Pose::from_parts(euler_to_rotation(r), t)
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn rotation(&self) -> Mat3 {
        self.0.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vec3 {
        self.0.fixed_view::<3, 1>(0, 3).into_owned()
    }

    pub fn quaternion(&self) -> Quaternion {
        Quaternion::from_rotation_matrix(&self.rotation())
    }

    /// Closed-form rigid inverse `(R^T, -R^T t)`.
    pub fn inverse(&self) -> Pose {
        let rt = self.rotation().transpose();
        Pose::from_parts(rt, -(rt * self.translation()))
    }

    pub fn transform_point(&self, p: &Vec3) -> Vec3 {
        let m = &self.0;
        Vec3::new(
            m[(0, 0)] * p.x + m[(0, 1)] * p.y + m[(0, 2)] * p.z + m[(0, 3)],
            m[(1, 0)] * p.x + m[(1, 1)] * p.y + m[(1, 2)] * p.z + m[(1, 3)],
            m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)] * p.z + m[(2, 3)],
        )
    }

    /// Projects the rotation block back onto SO(3), removing accumulated
    /// floating-point drift after long composition chains.
    pub fn orthonormalized(&self) -> Pose {
        match project_to_so3(&self.rotation()) {
            Ok(r) => Pose::from_parts(r, self.translation()),
            Err(_) => *self,
        }
    }

    /// Translation norm (m) and rotation angle (rad).
    pub fn magnitude(&self) -> (f64, f64) {
        (self.translation().norm(), rotation_angle(&self.rotation()))
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        let r = self.rotation() * rhs.rotation();
        let t = self.rotation() * rhs.translation() + self.translation();
        Pose::from_parts(r, t)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

/// Frobenius norm of `R^T R - I`.
pub fn orthonormality_error(r: &Mat3) -> f64 {
    (r.transpose() * r - Mat3::identity()).norm()
}

/// Nearest rotation matrix in the Frobenius sense.
pub fn project_to_so3(m: &Mat3) -> Result<Mat3, GeomError> {
    let svd = m.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(GeomError::NonFinite("rotation")),
    };
    let mut d = Mat3::identity();
    if (u * v_t).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    Ok(u * d * v_t)
}

/// Tangent vector of SE(3), `(rho, omega)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Twist(pub Vector6<f64>);

impl Twist {
    pub fn new(rho: Vec3, omega: Vec3) -> Self {
        Twist(Vector6::new(rho.x, rho.y, rho.z, omega.x, omega.y, omega.z))
    }

    pub fn zero() -> Self {
        Twist(Vector6::zeros())
    }

    pub fn rho(&self) -> Vec3 {
        self.0.fixed_rows::<3>(0).into_owned()
    }

    pub fn omega(&self) -> Vec3 {
        self.0.fixed_rows::<3>(3).into_owned()
    }
}

/// Rodrigues coefficients `(sin t / t, (1 - cos t) / t^2, (t - sin t) / t^3)`.
fn so3_coefficients(theta: f64) -> (f64, f64, f64) {
    if theta < SMALL_ANGLE {
        let t2 = theta * theta;
        (1.0 - t2 / 6.0, 0.5 - t2 / 24.0, 1.0 / 6.0 - t2 / 120.0)
    } else {
        let (s, c) = theta.sin_cos();
        (
            s / theta,
            (1.0 - c) / (theta * theta),
            (theta - s) / (theta * theta * theta),
        )
    }
}

/// Rotation matrix of an axis-angle vector.
pub fn so3_exp(omega: &Vec3) -> Mat3 {
    let (a, b, _) = so3_coefficients(omega.norm());
    let w = hat(omega);
    Mat3::identity() + w * a + w * w * b
}

/// Exponential map of SE(3).
pub fn se3_exp(xi: &Twist) -> Pose {
    let omega = xi.omega();
    let (a, b, c) = so3_coefficients(omega.norm());
    let w = hat(&omega);
    let w2 = w * w;
    let r = Mat3::identity() + w * a + w2 * b;
    let v = Mat3::identity() + w * b + w2 * c;
    Pose::from_parts(r, v * xi.rho())
}

/// Logarithm map of SE(3). Fails when the rotation angle is within 1e-6 of pi.
pub fn se3_log(pose: &Pose) -> Result<Twist, GeomError> {
    let r = pose.rotation();
    let theta = rotation_angle(&r);
    if theta > std::f64::consts::PI - 1e-6 {
        return Err(GeomError::IllConditioned(theta));
    }
    let axis_sin = vee(&r);
    let omega = if theta < SMALL_ANGLE {
        axis_sin
    } else {
        axis_sin * (theta / theta.sin())
    };
    let w = hat(&omega);
    // V^-1 = I - W/2 + (1/t^2) (1 - (t sin t) / (2 (1 - cos t))) W^2
    let k = if theta < SMALL_ANGLE {
        1.0 / 12.0 + theta * theta / 720.0
    } else {
        let (s, c) = theta.sin_cos();
        (1.0 - theta * s / (2.0 * (1.0 - c))) / (theta * theta)
    };
    let v_inv = Mat3::identity() - w * 0.5 + w * w * k;
    Ok(Twist::new(v_inv * pose.translation(), omega))
}

/// `a^-1 * b`: the motion from frame `a` to frame `b`.
pub fn relative_pose(a: &Pose, b: &Pose) -> Pose {
    a.inverse() * *b
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn random_quat(rng: &mut impl Rng) -> Quaternion {
        loop {
            let v: [f64; 4] = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            if let Ok(q) = Quaternion::new(v[0], v[1], v[2], v[3]) {
                return q;
            }
        }
    }

    fn random_pose(rng: &mut impl Rng) -> Pose {
        let t = Vec3::new(
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-20.0..20.0),
            rng.gen_range(-5.0..5.0),
        );
        Pose::from_quaternion(&random_quat(rng), t)
    }

    #[test]
    fn identity_quaternion_is_zero_euler() {
        let e = quat_to_euler(&Quaternion::IDENTITY);
        assert_eq!(e.to_array(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn quarter_turn_about_z_is_yaw_90() {
        let h = 0.5f64.sqrt();
        let e = quat_to_euler(&Quaternion::new(h, 0.0, 0.0, h).unwrap());
        assert_abs_diff_eq!(e.rz, 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.ry, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(e.rx, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_quaternion_rejected() {
        assert!(matches!(
            Quaternion::new(0.0, 0.0, 0.0, 0.0),
            Err(GeomError::ZeroQuaternion(_))
        ));
        assert!(Quaternion::new(f64::NAN, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn euler_matches_rotation_matrix_decomposition() {
        // Oracle: nalgebra's own Z-Y-X decomposition of the rotation matrix.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let q = random_quat(&mut rng);
            let rot = nalgebra::Rotation3::from_matrix_unchecked(q.to_rotation_matrix());
            let (roll, pitch, yaw) = rot.euler_angles();
            let e = quat_to_euler(&q);
            if pitch.abs() > FRAC_PI_2 - 1e-4 {
                continue;
            }
            assert_abs_diff_eq!(e.rx, roll.to_degrees(), epsilon = 1e-9);
            assert_abs_diff_eq!(e.ry, pitch.to_degrees(), epsilon = 1e-9);
            assert_abs_diff_eq!(e.rz, yaw.to_degrees(), epsilon = 1e-9);
        }
    }

    #[test]
    fn euler_to_quat_examples() {
        assert_eq!(euler_to_quat(&EulerDeg::default()).to_array(), [1.0, 0.0, 0.0, 0.0]);
        let q = euler_to_quat(&EulerDeg::new(0.0, 0.0, 180.0));
        assert_abs_diff_eq!(q.w(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.z().abs(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn euler_roundtrip_on_canonical_angles() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut worst = 0.0f64;
        for _ in 0..1000 {
            let r = EulerDeg::new(
                rng.gen_range(-180.0..180.0),
                rng.gen_range(-89.9..89.9),
                rng.gen_range(-180.0..180.0),
            );
            let back = quat_to_euler(&euler_to_quat(&r));
            for (a, b) in back.to_array().iter().zip(r.to_array()) {
                worst = worst.max(wrap_degrees(a - b).abs());
            }
        }
        assert!(worst < 1e-9, "worst roundtrip error {worst}");
    }

    #[test]
    fn euler_rotation_is_zyx_product() {
        let r = EulerDeg::new(10.0, -20.0, 30.0);
        let rx = so3_exp(&Vec3::new(10f64.to_radians(), 0.0, 0.0));
        let ry = so3_exp(&Vec3::new(0.0, -20f64.to_radians(), 0.0));
        let rz = so3_exp(&Vec3::new(0.0, 0.0, 30f64.to_radians()));
        assert_abs_diff_eq!(euler_to_rotation(&r), rz * ry * rx, epsilon = 1e-14);
    }

    #[test]
    fn double_cover_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let q = random_quat(&mut rng);
            assert_eq!(quat_to_euler(&q), quat_to_euler(&-q));
        }
    }

    #[test]
    fn shepperd_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let q = random_quat(&mut rng);
            let back = Quaternion::from_rotation_matrix(&q.to_rotation_matrix());
            let same = (0..4).all(|i| (q.to_array()[i] - back.to_array()[i]).abs() < 1e-12);
            let flipped = (0..4).all(|i| (q.to_array()[i] + back.to_array()[i]).abs() < 1e-12);
            assert!(same || flipped);
        }
    }

    #[test]
    fn exp_examples() {
        assert_eq!(se3_exp(&Twist::zero()), Pose::identity());
        let p = se3_exp(&Twist::new(Vec3::new(1.0, 0.0, 0.0), Vec3::zeros()));
        assert_eq!(p.rotation(), Mat3::identity());
        assert_eq!(p.translation(), Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn exp_matches_independent_rodrigues() {
        // Rodrigues with an explicit unit axis: R = cI + s[k]x + (1-c) k k^T.
        let omega = Vec3::new(0.0, 0.0, FRAC_PI_2);
        let theta = omega.norm();
        let k = omega / theta;
        let oracle = Mat3::identity() * theta.cos() + hat(&k) * theta.sin() + k * k.transpose() * (1.0 - theta.cos());
        let r = se3_exp(&Twist::new(Vec3::zeros(), omega)).rotation();
        assert_abs_diff_eq!(r, oracle, epsilon = 1e-12);
    }

    #[test]
    fn log_examples() {
        let z = se3_log(&Pose::identity()).unwrap();
        assert_eq!(z.0, Vector6::zeros());
        let t = se3_log(&Pose::from_translation(Vec3::new(1.0, -2.0, 3.0))).unwrap();
        assert_abs_diff_eq!(t.rho(), Vec3::new(1.0, -2.0, 3.0), epsilon = 1e-15);
        assert_eq!(t.omega(), Vec3::zeros());
    }

    #[test]
    fn log_near_pi_is_ill_conditioned() {
        let p = se3_exp(&Twist::new(Vec3::zeros(), Vec3::new(0.0, PI, 0.0)));
        assert!(matches!(se3_log(&p), Err(GeomError::IllConditioned(_))));
    }

    #[test]
    fn exp_log_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..1000 {
            let dir = Vec3::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let omega = dir.normalize() * rng.gen_range(0.0..3.0);
            let rho = Vec3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            let xi = Twist::new(rho, omega);
            let back = se3_log(&se3_exp(&xi)).unwrap();
            assert!((back.0 - xi.0).norm() < 1e-9, "{:?} vs {:?}", back, xi);
        }
    }

    #[test]
    fn log_exp_roundtrip_frobenius() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..500 {
            let p = random_pose(&mut rng);
            if rotation_angle(&p.rotation()) > PI - 1e-3 {
                continue;
            }
            let back = se3_exp(&se3_log(&p).unwrap());
            assert!((back.matrix() - p.matrix()).norm() < 1e-9);
        }
    }

    #[test]
    fn exp_small_angle_branch_is_continuous() {
        let xi_small = Twist::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1e-9, -2e-9, 5e-10));
        let xi_big = Twist::new(Vec3::new(1.0, 2.0, 3.0), Vec3::new(1e-7, -2e-7, 5e-8));
        let a = se3_exp(&xi_small);
        let b = se3_exp(&xi_big);
        assert!((a.matrix() - b.matrix()).norm() < 1e-6);
        assert!(Pose::new(*a.matrix()).is_ok());
    }

    #[test]
    fn relative_pose_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let a = random_pose(&mut rng);
            let b = random_pose(&mut rng);
            assert_abs_diff_eq!(*relative_pose(&a, &a).matrix(), Matrix4::identity(), epsilon = 1e-12);
            assert_eq!(relative_pose(&Pose::identity(), &b), b);
            let oracle = a.matrix().try_inverse().unwrap() * b.matrix();
            let rel = relative_pose(&a, &b);
            assert_abs_diff_eq!(*rel.matrix(), oracle, epsilon = 1e-12);
            assert_abs_diff_eq!(*(a * rel).matrix(), *b.matrix(), epsilon = 1e-9);
        }
    }

    #[test]
    fn pose_validation() {
        let mut m = Matrix4::identity();
        assert!(Pose::new(m).is_ok());
        m[(3, 0)] = 1e-20;
        assert_eq!(Pose::new(m), Err(GeomError::BadLastRow));
        let mut m = Matrix4::identity();
        m[(0, 0)] = 1.01;
        assert!(matches!(Pose::new(m), Err(GeomError::NotOrthonormal(_))));
        let mut m = Matrix4::identity();
        m[(0, 0)] = -1.0;
        assert!(matches!(Pose::new(m), Err(GeomError::BadDeterminant(_))));
    }

    #[test]
    fn wrap_degrees_range() {
        assert_eq!(wrap_degrees(190.0), -170.0);
        assert_eq!(wrap_degrees(-190.0), 170.0);
        assert_eq!(wrap_degrees(180.0), 180.0);
        assert_eq!(wrap_degrees(-180.0), -180.0);
        assert_eq!(wrap_degrees(360.0), 0.0);
    }

    proptest::proptest! {
        #[test]
        fn composed_poses_stay_valid(
            a in proptest::array::uniform6(-3.0f64..3.0),
            b in proptest::array::uniform6(-3.0f64..3.0),
        ) {
            let pa = se3_exp(&Twist(Vector6::from_column_slice(&a)));
            let pb = se3_exp(&Twist(Vector6::from_column_slice(&b)));
            let c = pa * pb.inverse() * pa;
            proptest::prop_assert!(Pose::new(*c.matrix()).is_ok());
        }
    }
}
