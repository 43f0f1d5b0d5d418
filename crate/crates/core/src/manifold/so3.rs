//! SO(3): rotations stored as orthonormal 3×3 matrices.
//!
//! Closed forms switch to Taylor series below [`SMALL_ANGLE`]. Operations that
//! need `Log` or `J_l⁻¹` refuse angles within [`NEAR_PI_MARGIN`] of π.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use super::ManifoldError;

/// Below this rotation angle every trigonometric closed form uses its series.
pub const SMALL_ANGLE: f64 = 1e-6;

/// `Log` and `J_l⁻¹` reject angles above `π - NEAR_PI_MARGIN`.
pub const NEAR_PI_MARGIN: f64 = 1e-6;

/// Composition chain length after which a rotation is re-orthonormalized.
pub const RENORMALIZE_EVERY: u32 = 1000;

const ORTHO_TOL: f64 = 1e-9;

/// A 3D rotation as an orthonormal matrix with determinant +1.
#[derive(Debug, Clone, Copy)]
pub struct Rotation3 {
    matrix: Matrix3<f64>,
    chain: u32,
}

impl PartialEq for Rotation3 {
    fn eq(&self, other: &Self) -> bool {
        self.matrix == other.matrix
    }
}

impl Default for Rotation3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation3 {
    pub fn identity() -> Self {
        Self {
            matrix: Matrix3::identity(),
            chain: 0,
        }
    }

    /// Wraps a matrix, checking `RᵀR = I` and `det R = 1` to 1e-9.
    pub fn from_matrix(matrix: Matrix3<f64>) -> Result<Self, ManifoldError> {
        let rot = Self { matrix, chain: 0 };
        if rot.is_valid() {
            Ok(rot)
        } else {
            Err(ManifoldError::InvalidArgument(
                "matrix is not a proper rotation".into(),
            ))
        }
    }

    /// Projects an arbitrary matrix onto the nearest rotation (polar decomposition).
    pub fn from_matrix_unchecked(matrix: Matrix3<f64>) -> Self {
        Self { matrix, chain: 0 }.renormalized()
    }

    /// Rotation from a unit quaternion given as `(w, x, y, z)`; normalizes the input.
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Result<Self, ManifoldError> {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        if !n.is_finite() || n < 1e-12 {
            return Err(ManifoldError::InvalidArgument(
                "quaternion has zero or non-finite norm".into(),
            ));
        }
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        let m = Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        );
        Ok(Self::from_matrix_unchecked(m))
    }

    /// Unit quaternion `(w, x, y, z)` with `w ≥ 0`.
    pub fn to_quaternion(&self) -> [f64; 4] {
        let m = &self.matrix;
        let tr = m.trace();
        let (w, x, y, z) = if tr > 0.0 {
            let s = (tr + 1.0).sqrt() * 2.0;
            (
                0.25 * s,
                (m[(2, 1)] - m[(1, 2)]) / s,
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(1, 0)] - m[(0, 1)]) / s,
            )
        } else if m[(0, 0)] > m[(1, 1)] && m[(0, 0)] > m[(2, 2)] {
            let s = (1.0 + m[(0, 0)] - m[(1, 1)] - m[(2, 2)]).sqrt() * 2.0;
            (
                (m[(2, 1)] - m[(1, 2)]) / s,
                0.25 * s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
            )
        } else if m[(1, 1)] > m[(2, 2)] {
            let s = (1.0 + m[(1, 1)] - m[(0, 0)] - m[(2, 2)]).sqrt() * 2.0;
            (
                (m[(0, 2)] - m[(2, 0)]) / s,
                (m[(0, 1)] + m[(1, 0)]) / s,
                0.25 * s,
                (m[(1, 2)] + m[(2, 1)]) / s,
            )
        } else {
            let s = (1.0 + m[(2, 2)] - m[(0, 0)] - m[(1, 1)]).sqrt() * 2.0;
            (
                (m[(1, 0)] - m[(0, 1)]) / s,
                (m[(0, 2)] + m[(2, 0)]) / s,
                (m[(1, 2)] + m[(2, 1)]) / s,
                0.25 * s,
            )
        };
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let sign = if w < 0.0 { -1.0 } else { 1.0 };
        [sign * w / n, sign * x / n, sign * y / n, sign * z / n]
    }

    /// Rotation about the world z axis.
    pub fn rot_z(yaw: f64) -> Self {
        let (s, c) = yaw.sin_cos();
        Self {
            matrix: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            chain: 0,
        }
    }

    /// ZYX Euler composition `R_z(yaw) R_y(pitch) R_x(roll)`.
    pub fn from_rpy(roll: f64, pitch: f64, yaw: f64) -> Self {
        let (sr, cr) = roll.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let rx = Matrix3::new(1.0, 0.0, 0.0, 0.0, cr, -sr, 0.0, sr, cr);
        let ry = Matrix3::new(cp, 0.0, sp, 0.0, 1.0, 0.0, -sp, 0.0, cp);
        Self {
            matrix: Self::rot_z(yaw).matrix * ry * rx,
            chain: 0,
        }
    }

    /// ZYX yaw, `atan2(R₂₁, R₁₁)` (1-based indices).
    pub fn yaw(&self) -> f64 {
        self.matrix[(1, 0)].atan2(self.matrix[(0, 0)])
    }

    /// ZYX pitch, `-asin(R₃₁)`.
    pub fn pitch(&self) -> f64 {
        (-self.matrix[(2, 0)]).clamp(-1.0, 1.0).asin()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.matrix
    }

    pub fn transpose(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
            chain: self.chain,
        }
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    /// `self · other`; re-orthonormalizes every [`RENORMALIZE_EVERY`] compositions.
    pub fn compose(&self, other: &Rotation3) -> Self {
        let chain = self.chain.max(other.chain) + 1;
        let rot = Self {
            matrix: self.matrix * other.matrix,
            chain,
        };
        if chain >= RENORMALIZE_EVERY {
            rot.renormalized()
        } else {
            rot
        }
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.matrix * v
    }

    pub fn is_valid(&self) -> bool {
        let m = &self.matrix;
        m.iter().all(|v| v.is_finite())
            && (m.transpose() * m - Matrix3::identity()).abs().max() <= ORTHO_TOL
            && (m.determinant() - 1.0).abs() <= ORTHO_TOL
    }

    /// Nearest rotation in Frobenius norm.
    pub fn renormalized(&self) -> Self {
        let svd = self.matrix.svd(true, true);
        let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut m = u * v_t;
        if m.determinant() < 0.0 {
            let mut u = u;
            u.column_mut(2).neg_mut();
            m = u * v_t;
        }
        Self {
            matrix: m,
            chain: 0,
        }
    }

    /// Geodesic angle to another rotation.
    pub fn angle_to(&self, other: &Rotation3) -> f64 {
        let c = ((self.matrix.transpose() * other.matrix).trace() - 1.0) / 2.0;
        c.clamp(-1.0, 1.0).acos()
    }
}

/// Skew-symmetric matrix `[v]×`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Inverse of [`hat`] on the antisymmetric part.
pub fn vee(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

fn check_finite(v: &Vector3<f64>) -> Result<(), ManifoldError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ManifoldError::InvalidArgument(
            "tangent vector has non-finite entries".into(),
        ))
    }
}

fn check_not_near_pi(angle: f64, op: &'static str) -> Result<(), ManifoldError> {
    if angle > PI - NEAR_PI_MARGIN {
        Err(ManifoldError::NearSingular { op, angle })
    } else {
        Ok(())
    }
}

/// Rodrigues formula.
pub fn exp_so3(theta: &Vector3<f64>) -> Result<Rotation3, ManifoldError> {
    check_finite(theta)?;
    let t2 = theta.norm_squared();
    let t = t2.sqrt();
    let (a, b) = if t < SMALL_ANGLE {
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
        )
    } else {
        (t.sin() / t, 2.0 * (0.5 * t).sin().powi(2) / t2)
    };
    let k = hat(theta);
    Ok(Rotation3 {
        matrix: Matrix3::identity() + k * a + k * k * b,
        chain: 0,
    })
}

/// Principal logarithm; fails within [`NEAR_PI_MARGIN`] of a half turn.
pub fn log_so3(rot: &Rotation3) -> Result<Vector3<f64>, ManifoldError> {
    let m = &rot.matrix;
    let w = vee(m);
    let s = w.norm();
    let c = ((m.trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    let angle = s.atan2(c);
    check_not_near_pi(angle, "log_so3")?;
    if angle < SMALL_ANGLE {
        // θ/sinθ ≈ 1 + θ²/6
        return Ok(w * (1.0 + angle * angle / 6.0));
    }
    if c > -0.9 {
        return Ok(w * (angle / s));
    }
    // Near a half turn the antisymmetric part is small; take the axis from the
    // symmetric part `(R + Rᵀ)/2 - cosθ I = (1 - cosθ) a aᵀ` instead.
    let b = (m + m.transpose()) * 0.5 - Matrix3::identity() * c;
    let (mut i, mut best) = (0, b[(0, 0)]);
    for j in 1..3 {
        if b[(j, j)] > best {
            best = b[(j, j)];
            i = j;
        }
    }
    let mut axis: Vector3<f64> = b.column(i).into();
    axis /= axis.norm();
    if axis.dot(&w) < 0.0 {
        axis = -axis;
    }
    Ok(axis * angle)
}

/// SO(3) left Jacobian `J_l(θ)`.
pub fn jl_so3(theta: &Vector3<f64>) -> Matrix3<f64> {
    let t2 = theta.norm_squared();
    let t = t2.sqrt();
    let (a, b) = if t < SMALL_ANGLE {
        (
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        {
            let h = (0.5 * t).sin();
            (2.0 * h * h / t2, (t - t.sin()) / (t2 * t))
        }
    };
    let k = hat(theta);
    Matrix3::identity() + k * a + k * k * b
}

/// SO(3) left Jacobian inverse `I - ½[θ]× + (1/θ² - (1+cosθ)/(2θ sinθ))[θ]×²`.
pub fn jl_inv_so3(theta: &Vector3<f64>) -> Result<Matrix3<f64>, ManifoldError> {
    let t2 = theta.norm_squared();
    let t = t2.sqrt();
    check_not_near_pi(t, "jl_inv_so3")?;
    let b = if t < SMALL_ANGLE {
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0
    } else {
        1.0 / t2 - (1.0 + t.cos()) / (2.0 * t * t.sin())
    };
    let k = hat(theta);
    Ok(Matrix3::identity() - k * 0.5 + k * k * b)
}

/// Right Jacobian, evaluated as `J_l(-θ)`.
pub fn jr_so3(theta: &Vector3<f64>) -> Matrix3<f64> {
    jl_so3(&-theta)
}

/// Right Jacobian inverse, evaluated as `J_l⁻¹(-θ)`.
pub fn jr_inv_so3(theta: &Vector3<f64>) -> Result<Matrix3<f64>, ManifoldError> {
    jl_inv_so3(&-theta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn exp_of_zero_is_identity() {
        let r = exp_so3(&Vector3::zeros()).unwrap();
        assert_eq!(*r.matrix(), Matrix3::identity());
    }

    #[test]
    fn quarter_turn_about_x() {
        let r = exp_so3(&Vector3::new(FRAC_PI_2, 0.0, 0.0)).unwrap();
        let v = r.rotate(&Vector3::new(0.0, 1.0, 0.0));
        assert_relative_eq!(v, Vector3::new(0.0, 0.0, 1.0), epsilon = 1e-15);
    }

    #[test]
    fn exp_rejects_nan() {
        assert!(matches!(
            exp_so3(&Vector3::new(f64::NAN, 0.0, 0.0)),
            Err(ManifoldError::InvalidArgument(_))
        ));
    }

    #[test]
    fn log_round_trip_small_vector() {
        let theta = Vector3::new(0.1, -0.2, 0.3);
        let back = log_so3(&exp_so3(&theta).unwrap()).unwrap();
        assert_relative_eq!(back, theta, epsilon = 1e-15);
    }

    #[test]
    fn log_near_half_turn() {
        let angle = PI - 1e-3;
        let r = Rotation3::rot_z(angle);
        let v = log_so3(&r).unwrap();
        // axis-angle extraction: axis is z by construction
        assert_relative_eq!(v, Vector3::new(0.0, 0.0, angle), epsilon = 1e-12);
    }

    #[test]
    fn log_rejects_half_turn() {
        let r = Rotation3::rot_z(PI);
        assert!(matches!(
            log_so3(&r),
            Err(ManifoldError::NearSingular { .. })
        ));
    }

    #[test]
    fn jl_inv_at_tiny_angle_matches_taylor() {
        let theta = Vector3::new(1e-9, 0.0, 0.0);
        let k = hat(&theta);
        let taylor = Matrix3::identity() - k * 0.5 + k * k / 12.0;
        assert_relative_eq!(jl_inv_so3(&theta).unwrap(), taylor, epsilon = 1e-12);
    }

    #[test]
    fn series_and_closed_forms_agree_at_threshold() {
        let below = Vector3::new(0.0, SMALL_ANGLE * 0.999, 0.0);
        let above = Vector3::new(0.0, SMALL_ANGLE * 1.001, 0.0);
        assert_relative_eq!(jl_so3(&below), jl_so3(&above), epsilon = 1e-9);
        assert_relative_eq!(
            jl_inv_so3(&below).unwrap(),
            jl_inv_so3(&above).unwrap(),
            epsilon = 1e-9
        );
    }

    #[test]
    fn quaternion_round_trip() {
        let r = exp_so3(&Vector3::new(0.4, -1.1, 2.0)).unwrap();
        let [w, x, y, z] = r.to_quaternion();
        let back = Rotation3::from_quaternion(w, x, y, z).unwrap();
        assert_relative_eq!(back.matrix(), r.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn rpy_extraction() {
        let r = Rotation3::from_rpy(0.1, -0.3, 2.0);
        assert_relative_eq!(r.yaw(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(r.pitch(), -0.3, epsilon = 1e-14);
    }

    #[test]
    fn long_compose_chain_stays_orthonormal() {
        let step = exp_so3(&Vector3::new(0.013, 0.021, -0.007)).unwrap();
        let mut r = Rotation3::identity();
        for _ in 0..5000 {
            r = r.compose(&step);
        }
        assert!(r.is_valid());
    }
}
