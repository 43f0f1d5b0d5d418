//! SE(3): rigid transforms.
//!
//! Tangent coordinates are ordered translation first, `ξ = [ρ; θ]`, with
//! `ξ^ = [[θ]×, ρ; 0, 0]`. Nothing in this crate uses the rotation-first layout.

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};

use super::so3::{self, hat, Rotation3};
use super::ManifoldError;

/// Below this angle the higher-order coefficients of [`q_block`] use their series.
/// Their closed forms lose most significant digits to cancellation well before
/// the general small-angle threshold.
pub const Q_SERIES_ANGLE: f64 = 1e-2;

/// A rigid transform `x ↦ R x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose3 {
    pub rotation: Rotation3,
    pub translation: Vector3<f64>,
}

impl Pose3 {
    pub fn new(rotation: Rotation3, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(Rotation3::identity(), translation)
    }

    /// Group product `self · other`.
    pub fn compose(&self, other: &Pose3) -> Pose3 {
        Pose3 {
            rotation: self.rotation.compose(&other.rotation),
            translation: self.rotation.rotate(&other.translation) + self.translation,
        }
    }

    pub fn inverse(&self) -> Pose3 {
        let rt = self.rotation.transpose();
        Pose3 {
            rotation: rt,
            translation: -rt.rotate(&self.translation),
        }
    }

    /// `self⁻¹ · other`, without forming the inverse explicitly.
    pub fn between(&self, other: &Pose3) -> Pose3 {
        let rt = self.rotation.transpose();
        Pose3 {
            rotation: rt.compose(&other.rotation),
            translation: rt.rotate(&(other.translation - self.translation)),
        }
    }

    /// Group action on a point.
    pub fn transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.rotate(p) + self.translation
    }

    /// Inverse action: `Rᵀ (p - t)`.
    pub fn inverse_transform_point(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.matrix().tr_mul(&(p - self.translation))
    }

    /// Homogeneous 4×4 form.
    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(self.rotation.matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    pub fn is_valid(&self) -> bool {
        self.rotation.is_valid() && self.translation.iter().all(|v| v.is_finite())
    }
}

fn split(xi: &Vector6<f64>) -> (Vector3<f64>, Vector3<f64>) {
    (xi.fixed_rows::<3>(0).into(), xi.fixed_rows::<3>(3).into())
}

fn join(rho: &Vector3<f64>, theta: &Vector3<f64>) -> Vector6<f64> {
    let mut v = Vector6::zeros();
    v.fixed_rows_mut::<3>(0).copy_from(rho);
    v.fixed_rows_mut::<3>(3).copy_from(theta);
    v
}

fn blocks(tl: &Matrix3<f64>, tr: &Matrix3<f64>, br: &Matrix3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(tl);
    m.fixed_view_mut::<3, 3>(0, 3).copy_from(tr);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(br);
    m
}

/// `Exp(ξ)`: rotation `Exp(θ)`, translation `J_l(θ) ρ`.
pub fn exp_se3(xi: &Vector6<f64>) -> Result<Pose3, ManifoldError> {
    if !xi.iter().all(|v| v.is_finite()) {
        return Err(ManifoldError::InvalidArgument(
            "twist has non-finite entries".into(),
        ));
    }
    let (rho, theta) = split(xi);
    Ok(Pose3 {
        rotation: so3::exp_so3(&theta)?,
        translation: so3::jl_so3(&theta) * rho,
    })
}

/// `Log(T)` as `[ρ; θ]`.
pub fn log_se3(pose: &Pose3) -> Result<Vector6<f64>, ManifoldError> {
    let theta = so3::log_so3(&pose.rotation)?;
    let rho = so3::jl_inv_so3(&theta)? * pose.translation;
    Ok(join(&rho, &theta))
}

/// `Ad_T = [[R, [t]× R], [0, R]]`.
pub fn adjoint_se3(pose: &Pose3) -> Matrix6<f64> {
    let r = pose.rotation.matrix();
    blocks(r, &(hat(&pose.translation) * r), r)
}

/// `Ad_T⁻¹ = [[Rᵀ, -Rᵀ [t]×], [0, Rᵀ]]`.
pub fn adjoint_inv_se3(pose: &Pose3) -> Matrix6<f64> {
    let rt = pose.rotation.matrix().transpose();
    blocks(&rt, &(-rt * hat(&pose.translation)), &rt)
}

fn q_coefficients_series(t2: f64) -> (f64, f64, f64) {
    let t4 = t2 * t2;
    let t6 = t4 * t2;
    (
        1.0 / 6.0 - t2 / 120.0 + t4 / 5040.0 - t6 / 362_880.0,
        -1.0 / 24.0 + t2 / 720.0 - t4 / 40_320.0 + t6 / 3_628_800.0,
        -1.0 / 120.0 + t2 / 5040.0 - t4 / 362_880.0 + t6 / 39_916_800.0,
    )
}

fn q_coefficients_closed(t: f64) -> (f64, f64, f64) {
    let (s, c) = t.sin_cos();
    let t2 = t * t;
    let t3 = t2 * t;
    (
        (t - s) / t3,
        (1.0 - t2 / 2.0 - c) / (t2 * t2),
        (t - s - t3 / 6.0) / (t3 * t2),
    )
}

/// Coupling block `Q(ρ, θ)` of the SE(3) left Jacobian.
pub fn q_block(rho: &Vector3<f64>, theta: &Vector3<f64>) -> Matrix3<f64> {
    let t2 = theta.norm_squared();
    let t = t2.sqrt();
    // a = (θ - sinθ)/θ³
    // b = (1 - θ²/2 - cosθ)/θ⁴
    // d = (θ - sinθ - θ³/6)/θ⁵
    let coefficients = if t < Q_SERIES_ANGLE {
        q_coefficients_series(t2)
    } else {
        q_coefficients_closed(t)
    };
    q_from_coefficients(rho, theta, coefficients)
}

fn q_from_coefficients(
    rho: &Vector3<f64>,
    theta: &Vector3<f64>,
    (a, b, d): (f64, f64, f64),
) -> Matrix3<f64> {
    let e = 0.5 * (b - 3.0 * d);
    let p = hat(rho);
    let th = hat(theta);
    let thp = th * p;
    let pth = p * th;
    let thpth = thp * th;
    let th2 = th * th;
    p * 0.5 + (thp + pth + thpth) * a
        - (th2 * p + pth * th - thpth * 3.0) * b
        - (thpth * th + th2 * p * th) * e
}

/// SE(3) left Jacobian `[[J_l(θ), Q], [0, J_l(θ)]]`.
pub fn jl_se3(delta: &Vector6<f64>) -> Matrix6<f64> {
    let (rho, theta) = split(delta);
    let jl = so3::jl_so3(&theta);
    blocks(&jl, &q_block(&rho, &theta), &jl)
}

/// SE(3) left Jacobian inverse `[[J⁻¹, -J⁻¹ Q J⁻¹], [0, J⁻¹]]`.
pub fn jl_inv_se3(delta: &Vector6<f64>) -> Result<Matrix6<f64>, ManifoldError> {
    let (rho, theta) = split(delta);
    let ji = so3::jl_inv_so3(&theta)?;
    let coupling = -ji * q_block(&rho, &theta) * ji;
    Ok(blocks(&ji, &coupling, &ji))
}

/// `J_r(ρ, θ) = J_l(-ρ, -θ)`.
pub fn jr_se3(delta: &Vector6<f64>) -> Matrix6<f64> {
    jl_se3(&-delta)
}

/// `J_r⁻¹(ρ, θ) = J_l⁻¹(-ρ, -θ)`.
pub fn jr_inv_se3(delta: &Vector6<f64>) -> Result<Matrix6<f64>, ManifoldError> {
    jl_inv_se3(&-delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn expm4(m: &Matrix4<f64>) -> Matrix4<f64> {
        let mut term = Matrix4::identity();
        let mut sum = Matrix4::identity();
        for k in 1..=20 {
            term = term * m / k as f64;
            sum += term;
        }
        sum
    }

    #[test]
    fn pure_translation_twist() {
        let xi = Vector6::new(1.0, 2.0, 3.0, 0.0, 0.0, 0.0);
        let t = exp_se3(&xi).unwrap();
        assert_eq!(t.translation, Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(*t.rotation.matrix(), Matrix3::identity());
        let back = log_se3(&Pose3::from_translation(Vector3::new(5.0, 0.0, 0.0))).unwrap();
        assert_relative_eq!(back, Vector6::new(5.0, 0.0, 0.0, 0.0, 0.0, 0.0));
    }

    #[test]
    fn quarter_arc_matches_series_exponential() {
        let xi = Vector6::new(1.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2);
        let mut hat4 = Matrix4::zeros();
        hat4.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&hat(&Vector3::new(0.0, 0.0, FRAC_PI_2)));
        hat4[(0, 3)] = 1.0;
        let oracle = expm4(&hat4);
        let t = exp_se3(&xi).unwrap();
        assert_relative_eq!(t.to_homogeneous(), oracle, epsilon = 1e-12);
        // unit arc of radius 2/π: ends at (2/π, 2/π, 0)
        let r = 2.0 / std::f64::consts::PI;
        assert_relative_eq!(t.translation, Vector3::new(r, r, 0.0), epsilon = 1e-12);
    }

    #[test]
    fn adjoint_of_pure_translation() {
        let t = Pose3::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let ad = adjoint_se3(&t);
        let ur: Matrix3<f64> = ad.fixed_view::<3, 3>(0, 3).into();
        assert_eq!(ur, hat(&Vector3::new(1.0, 0.0, 0.0)));
        assert_eq!(adjoint_se3(&Pose3::identity()), Matrix6::identity());
    }

    #[test]
    fn q_block_limits() {
        let rho = Vector3::new(0.3, -1.2, 0.7);
        assert_relative_eq!(q_block(&rho, &Vector3::zeros()), hat(&rho) * 0.5);
        let theta = Vector3::new(0.4, 0.1, -0.9);
        assert_eq!(q_block(&Vector3::zeros(), &theta), Matrix3::zeros());
    }

    #[test]
    fn q_block_series_and_closed_form_agree_at_switch() {
        let t = Q_SERIES_ANGLE;
        let rho = Vector3::new(0.3, -1.2, 0.7);
        let theta = Vector3::new(0.2, 0.5, -0.8).normalize() * t;
        let series = q_from_coefficients(&rho, &theta, q_coefficients_series(t * t));
        let closed = q_from_coefficients(&rho, &theta, q_coefficients_closed(t));
        assert_relative_eq!(series, closed, epsilon = 1e-12);
    }

    #[test]
    fn jacobian_reflection_is_exact() {
        let d = Vector6::new(0.1, 0.2, -0.3, 0.4, -0.5, 0.6);
        assert_eq!(jr_inv_se3(&d).unwrap(), jl_inv_se3(&-d).unwrap());
        assert_eq!(jr_se3(&d), jl_se3(&-d));
    }

    #[test]
    fn zero_delta_jacobians_are_identity() {
        let z = Vector6::zeros();
        assert_eq!(jl_se3(&z), Matrix6::identity());
        assert_eq!(jl_inv_se3(&z).unwrap(), Matrix6::identity());
    }
}
