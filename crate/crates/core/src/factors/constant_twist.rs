//! Ternary constant-twist motion prior.
//!
//! For three consecutive states the prior replays the twist that carried the
//! first state into the second and measures how far the third state lies from
//! that prediction:
//!
//! ```text
//! δ₁  = T_k ⊖ T_{k-1}          relative increment
//! ξ̂   = δ₁ / Δt₁               body-frame twist estimate
//! δ₂  = ξ̂ Δt₂                  predicted increment
//! T̂   = T_k ⊕ δ₂               predicted next state
//! ε   = T_{k+1} ⊖ T̂            residual, in the tangent space at T̂
//! ```
//!
//! Only group operations appear, so the same code serves SO(3), SE(3) and Rⁿ.
//! With `α = Δt₂/Δt₁` the Jacobians are
//!
//! ```text
//! ∂ε/∂T_{k-1} = (-J_l⁻¹(ε)) J_r(δ₂) α (-J_l⁻¹(δ₁))
//! ∂ε/∂T_k     = (-J_l⁻¹(ε)) J_r(δ₂) α J_r⁻¹(δ₁) + (-J_l⁻¹(ε)) Ad⁻¹_{Exp(δ₂)}
//! ∂ε/∂T_{k+1} = J_r⁻¹(ε)
//! ```

use nalgebra::{DMatrix, DVector};

use crate::fgraph::{
    expect_kinds, Factor, FactorError, GraphError, NoiseModel, ResidualModel, VariableKey,
};
use crate::manifold::{Element, ManifoldError, ManifoldKind, TangentVector};

pub const STEP_INCREMENT: &str = "relative increment δ₁ = T_k ⊖ T_{k-1}";
pub const STEP_PREDICTION: &str = "prediction T̂ = T_k ⊕ δ₂";
pub const STEP_RESIDUAL: &str = "residual ε = T_{k+1} ⊖ T̂";

fn at(step: &'static str) -> impl Fn(ManifoldError) -> FactorError {
    move |source| FactorError::Step { step, source }
}

/// Intermediate quantities of one residual evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTwistTerms {
    pub delta1: TangentVector,
    pub twist: TangentVector,
    pub delta2: TangentVector,
    pub predicted: Element,
    pub residual: TangentVector,
}

fn check_dts(dt1: f64, dt2: f64) -> Result<(), FactorError> {
    if dt1 > 0.0 && dt2 > 0.0 && dt1.is_finite() && dt2.is_finite() {
        Ok(())
    } else {
        Err(FactorError::Invalid(format!(
            "time steps must be positive, got Δt₁={dt1}, Δt₂={dt2}"
        )))
    }
}

fn same_kind(prev: &Element, curr: &Element, next: &Element) -> Result<(), FactorError> {
    let k = prev.kind();
    expect_kinds(&[prev, curr, next], &[k, k, k])
}

/// Evaluates the five residual steps.
pub fn ct_terms(
    prev: &Element,
    curr: &Element,
    next: &Element,
    dt1: f64,
    dt2: f64,
) -> Result<ConstantTwistTerms, FactorError> {
    check_dts(dt1, dt2)?;
    same_kind(prev, curr, next)?;
    let delta1 = curr.ominus(prev).map_err(at(STEP_INCREMENT))?;
    let twist = &delta1 / dt1;
    let delta2 = &twist * dt2;
    let predicted = curr.oplus(&delta2).map_err(at(STEP_PREDICTION))?;
    let residual = next.ominus(&predicted).map_err(at(STEP_RESIDUAL))?;
    Ok(ConstantTwistTerms {
        delta1,
        twist,
        delta2,
        predicted,
        residual,
    })
}

/// Constant-twist residual `ε_k`.
pub fn ct_residual(
    prev: &Element,
    curr: &Element,
    next: &Element,
    dt1: f64,
    dt2: f64,
) -> Result<TangentVector, FactorError> {
    ct_terms(prev, curr, next, dt1, dt2).map(|t| t.residual)
}

/// Residual Jacobians with respect to `(T_{k-1}, T_k, T_{k+1})`.
pub fn ct_jacobians(
    prev: &Element,
    curr: &Element,
    next: &Element,
    dt1: f64,
    dt2: f64,
) -> Result<[DMatrix<f64>; 3], FactorError> {
    ct_linearize(prev, curr, next, dt1, dt2).map(|(_, j)| j)
}

/// Residual and Jacobians in one pass.
pub fn ct_linearize(
    prev: &Element,
    curr: &Element,
    next: &Element,
    dt1: f64,
    dt2: f64,
) -> Result<(TangentVector, [DMatrix<f64>; 3]), FactorError> {
    let terms = ct_terms(prev, curr, next, dt1, dt2)?;
    let kind = curr.kind();
    let alpha = dt2 / dt1;

    // ∂ε/∂T̂
    let d_eps_d_pred = -kind.jl_inv(&terms.residual).map_err(at(STEP_RESIDUAL))?;
    // ∂T̂/∂δ₂ · ∂δ₂/∂δ₁
    let through_delta1 =
        &d_eps_d_pred * kind.jr(&terms.delta2).map_err(at(STEP_PREDICTION))? * alpha;

    let d_delta1_d_prev = -kind.jl_inv(&terms.delta1).map_err(at(STEP_INCREMENT))?;
    let d_delta1_d_curr = kind.jr_inv(&terms.delta1).map_err(at(STEP_INCREMENT))?;
    let d_pred_d_curr = kind
        .exp(&terms.delta2)
        .map_err(at(STEP_PREDICTION))?
        .adjoint_inv();

    let j_prev = &through_delta1 * d_delta1_d_prev;
    let j_curr = &through_delta1 * d_delta1_d_curr + &d_eps_d_pred * d_pred_d_curr;
    let j_next = kind.jr_inv(&terms.residual).map_err(at(STEP_RESIDUAL))?;
    Ok((terms.residual, [j_prev, j_curr, j_next]))
}

/// Default base covariance `Σ̄_ct` (per second of prediction horizon).
///
/// SE(3): `(0.05 m)²` per translation axis and `(0.02 rad)²` per rotation axis;
/// Rⁿ: `(0.05 m)²`; SO(3): `(0.02 rad)²`.
pub fn default_base_covariance(kind: ManifoldKind) -> DMatrix<f64> {
    let (t, r) = (0.05f64.powi(2), 0.02f64.powi(2));
    let diag: Vec<f64> = match kind {
        ManifoldKind::Se3 => vec![t, t, t, r, r, r],
        ManifoldKind::So3 => vec![r; 3],
        ManifoldKind::Rn(n) => vec![t; n],
    };
    DMatrix::from_diagonal(&DVector::from_vec(diag))
}

/// Time steps and base covariance of one constant-twist factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantTwistSpec {
    pub dt1: f64,
    pub dt2: f64,
    pub base_covariance: DMatrix<f64>,
}

impl ConstantTwistSpec {
    pub fn new(dt1: f64, dt2: f64, base_covariance: DMatrix<f64>) -> Result<Self, GraphError> {
        check_dts(dt1, dt2).map_err(|e| GraphError::BadFactor(e.to_string()))?;
        Ok(Self {
            dt1,
            dt2,
            base_covariance,
        })
    }

    /// Time steps read off three strictly increasing key timestamps.
    pub fn from_keys(
        keys: &[VariableKey; 3],
        base_covariance: DMatrix<f64>,
    ) -> Result<Self, GraphError> {
        let dt1 = keys[1].timestamp - keys[0].timestamp;
        let dt2 = keys[2].timestamp - keys[1].timestamp;
        if !(dt1 > 0.0 && dt2 > 0.0) {
            return Err(GraphError::BadFactor(format!(
                "constant-twist keys must have strictly increasing timestamps: {}, {}, {}",
                keys[0], keys[1], keys[2]
            )));
        }
        Self::new(dt1, dt2, base_covariance)
    }

    /// `α = Δt₂/Δt₁`.
    pub fn alpha(&self) -> f64 {
        self.dt2 / self.dt1
    }

    /// `Σ_ct = s(Δt₂) Σ̄_ct` with `s(Δt₂) = Δt₂`.
    pub fn noise(&self) -> Result<NoiseModel, GraphError> {
        NoiseModel::from_covariance(&self.base_covariance * self.dt2)
    }
}

#[derive(Debug, Clone)]
pub struct ConstantTwistModel {
    pub kind: ManifoldKind,
    pub dt1: f64,
    pub dt2: f64,
}

impl ResidualModel for ConstantTwistModel {
    fn name(&self) -> &str {
        "constant_twist"
    }

    fn dim(&self) -> usize {
        self.kind.dim()
    }

    fn kinds(&self) -> Vec<ManifoldKind> {
        vec![self.kind; 3]
    }

    fn residual(&self, s: &[&Element]) -> Result<DVector<f64>, FactorError> {
        expect_kinds(s, &self.kinds())?;
        ct_residual(s[0], s[1], s[2], self.dt1, self.dt2)
    }

    fn linearize(&self, s: &[&Element]) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), FactorError> {
        expect_kinds(s, &self.kinds())?;
        let (r, j) = ct_linearize(s[0], s[1], s[2], self.dt1, self.dt2)?;
        Ok((r, j.into()))
    }
}

/// Binds the constant-twist residual to three keys on one manifold.
pub fn ct_factor(keys: [VariableKey; 3], spec: &ConstantTwistSpec) -> Result<Factor, GraphError> {
    let kind = keys[0].kind;
    if keys.iter().any(|k| k.kind != kind) {
        return Err(GraphError::BadFactor(format!(
            "constant-twist keys mix manifolds: {}, {}, {}",
            keys[0], keys[1], keys[2]
        )));
    }
    let from_keys = ConstantTwistSpec::from_keys(&keys, spec.base_covariance.clone())?;
    let tol = 1e-9 * (1.0 + spec.dt1.abs() + spec.dt2.abs());
    if (from_keys.dt1 - spec.dt1).abs() > tol || (from_keys.dt2 - spec.dt2).abs() > tol {
        return Err(GraphError::BadFactor(format!(
            "spec time steps ({}, {}) disagree with key timestamps ({}, {})",
            spec.dt1, spec.dt2, from_keys.dt1, from_keys.dt2
        )));
    }
    let model = ConstantTwistModel {
        kind,
        dt1: spec.dt1,
        dt2: spec.dt2,
    };
    Factor::new(keys.to_vec(), spec.noise()?, model)
}

/// [`ct_factor`] with time steps taken from the key timestamps.
pub fn ct_factor_from_keys(
    keys: [VariableKey; 3],
    base_covariance: &DMatrix<f64>,
) -> Result<Factor, GraphError> {
    let spec = ConstantTwistSpec::from_keys(&keys, base_covariance.clone())?;
    ct_factor(keys, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{EuclidPoint, Pose3};
    use approx::assert_relative_eq;
    use std::f64::consts::FRAC_PI_2;

    fn se3(xi: [f64; 6]) -> Element {
        ManifoldKind::Se3
            .exp(&DVector::from_row_slice(&xi))
            .unwrap()
    }

    #[test]
    fn exact_constant_twist_has_zero_residual() {
        let step = se3([1.0, 0.0, 0.0, 0.0, 0.0, FRAC_PI_2]);
        let prev: Element = Pose3::identity().into();
        let next = step.compose(&step).unwrap();
        let r = ct_residual(&prev, &step, &next, 1.0, 1.0).unwrap();
        assert!(r.amax() < 1e-14, "{r}");
    }

    #[test]
    fn equal_states_have_zero_residual() {
        let t = se3([0.3, -2.0, 1.0, 0.2, 0.1, -0.4]);
        let r = ct_residual(&t, &t, &t, 0.7, 1.3).unwrap();
        assert!(r.amax() < 1e-15);
    }

    #[test]
    fn euclidean_reduction() {
        let p0: Element = EuclidPoint::new(0.0, 0.0, 0.0).into();
        let p1: Element = EuclidPoint::new(1.0, 0.0, 0.0).into();
        let p2: Element = EuclidPoint::new(3.0, 0.0, 0.0).into();
        let r = ct_residual(&p0, &p1, &p2, 1.0, 1.0).unwrap();
        assert_eq!(r, DVector::from_vec(vec![1.0, 0.0, 0.0]));
        let [a, b, c] = ct_jacobians(&p0, &p1, &p2, 1.0, 1.0).unwrap();
        let i = DMatrix::<f64>::identity(3, 3);
        assert_eq!((a, b, c), (i.clone(), -&i * 2.0, i));
    }

    #[test]
    fn zero_twist_jacobians() {
        let t = se3([0.3, -2.0, 1.0, 0.2, 0.1, -0.4]);
        let [a, b, c] = ct_jacobians(&t, &t, &t, 1.0, 1.0).unwrap();
        let i = DMatrix::<f64>::identity(6, 6);
        assert_relative_eq!(a, i.clone(), epsilon = 1e-14);
        assert_relative_eq!(b, -&i * 2.0, epsilon = 1e-14);
        assert_relative_eq!(c, i, epsilon = 1e-14);
    }

    #[test]
    fn mixed_manifolds_are_rejected() {
        let p: Element = EuclidPoint::default().into();
        let t: Element = Pose3::identity().into();
        assert!(matches!(
            ct_residual(&p, &t, &t, 1.0, 1.0),
            Err(FactorError::Kind { .. })
        ));
        let ks = [
            VariableKey::new(0, ManifoldKind::R3, 0.0),
            VariableKey::new(1, ManifoldKind::Se3, 1.0),
            VariableKey::new(2, ManifoldKind::Se3, 2.0),
        ];
        let base = default_base_covariance(ManifoldKind::Se3);
        assert!(ct_factor_from_keys(ks, &base).is_err());
    }

    #[test]
    fn near_pi_increment_names_the_step() {
        let prev: Element = Pose3::identity().into();
        let curr = se3([0.0, 0.0, 0.0, 0.0, 0.0, std::f64::consts::PI]);
        let err = ct_residual(&prev, &curr, &curr, 1.0, 1.0).unwrap_err();
        assert!(matches!(
            err,
            FactorError::Step {
                step: STEP_INCREMENT,
                ..
            }
        ));
    }

    #[test]
    fn covariance_scales_with_horizon() {
        let base = default_base_covariance(ManifoldKind::R3);
        let a = ConstantTwistSpec::new(1.0, 1.0, base.clone()).unwrap();
        let b = ConstantTwistSpec::new(1.0, 2.0, base).unwrap();
        let e = DVector::from_vec(vec![0.1, -0.2, 0.05]);
        let ca = a.noise().unwrap().mahalanobis_squared(&e);
        let cb = b.noise().unwrap().mahalanobis_squared(&e);
        assert_relative_eq!(cb, ca / 2.0, epsilon = 1e-12);
    }
}
