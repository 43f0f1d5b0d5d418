//! Soft upright prior for surface targets.
//!
//! `ε = S Log(R_WTᵀ R_z(ψ(R_WT)))`, where `ψ` is the ZYX yaw and `S` keeps the
//! x and y components (roll and pitch). Any upright orientation has zero
//! residual regardless of heading.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, Matrix2, Matrix3, RowVector3, Vector3};

use crate::fgraph::{
    expect_kinds, Factor, FactorError, GraphError, NoiseModel, ResidualModel, VariableKey,
};
use crate::manifold::{hat, jr_inv_so3, log_so3, Element, ManifoldKind, Rotation3};

/// Pitch closer than this to ±π/2 leaves yaw undefined.
pub const GIMBAL_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct RollPitchSpec {
    pub covariance: Matrix2<f64>,
}

impl RollPitchSpec {
    pub fn from_sigma(sigma: f64) -> Self {
        Self {
            covariance: Matrix2::identity() * sigma * sigma,
        }
    }
}

impl Default for RollPitchSpec {
    fn default() -> Self {
        Self::from_sigma(0.05)
    }
}

fn yaw_and_gradient(rot: &Rotation3) -> Result<(f64, RowVector3<f64>), FactorError> {
    let pitch = rot.pitch();
    if pitch.abs() > FRAC_PI_2 - GIMBAL_MARGIN {
        return Err(FactorError::GimbalLock { pitch });
    }
    let r = rot.matrix();
    let (x, y) = (r[(0, 0)], r[(1, 0)]);
    // d(R Exp(φ)) e₀ = -R [e₀]× φ
    let d = -(r * hat(&Vector3::x()));
    let dx = d.row(0);
    let dy = d.row(1);
    let grad = (dy * x - dx * y) / (x * x + y * y);
    Ok((y.atan2(x), grad))
}

type FullResidual = (Vector3<f64>, Matrix3<f64>, RowVector3<f64>);

fn full_residual(rot: &Rotation3) -> Result<FullResidual, FactorError> {
    let (yaw, grad) = yaw_and_gradient(rot)?;
    let m = rot.transpose().compose(&Rotation3::rot_z(yaw));
    Ok((log_so3(&m)?, *m.matrix(), grad))
}

#[derive(Debug, Clone)]
pub struct RollPitchModel;

impl ResidualModel for RollPitchModel {
    fn name(&self) -> &str {
        "roll_pitch"
    }

    fn dim(&self) -> usize {
        2
    }

    fn kinds(&self) -> Vec<ManifoldKind> {
        vec![ManifoldKind::Se3]
    }

    fn residual(&self, s: &[&Element]) -> Result<DVector<f64>, FactorError> {
        expect_kinds(s, &self.kinds())?;
        let (e, _, _) = full_residual(&s[0].as_pose().expect("kind checked").rotation)?;
        Ok(DVector::from_vec(vec![e.x, e.y]))
    }

    fn linearize(&self, s: &[&Element]) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), FactorError> {
        expect_kinds(s, &self.kinds())?;
        let (e, m, grad) = full_residual(&s[0].as_pose().expect("kind checked").rotation)?;
        // M(φ) = Exp(-φ) M Exp(e_z ψ'(φ)) ≈ M Exp(-Mᵀ φ + e_z ψ' φ)
        let inner = -m.transpose() + Vector3::z() * grad;
        let d = jr_inv_so3(&e)? * inner;
        let mut j = DMatrix::zeros(2, 6);
        j.view_mut((0, 3), (2, 3)).copy_from(&d.fixed_rows::<2>(0));
        Ok((DVector::from_vec(vec![e.x, e.y]), vec![j]))
    }
}

pub fn roll_pitch_factor(
    target_key: VariableKey,
    spec: &RollPitchSpec,
) -> Result<Factor, GraphError> {
    let cov = DMatrix::from_column_slice(2, 2, spec.covariance.as_slice());
    Factor::new(
        vec![target_key],
        NoiseModel::from_covariance(cov)?,
        RollPitchModel,
    )
}
