//! Unary and binary measurement factors: priors, relative poses, USBL
//! positions, and the representation-boundary constraint.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use crate::fgraph::{
    expect_kinds, Factor, FactorError, GraphError, NoiseModel, ResidualModel, VariableKey,
};
use crate::manifold::{hat, m3, Element, ManifoldKind, Pose3};

fn pose(e: &Element) -> &Pose3 {
    e.as_pose().expect("kind checked")
}

fn position(e: &Element) -> Vector3<f64> {
    e.position().expect("kind checked")
}

fn dvec3(v: &Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

/// `ε = x ⊖ mean`.
#[derive(Debug, Clone)]
pub struct PriorModel {
    pub mean: Element,
}

impl ResidualModel for PriorModel {
    fn name(&self) -> &str {
        "prior"
    }

    fn dim(&self) -> usize {
        self.mean.dim()
    }

    fn kinds(&self) -> Vec<ManifoldKind> {
        vec![self.mean.kind()]
    }

    fn residual(&self, s: &[&Element]) -> Result<DVector<f64>, FactorError> {
        expect_kinds(s, &self.kinds())?;
        Ok(s[0].ominus(&self.mean)?)
    }

    fn linearize(&self, s: &[&Element]) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), FactorError> {
        let r = self.residual(s)?;
        let j = self.mean.kind().jr_inv(&r)?;
        Ok((r, vec![j]))
    }
}

pub fn prior_factor(
    key: VariableKey,
    mean: Element,
    covariance: DMatrix<f64>,
) -> Result<Factor, GraphError> {
    Factor::new(
        vec![key],
        NoiseModel::from_covariance(covariance)?,
        PriorModel { mean },
    )
}

/// `ε = (A⁻¹ B) ⊖ z` on SE(3).
#[derive(Debug, Clone)]
pub struct RelativePoseModel {
    pub measured: Pose3,
}

impl ResidualModel for RelativePoseModel {
    fn name(&self) -> &str {
        "relative_pose"
    }

    fn dim(&self) -> usize {
        6
    }

    fn kinds(&self) -> Vec<ManifoldKind> {
        vec![ManifoldKind::Se3; 2]
    }

    fn residual(&self, s: &[&Element]) -> Result<DVector<f64>, FactorError> {
        expect_kinds(s, &self.kinds())?;
        let rel: Element = pose(s[0]).between(pose(s[1])).into();
        Ok(rel.ominus(&self.measured.into())?)
    }

    fn linearize(&self, s: &[&Element]) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), FactorError> {
        expect_kinds(s, &self.kinds())?;
        let rel: Element = pose(s[0]).between(pose(s[1])).into();
        let r = rel.ominus(&self.measured.into())?;
        let jb = ManifoldKind::Se3.jr_inv(&r)?;
        // (A Exp(δ))⁻¹ B = (A⁻¹B) Exp(-Ad_{(A⁻¹B)⁻¹} δ)
        let ja = -&jb * rel.adjoint_inv();
        Ok((r, vec![ja, jb]))
    }
}

pub fn relative_pose_factor(
    key_a: VariableKey,
    key_b: VariableKey,
    measured: Pose3,
    covariance: DMatrix<f64>,
) -> Result<Factor, GraphError> {
    Factor::new(
        vec![key_a, key_b],
        NoiseModel::from_covariance(covariance)?,
        RelativePoseModel { measured },
    )
}

/// Target position in the chaser frame, `t(x_C⁻¹ x_T) - z`.
///
/// The target may be a pose (compose, then take the translation) or an R³
/// point (group action on the point). Both give `R_WCᵀ (p_T - t_C) - z`.
#[derive(Debug, Clone)]
pub struct UsblModel {
    pub measured: Vector3<f64>,
    pub target_kind: ManifoldKind,
}

impl UsblModel {
    fn predict(&self, chaser: &Element, target: &Element) -> Vector3<f64> {
        pose(chaser).inverse_transform_point(&position(target))
    }
}

impl ResidualModel for UsblModel {
    fn name(&self) -> &str {
        "usbl"
    }

    fn dim(&self) -> usize {
        3
    }

    fn kinds(&self) -> Vec<ManifoldKind> {
        vec![ManifoldKind::Se3, self.target_kind]
    }

    fn residual(&self, s: &[&Element]) -> Result<DVector<f64>, FactorError> {
        expect_kinds(s, &self.kinds())?;
        Ok(dvec3(&(self.predict(s[0], s[1]) - self.measured)))
    }

    fn linearize(&self, s: &[&Element]) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), FactorError> {
        expect_kinds(s, &self.kinds())?;
        let h = self.predict(s[0], s[1]);
        let rct = pose(s[0]).rotation.matrix().transpose();
        let mut jc = DMatrix::zeros(3, 6);
        jc.view_mut((0, 0), (3, 3)).copy_from(&-Matrix3::identity());
        jc.view_mut((0, 3), (3, 3)).copy_from(&hat(&h));
        let jt = match s[1] {
            Element::Se3(t) => {
                let mut j = DMatrix::zeros(3, 6);
                j.view_mut((0, 0), (3, 3))
                    .copy_from(&(rct * t.rotation.matrix()));
                j
            }
            _ => m3(&rct),
        };
        Ok((dvec3(&(h - self.measured)), vec![jc, jt]))
    }
}

pub fn usbl_factor(
    chaser_key: VariableKey,
    target_key: VariableKey,
    measured: Vector3<f64>,
    covariance: DMatrix<f64>,
) -> Result<Factor, GraphError> {
    match target_key.kind {
        ManifoldKind::Se3 | ManifoldKind::Rn(3) => {}
        other => {
            return Err(GraphError::KindMismatch {
                key: target_key.to_string(),
                found: other,
            })
        }
    }
    Factor::new(
        vec![chaser_key, target_key],
        NoiseModel::from_covariance(covariance)?,
        UsblModel {
            measured,
            target_kind: target_key.kind,
        },
    )
}

/// Which way the target representation changes at a boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryDirection {
    /// SE(3) → R³.
    Down,
    /// R³ → SE(3).
    Up,
}

/// Keys of a boundary factor may differ in time by at most this much.
pub const BOUNDARY_TIME_TOLERANCE: f64 = 1e-6;

/// Default boundary covariance, `1e-4 m²` per axis.
pub const BOUNDARY_VARIANCE: f64 = 1e-4;

/// Translation equality `p - t(T)` between an SE(3) and an R³ state.
#[derive(Debug, Clone)]
pub struct BoundaryModel {
    pub direction: BoundaryDirection,
}

impl ResidualModel for BoundaryModel {
    fn name(&self) -> &str {
        "boundary"
    }

    fn dim(&self) -> usize {
        3
    }

    fn kinds(&self) -> Vec<ManifoldKind> {
        vec![ManifoldKind::Se3, ManifoldKind::R3]
    }

    fn residual(&self, s: &[&Element]) -> Result<DVector<f64>, FactorError> {
        expect_kinds(s, &self.kinds())?;
        Ok(dvec3(&(position(s[1]) - pose(s[0]).translation)))
    }

    fn linearize(&self, s: &[&Element]) -> Result<(DVector<f64>, Vec<DMatrix<f64>>), FactorError> {
        let r = self.residual(s)?;
        let mut jt = DMatrix::zeros(3, 6);
        jt.view_mut((0, 0), (3, 3))
            .copy_from(&-pose(s[0]).rotation.matrix());
        Ok((r, vec![jt, DMatrix::identity(3, 3)]))
    }
}

/// Factors transferring the target position across a change of
/// representation. Both keys must describe the same instant.
pub fn boundary_factors(
    se3_key: VariableKey,
    r3_key: VariableKey,
    direction: BoundaryDirection,
    covariance: DMatrix<f64>,
) -> Result<Vec<Factor>, GraphError> {
    if (se3_key.timestamp - r3_key.timestamp).abs() > BOUNDARY_TIME_TOLERANCE {
        return Err(GraphError::BadFactor(format!(
            "boundary keys {se3_key} and {r3_key} do not describe the same instant"
        )));
    }
    Ok(vec![Factor::new(
        vec![se3_key, r3_key],
        NoiseModel::from_covariance(covariance)?,
        BoundaryModel { direction },
    )?])
}
