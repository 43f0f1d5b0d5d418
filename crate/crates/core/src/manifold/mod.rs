//! Lie-group kernel: SO(3), SE(3) and Rⁿ behind one dynamic [`Element`] type.
//!
//! Retraction and local coordinates are the right-perturbation pair
//! `X ⊕ δ = X Exp(δ)` and `Y ⊖ X = Log(X⁻¹ Y)`; on Rⁿ both reduce to vector
//! addition and subtraction, and every Jacobian is the identity.
//!
//! SE(3) tangent vectors are always `[ρ; θ]` (translation first).

pub mod se3;
pub mod so3;

use std::fmt;

use nalgebra::{DMatrix, DVector, Matrix3, Matrix6, Vector3, Vector6};
use thiserror::Error;

pub use se3::{
    adjoint_inv_se3, adjoint_se3, exp_se3, jl_inv_se3, jl_se3, jr_inv_se3, jr_se3, log_se3,
    q_block, Pose3,
};
pub use so3::{exp_so3, hat, jl_inv_so3, jl_so3, jr_inv_so3, jr_so3, log_so3, vee, Rotation3};

/// Coordinates of an element of a group's Lie algebra (an increment `δ` or a
/// twist `ξ`, related by `δ = ξ Δt`).
pub type TangentVector = DVector<f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{op}: rotation angle {angle:.9} rad is too close to π")]
    NearSingular { op: &'static str, angle: f64 },
    #[error("manifold mismatch: expected {expected}, found {found}")]
    Mismatch {
        expected: ManifoldKind,
        found: ManifoldKind,
    },
    #[error("tangent dimension mismatch: {kind} needs {expected}, got {found}")]
    Dimension {
        kind: ManifoldKind,
        expected: usize,
        found: usize,
    },
}

/// Which manifold a variable lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    So3,
    Se3,
    Rn(usize),
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldKind::So3 => write!(f, "SO(3)"),
            ManifoldKind::Se3 => write!(f, "SE(3)"),
            ManifoldKind::Rn(n) => write!(f, "R^{n}"),
        }
    }
}

impl ManifoldKind {
    pub const R3: ManifoldKind = ManifoldKind::Rn(3);

    /// Tangent dimension.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldKind::So3 => 3,
            ManifoldKind::Se3 => 6,
            ManifoldKind::Rn(n) => *n,
        }
    }

    pub fn identity(&self) -> Element {
        match self {
            ManifoldKind::So3 => Element::So3(Rotation3::identity()),
            ManifoldKind::Se3 => Element::Se3(Pose3::identity()),
            ManifoldKind::Rn(n) => Element::Rn(DVector::zeros(*n)),
        }
    }

    fn check(&self, delta: &TangentVector) -> Result<(), ManifoldError> {
        if delta.len() == self.dim() {
            Ok(())
        } else {
            Err(ManifoldError::Dimension {
                kind: *self,
                expected: self.dim(),
                found: delta.len(),
            })
        }
    }

    pub fn exp(&self, delta: &TangentVector) -> Result<Element, ManifoldError> {
        self.check(delta)?;
        Ok(match self {
            ManifoldKind::So3 => Element::So3(exp_so3(&v3(delta))?),
            ManifoldKind::Se3 => Element::Se3(exp_se3(&v6(delta))?),
            ManifoldKind::Rn(_) => Element::Rn(delta.clone()),
        })
    }

    pub fn jl(&self, delta: &TangentVector) -> Result<DMatrix<f64>, ManifoldError> {
        self.check(delta)?;
        Ok(match self {
            ManifoldKind::So3 => m3(&jl_so3(&v3(delta))),
            ManifoldKind::Se3 => m6(&jl_se3(&v6(delta))),
            ManifoldKind::Rn(n) => DMatrix::identity(*n, *n),
        })
    }

    pub fn jl_inv(&self, delta: &TangentVector) -> Result<DMatrix<f64>, ManifoldError> {
        self.check(delta)?;
        Ok(match self {
            ManifoldKind::So3 => m3(&jl_inv_so3(&v3(delta))?),
            ManifoldKind::Se3 => m6(&jl_inv_se3(&v6(delta))?),
            ManifoldKind::Rn(n) => DMatrix::identity(*n, *n),
        })
    }

    /// `J_r(δ)`, always evaluated as `J_l(-δ)`.
    pub fn jr(&self, delta: &TangentVector) -> Result<DMatrix<f64>, ManifoldError> {
        self.jl(&-delta)
    }

    /// `J_r⁻¹(δ)`, always evaluated as `J_l⁻¹(-δ)`.
    pub fn jr_inv(&self, delta: &TangentVector) -> Result<DMatrix<f64>, ManifoldError> {
        self.jl_inv(&-delta)
    }
}

/// A point of R³ (the translational target state).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EuclidPoint {
    pub coords: Vector3<f64>,
}

impl EuclidPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self {
            coords: Vector3::new(x, y, z),
        }
    }
}

impl From<EuclidPoint> for Element {
    fn from(p: EuclidPoint) -> Self {
        Element::Rn(DVector::from_column_slice(p.coords.as_slice()))
    }
}

impl From<Pose3> for Element {
    fn from(p: Pose3) -> Self {
        Element::Se3(p)
    }
}

impl From<Rotation3> for Element {
    fn from(r: Rotation3) -> Self {
        Element::So3(r)
    }
}

impl From<Vector3<f64>> for Element {
    fn from(v: Vector3<f64>) -> Self {
        EuclidPoint { coords: v }.into()
    }
}

/// A value on one of the supported manifolds.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    So3(Rotation3),
    Se3(Pose3),
    Rn(DVector<f64>),
}

impl Element {
    pub fn kind(&self) -> ManifoldKind {
        match self {
            Element::So3(_) => ManifoldKind::So3,
            Element::Se3(_) => ManifoldKind::Se3,
            Element::Rn(v) => ManifoldKind::Rn(v.len()),
        }
    }

    pub fn dim(&self) -> usize {
        self.kind().dim()
    }

    fn same_kind(&self, other: &Element) -> Result<(), ManifoldError> {
        if self.kind() == other.kind() {
            Ok(())
        } else {
            Err(ManifoldError::Mismatch {
                expected: self.kind(),
                found: other.kind(),
            })
        }
    }

    /// Group product; addition on Rⁿ.
    pub fn compose(&self, other: &Element) -> Result<Element, ManifoldError> {
        self.same_kind(other)?;
        Ok(match (self, other) {
            (Element::So3(a), Element::So3(b)) => Element::So3(a.compose(b)),
            (Element::Se3(a), Element::Se3(b)) => Element::Se3(a.compose(b)),
            (Element::Rn(a), Element::Rn(b)) => Element::Rn(a + b),
            _ => unreachable!(),
        })
    }

    pub fn inverse(&self) -> Element {
        match self {
            Element::So3(r) => Element::So3(r.inverse()),
            Element::Se3(p) => Element::Se3(p.inverse()),
            Element::Rn(v) => Element::Rn(-v),
        }
    }

    pub fn log(&self) -> Result<TangentVector, ManifoldError> {
        Ok(match self {
            Element::So3(r) => DVector::from_column_slice(log_so3(r)?.as_slice()),
            Element::Se3(p) => DVector::from_column_slice(log_se3(p)?.as_slice()),
            Element::Rn(v) => v.clone(),
        })
    }

    /// Retraction `X ⊕ δ`.
    pub fn oplus(&self, delta: &TangentVector) -> Result<Element, ManifoldError> {
        match self {
            Element::Rn(v) => {
                self.kind().check(delta)?;
                Ok(Element::Rn(v + delta))
            }
            _ => self.compose(&self.kind().exp(delta)?),
        }
    }

    /// Local coordinates `self ⊖ base`, expressed in the tangent space at `base`.
    pub fn ominus(&self, base: &Element) -> Result<TangentVector, ManifoldError> {
        base.same_kind(self)?;
        match (self, base) {
            (Element::Rn(y), Element::Rn(x)) => Ok(y - x),
            (Element::Se3(y), Element::Se3(x)) => Ok(DVector::from_column_slice(
                log_se3(&x.between(y))?.as_slice(),
            )),
            _ => base.inverse().compose(self)?.log(),
        }
    }

    /// Group adjoint matrix; identity on Rⁿ.
    pub fn adjoint(&self) -> DMatrix<f64> {
        match self {
            Element::So3(r) => m3(r.matrix()),
            Element::Se3(p) => m6(&adjoint_se3(p)),
            Element::Rn(v) => DMatrix::identity(v.len(), v.len()),
        }
    }

    pub fn adjoint_inv(&self) -> DMatrix<f64> {
        match self {
            Element::So3(r) => m3(&r.matrix().transpose()),
            Element::Se3(p) => m6(&adjoint_inv_se3(p)),
            Element::Rn(v) => DMatrix::identity(v.len(), v.len()),
        }
    }

    /// Position: the translation of a pose, or the point itself on R³.
    pub fn position(&self) -> Option<Vector3<f64>> {
        match self {
            Element::Se3(p) => Some(p.translation),
            Element::Rn(v) if v.len() == 3 => Some(Vector3::new(v[0], v[1], v[2])),
            _ => None,
        }
    }

    pub fn as_pose(&self) -> Option<&Pose3> {
        match self {
            Element::Se3(p) => Some(p),
            _ => None,
        }
    }

    pub fn as_rotation(&self) -> Option<&Rotation3> {
        match self {
            Element::So3(r) => Some(r),
            Element::Se3(p) => Some(&p.rotation),
            _ => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            Element::So3(r) => r.is_valid(),
            Element::Se3(p) => p.is_valid(),
            Element::Rn(v) => v.iter().all(|x| x.is_finite()),
        }
    }
}

/// `X ⊕ δ`.
pub fn oplus(x: &Element, delta: &TangentVector) -> Result<Element, ManifoldError> {
    x.oplus(delta)
}

/// `Y ⊖ X`.
pub fn ominus(y: &Element, x: &Element) -> Result<TangentVector, ManifoldError> {
    y.ominus(x)
}

pub(crate) fn v3(d: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(d[0], d[1], d[2])
}

pub(crate) fn v6(d: &DVector<f64>) -> Vector6<f64> {
    Vector6::from_column_slice(d.as_slice())
}

pub(crate) fn m3(m: &Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 3, m.as_slice())
}

pub(crate) fn m6(m: &Matrix6<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(6, 6, m.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn euclidean_plus_minus() {
        let x: Element = EuclidPoint::new(1.0, 2.0, 3.0).into();
        let y = x.oplus(&DVector::from_vec(vec![0.5, 0.0, 0.0])).unwrap();
        assert_eq!(y, EuclidPoint::new(1.5, 2.0, 3.0).into());
        assert_eq!(
            y.ominus(&x).unwrap(),
            DVector::from_vec(vec![0.5, 0.0, 0.0])
        );
    }

    #[test]
    fn oplus_identity_is_exp() {
        let xi = DVector::from_vec(vec![0.3, -0.1, 0.2, 0.05, 0.4, -0.3]);
        let a = ManifoldKind::Se3.identity().oplus(&xi).unwrap();
        let b = ManifoldKind::Se3.exp(&xi).unwrap();
        assert_relative_eq!(
            a.as_pose().unwrap().to_homogeneous(),
            b.as_pose().unwrap().to_homogeneous(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn mismatched_kinds_are_rejected() {
        let p: Element = Pose3::identity().into();
        let q: Element = EuclidPoint::default().into();
        assert!(matches!(q.ominus(&p), Err(ManifoldError::Mismatch { .. })));
        assert!(matches!(
            p.oplus(&DVector::zeros(3)),
            Err(ManifoldError::Dimension { .. })
        ));
    }

    #[test]
    fn rn_jacobians_are_identity() {
        let k = ManifoldKind::Rn(4);
        let d = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        for j in [
            k.jl(&d).unwrap(),
            k.jr(&d).unwrap(),
            k.jl_inv(&d).unwrap(),
            k.jr_inv(&d).unwrap(),
        ] {
            assert_eq!(j, DMatrix::identity(4, 4));
        }
    }
}
