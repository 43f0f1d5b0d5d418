//! Poses on the unit circle linked by constant-twist factors.
//!
//! Pose `i` sits at angle `i·Δφ` with its x axis along the direction of
//! travel, one time unit apart, so consecutive poses differ by the constant
//! twist `v = Δφ`, `ω_z = Δφ`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SimError;
use crate::factors::{ct_factor_from_keys, default_base_covariance, prior_factor};
use crate::fgraph::{FactorGraph, Values, VariableKey};
use crate::manifold::{Element, ManifoldKind, Pose3, Rotation3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitCircleVariant {
    /// Anchor the first two poses, free the third.
    Extrapolate,
    /// Anchor the first and third poses, free the middle.
    Interpolate,
    /// Anchor `x₀` and `x₅`, free `x₁…x₄`.
    Chain,
}

impl UnitCircleVariant {
    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "EXTRAPOLATE" => Some(Self::Extrapolate),
            "INTERPOLATE" => Some(Self::Interpolate),
            "CHAIN" => Some(Self::Chain),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::Extrapolate => "EXTRAPOLATE",
            Self::Interpolate => "INTERPOLATE",
            Self::Chain => "CHAIN",
        }
    }

    fn layout(&self) -> (usize, Vec<usize>) {
        match self {
            Self::Extrapolate => (3, vec![0, 1]),
            Self::Interpolate => (3, vec![0, 2]),
            Self::Chain => (6, vec![0, 5]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitCircleSpec {
    /// Angle between consecutive poses.
    pub step_angle: f64,
    /// Standard deviation of the anchor priors.
    pub anchor_sigma: f64,
}

impl Default for UnitCircleSpec {
    fn default() -> Self {
        Self {
            step_angle: 30f64.to_radians(),
            anchor_sigma: 1e-3,
        }
    }
}

/// Pose at angle `phi` on the unit circle, heading along the tangent.
pub fn arc_pose(phi: f64) -> Pose3 {
    Pose3::new(
        Rotation3::rot_z(phi + FRAC_PI_2),
        Vector3::new(phi.cos(), phi.sin(), 0.0),
    )
}

/// Distance of a position from the unit circle in the z = 0 plane.
pub fn arc_distance(p: &Vector3<f64>) -> f64 {
    let r = (p.x * p.x + p.y * p.y).sqrt();
    ((r - 1.0).powi(2) + p.z * p.z).sqrt()
}

#[derive(Debug, Clone)]
pub struct UnitCircleFixture {
    pub variant: UnitCircleVariant,
    pub graph: FactorGraph,
    pub initial: Values,
    pub keys: Vec<VariableKey>,
    pub anchored: Vec<usize>,
    /// Expected pose of every key.
    pub oracle: Vec<Pose3>,
}

impl UnitCircleFixture {
    pub fn free(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.keys.len()).filter(|i| !self.anchored.contains(i))
    }
}

pub fn unit_circle_fixture(
    variant: UnitCircleVariant,
    sigma: f64,
    seed: u64,
) -> Result<UnitCircleFixture, SimError> {
    unit_circle_fixture_with(variant, sigma, seed, &UnitCircleSpec::default())
}

/// Builds the fixture. Free poses start at the oracle perturbed by
/// `x ⊕ δ`, `δ ~ N(0, σ²I)`.
pub fn unit_circle_fixture_with(
    variant: UnitCircleVariant,
    sigma: f64,
    seed: u64,
    spec: &UnitCircleSpec,
) -> Result<UnitCircleFixture, SimError> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(SimError::InvalidConfig(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    let (n, anchored) = variant.layout();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keys: Vec<VariableKey> = (0..n)
        .map(|i| VariableKey::new(i as u64, ManifoldKind::Se3, i as f64))
        .collect();
    let oracle: Vec<Pose3> = (0..n)
        .map(|i| arc_pose(i as f64 * spec.step_angle))
        .collect();

    let mut graph = FactorGraph::new();
    let mut initial = Values::new();
    let prior_cov = DMatrix::identity(6, 6) * spec.anchor_sigma.powi(2);
    for (i, key) in keys.iter().enumerate() {
        graph.add_variable(*key)?;
        let truth: Element = oracle[i].into();
        if anchored.contains(&i) {
            graph.add_factor(prior_factor(*key, truth.clone(), prior_cov.clone())?)?;
            initial.insert(key, truth)?;
        } else {
            let delta: DVector<f64> = DVector::from_fn(6, |_, _| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            });
            initial.insert(key, truth.oplus(&delta)?)?;
        }
    }
    let base = default_base_covariance(ManifoldKind::Se3);
    for w in keys.windows(3) {
        graph.add_factor(ct_factor_from_keys([w[0], w[1], w[2]], &base)?)?;
    }
    Ok(UnitCircleFixture {
        variant,
        graph,
        initial,
        keys,
        anchored,
        oracle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::ct_residual;

    #[test]
    fn oracle_poses_have_zero_ct_residual() {
        let f = unit_circle_fixture(UnitCircleVariant::Chain, 0.0, 0).unwrap();
        for w in f.oracle.windows(3) {
            let e: Vec<Element> = w.iter().cloned().map(Into::into).collect();
            let r = ct_residual(&e[0], &e[1], &e[2], 1.0, 1.0).unwrap();
            assert!(r.amax() < 1e-12);
        }
        assert!(f
            .oracle
            .iter()
            .all(|p| arc_distance(&p.translation) < 1e-15));
    }

    #[test]
    fn graph_shapes() {
        let f = unit_circle_fixture(UnitCircleVariant::Chain, 0.1, 1).unwrap();
        assert_eq!(f.graph.count_factors("constant_twist"), 4);
        assert_eq!(f.graph.count_factors("prior"), 2);
        assert_eq!(f.free().count(), 4);
        let f = unit_circle_fixture(UnitCircleVariant::Interpolate, 0.1, 1).unwrap();
        assert_eq!(f.free().collect::<Vec<_>>(), vec![1]);
    }
}
