#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ctwist::fgraph::{Factor, FactorError, VariableKey};
use ctwist::manifold::{Element, ManifoldKind, Pose3};
use ctwist::simkit::{finite_difference_states, perturb, FD_STEP};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        let n: f64 = v.norm();
        if n > 1e-3 {
            return v / n;
        }
    }
}

/// Rotation vector with uniform direction and angle uniform in `[0, max_angle]`.
pub fn rotation_vector(rng: &mut ChaCha8Rng, max_angle: f64) -> Vector3<f64> {
    unit_vector(rng) * rng.random_range(0.0..=max_angle)
}

/// SE(3) tangent `[ρ; θ]` with `|ρ_i| ≤ scale` and `|θ| ≤ max_angle`.
pub fn se3_tangent(rng: &mut ChaCha8Rng, scale: f64, max_angle: f64) -> DVector<f64> {
    let theta = rotation_vector(rng, max_angle);
    let mut v = DVector::zeros(6);
    for i in 0..3 {
        v[i] = rng.random_range(-scale..=scale);
        v[3 + i] = theta[i];
    }
    v
}

pub fn random_pose(rng: &mut ChaCha8Rng, scale: f64) -> Element {
    let delta = se3_tangent(rng, scale, std::f64::consts::PI - 0.1);
    perturb(&ManifoldKind::Se3.identity(), &delta)
}

pub fn random_r3(rng: &mut ChaCha8Rng, scale: f64) -> Element {
    Element::from(Vector3::new(
        rng.random_range(-scale..=scale),
        rng.random_range(-scale..=scale),
        rng.random_range(-scale..=scale),
    ))
}

pub fn pose(e: &Element) -> Pose3 {
    *e.as_pose().expect("SE(3) element")
}

/// `‖A − F‖_F / max(‖F‖_F, 1)`.
pub fn relative_error(analytic: &DMatrix<f64>, numeric: &DMatrix<f64>) -> f64 {
    (analytic - numeric).norm() / numeric.norm().max(1.0)
}

/// Largest relative error between a factor's analytic Jacobian blocks and
/// central differences through the series exponential.
pub fn factor_jacobian_error(factor: &Factor, states: &[Element]) -> Result<f64, FactorError> {
    let refs: Vec<&Element> = states.iter().collect();
    let (_, analytic) = factor.model().linearize(&refs)?;
    let mut worst: f64 = 0.0;
    for (i, a) in analytic.iter().enumerate() {
        let numeric = finite_difference_states(|s| factor.model().residual(s), states, i, FD_STEP)?;
        worst = worst.max(relative_error(a, &numeric));
    }
    Ok(worst)
}

pub fn key(id: u64, kind: ManifoldKind, t: f64) -> VariableKey {
    VariableKey::new(id, kind, t)
}
