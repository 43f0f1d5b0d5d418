use nalgebra::{DMatrix, Vector3};

use crate::fgraph::{marginal_covariances, optimize, SolveReport, SolverSettings, Values};
use crate::manifold::{Element, ManifoldError, Pose3, Rotation3};

use super::{KeyframeType, TrackingError, TrackingProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeEstimate {
    pub timestamp: f64,
    pub kind: KeyframeType,
    pub chaser: Pose3,
    pub target: Element,
    /// Target position in the chaser frame.
    pub relative_position: Vector3<f64>,
    /// Target orientation in the chaser frame, for SE(3) targets.
    pub relative_rotation: Option<Rotation3>,
    pub relative_angle: Option<f64>,
    pub target_covariance: Option<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEstimate {
    pub keyframes: Vec<KeyframeEstimate>,
}

impl TrajectoryEstimate {
    pub fn from_values(problem: &TrackingProblem, values: &Values) -> Result<Self, TrackingError> {
        let keyframes = problem
            .keyframes
            .iter()
            .map(|kf| {
                let chaser = *values.get(&kf.chaser)?.as_pose().expect("chaser is SE(3)");
                let target = values.get(&kf.target)?.clone();
                let relative_position = chaser
                    .inverse_transform_point(&target.position().expect("position-bearing target"));
                let relative_rotation = target
                    .as_pose()
                    .map(|t| chaser.rotation.transpose().compose(&t.rotation));
                let relative_angle = relative_rotation
                    .as_ref()
                    .map(|r| r.angle_to(&Rotation3::identity()));
                Ok(KeyframeEstimate {
                    timestamp: kf.timestamp,
                    kind: kf.kind,
                    chaser,
                    target,
                    relative_position,
                    relative_rotation,
                    relative_angle,
                    target_covariance: None,
                })
            })
            .collect::<Result<Vec<_>, TrackingError>>()?;
        Ok(Self { keyframes })
    }

    pub fn len(&self) -> usize {
        self.keyframes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keyframes.is_empty()
    }
}

/// Batch-smooths the problem. With `covariances`, each keyframe also carries
/// the marginal covariance of its target state.
pub fn smooth(
    problem: &TrackingProblem,
    settings: &SolverSettings,
    covariances: bool,
) -> Result<(TrajectoryEstimate, Values, SolveReport), TrackingError> {
    let (values, report) = optimize(&problem.graph, &problem.initial, settings)?;
    let mut estimate = TrajectoryEstimate::from_values(problem, &values)?;
    if covariances {
        let keys: Vec<_> = problem.keyframes.iter().map(|k| k.target).collect();
        let covs = marginal_covariances(&problem.graph, &values, &keys)?;
        for (kf, cov) in estimate.keyframes.iter_mut().zip(covs) {
            kf.target_covariance = Some(cov);
        }
    }
    Ok((estimate, values, report))
}

/// Constant-twist prediction `curr ⊕ (curr ⊖ prev)·horizon/dt1`.
pub fn extrapolate(
    prev: &Element,
    curr: &Element,
    dt1: f64,
    horizon: f64,
) -> Result<Element, ManifoldError> {
    if !(dt1 > 0.0 && dt1.is_finite()) || !horizon.is_finite() || horizon < 0.0 {
        return Err(ManifoldError::InvalidArgument(format!(
            "extrapolation needs dt1 > 0 and horizon ≥ 0, got dt1 = {dt1}, horizon = {horizon}"
        )));
    }
    let twist = curr.ominus(prev)? / dt1;
    curr.oplus(&(twist * horizon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::EuclidPoint;

    #[test]
    fn extrapolates_euclidean_line() {
        let a: Element = EuclidPoint::new(0.0, 0.0, 0.0).into();
        let b: Element = EuclidPoint::new(1.0, 2.0, 0.0).into();
        let c = extrapolate(&a, &b, 1.0, 2.0).unwrap();
        assert_eq!(c.position().unwrap(), Vector3::new(3.0, 6.0, 0.0));
        assert!(extrapolate(&a, &b, 0.0, 1.0).is_err());
    }
}
