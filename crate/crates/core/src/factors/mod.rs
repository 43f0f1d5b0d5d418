//! Concrete factors: the constant-twist prior plus the measurement, upright
//! and boundary factors used by the tracking graphs.

pub mod constant_twist;
pub mod measurement;
pub mod roll_pitch;

use nalgebra::{DMatrix, DVector};

pub use constant_twist::{
    ct_factor, ct_factor_from_keys, ct_jacobians, ct_linearize, ct_residual, ct_terms,
    default_base_covariance, ConstantTwistModel, ConstantTwistSpec, ConstantTwistTerms,
};
pub use measurement::{
    boundary_factors, prior_factor, relative_pose_factor, usbl_factor, BoundaryDirection,
    BoundaryModel, PriorModel, RelativePoseModel, UsblModel, BOUNDARY_TIME_TOLERANCE,
    BOUNDARY_VARIANCE,
};
pub use roll_pitch::{roll_pitch_factor, RollPitchModel, RollPitchSpec};

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

/// Covariances of the relative measurements. Pose covariances are `[ρ; θ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementNoise {
    pub usbl: DMatrix<f64>,
    pub optical: DMatrix<f64>,
    /// Per odometry record; composed odometry scales it by the record count.
    pub odom: DMatrix<f64>,
}

impl MeasurementNoise {
    pub fn from_sigmas(
        usbl: f64,
        optical_t: f64,
        optical_r: f64,
        odom_t: f64,
        odom_r: f64,
    ) -> Self {
        let (ot, or, dt, dr) = (
            optical_t.powi(2),
            optical_r.powi(2),
            odom_t.powi(2),
            odom_r.powi(2),
        );
        Self {
            usbl: diag(&[usbl * usbl; 3]),
            optical: diag(&[ot, ot, ot, or, or, or]),
            odom: diag(&[dt, dt, dt, dr, dr, dr]),
        }
    }
}

impl Default for MeasurementNoise {
    fn default() -> Self {
        Self::from_sigmas(1.5, 0.05, 0.01, 0.01, 0.002)
    }
}
