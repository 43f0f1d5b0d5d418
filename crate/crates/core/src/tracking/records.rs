use nalgebra::{DMatrix, Vector3};

use super::TrackingError;
use crate::manifold::Pose3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeasurementKind {
    /// Chaser motion since the previous odometry record.
    Odom,
    /// Target position in the chaser frame.
    Usbl,
    /// Target pose in the chaser frame.
    Optical,
}

impl MeasurementKind {
    pub fn label(&self) -> &'static str {
        match self {
            MeasurementKind::Odom => "ODOM",
            MeasurementKind::Usbl => "USBL",
            MeasurementKind::Optical => "OPTICAL",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ODOM" => Some(MeasurementKind::Odom),
            "USBL" => Some(MeasurementKind::Usbl),
            "OPTICAL" => Some(MeasurementKind::Optical),
            _ => None,
        }
    }

    fn payload_dim(&self) -> usize {
        match self {
            MeasurementKind::Usbl => 3,
            _ => 6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Pose(Pose3),
    Position(Vector3<f64>),
}

/// One timestamped sensor reading. `covariance` overrides the configured
/// noise for this record when present.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub timestamp: f64,
    pub kind: MeasurementKind,
    pub payload: Payload,
    pub covariance: Option<DMatrix<f64>>,
}

impl MeasurementRecord {
    pub fn odom(timestamp: f64, motion: Pose3) -> Self {
        Self {
            timestamp,
            kind: MeasurementKind::Odom,
            payload: Payload::Pose(motion),
            covariance: None,
        }
    }

    pub fn usbl(timestamp: f64, position: Vector3<f64>) -> Self {
        Self {
            timestamp,
            kind: MeasurementKind::Usbl,
            payload: Payload::Position(position),
            covariance: None,
        }
    }

    pub fn optical(timestamp: f64, pose: Pose3) -> Self {
        Self {
            timestamp,
            kind: MeasurementKind::Optical,
            payload: Payload::Pose(pose),
            covariance: None,
        }
    }

    pub fn with_covariance(mut self, covariance: DMatrix<f64>) -> Self {
        self.covariance = Some(covariance);
        self
    }

    pub fn is_relative(&self) -> bool {
        self.kind != MeasurementKind::Odom
    }

    pub fn pose(&self) -> Option<&Pose3> {
        match &self.payload {
            Payload::Pose(p) => Some(p),
            Payload::Position(_) => None,
        }
    }

    pub fn position(&self) -> Vector3<f64> {
        match &self.payload {
            Payload::Pose(p) => p.translation,
            Payload::Position(v) => *v,
        }
    }

    pub fn validate(&self, index: usize) -> Result<(), TrackingError> {
        let fail = |reason: String| Err(TrackingError::InvalidRecord { index, reason });
        if !self.timestamp.is_finite() {
            return fail(format!("timestamp {} is not finite", self.timestamp));
        }
        match (&self.kind, &self.payload) {
            (MeasurementKind::Usbl, Payload::Position(v)) if v.iter().all(|x| x.is_finite()) => {}
            (MeasurementKind::Odom | MeasurementKind::Optical, Payload::Pose(p))
                if p.is_valid() => {}
            _ => {
                return fail(format!(
                    "{} record carries an invalid payload",
                    self.kind.label()
                ))
            }
        }
        if let Some(c) = &self.covariance {
            let n = self.kind.payload_dim();
            if c.nrows() != n || c.ncols() != n {
                return fail(format!(
                    "{} covariance must be {n}x{n}, got {}x{}",
                    self.kind.label(),
                    c.nrows(),
                    c.ncols()
                ));
            }
        }
        Ok(())
    }
}
