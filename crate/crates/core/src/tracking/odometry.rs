use nalgebra::DMatrix;

use super::{MeasurementKind, MeasurementRecord, TrackingError};
use crate::manifold::{Element, Pose3};

const COVERAGE_SLACK: f64 = 1e-9;

/// Chaser trajectory integrated from odometry, starting at the identity at
/// the first odometry timestamp. The payload of that first record is the
/// motion from an earlier, unknown instant and is ignored.
#[derive(Debug, Clone)]
pub struct DeadReckoning {
    times: Vec<f64>,
    poses: Vec<Pose3>,
    /// Covariance of the motion over interval `i`, `[tᵢ, tᵢ₊₁]`.
    interval_cov: Vec<DMatrix<f64>>,
}

impl DeadReckoning {
    pub fn from_records(
        records: &[MeasurementRecord],
        default_cov: &DMatrix<f64>,
    ) -> Result<Self, TrackingError> {
        let mut times = Vec::new();
        let mut poses: Vec<Pose3> = Vec::new();
        let mut interval_cov = Vec::new();
        for r in records.iter().filter(|r| r.kind == MeasurementKind::Odom) {
            let motion = r.pose().expect("validated odometry payload");
            match poses.last() {
                None => poses.push(Pose3::identity()),
                Some(last) => {
                    if r.timestamp <= *times.last().expect("non-empty") {
                        return Err(TrackingError::InvalidRecord {
                            index: times.len(),
                            reason: "odometry timestamps must be strictly increasing".into(),
                        });
                    }
                    poses.push(last.compose(motion));
                    interval_cov.push(r.covariance.clone().unwrap_or_else(|| default_cov.clone()));
                }
            }
            times.push(r.timestamp);
        }
        Ok(Self {
            times,
            poses,
            interval_cov,
        })
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn span(&self) -> Option<(f64, f64)> {
        Some((*self.times.first()?, *self.times.last()?))
    }

    fn locate(&self, t: f64) -> Result<(usize, f64), TrackingError> {
        let (t0, t1) = self
            .span()
            .ok_or(TrackingError::OdometryCoverage { timestamp: t })?;
        if t < t0 - COVERAGE_SLACK || t > t1 + COVERAGE_SLACK {
            return Err(TrackingError::OdometryCoverage { timestamp: t });
        }
        if self.times.len() == 1 {
            return Ok((0, 0.0));
        }
        let i = self
            .times
            .partition_point(|&x| x <= t)
            .clamp(1, self.times.len() - 1)
            - 1;
        let s = ((t - self.times[i]) / (self.times[i + 1] - self.times[i])).clamp(0.0, 1.0);
        Ok((i, s))
    }

    /// Dead-reckoned pose at `t`, moving at constant twist between records.
    pub fn pose_at(&self, t: f64) -> Result<Pose3, TrackingError> {
        let (i, s) = self.locate(t)?;
        if s == 0.0 {
            return Ok(self.poses[i]);
        }
        let a: Element = self.poses[i].into();
        let b: Element = self.poses[i + 1].into();
        let step = b.ominus(&a)? * s;
        Ok(*a.oplus(&step)?.as_pose().expect("SE(3)"))
    }

    /// Covariance of the chaser motion over `[a, b]`: the per-interval
    /// covariances weighted by the covered fraction of each interval.
    pub fn covariance_between(&self, a: f64, b: f64) -> Result<DMatrix<f64>, TrackingError> {
        let (ia, sa) = self.locate(a)?;
        let (ib, sb) = self.locate(b)?;
        let mut cov = DMatrix::zeros(6, 6);
        if self.interval_cov.is_empty() {
            return Err(TrackingError::OdometryCoverage { timestamp: b });
        }
        let mut add = |i: usize, w: f64| {
            if w > 0.0 {
                cov += &self.interval_cov[i] * w;
            }
        };
        if ia == ib {
            add(ia, sb - sa);
        } else {
            add(ia, 1.0 - sa);
            for i in ia + 1..ib {
                add(i, 1.0);
            }
            add(ib, sb);
        }
        Ok(cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn stream() -> Vec<MeasurementRecord> {
        let step = Pose3::from_translation(Vector3::new(1.0, 0.0, 0.0));
        (0..4)
            .map(|i| MeasurementRecord::odom(i as f64, step))
            .collect()
    }

    #[test]
    fn integrates_and_interpolates() {
        let dr = DeadReckoning::from_records(&stream(), &DMatrix::identity(6, 6)).unwrap();
        assert_eq!(dr.pose_at(0.0).unwrap(), Pose3::identity());
        let p = dr.pose_at(2.5).unwrap();
        assert!((p.translation - Vector3::new(2.5, 0.0, 0.0)).norm() < 1e-12);
        assert!(dr.pose_at(3.5).is_err());
    }

    #[test]
    fn covariance_scales_with_covered_intervals() {
        let dr = DeadReckoning::from_records(&stream(), &DMatrix::identity(6, 6)).unwrap();
        let c = dr.covariance_between(0.5, 2.0).unwrap();
        assert!((c[(0, 0)] - 1.5).abs() < 1e-12);
        let c = dr.covariance_between(1.25, 1.75).unwrap();
        assert!((c[(0, 0)] - 0.5).abs() < 1e-12);
    }
}
