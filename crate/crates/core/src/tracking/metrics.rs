use std::collections::BTreeMap;

use nalgebra::Vector3;

use crate::manifold::Pose3;

use super::{KeyframeType, MeasurementKind, MeasurementRecord, TrackingError, TrajectoryEstimate};

/// Truth samples further than this from a keyframe are not used for it.
pub const TRUTH_ALIGNMENT_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct TruthSample {
    pub timestamp: f64,
    pub chaser: Pose3,
    pub target: Pose3,
}

impl TruthSample {
    pub fn relative(&self) -> Pose3 {
        self.chaser.between(&self.target)
    }
}

/// Nearest truth sample to `t`, if within [`TRUTH_ALIGNMENT_TOLERANCE`].
/// `truth` must be sorted by time.
pub fn align_truth(truth: &[TruthSample], t: f64) -> Option<&TruthSample> {
    let i = truth.partition_point(|s| s.timestamp < t);
    [i.checked_sub(1), Some(i)]
        .into_iter()
        .flatten()
        .filter_map(|j| truth.get(j))
        .min_by(|a, b| (a.timestamp - t).abs().total_cmp(&(b.timestamp - t).abs()))
        .filter(|s| (s.timestamp - t).abs() <= TRUTH_ALIGNMENT_TOLERANCE)
}

fn aligned(truth: &[TruthSample], t: f64) -> Result<&TruthSample, TrackingError> {
    align_truth(truth, t).ok_or(TrackingError::TruthAlignment {
        timestamp: t,
        tolerance: TRUTH_ALIGNMENT_TOLERANCE,
    })
}

/// Summary of a set of errors. `std` is the population standard deviation.
/// An empty set has `count == 0` and NaN statistics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub count: usize,
    pub mean: f64,
    pub std: f64,
    pub max: f64,
}

impl ErrorStats {
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                count: 0,
                mean: f64::NAN,
                std: f64::NAN,
                max: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            count: values.len(),
            mean,
            std: var.sqrt(),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KeyframeError {
    pub timestamp: f64,
    pub kind: KeyframeType,
    /// Relative-position error in the chaser frame, metres.
    pub position_error: f64,
    /// Relative-orientation error, radians, for SE(3) targets.
    pub angle_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<KeyframeError>,
    pub by_type: BTreeMap<KeyframeType, ErrorStats>,
    pub all: ErrorStats,
}

impl ErrorReport {
    pub fn stats(&self, kind: KeyframeType) -> ErrorStats {
        self.by_type
            .get(&kind)
            .copied()
            .unwrap_or_else(|| ErrorStats::from_values(&[]))
    }
}

/// Relative-position errors of an estimate against ground truth, grouped by
/// keyframe type.
pub fn metrics(
    estimate: &TrajectoryEstimate,
    truth: &[TruthSample],
) -> Result<ErrorReport, TrackingError> {
    let mut rows = Vec::with_capacity(estimate.len());
    for kf in &estimate.keyframes {
        let rel = aligned(truth, kf.timestamp)?.relative();
        rows.push(KeyframeError {
            timestamp: kf.timestamp,
            kind: kf.kind,
            position_error: (kf.relative_position - rel.translation).norm(),
            angle_error: kf
                .relative_rotation
                .as_ref()
                .map(|r| r.angle_to(&rel.rotation)),
        });
    }
    let mut grouped: BTreeMap<KeyframeType, Vec<f64>> = BTreeMap::new();
    for r in &rows {
        grouped.entry(r.kind).or_default().push(r.position_error);
    }
    let all: Vec<f64> = rows.iter().map(|r| r.position_error).collect();
    Ok(ErrorReport {
        by_type: grouped
            .into_iter()
            .map(|(k, v)| (k, ErrorStats::from_values(&v)))
            .collect(),
        all: ErrorStats::from_values(&all),
        rows,
    })
}

/// Errors of the raw measurements themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Baselines {
    pub usbl: ErrorStats,
    pub optical: ErrorStats,
}

pub fn baselines(
    records: &[MeasurementRecord],
    truth: &[TruthSample],
) -> Result<Baselines, TrackingError> {
    let mut usbl = Vec::new();
    let mut optical = Vec::new();
    for r in records.iter().filter(|r| r.is_relative()) {
        let rel = aligned(truth, r.timestamp)?.relative();
        let err = (r.position() - rel.translation).norm();
        match r.kind {
            MeasurementKind::Usbl => usbl.push(err),
            _ => optical.push(err),
        }
    }
    Ok(Baselines {
        usbl: ErrorStats::from_values(&usbl),
        optical: ErrorStats::from_values(&optical),
    })
}

/// Position error of a point against a truth sample, in the chaser frame.
pub fn relative_position_error(truth: &TruthSample, relative_position: &Vector3<f64>) -> f64 {
    (relative_position - truth.relative().translation).norm()
}
