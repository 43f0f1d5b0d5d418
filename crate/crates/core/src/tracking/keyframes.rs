use crate::factors::BoundaryDirection;
use crate::fgraph::VariableKey;
use crate::manifold::ManifoldKind;

use super::{MeasurementKind, MeasurementRecord, TrackingError};

/// Measurements closer than this in time share a keyframe.
const MERGE_TOLERANCE: f64 = 1e-9;

/// What created a keyframe. With several measurements at one instant the
/// most informative wins: optical, then USBL, then the time gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KeyframeType {
    Optical,
    Usbl,
    Gate,
}

impl KeyframeType {
    pub fn label(&self) -> &'static str {
        match self {
            KeyframeType::Optical => "OPTICAL",
            KeyframeType::Usbl => "USBL",
            KeyframeType::Gate => "GATE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "OPTICAL" => Some(KeyframeType::Optical),
            "USBL" => Some(KeyframeType::Usbl),
            "GATE" => Some(KeyframeType::Gate),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Keyframe {
    pub index: usize,
    pub timestamp: f64,
    pub kind: KeyframeType,
    /// Indices into the record stream of the relative measurements taken here.
    pub measurements: Vec<usize>,
    pub chaser: VariableKey,
    pub target: VariableKey,
    /// R³ copy of an SE(3) target at a representation boundary.
    pub twin: Option<VariableKey>,
}

impl Keyframe {
    fn new(index: usize, timestamp: f64, kind: KeyframeType, measurements: Vec<usize>) -> Self {
        let id = 3 * index as u64;
        Self {
            index,
            timestamp,
            kind,
            measurements,
            chaser: VariableKey::new(id, ManifoldKind::Se3, timestamp).tagged('c'),
            target: VariableKey::new(id + 1, ManifoldKind::Se3, timestamp).tagged('t'),
            twin: None,
        }
    }

    fn twin_key(&self) -> VariableKey {
        VariableKey::new(self.chaser.id + 2, ManifoldKind::R3, self.timestamp).tagged('p')
    }
}

fn push_gates(out: &mut Vec<Keyframe>, from: f64, gate: f64, open: impl Fn(f64) -> bool) {
    let mut k = 1.0;
    while open(from + k * gate) {
        let index = out.len();
        out.push(Keyframe::new(
            index,
            from + k * gate,
            KeyframeType::Gate,
            Vec::new(),
        ));
        k += 1.0;
    }
}

/// Creates keyframes at every target-relative measurement, plus time-gated
/// keyframes at `t_last + k·gate` whenever no measurement arrives for
/// `gate` seconds. Gating continues up to the last timestamp in the stream.
/// Targets are SE(3) until a [`ModePolicy`] says otherwise.
pub fn schedule_keyframes(
    records: &[MeasurementRecord],
    gate: f64,
) -> Result<Vec<Keyframe>, TrackingError> {
    if !(gate.is_finite() && gate > 0.0) {
        return Err(TrackingError::InvalidGate(gate));
    }
    if let Some(i) = (1..records.len()).find(|&i| records[i].timestamp < records[i - 1].timestamp) {
        return Err(TrackingError::Ordering {
            index: i,
            timestamp: records[i].timestamp,
        });
    }
    let relative: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].is_relative())
        .collect();
    let end = records
        .iter()
        .map(|r| r.timestamp)
        .fold(f64::NEG_INFINITY, f64::max);

    let mut groups: Vec<(f64, Vec<usize>)> = Vec::new();
    for i in relative {
        let t = records[i].timestamp;
        match groups.last_mut() {
            Some((t0, members)) if t - *t0 <= MERGE_TOLERANCE => members.push(i),
            _ => groups.push((t, vec![i])),
        }
    }

    let mut keyframes: Vec<Keyframe> = Vec::new();
    for (g, (t, members)) in groups.iter().enumerate() {
        if g > 0 {
            push_gates(&mut keyframes, groups[g - 1].0, gate, |x| {
                x < *t - MERGE_TOLERANCE
            });
        }
        let kind = if members
            .iter()
            .any(|&i| records[i].kind == MeasurementKind::Optical)
        {
            KeyframeType::Optical
        } else {
            KeyframeType::Usbl
        };
        let index = keyframes.len();
        keyframes.push(Keyframe::new(index, *t, kind, members.clone()));
    }
    if let Some((last, _)) = groups.last() {
        push_gates(&mut keyframes, *last, gate, |x| x <= end + MERGE_TOLERANCE);
    }
    Ok(keyframes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// SE(3) target everywhere.
    A,
    /// R³ target without optical data, SE(3) with it.
    B,
}

/// Representation change of the target at keyframe `keyframe`, the first
/// keyframe in the new representation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub keyframe: usize,
    pub direction: BoundaryDirection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModePolicy {
    pub mode: Mode,
    /// Mode B returns to R³ after this many consecutive keyframes without
    /// an optical measurement.
    pub down_after: usize,
}

impl ModePolicy {
    pub fn mode_a() -> Self {
        Self {
            mode: Mode::A,
            down_after: 1,
        }
    }

    pub fn mode_b() -> Self {
        Self {
            mode: Mode::B,
            down_after: 1,
        }
    }

    /// Sets the target representation of each keyframe and attaches R³
    /// twins at boundaries.
    ///
    /// Going up at keyframe `k`, the twin at `k` closes the R³ run. Going
    /// down at `k`, the twin at `k - 1` opens the next R³ run. Each twin is
    /// tied to the SE(3) state at the same instant.
    pub fn apply(&self, keyframes: &mut [Keyframe]) -> Result<Vec<Transition>, TrackingError> {
        if self.down_after == 0 {
            return Err(TrackingError::InvalidConfig(
                "down_after must be at least 1".into(),
            ));
        }
        let mut transitions = Vec::new();
        if self.mode == Mode::A {
            for kf in keyframes.iter_mut() {
                kf.target.kind = ManifoldKind::Se3;
                kf.twin = None;
            }
            return Ok(transitions);
        }
        let mut current: Option<ManifoldKind> = None;
        let mut quiet = 0usize;
        for k in 0..keyframes.len() {
            let optical = keyframes[k].kind == KeyframeType::Optical;
            let next = match current {
                _ if optical => {
                    quiet = 0;
                    ManifoldKind::Se3
                }
                Some(ManifoldKind::Se3) => {
                    quiet += 1;
                    if quiet >= self.down_after {
                        ManifoldKind::R3
                    } else {
                        ManifoldKind::Se3
                    }
                }
                _ => ManifoldKind::R3,
            };
            keyframes[k].target.kind = next;
            keyframes[k].twin = None;
            match (current, next) {
                (Some(ManifoldKind::Rn(_)), ManifoldKind::Se3) => {
                    keyframes[k].twin = Some(keyframes[k].twin_key());
                    transitions.push(Transition {
                        keyframe: k,
                        direction: BoundaryDirection::Up,
                    });
                }
                (Some(ManifoldKind::Se3), ManifoldKind::Rn(_)) => {
                    let prev = &mut keyframes[k - 1];
                    prev.twin = Some(prev.twin_key());
                    transitions.push(Transition {
                        keyframe: k,
                        direction: BoundaryDirection::Down,
                    });
                }
                _ => {}
            }
            current = Some(next);
        }
        Ok(transitions)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::Pose3;
    use nalgebra::Vector3;

    fn usbl(t: f64) -> MeasurementRecord {
        MeasurementRecord::usbl(t, Vector3::new(1.0, 0.0, 0.0))
    }

    fn optical(t: f64) -> MeasurementRecord {
        MeasurementRecord::optical(t, Pose3::identity())
    }

    fn times(kfs: &[Keyframe]) -> Vec<f64> {
        kfs.iter().map(|k| k.timestamp).collect()
    }

    #[test]
    fn gate_fills_silent_stretches() {
        let kfs = schedule_keyframes(&[usbl(0.0), usbl(3.5)], 1.0).unwrap();
        assert_eq!(times(&kfs), vec![0.0, 1.0, 2.0, 3.0, 3.5]);
        assert_eq!(kfs[1].kind, KeyframeType::Gate);
    }

    #[test]
    fn dense_measurements_need_no_gate() {
        let kfs = schedule_keyframes(&[usbl(0.0), usbl(0.4), usbl(0.9)], 1.0).unwrap();
        assert_eq!(kfs.len(), 3);
    }

    #[test]
    fn optical_wins_over_usbl_at_one_instant() {
        let kfs = schedule_keyframes(&[usbl(1.0), optical(1.0)], 1.0).unwrap();
        assert_eq!(kfs.len(), 1);
        assert_eq!(kfs[0].kind, KeyframeType::Optical);
        assert_eq!(kfs[0].measurements.len(), 2);
    }

    #[test]
    fn rejects_decreasing_timestamps() {
        assert!(matches!(
            schedule_keyframes(&[usbl(1.0), usbl(0.5)], 1.0),
            Err(TrackingError::Ordering { index: 1, .. })
        ));
    }

    #[test]
    fn rejects_bad_gate() {
        assert!(schedule_keyframes(&[usbl(0.0)], 0.0).is_err());
        assert!(schedule_keyframes(&[usbl(0.0)], f64::NAN).is_err());
    }

    #[test]
    fn mode_b_burst_gives_two_transitions() {
        let stream = vec![
            usbl(0.0),
            usbl(1.0),
            optical(2.0),
            optical(2.5),
            usbl(3.0),
            usbl(4.0),
        ];
        let mut kfs = schedule_keyframes(&stream, 1.0).unwrap();
        let tr = ModePolicy::mode_b().apply(&mut kfs).unwrap();
        assert_eq!(tr.len(), 2);
        assert_eq!(tr[0].direction, BoundaryDirection::Up);
        assert_eq!(tr[1].direction, BoundaryDirection::Down);
        let kinds: Vec<_> = kfs.iter().map(|k| k.target.kind).collect();
        assert_eq!(
            kinds,
            vec![
                ManifoldKind::R3,
                ManifoldKind::R3,
                ManifoldKind::Se3,
                ManifoldKind::Se3,
                ManifoldKind::R3,
                ManifoldKind::R3
            ]
        );
        assert!(kfs[2].twin.is_some());
        assert!(kfs[3].twin.is_some());
    }

    #[test]
    fn hysteresis_delays_the_way_down() {
        let stream = vec![optical(0.0), usbl(1.0), usbl(2.0), usbl(3.0)];
        let mut kfs = schedule_keyframes(&stream, 1.0).unwrap();
        let policy = ModePolicy {
            mode: Mode::B,
            down_after: 2,
        };
        let tr = policy.apply(&mut kfs).unwrap();
        assert_eq!(
            tr,
            vec![Transition {
                keyframe: 2,
                direction: BoundaryDirection::Down
            }]
        );
        assert_eq!(kfs[1].target.kind, ManifoldKind::Se3);
    }
}
