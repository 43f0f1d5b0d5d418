use nalgebra::{DVector, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::SimError;
use crate::manifold::{exp_se3, Element, Pose3, Rotation3};
use crate::tracking::{MeasurementRecord, TruthSample};

/// Constant body twist `[v; ω]` held for `duration` seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub twist: Vector6<f64>,
    pub duration: f64,
}

impl Segment {
    pub fn new(v: [f64; 3], w: [f64; 3], duration: f64) -> Self {
        Self {
            twist: Vector6::new(v[0], v[1], v[2], w[0], w[1], w[2]),
            duration,
        }
    }
}

/// One vehicle: a start pose and piecewise-constant twists. The last twist
/// is held beyond the end of its segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub start: Pose3,
    pub segments: Vec<Segment>,
}

impl Agent {
    /// Exact pose at time `t ≥ 0`.
    pub fn pose_at(&self, t: f64) -> Result<Pose3, SimError> {
        let mut pose = self.start;
        let mut elapsed = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            let last = i + 1 == self.segments.len();
            let span = if last {
                t - elapsed
            } else {
                seg.duration.min(t - elapsed)
            };
            if span <= 0.0 {
                break;
            }
            pose = pose.compose(&exp_se3(&(seg.twist * span))?);
            elapsed += span;
        }
        Ok(pose)
    }

    fn validate(&self, name: &str) -> Result<(), SimError> {
        if self.segments.is_empty() {
            return Err(SimError::InvalidConfig(format!("{name} has no segments")));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration > 0.0 && s.duration.is_finite()) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} segment {i}: duration must be positive, got {}",
                    s.duration
                )));
            }
            if s.twist.iter().any(|x| !x.is_finite()) {
                return Err(SimError::InvalidConfig(format!(
                    "{name} segment {i}: non-finite twist"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSigmas {
    pub usbl: f64,
    pub optical_t: f64,
    pub optical_r: f64,
    pub odom_t: f64,
    pub odom_r: f64,
}

impl NoiseSigmas {
    pub fn zero() -> Self {
        Self {
            usbl: 0.0,
            optical_t: 0.0,
            optical_r: 0.0,
            odom_t: 0.0,
            odom_r: 0.0,
        }
    }
}

impl Default for NoiseSigmas {
    fn default() -> Self {
        Self {
            usbl: 1.5,
            optical_t: 0.05,
            optical_r: 0.01,
            odom_t: 0.01,
            odom_r: 0.002,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration: f64,
    /// Spacing of the dense ground-truth samples.
    pub truth_dt: f64,
    pub chaser: Agent,
    pub target: Agent,
    pub odom_rate: f64,
    pub usbl_rate: f64,
    pub optical_rate: f64,
    /// Closed intervals with optical coverage.
    pub optical_windows: Vec<(f64, f64)>,
    /// Closed intervals without any target-relative measurement.
    pub gaps: Vec<(f64, f64)>,
    pub sigmas: NoiseSigmas,
    pub seed: u64,
}

fn inside(intervals: &[(f64, f64)], t: f64) -> bool {
    intervals.iter().any(|&(a, b)| t >= a && t <= b)
}

fn ticks(rate: f64, from: f64, until: f64) -> Vec<f64> {
    if rate <= 0.0 {
        return Vec::new();
    }
    (0..)
        .map(|k| from + k as f64 / rate)
        .take_while(|&t| t <= until + 1e-9)
        .collect()
}

impl ScenarioConfig {
    /// Rendezvous at desk scale: a USBL-only approach, two optical windows
    /// each preceded by a measurement-free gap, then USBL again.
    pub fn rendezvous(seed: u64) -> Self {
        Self {
            duration: 300.0,
            truth_dt: 0.05,
            chaser: Agent {
                start: Pose3::identity(),
                segments: vec![
                    Segment::new([1.2, 0.0, 0.0], [0.0, 0.0, 0.0], 60.0),
                    Segment::new([1.1, 0.0, 0.0], [0.0, 0.0, 0.02], 80.0),
                    Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, -0.03], 80.0),
                    Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, 0.01], 80.0),
                ],
            },
            target: Agent {
                start: Pose3::new(Rotation3::identity(), Vector3::new(30.0, 8.0, 10.0)),
                segments: vec![
                    Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, 0.0], 60.0),
                    Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, 0.02], 80.0),
                    Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, -0.03], 80.0),
                    Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, 0.01], 80.0),
                ],
            },
            odom_rate: 10.0,
            usbl_rate: 0.5,
            optical_rate: 2.0,
            optical_windows: vec![(125.0, 165.0), (190.0, 230.0)],
            gaps: vec![(100.5, 124.5), (165.5, 189.5)],
            sigmas: NoiseSigmas::default(),
            seed,
        }
    }

    /// A target moving at one exact constant twist whose positions also
    /// follow a straight line: it climbs along its own yaw axis while
    /// turning. Measurements are noiseless.
    pub fn noiseless_screw() -> Self {
        Self {
            duration: 60.0,
            truth_dt: 0.05,
            chaser: Agent {
                start: Pose3::identity(),
                segments: vec![
                    Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, 0.05], 30.0),
                    Segment::new([0.8, 0.1, 0.0], [0.0, 0.0, -0.02], 30.0),
                ],
            },
            target: Agent {
                start: Pose3::new(Rotation3::rot_z(0.3), Vector3::new(10.0, -4.0, 5.0)),
                segments: vec![Segment::new([0.0, 0.0, 0.3], [0.0, 0.0, 0.04], 60.0)],
            },
            odom_rate: 10.0,
            usbl_rate: 0.5,
            optical_rate: 2.0,
            optical_windows: vec![(20.0, 30.0)],
            gaps: vec![(10.5, 19.5), (30.5, 39.5)],
            sigmas: NoiseSigmas::zero(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return bad(format!("duration must be positive, got {}", self.duration));
        }
        if !(self.truth_dt > 0.0 && self.truth_dt.is_finite()) {
            return bad(format!("truth_dt must be positive, got {}", self.truth_dt));
        }
        for (name, r) in [
            ("odom_rate", self.odom_rate),
            ("usbl_rate", self.usbl_rate),
            ("optical_rate", self.optical_rate),
        ] {
            if !(r >= 0.0 && r.is_finite()) {
                return bad(format!("{name} must be non-negative, got {r}"));
            }
        }
        let s = &self.sigmas;
        for (name, v) in [
            ("usbl sigma", s.usbl),
            ("optical_t sigma", s.optical_t),
            ("optical_r sigma", s.optical_r),
            ("odom_t sigma", s.odom_t),
            ("odom_r sigma", s.odom_r),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return bad(format!("{name} must be non-negative, got {v}"));
            }
        }
        for &(a, b) in self.optical_windows.iter().chain(&self.gaps) {
            if a.is_nan() || b.is_nan() || a > b {
                return bad(format!("interval [{a}, {b}] is empty"));
            }
        }
        self.chaser.validate("chaser")?;
        self.target.validate("target")
    }
}

/// Dense, time-ordered chaser and target poses.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub samples: Vec<TruthSample>,
}

/// Poses of `agent` at `0, dt, 2dt, …, duration`.
pub fn generate_trajectory(
    agent: &Agent,
    duration: f64,
    dt: f64,
) -> Result<Vec<(f64, Pose3)>, SimError> {
    ticks(1.0 / dt, 0.0, duration)
        .into_iter()
        .map(|t| Ok((t, agent.pose_at(t)?)))
        .collect()
}

pub fn generate_truth(config: &ScenarioConfig) -> Result<GroundTruth, SimError> {
    config.validate()?;
    let samples = ticks(1.0 / config.truth_dt, 0.0, config.duration)
        .into_iter()
        .map(|t| {
            Ok(TruthSample {
                timestamp: t,
                chaser: config.chaser.pose_at(t)?,
                target: config.target.pose_at(t)?,
            })
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    Ok(GroundTruth { samples })
}

struct Noise {
    rng: ChaCha8Rng,
}

impl Noise {
    fn gauss(&mut self, sigma: f64) -> f64 {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        z * sigma
    }

    fn vec3(&mut self, sigma: f64) -> Vector3<f64> {
        Vector3::new(self.gauss(sigma), self.gauss(sigma), self.gauss(sigma))
    }

    fn pose(&mut self, exact: Pose3, sigma_t: f64, sigma_r: f64) -> Result<Pose3, SimError> {
        let t = self.vec3(sigma_t);
        let r = self.vec3(sigma_r);
        if sigma_t == 0.0 && sigma_r == 0.0 {
            return Ok(exact);
        }
        let delta = DVector::from_vec(vec![t.x, t.y, t.z, r.x, r.y, r.z]);
        let e: Element = exact.into();
        Ok(*e.oplus(&delta)?.as_pose().expect("SE(3)"))
    }
}

/// Sensor records for the scenario, sorted by time. Odometry starts with
/// an identity record at `t = 0`; each later record is the noisy chaser
/// motion since the previous one. The same seed gives the same stream.
pub fn synthesize_measurements(
    config: &ScenarioConfig,
    seed: u64,
) -> Result<Vec<MeasurementRecord>, SimError> {
    config.validate()?;
    let mut noise = Noise {
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    let s = config.sigmas;
    let mut records = Vec::new();

    let odom_times = ticks(config.odom_rate, 0.0, config.duration);
    let mut prev: Option<Pose3> = None;
    for &t in &odom_times {
        let pose = config.chaser.pose_at(t)?;
        let motion = match &prev {
            None => Pose3::identity(),
            Some(p) => noise.pose(p.between(&pose), s.odom_t, s.odom_r)?,
        };
        records.push(MeasurementRecord::odom(t, motion));
        prev = Some(pose);
    }

    for t in ticks(config.usbl_rate, 0.0, config.duration) {
        if inside(&config.gaps, t) {
            continue;
        }
        let c = config.chaser.pose_at(t)?;
        let p = c.inverse_transform_point(&config.target.pose_at(t)?.translation);
        records.push(MeasurementRecord::usbl(t, p + noise.vec3(s.usbl)));
    }

    for &(a, b) in &config.optical_windows {
        for t in ticks(config.optical_rate, a, b.min(config.duration)) {
            if inside(&config.gaps, t) {
                continue;
            }
            let rel = config
                .chaser
                .pose_at(t)?
                .between(&config.target.pose_at(t)?);
            records.push(MeasurementRecord::optical(
                t,
                noise.pose(rel, s.optical_t, s.optical_r)?,
            ));
        }
    }

    records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracking::MeasurementKind;

    #[test]
    fn straight_line() {
        let agent = Agent {
            start: Pose3::identity(),
            segments: vec![Segment::new([1.0, 0.0, 0.0], [0.0; 3], 10.0)],
        };
        let traj = generate_trajectory(&agent, 10.0, 0.5).unwrap();
        assert_eq!(traj.len(), 21);
        assert!((traj[20].1.translation - Vector3::new(10.0, 0.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn unit_circle() {
        let agent = Agent {
            start: Pose3::identity(),
            segments: vec![Segment::new([1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 10.0)],
        };
        for (_, p) in generate_trajectory(&agent, 7.0, 0.1).unwrap() {
            let centre = Vector3::new(0.0, 1.0, 0.0);
            assert!(((p.translation - centre).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_measurements_are_exact() {
        let mut c = ScenarioConfig::rendezvous(1);
        c.sigmas = NoiseSigmas::zero();
        let recs = synthesize_measurements(&c, 1).unwrap();
        for r in recs
            .iter()
            .filter(|r| r.kind == MeasurementKind::Usbl)
            .take(20)
        {
            let exact = c
                .chaser
                .pose_at(r.timestamp)
                .unwrap()
                .inverse_transform_point(&c.target.pose_at(r.timestamp).unwrap().translation);
            assert!((r.position() - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn seeded_streams_repeat() {
        let c = ScenarioConfig::rendezvous(7);
        assert_eq!(
            synthesize_measurements(&c, 7).unwrap(),
            synthesize_measurements(&c, 7).unwrap()
        );
        assert_ne!(
            synthesize_measurements(&c, 7).unwrap(),
            synthesize_measurements(&c, 8).unwrap()
        );
    }

    #[test]
    fn gaps_are_silent() {
        let c = ScenarioConfig::rendezvous(3);
        let recs = synthesize_measurements(&c, 3).unwrap();
        assert!(recs
            .iter()
            .filter(|r| r.is_relative())
            .all(|r| !inside(&c.gaps, r.timestamp)));
    }
}
