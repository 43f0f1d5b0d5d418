//! Flat `key = value` run configuration.
//!
//! `#` starts a comment. Unknown keys are rejected. The `scenario` preset
//! is applied before every other key regardless of its position, and
//! command-line overrides are applied last.

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::factors::{MeasurementNoise, RollPitchSpec, BOUNDARY_VARIANCE};
use crate::fgraph::SolverSettings;
use crate::manifold::{Pose3, Rotation3};
use crate::simkit::{NoiseSigmas, ScenarioConfig, Segment, UnitCircleVariant};
use crate::tracking::{Mode, ModePolicy, TrackingConfig};

use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub gate: f64,
    pub down_after: usize,
    pub seed: u64,
    pub scenario: ScenarioConfig,
    /// Simulate without measurement noise while keeping the model sigmas.
    pub noiseless: bool,
    /// Measurement model standard deviations.
    pub sigmas: NoiseSigmas,
    pub ct_sigma_t: f64,
    pub ct_sigma_r: f64,
    pub ct_sigma_r3: f64,
    pub roll_pitch_sigma: Option<f64>,
    pub chaser_prior_sigmas: (f64, f64),
    pub gauge_sigmas: (f64, f64),
    pub boundary_variance: f64,
    pub solver: SolverSettings,
    pub covariances: bool,
    pub measurements: Option<PathBuf>,
    pub truth: Option<PathBuf>,
    pub estimate: Option<PathBuf>,
    pub out: PathBuf,
    pub variant: UnitCircleVariant,
    pub unit_sigma: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::A,
            gate: 1.0,
            down_after: 1,
            seed: 1,
            scenario: ScenarioConfig::rendezvous(1),
            noiseless: false,
            sigmas: NoiseSigmas::default(),
            ct_sigma_t: 0.05,
            ct_sigma_r: 0.02,
            ct_sigma_r3: 0.05,
            roll_pitch_sigma: Some(0.05),
            chaser_prior_sigmas: (0.01, 0.001),
            gauge_sigmas: (10.0, 1.0),
            boundary_variance: BOUNDARY_VARIANCE,
            solver: SolverSettings::default(),
            covariances: false,
            measurements: None,
            truth: None,
            estimate: None,
            out: PathBuf::from("out"),
            variant: UnitCircleVariant::Chain,
            unit_sigma: 0.1,
        }
    }
}

fn diag(values: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_column_slice(values))
}

fn num(key: &str, value: &str) -> Result<f64, String> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| format!("{key}: expected a finite number, got '{value}'"))
}

fn non_negative(key: &str, value: &str) -> Result<f64, String> {
    let v = num(key, value)?;
    if v < 0.0 {
        return Err(format!("{key}: must be non-negative, got {v}"));
    }
    Ok(v)
}

fn positive(key: &str, value: &str) -> Result<f64, String> {
    let v = num(key, value)?;
    if v <= 0.0 {
        return Err(format!("{key}: must be positive, got {v}"));
    }
    Ok(v)
}

fn integer<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| format!("{key}: expected a non-negative integer, got '{value}'"))
}

fn boolean(key: &str, value: &str) -> Result<bool, String> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(format!("{key}: expected true or false, got '{value}'")),
    }
}

fn list(key: &str, value: &str, n: usize) -> Result<Vec<f64>, String> {
    let v: Vec<f64> = value
        .split(',')
        .map(|s| num(key, s))
        .collect::<Result<_, _>>()?;
    if v.len() != n {
        return Err(format!(
            "{key}: expected {n} comma-separated numbers, got {}",
            v.len()
        ));
    }
    Ok(v)
}

fn intervals(key: &str, value: &str) -> Result<Vec<(f64, f64)>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (a, b) = s
                .split_once(':')
                .ok_or_else(|| format!("{key}: interval '{s}' must look like start:end"))?;
            let (a, b) = (num(key, a)?, num(key, b)?);
            if a > b {
                return Err(format!("{key}: interval {a}:{b} ends before it starts"));
            }
            Ok((a, b))
        })
        .collect()
}

/// `x,y,z,roll,pitch,yaw`.
fn start_pose(key: &str, value: &str) -> Result<Pose3, String> {
    let v = list(key, value, 6)?;
    Ok(Pose3::new(
        Rotation3::from_rpy(v[3], v[4], v[5]),
        Vector3::new(v[0], v[1], v[2]),
    ))
}

/// `vx,vy,vz,wx,wy,wz,duration; …`.
fn segments(key: &str, value: &str) -> Result<Vec<Segment>, String> {
    let segs: Vec<Segment> = value
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let v = list(key, s, 7)?;
            if v[6] <= 0.0 {
                return Err(format!(
                    "{key}: segment duration must be positive, got {}",
                    v[6]
                ));
            }
            Ok(Segment::new([v[0], v[1], v[2]], [v[3], v[4], v[5]], v[6]))
        })
        .collect::<Result<_, String>>()?;
    if segs.is_empty() {
        return Err(format!("{key}: at least one segment is required"));
    }
    Ok(segs)
}

pub fn parse_mode(value: &str) -> Result<Mode, String> {
    match value.trim().to_ascii_uppercase().as_str() {
        "A" => Ok(Mode::A),
        "B" => Ok(Mode::B),
        other => Err(format!("mode: expected A or B, got '{other}'")),
    }
}

impl RunConfig {
    /// Parses configuration text; errors carry the 1-based line number.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| CliError::Config {
                line: Some(i + 1),
                message: format!("expected key = value, got '{line}'"),
            })?;
            entries.push((i + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let mut config = Self::default();
        entries.sort_by_key(|(_, k, _)| k != "scenario");
        for (line, k, v) in entries {
            config.set(&k, &v).map_err(|message| CliError::Config {
                line: Some(line),
                message,
            })?;
        }
        Ok(config)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.scenario;
        match key {
            "scenario" => {
                let seed = s.seed;
                *s = match value.trim() {
                    "rendezvous" => ScenarioConfig::rendezvous(seed),
                    "noiseless_screw" => {
                        self.noiseless = true;
                        ScenarioConfig::noiseless_screw()
                    }
                    other => {
                        return Err(format!(
                            "scenario: expected rendezvous or noiseless_screw, got '{other}'"
                        ))
                    }
                };
            }
            "mode" => self.mode = parse_mode(value)?,
            "gate" => self.gate = positive(key, value)?,
            "down_after" => {
                self.down_after = integer(key, value)?;
                if self.down_after == 0 {
                    return Err("down_after: must be at least 1".into());
                }
            }
            "seed" => {
                self.seed = integer(key, value)?;
                s.seed = self.seed;
            }
            "noiseless" => self.noiseless = boolean(key, value)?,
            "duration" => s.duration = positive(key, value)?,
            "truth_dt" => s.truth_dt = positive(key, value)?,
            "odom_rate" => s.odom_rate = non_negative(key, value)?,
            "usbl_rate" => s.usbl_rate = non_negative(key, value)?,
            "optical_rate" => s.optical_rate = non_negative(key, value)?,
            "optical_windows" => s.optical_windows = intervals(key, value)?,
            "gaps" => s.gaps = intervals(key, value)?,
            "chaser_start" => s.chaser.start = start_pose(key, value)?,
            "target_start" => s.target.start = start_pose(key, value)?,
            "chaser_segments" => s.chaser.segments = segments(key, value)?,
            "target_segments" => s.target.segments = segments(key, value)?,
            "sigma_usbl" => self.sigmas.usbl = positive(key, value)?,
            "sigma_optical_t" => self.sigmas.optical_t = positive(key, value)?,
            "sigma_optical_r" => self.sigmas.optical_r = positive(key, value)?,
            "sigma_odom_t" => self.sigmas.odom_t = positive(key, value)?,
            "sigma_odom_r" => self.sigmas.odom_r = positive(key, value)?,
            "ct_sigma_t" => self.ct_sigma_t = positive(key, value)?,
            "ct_sigma_r" => self.ct_sigma_r = positive(key, value)?,
            "ct_sigma_r3" => self.ct_sigma_r3 = positive(key, value)?,
            "roll_pitch_sigma" => {
                self.roll_pitch_sigma = match value.trim() {
                    "none" | "off" => None,
                    v => Some(positive(key, v)?),
                }
            }
            "chaser_prior_sigma_t" => self.chaser_prior_sigmas.0 = positive(key, value)?,
            "chaser_prior_sigma_r" => self.chaser_prior_sigmas.1 = positive(key, value)?,
            "gauge_sigma_t" => self.gauge_sigmas.0 = positive(key, value)?,
            "gauge_sigma_r" => self.gauge_sigmas.1 = positive(key, value)?,
            "boundary_variance" => self.boundary_variance = positive(key, value)?,
            "max_iterations" => self.solver.max_iterations = integer(key, value)?,
            "absolute_tolerance" => self.solver.absolute_tolerance = non_negative(key, value)?,
            "relative_tolerance" => self.solver.relative_tolerance = non_negative(key, value)?,
            "step_tolerance" => self.solver.step_tolerance = non_negative(key, value)?,
            "initial_lambda" => self.solver.initial_lambda = positive(key, value)?,
            "covariances" => self.covariances = boolean(key, value)?,
            "measurements" => self.measurements = Some(PathBuf::from(value.trim())),
            "truth" => self.truth = Some(PathBuf::from(value.trim())),
            "estimate" => self.estimate = Some(PathBuf::from(value.trim())),
            "out" => self.out = PathBuf::from(value.trim()),
            "variant" => {
                self.variant = UnitCircleVariant::parse(value).ok_or_else(|| {
                    format!("variant: expected EXTRAPOLATE, INTERPOLATE or CHAIN, got '{value}'")
                })?
            }
            "unit_sigma" => self.unit_sigma = non_negative(key, value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Scenario with the simulation noise applied.
    pub fn scenario(&self) -> ScenarioConfig {
        let mut s = self.scenario.clone();
        s.seed = self.seed;
        s.sigmas = if self.noiseless {
            NoiseSigmas::zero()
        } else {
            self.sigmas
        };
        s
    }

    pub fn tracking(&self) -> TrackingConfig {
        let s = &self.sigmas;
        let (ct, cr, c3) = (
            self.ct_sigma_t.powi(2),
            self.ct_sigma_r.powi(2),
            self.ct_sigma_r3.powi(2),
        );
        let (pt, pr) = (
            self.chaser_prior_sigmas.0.powi(2),
            self.chaser_prior_sigmas.1.powi(2),
        );
        TrackingConfig {
            gate: self.gate,
            policy: ModePolicy {
                mode: self.mode,
                down_after: self.down_after,
            },
            noise: MeasurementNoise::from_sigmas(
                s.usbl,
                s.optical_t,
                s.optical_r,
                s.odom_t,
                s.odom_r,
            ),
            ct_se3: diag(&[ct, ct, ct, cr, cr, cr]),
            ct_r3: diag(&[c3, c3, c3]),
            use_constant_twist: true,
            roll_pitch: self.roll_pitch_sigma.map(RollPitchSpec::from_sigma),
            chaser_prior: diag(&[pt, pt, pt, pr, pr, pr]),
            gauge_prior_sigmas: self.gauge_sigmas,
            auto_gauge: true,
            boundary_variance: self.boundary_variance,
        }
    }
}
