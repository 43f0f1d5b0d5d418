use nalgebra::{DMatrix, DVector};

use crate::factors::{
    boundary_factors, ct_factor_from_keys, default_base_covariance, prior_factor,
    relative_pose_factor, roll_pitch_factor, usbl_factor, MeasurementNoise, RollPitchSpec,
    BOUNDARY_VARIANCE,
};
use crate::fgraph::{check_solvable, FactorGraph, GraphError, Values, VariableKey};
use crate::manifold::{Element, ManifoldKind, Pose3};

use super::{
    schedule_keyframes, DeadReckoning, Keyframe, KeyframeType, MeasurementKind, MeasurementRecord,
    ModePolicy, TrackingError, Transition,
};

#[derive(Debug, Clone)]
pub struct TrackingConfig {
    pub gate: f64,
    pub policy: ModePolicy,
    pub noise: MeasurementNoise,
    pub ct_se3: DMatrix<f64>,
    pub ct_r3: DMatrix<f64>,
    /// Constant-twist priors between target states. Off only for ablations.
    pub use_constant_twist: bool,
    pub roll_pitch: Option<RollPitchSpec>,
    pub chaser_prior: DMatrix<f64>,
    /// Standard deviations `(σ_t, σ_r)` of the weak prior that pins the
    /// first target state when the graph is otherwise rank deficient.
    pub gauge_prior_sigmas: (f64, f64),
    /// Pin gauge freedoms found by the rank check with weak priors.
    pub auto_gauge: bool,
    pub boundary_variance: f64,
}

impl Default for TrackingConfig {
    fn default() -> Self {
        Self {
            gate: 1.0,
            policy: ModePolicy::mode_a(),
            noise: MeasurementNoise::default(),
            ct_se3: default_base_covariance(ManifoldKind::Se3),
            ct_r3: default_base_covariance(ManifoldKind::R3),
            use_constant_twist: true,
            roll_pitch: Some(RollPitchSpec::default()),
            chaser_prior: DMatrix::from_diagonal(&DVector::from_vec(vec![
                1e-4, 1e-4, 1e-4, 1e-6, 1e-6, 1e-6,
            ])),
            gauge_prior_sigmas: (10.0, 1.0),
            auto_gauge: true,
            boundary_variance: BOUNDARY_VARIANCE,
        }
    }
}

impl TrackingConfig {
    fn ct_base(&self, kind: ManifoldKind) -> &DMatrix<f64> {
        match kind {
            ManifoldKind::Se3 => &self.ct_se3,
            _ => &self.ct_r3,
        }
    }
}

/// A built tracking graph together with its keyframe bookkeeping.
#[derive(Debug, Clone)]
pub struct TrackingProblem {
    pub keyframes: Vec<Keyframe>,
    pub transitions: Vec<Transition>,
    pub graph: FactorGraph,
    pub initial: Values,
    /// Target states that received a weak prior to remove a gauge freedom.
    pub gauge_priors: Vec<VariableKey>,
}

impl TrackingProblem {
    /// Target chains of constant representation, in time order.
    pub fn target_chains(&self) -> Vec<Vec<VariableKey>> {
        target_chains(&self.keyframes)
    }
}

fn target_chains(keyframes: &[Keyframe]) -> Vec<Vec<VariableKey>> {
    let mut chains = Vec::new();
    let mut current: Vec<VariableKey> = Vec::new();
    for (k, kf) in keyframes.iter().enumerate() {
        if k > 0 {
            let prev = &keyframes[k - 1];
            match (prev.target.kind, kf.target.kind) {
                (ManifoldKind::Rn(_), ManifoldKind::Se3) => {
                    current.push(kf.twin.expect("up boundary has a twin"));
                    chains.push(std::mem::take(&mut current));
                }
                (ManifoldKind::Se3, ManifoldKind::Rn(_)) => {
                    chains.push(std::mem::take(&mut current));
                    current.push(prev.twin.expect("down boundary has a twin"));
                }
                _ => {}
            }
        }
        current.push(kf.target);
    }
    if !current.is_empty() {
        chains.push(current);
    }
    chains
}

fn measurement_cov(record: &MeasurementRecord, default: &DMatrix<f64>) -> DMatrix<f64> {
    record.covariance.clone().unwrap_or_else(|| default.clone())
}

/// Builds the smoothing graph for a measurement stream and initializes it
/// from odometry and the raw relative measurements.
pub fn build_graph(
    records: &[MeasurementRecord],
    config: &TrackingConfig,
) -> Result<TrackingProblem, TrackingError> {
    for (i, r) in records.iter().enumerate() {
        r.validate(i)?;
    }
    let mut keyframes = schedule_keyframes(records, config.gate)?;
    if keyframes.is_empty() {
        return Err(TrackingError::NeedsPrior(
            "the stream holds no USBL or optical measurement".into(),
        ));
    }
    let transitions = config.policy.apply(&mut keyframes)?;
    let odometry = DeadReckoning::from_records(records, &config.noise.odom)?;

    let mut graph = FactorGraph::new();
    for kf in &keyframes {
        graph.add_variable(kf.chaser)?;
        graph.add_variable(kf.target)?;
        if let Some(twin) = kf.twin {
            graph.add_variable(twin)?;
        }
    }

    let first = &keyframes[0];
    graph.add_factor(prior_factor(
        first.chaser,
        odometry.pose_at(first.timestamp)?.into(),
        config.chaser_prior.clone(),
    )?)?;

    for pair in keyframes.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let motion = odometry
            .pose_at(a.timestamp)?
            .between(&odometry.pose_at(b.timestamp)?);
        let cov = odometry.covariance_between(a.timestamp, b.timestamp)?;
        graph.add_factor(relative_pose_factor(a.chaser, b.chaser, motion, cov)?)?;
    }

    for kf in &keyframes {
        for &i in &kf.measurements {
            let r = &records[i];
            match r.kind {
                MeasurementKind::Usbl => graph.add_factor(usbl_factor(
                    kf.chaser,
                    kf.target,
                    r.position(),
                    measurement_cov(r, &config.noise.usbl),
                )?)?,
                MeasurementKind::Optical => graph.add_factor(relative_pose_factor(
                    kf.chaser,
                    kf.target,
                    *r.pose().expect("validated optical payload"),
                    measurement_cov(r, &config.noise.optical),
                )?)?,
                MeasurementKind::Odom => {}
            }
        }
        if let Some(spec) = &config.roll_pitch {
            if kf.target.kind == ManifoldKind::Se3 {
                graph.add_factor(roll_pitch_factor(kf.target, spec)?)?;
            }
        }
    }

    if config.use_constant_twist {
        for chain in target_chains(&keyframes) {
            for w in chain.windows(3) {
                let base = config.ct_base(w[0].kind);
                graph.add_factor(ct_factor_from_keys([w[0], w[1], w[2]], base)?)?;
            }
        }
    }

    let boundary_cov = DMatrix::identity(3, 3) * config.boundary_variance;
    for tr in &transitions {
        let at = match tr.direction {
            crate::factors::BoundaryDirection::Up => &keyframes[tr.keyframe],
            crate::factors::BoundaryDirection::Down => &keyframes[tr.keyframe - 1],
        };
        let twin = at.twin.expect("boundary keyframe has a twin");
        let exists = graph
            .factors()
            .iter()
            .any(|f| f.name() == "boundary" && f.keys()[1] == twin);
        if !exists {
            for f in boundary_factors(at.target, twin, tr.direction, boundary_cov.clone())? {
                graph.add_factor(f)?;
            }
        }
    }

    let initial = initialize_values(records, &keyframes, &odometry)?;
    let mut problem = TrackingProblem {
        keyframes,
        transitions,
        graph,
        initial,
        gauge_priors: Vec::new(),
    };
    if config.auto_gauge {
        fix_gauges(&mut problem, config)?;
    }
    Ok(problem)
}

/// Adds weak priors to the target states named by the rank check until the
/// graph is solvable. Stops when only chaser states remain deficient; the
/// error then surfaces at solve time.
fn fix_gauges(problem: &mut TrackingProblem, config: &TrackingConfig) -> Result<(), TrackingError> {
    loop {
        let named = match check_solvable(&problem.graph, &problem.initial) {
            Err(GraphError::Underconstrained { variables }) => variables,
            _ => return Ok(()),
        };
        let fresh: Vec<VariableKey> = problem
            .keyframes
            .iter()
            .flat_map(|kf| std::iter::once(kf.target).chain(kf.twin))
            .filter(|k| named.contains(&k.to_string()) && !problem.gauge_priors.contains(k))
            .collect();
        if fresh.is_empty() {
            return Ok(());
        }
        for key in fresh {
            add_gauge_prior(problem, config, key)?;
        }
    }
}

fn add_gauge_prior(
    problem: &mut TrackingProblem,
    config: &TrackingConfig,
    key: VariableKey,
) -> Result<(), TrackingError> {
    let mean = problem.initial.get(&key)?.clone();
    let (st, sr) = config.gauge_prior_sigmas;
    let sigmas: Vec<f64> = match key.kind {
        ManifoldKind::Se3 => vec![st, st, st, sr, sr, sr],
        _ => vec![st; key.dim()],
    };
    let cov = DMatrix::from_diagonal(&DVector::from_vec(sigmas.iter().map(|s| s * s).collect()));
    problem.graph.add_factor(prior_factor(key, mean, cov)?)?;
    problem.gauge_priors.push(key);
    Ok(())
}

fn extrapolate_pose(
    prev: &Pose3,
    curr: &Pose3,
    dt1: f64,
    dt2: f64,
) -> Result<Pose3, TrackingError> {
    let a: Element = (*prev).into();
    let b: Element = (*curr).into();
    let step = b.ominus(&a)? * (dt2 / dt1);
    Ok(*b.oplus(&step)?.as_pose().expect("SE(3)"))
}

fn interpolate_pose(from: &Pose3, to: &Pose3, s: f64) -> Result<Pose3, TrackingError> {
    let a: Element = (*from).into();
    let step = Element::from(*to).ominus(&a)? * s;
    Ok(*a.oplus(&step)?.as_pose().expect("SE(3)"))
}

/// Initial values: chaser poses from dead reckoning and targets from the raw
/// relative measurements. USBL-only targets keep the orientation of the
/// previous measured target, or the chaser orientation before any is known.
/// Time-gated targets are interpolated along the geodesic between the
/// neighbouring measured targets, or extrapolated at constant twist after
/// the last one.
pub fn initialize_values(
    records: &[MeasurementRecord],
    keyframes: &[Keyframe],
    odometry: &DeadReckoning,
) -> Result<Values, TrackingError> {
    let chasers: Vec<Pose3> = keyframes
        .iter()
        .map(|kf| odometry.pose_at(kf.timestamp))
        .collect::<Result<_, _>>()?;
    let mut anchors: Vec<Option<Pose3>> = Vec::with_capacity(keyframes.len());
    let mut last_rotation = None;
    for (kf, chaser) in keyframes.iter().zip(&chasers) {
        let find = |kind| {
            kf.measurements
                .iter()
                .map(|&i| &records[i])
                .find(|r| r.kind == kind)
        };
        let anchor = match (
            kf.kind,
            find(MeasurementKind::Optical),
            find(MeasurementKind::Usbl),
        ) {
            (KeyframeType::Optical, Some(r), _) => {
                Some(chaser.compose(r.pose().expect("pose payload")))
            }
            (_, _, Some(r)) => Some(Pose3::new(
                last_rotation.unwrap_or(chaser.rotation),
                chaser.transform_point(&r.position()),
            )),
            _ => None,
        };
        if let Some(a) = &anchor {
            last_rotation = Some(a.rotation);
        }
        anchors.push(anchor);
    }

    let mut targets: Vec<Pose3> = Vec::with_capacity(keyframes.len());
    for (i, kf) in keyframes.iter().enumerate() {
        let target = match anchors[i] {
            Some(a) => a,
            None => {
                let next = (i + 1..keyframes.len()).find_map(|j| anchors[j].map(|a| (j, a)));
                match (targets.last(), next) {
                    (Some(prev), Some((j, a))) => {
                        let t0 = keyframes[i - 1].timestamp;
                        let s = (kf.timestamp - t0) / (keyframes[j].timestamp - t0);
                        interpolate_pose(prev, &a, s)?
                    }
                    (Some(p1), None) if i >= 2 => extrapolate_pose(
                        &targets[i - 2],
                        p1,
                        keyframes[i - 1].timestamp - keyframes[i - 2].timestamp,
                        kf.timestamp - keyframes[i - 1].timestamp,
                    )?,
                    (Some(p1), None) => *p1,
                    (None, Some((_, a))) => a,
                    (None, None) => {
                        return Err(TrackingError::NeedsPrior(format!(
                            "keyframe at t = {:.3}s has no target measurement to start from",
                            kf.timestamp
                        )))
                    }
                }
            }
        };
        targets.push(target);
    }

    let mut values = Values::new();
    for ((kf, chaser), target) in keyframes.iter().zip(chasers).zip(targets) {
        values.insert(&kf.chaser, chaser.into())?;
        let element: Element = match kf.target.kind {
            ManifoldKind::Se3 => target.into(),
            _ => target.translation.into(),
        };
        values.insert(&kf.target, element)?;
        if let Some(twin) = kf.twin {
            values.insert(&twin, target.translation.into())?;
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factors::BoundaryDirection;
    use crate::tracking::Mode;
    use nalgebra::Vector3;

    fn stream(optical_at: &[f64], usbl_at: &[f64], until: f64) -> Vec<MeasurementRecord> {
        let mut out = Vec::new();
        let step = Pose3::from_translation(Vector3::new(0.1, 0.0, 0.0));
        let mut t = 0.0;
        while t <= until + 1e-9 {
            out.push(MeasurementRecord::odom(
                t,
                if t == 0.0 { Pose3::identity() } else { step },
            ));
            t += 0.5;
        }
        for &t in usbl_at {
            out.push(MeasurementRecord::usbl(t, Vector3::new(5.0, 0.0, 0.0)));
        }
        for &t in optical_at {
            out.push(MeasurementRecord::optical(
                t,
                Pose3::from_translation(Vector3::new(5.0, 0.0, 0.0)),
            ));
        }
        out.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        out
    }

    #[test]
    fn mode_a_usbl_only_graph() {
        let records = stream(&[], &[0.0, 1.0, 2.0], 2.0);
        let p = build_graph(&records, &TrackingConfig::default()).unwrap();
        assert_eq!(p.keyframes.len(), 3);
        let g = &p.graph;
        assert_eq!(g.count_factors("constant_twist"), 1);
        assert_eq!(g.count_factors("roll_pitch"), 3);
        assert_eq!(g.count_factors("usbl"), 3);
        assert_eq!(g.count_factors("relative_pose"), 2);
        assert_eq!(p.gauge_priors.len(), 1);
        assert_eq!(g.count_factors("prior"), 2);
    }

    #[test]
    fn mode_b_burst_has_two_boundaries() {
        let records = stream(&[3.0, 3.5, 4.0], &[0.0, 1.0, 2.0, 5.0, 6.0, 7.0], 7.0);
        let config = TrackingConfig {
            policy: ModePolicy::mode_b(),
            ..TrackingConfig::default()
        };
        let p = build_graph(&records, &config).unwrap();
        assert_eq!(p.transitions.len(), 2);
        assert_eq!(p.transitions[0].direction, BoundaryDirection::Up);
        assert_eq!(p.graph.count_factors("boundary"), 2);
        assert_eq!(p.target_chains().len(), 3);
        assert_eq!(config.policy.mode, Mode::B);
    }

    #[test]
    fn empty_stream_needs_a_prior() {
        assert!(matches!(
            build_graph(&[], &TrackingConfig::default()),
            Err(TrackingError::NeedsPrior(_))
        ));
    }
}
