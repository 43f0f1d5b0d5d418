mod common;

use nalgebra::{DVector, Vector3};
use proptest::prelude::*;

use ctwist::fgraph::SolverSettings;
use ctwist::manifold::{Element, ManifoldKind, Pose3};
use ctwist::simkit::{generate_truth, series_exp_se3, synthesize_measurements, ScenarioConfig};
use ctwist::tracking::{
    align_truth, baselines, build_graph, extrapolate, metrics, schedule_keyframes, smooth,
    KeyframeType, MeasurementRecord, ModePolicy, TrackingConfig, TrackingError,
};

use common::{random_pose, rng, se3_tangent};

fn config(policy: ModePolicy) -> TrackingConfig {
    TrackingConfig {
        policy,
        ..TrackingConfig::default()
    }
}

fn short_scenario(seed: u64) -> ScenarioConfig {
    let mut s = ScenarioConfig::rendezvous(seed);
    s.duration = 120.0;
    s.gaps = vec![(40.5, 59.5)];
    s.optical_windows = vec![(60.0, 80.0)];
    s
}

#[test]
fn noiseless_screw_is_recovered_in_both_modes() {
    let scenario = ScenarioConfig::noiseless_screw();
    let truth = generate_truth(&scenario).unwrap();
    let records = synthesize_measurements(&scenario, 0).unwrap();
    for policy in [ModePolicy::mode_a(), ModePolicy::mode_b()] {
        let problem = build_graph(&records, &config(policy)).unwrap();
        let (estimate, _, report) = smooth(&problem, &SolverSettings::default(), false).unwrap();
        assert!(report.converged);
        let err = metrics(&estimate, &truth.samples).unwrap();
        assert!(err.all.max < 1e-6, "{:?}: {}", policy.mode, err.all.max);
        for row in &err.rows {
            if let Some(a) = row.angle_error {
                assert!(a < 1e-6);
            }
        }
    }
}

#[test]
fn both_modes_converge_and_beat_raw_usbl() {
    let scenario = short_scenario(2);
    let truth = generate_truth(&scenario).unwrap();
    let records = synthesize_measurements(&scenario, 2).unwrap();
    let raw = baselines(&records, &truth.samples).unwrap();
    for policy in [ModePolicy::mode_a(), ModePolicy::mode_b()] {
        let problem = build_graph(&records, &config(policy)).unwrap();
        let (estimate, _, report) = smooth(&problem, &SolverSettings::default(), false).unwrap();
        assert!(report.converged);
        assert!(report.final_cost <= report.initial_cost);
        let m = metrics(&estimate, &truth.samples).unwrap();
        assert!(m.stats(KeyframeType::Usbl).mean < raw.usbl.mean);
        assert_eq!(m.all.count, problem.keyframes.len());
    }
}

#[test]
fn mode_b_has_orientation_only_with_optical_data() {
    let scenario = short_scenario(3);
    let records = synthesize_measurements(&scenario, 3).unwrap();
    let problem = build_graph(&records, &config(ModePolicy::mode_b())).unwrap();
    let (estimate, _, _) = smooth(&problem, &SolverSettings::default(), false).unwrap();
    let (w0, w1) = scenario.optical_windows[0];
    for kf in &estimate.keyframes {
        let optical = kf.kind == KeyframeType::Optical;
        assert_eq!(
            kf.relative_rotation.is_some(),
            optical,
            "t = {}",
            kf.timestamp
        );
        assert_eq!(kf.target.kind() == ManifoldKind::Se3, optical);
        if optical {
            assert!(kf.timestamp >= w0 && kf.timestamp <= w1);
        }
    }
    assert_eq!(problem.transitions.len(), 2);
    assert_eq!(problem.graph.count_factors("boundary"), 2);
}

#[test]
fn initial_gate_states_satisfy_the_motion_prior() {
    let scenario = short_scenario(4);
    let records: Vec<MeasurementRecord> = synthesize_measurements(&scenario, 4)
        .unwrap()
        .into_iter()
        .filter(|r| r.timestamp <= 50.0)
        .collect();
    let problem = build_graph(&records, &config(ModePolicy::mode_a())).unwrap();
    let kind_of = |id: u64| {
        problem
            .keyframes
            .iter()
            .find(|k| k.target.id == id)
            .map(|k| k.kind)
    };
    let mut checked = 0;
    for f in problem
        .graph
        .factors()
        .iter()
        .filter(|f| f.name() == "constant_twist")
    {
        if kind_of(f.keys()[1].id) == Some(KeyframeType::Gate) {
            let r = f.residual(&problem.initial).unwrap();
            assert!(r.amax() < 1e-9, "{:?}: {}", f.keys(), r.amax());
            checked += 1;
        }
    }
    // Interpolated gates inside the gap and extrapolated ones at the end.
    assert!(checked > 15, "only {checked} gate triples");
}

#[test]
fn target_uncertainty_grows_inside_a_gap() {
    let scenario = short_scenario(5);
    let records = synthesize_measurements(&scenario, 5).unwrap();
    let problem = build_graph(&records, &config(ModePolicy::mode_a())).unwrap();
    let (estimate, _, _) = smooth(&problem, &SolverSettings::default(), true).unwrap();
    let trace = |t: f64| {
        let kf = estimate
            .keyframes
            .iter()
            .min_by(|a, b| (a.timestamp - t).abs().total_cmp(&(b.timestamp - t).abs()))
            .unwrap();
        let c = kf.target_covariance.as_ref().unwrap();
        c[(0, 0)] + c[(1, 1)] + c[(2, 2)]
    };
    let (g0, g1) = scenario.gaps[0];
    let middle = trace(0.5 * (g0 + g1));
    assert!(middle > trace(g0 - 5.0));
    for kf in &estimate.keyframes {
        let c = kf.target_covariance.as_ref().unwrap();
        assert!((c - c.transpose()).amax() < 1e-9 * c.amax());
        assert!(c.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    }
}

#[test]
fn malformed_streams_are_rejected() {
    let odom = |t| MeasurementRecord::odom(t, Pose3::identity());
    let usbl = |t| MeasurementRecord::usbl(t, Vector3::new(5.0, 0.0, 0.0));
    let cfg = TrackingConfig::default();
    assert!(matches!(
        build_graph(&[odom(0.0), odom(1.0), usbl(0.5)], &cfg),
        Err(TrackingError::Ordering { index: 2, .. })
    ));
    assert!(matches!(
        build_graph(&[odom(0.0), odom(1.0)], &cfg),
        Err(TrackingError::NeedsPrior(_))
    ));
    assert!(matches!(
        schedule_keyframes(&[usbl(0.0)], 0.0),
        Err(TrackingError::InvalidGate(_))
    ));
    assert!(matches!(
        build_graph(&[usbl(0.0), usbl(1.0)], &cfg),
        Err(TrackingError::OdometryCoverage { .. })
    ));
    let bad = MeasurementRecord::usbl(0.0, Vector3::new(f64::NAN, 0.0, 0.0));
    assert!(matches!(
        build_graph(&[odom(0.0), bad], &cfg),
        Err(TrackingError::InvalidRecord { index: 1, .. })
    ));
}

#[test]
fn keyframes_sit_on_the_truth_grid() {
    let scenario = short_scenario(6);
    let truth = generate_truth(&scenario).unwrap();
    let records = synthesize_measurements(&scenario, 6).unwrap();
    for kf in schedule_keyframes(&records, 1.0).unwrap() {
        let s = align_truth(&truth.samples, kf.timestamp).unwrap();
        assert!((s.timestamp - kf.timestamp).abs() < 1e-9);
    }
}

/// Integrates `X' = X·ξ^` with many small steps of the series exponential.
fn integrate_twist(start: &Pose3, twist: &DVector<f64>, horizon: f64, steps: usize) -> Pose3 {
    let h = horizon / steps as f64;
    let rho = Vector3::new(twist[0], twist[1], twist[2]) * h;
    let theta = Vector3::new(twist[3], twist[4], twist[5]) * h;
    let step = series_exp_se3(&rho, &theta);
    (0..steps).fold(*start, |x, _| x.compose(&step))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn extrapolation_matches_twist_integration(
        seed in 0u64..100_000,
        dt1 in 0.2f64..2.0,
        horizon in 0.0f64..5.0,
    ) {
        let mut r = rng(seed);
        let prev = random_pose(&mut r, 5.0);
        let curr = prev.oplus(&se3_tangent(&mut r, 1.0, 0.4)).unwrap();
        let predicted = extrapolate(&prev, &curr, dt1, horizon).unwrap();
        let twist = curr.ominus(&prev).unwrap() / dt1;
        let integrated: Element =
            integrate_twist(curr.as_pose().unwrap(), &twist, horizon, 1000).into();
        prop_assert!(predicted.ominus(&integrated).unwrap().amax() < 1e-9);
    }

    #[test]
    fn keyframe_spacing_never_exceeds_the_gate(
        times in proptest::collection::vec(0.0f64..60.0, 1..25),
        gate in 0.3f64..4.0,
    ) {
        let mut times = times;
        times.sort_by(f64::total_cmp);
        let mut records: Vec<MeasurementRecord> = (0..=600)
            .map(|k| MeasurementRecord::odom(k as f64 * 0.1, Pose3::identity()))
            .collect();
        records.extend(times.iter().map(|&t| MeasurementRecord::usbl(t, Vector3::new(4.0, 1.0, 0.0))));
        records.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        let kfs = schedule_keyframes(&records, gate).unwrap();
        prop_assert_eq!(kfs.iter().filter(|k| k.kind == KeyframeType::Usbl).count(),
            { let mut d = times.clone(); d.dedup_by(|a, b| (*a - *b).abs() <= 1e-9); d.len() });
        for w in kfs.windows(2) {
            prop_assert!(w[1].timestamp > w[0].timestamp);
            prop_assert!(w[1].timestamp - w[0].timestamp <= gate + 1e-9);
        }
        prop_assert!(60.0 - kfs.last().unwrap().timestamp < gate + 1e-9);
    }
}
