//! Smooths a rendezvous whose data stops inside a measurement gap and shows
//! how each mode carries the target through it: Mode A at a constant body
//! twist, Mode B along a straight line.
//!
//! cargo run --release --example gap_extrapolation -- [seed]

use ctwist::fgraph::SolverSettings;
use ctwist::simkit::{generate_truth, synthesize_measurements, ScenarioConfig};
use ctwist::tracking::{
    align_truth, build_graph, smooth, MeasurementRecord, ModePolicy, TrackingConfig,
};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let scenario = ScenarioConfig::rendezvous(seed);
    let truth = generate_truth(&scenario)?;
    let (gap_start, gap_end) = scenario.gaps[0];
    let records: Vec<MeasurementRecord> = synthesize_measurements(&scenario, seed)?
        .into_iter()
        .filter(|r| r.timestamp <= gap_end)
        .collect();

    for (name, policy) in [("A", ModePolicy::mode_a()), ("B", ModePolicy::mode_b())] {
        let config = TrackingConfig {
            policy,
            ..TrackingConfig::default()
        };
        let problem = build_graph(&records, &config)?;
        let (estimate, _, report) = smooth(&problem, &SolverSettings::default(), false)?;
        println!(
            "Mode {name}: converged {} in {} iterations",
            report.converged, report.iterations
        );
        println!(
            "{:>8} {:>6} {:>12} {:>12}",
            "t [s]", "type", "error [m]", "|step| [m]"
        );
        let in_gap: Vec<_> = estimate
            .keyframes
            .iter()
            .filter(|k| k.timestamp >= gap_start - 2.0)
            .collect();
        for (i, kf) in in_gap.iter().enumerate().step_by(4) {
            let s = align_truth(&truth.samples, kf.timestamp).expect("truth covers the run");
            let err = (kf.relative_position - s.relative().translation).norm();
            let step = in_gap
                .get(i + 1)
                .map(|n| (n.target.position().unwrap() - kf.target.position().unwrap()).norm())
                .unwrap_or(f64::NAN);
            println!(
                "{:>8.1} {:>6} {:>12.3} {:>12.4}",
                kf.timestamp,
                kf.kind.label(),
                err,
                step
            );
        }
    }
    Ok(())
}
