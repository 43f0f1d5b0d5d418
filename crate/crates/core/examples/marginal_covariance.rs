//! Recovers marginal target covariances from the information matrix of a
//! smoothed rendezvous and prints the position uncertainty over time.
//!
//! cargo run --release --example marginal_covariance -- [seed]

use ctwist::fgraph::SolverSettings;
use ctwist::simkit::{synthesize_measurements, ScenarioConfig};
use ctwist::tracking::{build_graph, smooth, ModePolicy, TrackingConfig};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let scenario = ScenarioConfig::rendezvous(seed);
    let records = synthesize_measurements(&scenario, seed)?;
    let config = TrackingConfig {
        policy: ModePolicy::mode_b(),
        ..TrackingConfig::default()
    };
    let problem = build_graph(&records, &config)?;
    let (estimate, _, report) = smooth(&problem, &SolverSettings::default(), true)?;
    println!(
        "converged {} in {} iterations",
        report.converged, report.iterations
    );
    println!(
        "{:>8} {:>8} {:>6} {:>14}",
        "t [s]", "type", "state", "σ_pos [m]"
    );
    for kf in estimate.keyframes.iter().step_by(10) {
        let c = kf
            .target_covariance
            .as_ref()
            .expect("requested covariances");
        let sigma = (c[(0, 0)] + c[(1, 1)] + c[(2, 2)]).sqrt();
        println!(
            "{:>8.1} {:>8} {:>6} {:>14.3}",
            kf.timestamp,
            kf.kind.label(),
            kf.target.kind().to_string(),
            sigma
        );
    }
    Ok(())
}
