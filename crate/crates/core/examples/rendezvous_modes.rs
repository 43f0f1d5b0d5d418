//! Smooths one synthetic rendezvous in both modes and prints a summary
//! table of relative-position errors.
//!
//! cargo run --release --example rendezvous_modes -- [seed]

use std::time::Instant;

use ctwist::fgraph::SolverSettings;
use ctwist::simkit::{generate_truth, synthesize_measurements, ScenarioConfig};
use ctwist::tracking::{
    baselines, build_graph, metrics, smooth, KeyframeType, ModePolicy, TrackingConfig,
};

fn main() -> anyhow::Result<()> {
    let seed: u64 = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(1);
    let scenario = ScenarioConfig::rendezvous(seed);
    let truth = generate_truth(&scenario)?;
    let records = synthesize_measurements(&scenario, seed)?;
    let raw = baselines(&records, &truth.samples)?;

    println!("{:<8} {:>16} {:>16} {:>16}", "", "USBL", "OPTICAL", "ALL");
    for (name, policy) in [
        ("Mode A", ModePolicy::mode_a()),
        ("Mode B", ModePolicy::mode_b()),
    ] {
        let config = TrackingConfig {
            policy,
            ..TrackingConfig::default()
        };
        let start = Instant::now();
        let problem = build_graph(&records, &config)?;
        let (estimate, _, report) = smooth(&problem, &SolverSettings::default(), false)?;
        let m = metrics(&estimate, &truth.samples)?;
        let cell = |s: ctwist::tracking::ErrorStats| format!("{:.3} ± {:.3}", s.mean, s.std);
        println!(
            "{:<8} {:>16} {:>16} {:>16}   ({} keyframes, {} iterations, converged: {}, {:.2?})",
            name,
            cell(m.stats(KeyframeType::Usbl)),
            cell(m.stats(KeyframeType::Optical)),
            cell(m.all),
            estimate.len(),
            report.iterations,
            report.converged,
            start.elapsed()
        );
    }
    println!(
        "{:<8} {:>16} {:>16}",
        "raw",
        format!("{:.3} ± {:.3}", raw.usbl.mean, raw.usbl.std),
        format!("{:.3} ± {:.3}", raw.optical.mean, raw.optical.std)
    );
    Ok(())
}
