//! Unit-circle fixtures: poses on a circle tied together only by
//! constant-twist factors and anchored at the ends. After optimization the
//! free poses should land back on the circle.
//!
//! cargo run --release --example unit_circle -- [sigma] [seed]

use ctwist::fgraph::{optimize, SolverSettings};
use ctwist::simkit::{arc_distance, unit_circle_fixture, UnitCircleVariant};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);

    for variant in [
        UnitCircleVariant::Extrapolate,
        UnitCircleVariant::Interpolate,
        UnitCircleVariant::Chain,
    ] {
        let fixture = unit_circle_fixture(variant, sigma, seed)?;
        let (values, report) =
            optimize(&fixture.graph, &fixture.initial, &SolverSettings::default())?;
        println!(
            "{}: {} poses, anchors {:?}, {} iterations, converged {}",
            variant.label(),
            fixture.keys.len(),
            fixture.anchored,
            report.iterations,
            report.converged
        );
        for i in fixture.free() {
            let before = fixture.initial.get(&fixture.keys[i])?.position().unwrap();
            let after = values.get(&fixture.keys[i])?;
            let oracle: ctwist::manifold::Element = fixture.oracle[i].into();
            println!(
                "  pose {i}: arc distance {:.2e} -> {:.2e}, distance to oracle {:.2e}",
                arc_distance(&before),
                arc_distance(&after.position().unwrap()),
                after.ominus(&oracle)?.amax()
            );
        }
    }
    Ok(())
}
