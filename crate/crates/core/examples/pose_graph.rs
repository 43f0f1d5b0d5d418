//! Builds a small factor graph by hand: an anchored SE(3) odometry chain
//! with a loop closure, then a target whose only link between two fixes is
//! the constant-twist prior.
//!
//! cargo run --example pose_graph

use nalgebra::{DMatrix, Vector3};

use ctwist::factors::{
    ct_factor_from_keys, default_base_covariance, prior_factor, relative_pose_factor,
};
use ctwist::fgraph::{
    marginal_covariance, optimize, FactorGraph, SolverSettings, Values, VariableKey,
};
use ctwist::manifold::{Element, ManifoldKind, Pose3, Rotation3};

fn main() -> anyhow::Result<()> {
    let se3 = ManifoldKind::Se3;
    let step = Pose3::new(Rotation3::rot_z(0.3), Vector3::new(1.0, 0.0, 0.0));
    let keys: Vec<VariableKey> = (0..6).map(|i| VariableKey::new(i, se3, i as f64)).collect();

    let mut graph = FactorGraph::new();
    let mut initial = Values::new();
    let mut pose: Element = Pose3::identity().into();
    for k in &keys {
        graph.add_variable(*k)?;
        // Start from a deliberately poor guess.
        initial.insert(k, pose.oplus(&nalgebra::DVector::from_element(6, 0.05))?)?;
        pose = pose.compose(&step.into())?;
    }
    let odo = DMatrix::identity(6, 6) * 1e-3;
    graph.add_factor(prior_factor(
        keys[0],
        Pose3::identity().into(),
        DMatrix::identity(6, 6) * 1e-6,
    )?)?;
    for w in keys.windows(2) {
        graph.add_factor(relative_pose_factor(w[0], w[1], step, odo.clone())?)?;
    }
    // Constant twist ties consecutive triples together as well.
    for w in keys.windows(3) {
        graph.add_factor(ct_factor_from_keys(
            [w[0], w[1], w[2]],
            &default_base_covariance(se3),
        )?)?;
    }

    let (values, report) = optimize(&graph, &initial, &SolverSettings::default())?;
    println!(
        "{} variables, {} factors: cost {:.3e} -> {:.3e} in {} iterations",
        graph.num_variables(),
        graph.factors().len(),
        report.initial_cost,
        report.final_cost,
        report.iterations
    );
    for k in &keys {
        let p = values.get(k)?.as_pose().copied().unwrap();
        let cov = marginal_covariance(&graph, &values, k)?;
        println!(
            "  {k}: position [{:+.3} {:+.3} {:+.3}], σ_x {:.4}",
            p.translation.x,
            p.translation.y,
            p.translation.z,
            cov[(0, 0)].sqrt()
        );
    }
    Ok(())
}
