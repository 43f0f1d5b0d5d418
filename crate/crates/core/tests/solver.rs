mod common;

use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;

use ctwist::factors::{prior_factor, relative_pose_factor};
use ctwist::fgraph::{
    check_solvable, marginal_covariances, optimize, total_cost, Factor, FactorGraph, GraphError,
    SolverSettings, Values, VariableKey,
};
use ctwist::manifold::{Element, ManifoldKind, Pose3, Rotation3};
use ctwist::simkit::{finite_difference_jacobian, perturb, FD_STEP};

use common::{key, rng, se3_tangent};

struct Chain {
    graph: FactorGraph,
    keys: Vec<VariableKey>,
    truth: Vec<Element>,
    factors: Vec<Factor>,
}

/// Ten SE(3) poses on a gentle arc, an anchor prior on the first one and
/// noisy relative-pose measurements between neighbours.
fn odometry_chain(seed: u64) -> Chain {
    let mut r = rng(seed);
    let se3 = ManifoldKind::Se3;
    let keys: Vec<VariableKey> = (0..10).map(|i| key(i, se3, i as f64)).collect();
    let step = Pose3::new(Rotation3::rot_z(0.15), Vector3::new(1.0, 0.1, 0.05));
    let mut truth = vec![Element::from(Pose3::identity())];
    for _ in 1..10 {
        let next = truth.last().unwrap().compose(&step.into()).unwrap();
        truth.push(next);
    }
    let odo_cov = DMatrix::from_diagonal(&DVector::from_vec(vec![
        0.01, 0.01, 0.01, 0.001, 0.001, 0.001,
    ]));
    let mut factors =
        vec![prior_factor(keys[0], truth[0].clone(), DMatrix::identity(6, 6) * 1e-6).unwrap()];
    for i in 0..9 {
        let noisy = perturb(&step.into(), &(se3_tangent(&mut r, 0.05, 0.02)));
        factors.push(
            relative_pose_factor(
                keys[i],
                keys[i + 1],
                *noisy.as_pose().unwrap(),
                odo_cov.clone(),
            )
            .unwrap(),
        );
    }
    // One loop-closing measurement makes the problem non-trivial.
    let loop_meas = truth[0].inverse().compose(&truth[9]).unwrap();
    factors.push(
        relative_pose_factor(
            keys[0],
            keys[9],
            *loop_meas.as_pose().unwrap(),
            odo_cov * 4.0,
        )
        .unwrap(),
    );
    let mut graph = FactorGraph::new();
    for k in &keys {
        graph.add_variable(*k).unwrap();
    }
    for f in &factors {
        graph.add_factor(f.clone()).unwrap();
    }
    Chain {
        graph,
        keys,
        truth,
        factors,
    }
}

fn random_start(chain: &Chain, seed: u64, sigma: f64) -> Values {
    let mut r = rng(seed);
    let mut v = Values::new();
    for (k, t) in chain.keys.iter().zip(&chain.truth) {
        v.insert(k, perturb(t, &se3_tangent(&mut r, sigma, sigma)))
            .unwrap();
    }
    v
}

/// Dense Gauss–Newton with Jacobians from central differences of the
/// whitened residuals and a dense Cholesky solve.
fn dense_oracle(chain: &Chain, start: &Values) -> Values {
    let mut values = start.clone();
    let dim: usize = chain.keys.iter().map(|k| k.dim()).sum();
    for _ in 0..50 {
        let rows: usize = chain.factors.iter().map(|f| f.dim()).sum();
        let mut j = DMatrix::zeros(rows, dim);
        let mut r = DVector::zeros(rows);
        let mut row = 0;
        for f in &chain.factors {
            let whitened = |v: &Values| f.residual(v).map(|e| f.noise().whiten(&e));
            r.rows_mut(row, f.dim())
                .copy_from(&whitened(&values).unwrap());
            for k in f.keys() {
                let col = chain.keys.iter().position(|x| x == k).unwrap() * 6;
                let jk = finite_difference_jacobian(whitened, &values, k, FD_STEP).unwrap();
                j.view_mut((row, col), (f.dim(), 6)).copy_from(&jk);
            }
            row += f.dim();
        }
        let h = j.tr_mul(&j);
        let g = j.tr_mul(&r);
        let delta = -h.cholesky().unwrap().solve(&g);
        for (i, k) in chain.keys.iter().enumerate() {
            let d = delta.rows(i * 6, 6).into_owned();
            let x = values.get(k).unwrap().oplus(&d).unwrap();
            values.insert(k, x).unwrap();
        }
        if delta.amax() < 1e-12 {
            break;
        }
    }
    values
}

fn max_difference(a: &Values, b: &Values, keys: &[VariableKey]) -> f64 {
    keys.iter()
        .map(|k| a.get(k).unwrap().ominus(b.get(k).unwrap()).unwrap().amax())
        .fold(0.0, f64::max)
}

#[test]
fn chain_matches_dense_oracle() {
    for seed in 0..3 {
        let chain = odometry_chain(seed);
        let start = random_start(&chain, 100 + seed, 0.3);
        let (solved, report) = optimize(&chain.graph, &start, &SolverSettings::default()).unwrap();
        assert!(report.converged);
        let oracle = dense_oracle(&chain, &start);
        let diff = max_difference(&solved, &oracle, &chain.keys);
        assert!(
            diff < 1e-8,
            "seed {seed}: solver and dense oracle differ by {diff:e}"
        );
        // Estimates stay within measurement noise of the truth.
        let err = chain
            .keys
            .iter()
            .zip(&chain.truth)
            .map(|(k, t)| solved.get(k).unwrap().ominus(t).unwrap().amax())
            .fold(0.0, f64::max);
        assert!(err < 0.5, "seed {seed}: error against truth {err}");
    }
}

#[test]
fn insertion_order_does_not_change_the_solution() {
    let chain = odometry_chain(4);
    let start = random_start(&chain, 7, 0.2);
    let (a, _) = optimize(&chain.graph, &start, &SolverSettings::default()).unwrap();
    let mut graph = FactorGraph::new();
    for k in chain.keys.iter().rev() {
        graph.add_variable(*k).unwrap();
    }
    for f in chain.factors.iter().rev() {
        graph.add_factor(f.clone()).unwrap();
    }
    let (b, _) = optimize(&graph, &start, &SolverSettings::default()).unwrap();
    assert!(max_difference(&a, &b, &chain.keys) < 1e-9);
}

#[test]
fn marginals_match_dense_inverse() {
    let chain = odometry_chain(5);
    let (solved, _) = optimize(
        &chain.graph,
        &random_start(&chain, 8, 0.1),
        &SolverSettings::default(),
    )
    .unwrap();
    let system = ctwist::fgraph::linearize(&chain.graph, &solved).unwrap();
    let dense_inv = system.dense_hessian().try_inverse().unwrap();
    let covs = marginal_covariances(&chain.graph, &solved, &chain.keys).unwrap();
    for (k, c) in chain.keys.iter().zip(&covs) {
        let o = system.layout.offset(k).unwrap();
        let expected = dense_inv.view((o, o), (6, 6));
        assert!((c - expected).amax() < 1e-10 * expected.amax().max(1.0));
        assert!(c.clone().symmetric_eigen().eigenvalues.min() > 0.0);
    }
    // The anchored pose is pinned by its tight prior.
    assert!(covs[0].amax() < 2e-6);
    assert!(covs[9].diagonal().sum() > covs[1].diagonal().sum());
}

#[test]
fn prior_only_graph_converges_to_the_mean() {
    let se3 = ManifoldKind::Se3;
    let k = key(0, se3, 0.0);
    let mean: Element = Pose3::new(
        Rotation3::from_rpy(0.3, -0.2, 1.0),
        Vector3::new(1.0, 2.0, 3.0),
    )
    .into();
    let mut g = FactorGraph::new();
    g.add_variable(k).unwrap();
    g.add_factor(prior_factor(k, mean.clone(), DMatrix::identity(6, 6) * 0.01).unwrap())
        .unwrap();
    let mut start = Values::new();
    start.insert(&k, se3.identity()).unwrap();
    let (v, report) = optimize(&g, &start, &SolverSettings::default()).unwrap();
    assert!(report.converged);
    assert!(report.final_cost < 1e-20);
    assert!(v.get(&k).unwrap().ominus(&mean).unwrap().amax() < 1e-10);
}

#[test]
fn unanchored_chain_is_reported_with_its_variables() {
    let chain = odometry_chain(6);
    let mut graph = FactorGraph::new();
    for k in &chain.keys {
        graph.add_variable(*k).unwrap();
    }
    for f in chain.factors.iter().skip(1) {
        graph.add_factor(f.clone()).unwrap();
    }
    let start = random_start(&chain, 9, 0.1);
    match check_solvable(&graph, &start) {
        Err(GraphError::Underconstrained { variables }) => assert!(!variables.is_empty()),
        other => panic!("expected underconstrained, got {other:?}"),
    }
    assert!(matches!(
        optimize(&graph, &start, &SolverSettings::default()),
        Err(GraphError::Underconstrained { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accepted_steps_never_increase_cost(seed in 0u64..1000, sigma in 0.01f64..0.6) {
        let chain = odometry_chain(seed);
        let start = random_start(&chain, seed + 1, sigma);
        let (solved, report) = optimize(&chain.graph, &start, &SolverSettings::default()).unwrap();
        for w in report.cost_trace.windows(2) {
            prop_assert!(w[1] <= w[0]);
        }
        let final_cost = total_cost(&chain.graph, &solved).unwrap();
        prop_assert!((final_cost - report.final_cost).abs() <= 1e-9 * (1.0 + final_cost));
        prop_assert!(report.final_cost <= report.initial_cost);
    }
}
