//! Compares the analytic Jacobians of the constant-twist residual with
//! central differences on SE(3), SO(3) and R³.
//!
//! cargo run --example jacobian_check

use nalgebra::{DVector, Vector3};

use ctwist::factors::{ct_linearize, ct_residual};
use ctwist::manifold::{Element, ManifoldKind, Pose3, Rotation3};
use ctwist::simkit::{finite_difference_states, FD_STEP};

fn states(kind: ManifoldKind) -> anyhow::Result<[Element; 3]> {
    let a = Pose3::new(
        Rotation3::from_rpy(0.1, -0.3, 0.8),
        Vector3::new(1.0, 2.0, -0.5),
    );
    let twist = DVector::from_vec(vec![0.8, 0.1, -0.2, 0.05, -0.1, 0.4]);
    let x0: Element = a.into();
    let x1 = x0.oplus(&(&twist * 1.0))?;
    // A slightly inconsistent third state so the residual is not zero.
    let bump = DVector::from_vec(vec![0.05, -0.02, 0.03, 0.01, 0.02, -0.03]);
    let x2 = x1.oplus(&(&twist * 1.5 + bump))?;
    Ok(match kind {
        ManifoldKind::Se3 => [x0, x1, x2],
        ManifoldKind::So3 => [x0, x1, x2].map(|x| Element::So3(x.as_pose().unwrap().rotation)),
        _ => [x0, x1, x2].map(|x| Element::from(x.position().unwrap())),
    })
}

fn main() -> anyhow::Result<()> {
    let (dt1, dt2) = (1.0, 1.5);
    for kind in [ManifoldKind::Se3, ManifoldKind::So3, ManifoldKind::R3] {
        let s = states(kind)?;
        let (r, blocks) = ct_linearize(&s[0], &s[1], &s[2], dt1, dt2)?;
        println!("{kind}: |residual| = {:.3e}", r.norm());
        for (i, a) in blocks.iter().enumerate() {
            let numeric = finite_difference_states(
                |x| ct_residual(x[0], x[1], x[2], dt1, dt2),
                &s,
                i,
                FD_STEP,
            )?;
            let rel = (a - &numeric).norm() / numeric.norm().max(1.0);
            println!("  ∂r/∂x{i}: relative error {rel:.2e}");
        }
    }
    Ok(())
}
