//! Exponential and logarithm on SO(3) and SE(3), the left and right
//! Jacobians, and the adjoint, checked against truncated power series.
//!
//! cargo run --example lie_kernel

use nalgebra::{DMatrix, DVector, Vector3};

use ctwist::manifold::{q_block, Element, ManifoldKind, Pose3, Rotation3};
use ctwist::simkit::{series_exp_se3, series_exp_so3};

fn main() -> anyhow::Result<()> {
    let se3 = ManifoldKind::Se3;
    let delta = DVector::from_vec(vec![0.4, -1.2, 0.3, 0.2, -0.5, 1.1]);
    let rho = Vector3::new(delta[0], delta[1], delta[2]);
    let theta = Vector3::new(delta[3], delta[4], delta[5]);

    let x = se3.exp(&delta)?;
    let series: Element = series_exp_se3(&rho, &theta).into();
    println!(
        "|Exp(δ) ⊖ series|        = {:.2e}",
        x.ominus(&series)?.amax()
    );
    println!(
        "|Log(Exp(δ)) - δ|        = {:.2e}",
        (x.log()? - &delta).amax()
    );
    let r = Rotation3::from_rpy(theta.x, theta.y, theta.z);
    println!(
        "rotation is orthonormal  = {} (series SO(3) gap {:.2e})",
        r.is_valid(),
        (ctwist::manifold::exp_so3(&theta)?.matrix() - series_exp_so3(&theta).matrix()).amax()
    );

    let jl = se3.jl(&delta)?;
    let jl_inv = se3.jl_inv(&delta)?;
    println!(
        "|Jl Jl⁻¹ - I|            = {:.2e}",
        (&jl * &jl_inv - DMatrix::<f64>::identity(6, 6)).amax()
    );
    println!(
        "|Jr(δ) - Jl(-δ)|         = {:.2e}",
        (se3.jr(&delta)? - se3.jl(&(-&delta))?).amax()
    );

    // First-order behaviour of the right Jacobian.
    let eps = DVector::from_vec(vec![1e-6, -2e-6, 5e-7, 3e-7, 1e-6, -4e-7]);
    let lhs = se3.exp(&(&delta + &eps))?;
    let rhs = x.oplus(&(se3.jr(&delta)? * &eps))?;
    println!(
        "|Exp(δ+ε) ⊖ Exp(δ)Exp(Jr ε)| = {:.2e}",
        lhs.ominus(&rhs)?.amax()
    );

    // Adjoint: X Exp(δ) X⁻¹ = Exp(Ad_X δ).
    let y: Element = Pose3::new(Rotation3::rot_z(0.7), Vector3::new(1.0, 2.0, 3.0)).into();
    let small = &delta * 0.1;
    let conj = y.compose(&se3.exp(&small)?)?.compose(&y.inverse())?;
    let moved = se3.exp(&(y.adjoint() * &small))?;
    println!(
        "|adjoint identity|       = {:.2e}",
        conj.ominus(&moved)?.amax()
    );

    // The Q block switches to its series below a small rotation angle.
    for angle in [1e-1, 1e-2, 1e-4, 1e-8] {
        let q = q_block(&rho, &(theta.normalize() * angle));
        println!("Q(ρ, θ) at |θ| = {angle:.0e}: ‖Q‖ = {:.6}", q.norm());
    }
    Ok(())
}
