use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Vector3};
use proptest::prelude::*;

use ctwist::manifold::{
    exp_so3, hat, jl_inv_so3, jl_so3, log_so3, q_block, Element, ManifoldError, ManifoldKind,
    Pose3, Rotation3,
};
use ctwist::simkit::{series_exp_se3, series_exp_so3};

fn rotation_vector(max_angle: f64) -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, 0.0f64..max_angle)
        .prop_filter("direction", |(x, y, z, _)| x * x + y * y + z * z > 1e-4)
        .prop_map(|(x, y, z, a)| Vector3::new(x, y, z).normalize() * a)
}

fn se3_tangent(max_angle: f64) -> impl Strategy<Value = DVector<f64>> {
    (
        rotation_vector(max_angle),
        -5.0f64..5.0,
        -5.0f64..5.0,
        -5.0f64..5.0,
    )
        .prop_map(|(w, x, y, z)| DVector::from_vec(vec![x, y, z, w.x, w.y, w.z]))
}

fn pose() -> impl Strategy<Value = Element> {
    se3_tangent(PI - 0.01).prop_map(|d| ManifoldKind::Se3.exp(&d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn se3_log_inverts_exp(d in se3_tangent(PI - 1e-3)) {
        let back = ManifoldKind::Se3.exp(&d).unwrap().log().unwrap();
        prop_assert!((back - d).amax() < 1e-9);
    }

    #[test]
    fn small_angles_round_trip(d in se3_tangent(1e-5)) {
        let back = ManifoldKind::Se3.exp(&d).unwrap().log().unwrap();
        prop_assert!((back - d).amax() < 1e-12);
    }

    #[test]
    fn closed_form_exp_matches_series(d in se3_tangent(PI - 1e-3)) {
        let closed = ManifoldKind::Se3.exp(&d).unwrap();
        let rho = Vector3::new(d[0], d[1], d[2]);
        let theta = Vector3::new(d[3], d[4], d[5]);
        let series: Element = series_exp_se3(&rho, &theta).into();
        prop_assert!(closed.ominus(&series).unwrap().amax() < 1e-12);
        let r = exp_so3(&theta).unwrap();
        prop_assert!((r.matrix() - series_exp_so3(&theta).matrix()).amax() < 1e-12);
    }

    #[test]
    fn oplus_and_ominus_are_inverse(x in pose(), d in se3_tangent(PI - 1e-3)) {
        let y = x.oplus(&d).unwrap();
        prop_assert!((y.ominus(&x).unwrap() - &d).amax() < 1e-8);
        let z = x.oplus(&y.ominus(&x).unwrap()).unwrap();
        prop_assert!(z.ominus(&y).unwrap().amax() < 1e-9);
    }

    #[test]
    fn left_jacobian_inverse(d in se3_tangent(PI - 1e-2)) {
        let k = ManifoldKind::Se3;
        let p = k.jl(&d).unwrap() * k.jl_inv(&d).unwrap();
        prop_assert!((p - DMatrix::<f64>::identity(6, 6)).amax() < 1e-9);
        let t = Vector3::new(d[3], d[4], d[5]);
        prop_assert!((jl_so3(&t) * jl_inv_so3(&t).unwrap() - nalgebra::Matrix3::identity()).amax() < 1e-9);
    }

    #[test]
    fn right_jacobian_is_left_of_negated(d in se3_tangent(PI - 1e-2)) {
        let k = ManifoldKind::Se3;
        prop_assert_eq!(k.jr(&d).unwrap(), k.jl(&(-&d)).unwrap());
    }

    #[test]
    fn right_jacobian_first_order(d in se3_tangent(2.0), e in se3_tangent(1.0)) {
        // Exp(δ + ε) ≈ Exp(δ) Exp(J_r(δ) ε) for small ε.
        let k = ManifoldKind::Se3;
        let eps = e * 1e-6;
        let lhs = k.exp(&(&d + &eps)).unwrap();
        let rhs = k.exp(&d).unwrap().oplus(&(k.jr(&d).unwrap() * &eps)).unwrap();
        prop_assert!(lhs.ominus(&rhs).unwrap().amax() < 1e-10);
    }

    #[test]
    fn adjoint_moves_perturbations_across(x in pose(), d in se3_tangent(1.0)) {
        // X Exp(δ) X⁻¹ = Exp(Ad_X δ)
        let k = ManifoldKind::Se3;
        let lhs = x.compose(&k.exp(&d).unwrap()).unwrap().compose(&x.inverse()).unwrap();
        let rhs = k.exp(&(x.adjoint() * &d)).unwrap();
        prop_assert!(lhs.ominus(&rhs).unwrap().amax() < 1e-9);
        prop_assert!((x.adjoint() * x.adjoint_inv() - DMatrix::<f64>::identity(6, 6)).amax() < 1e-9);
    }

    #[test]
    fn q_block_is_continuous_across_the_series_switch(
        rho in (-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0),
        dir in rotation_vector(1.0),
        scale in 0.5f64..2.0,
    ) {
        let rho = Vector3::new(rho.0, rho.1, rho.2);
        let dir = dir.try_normalize(1e-9).unwrap_or(Vector3::x());
        let a = q_block(&rho, &(dir * 1e-2 * (1.0 - 1e-9)));
        let b = q_block(&rho, &(dir * 1e-2 * (1.0 + 1e-9)));
        prop_assert!((a - b).amax() < 1e-10 * (1.0 + rho.norm()));
        let tiny = q_block(&rho, &(dir * 1e-12 * scale));
        prop_assert!((tiny - hat(&rho) * 0.5).amax() < 1e-11);
    }

    #[test]
    fn rotations_stay_orthonormal(w in rotation_vector(PI - 1e-3)) {
        let r = exp_so3(&w).unwrap();
        prop_assert!(r.is_valid());
        let back = log_so3(&r).unwrap();
        prop_assert!((back - w).amax() < 1e-9);
    }
}

#[test]
fn log_near_pi_is_rejected() {
    let r = Rotation3::rot_z(PI - 1e-8);
    assert!(matches!(
        log_so3(&r),
        Err(ManifoldError::NearSingular { .. })
    ));
    let p: Element = Pose3::new(r, Vector3::zeros()).into();
    assert!(p.log().is_err());
}

#[test]
fn euclidean_group_is_vector_addition() {
    let k = ManifoldKind::R3;
    let x: Element = Vector3::new(1.0, 2.0, 3.0).into();
    let d = DVector::from_vec(vec![0.5, -1.0, 2.0]);
    assert_eq!(
        x.oplus(&d).unwrap().position().unwrap(),
        Vector3::new(1.5, 1.0, 5.0)
    );
    assert_eq!(k.jl(&d).unwrap(), DMatrix::identity(3, 3));
    assert_eq!(k.jr_inv(&d).unwrap(), DMatrix::identity(3, 3));
}
