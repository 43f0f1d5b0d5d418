//! Central finite differences through `⊕`.
//!
//! Perturbations use a power-series matrix exponential of the algebra
//! element and share no code with the closed-form maps.

use nalgebra::{DMatrix, DVector, Matrix3, Matrix4, Vector3};

use crate::fgraph::{GraphError, Values, VariableKey};
use crate::manifold::{hat, Element, Pose3, Rotation3};

pub const FD_STEP: f64 = 1e-6;

const SERIES_TERMS: usize = 30;

fn series_expm4(a: &Matrix4<f64>) -> Matrix4<f64> {
    // Scale so the series converges fast, then square back.
    let norm = a.abs().max();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = Matrix4::identity();
    let mut sum = Matrix4::identity();
    for k in 1..=SERIES_TERMS {
        term = term * scaled / k as f64;
        sum += term;
    }
    for _ in 0..squarings {
        sum = sum * sum;
    }
    sum
}

/// `Exp(δ)` of SE(3) from the matrix series of the 4×4 generator.
pub fn series_exp_se3(rho: &Vector3<f64>, theta: &Vector3<f64>) -> Pose3 {
    let mut a = Matrix4::zeros();
    a.fixed_view_mut::<3, 3>(0, 0).copy_from(&hat(theta));
    a.fixed_view_mut::<3, 1>(0, 3).copy_from(rho);
    let e = series_expm4(&a);
    let r: Matrix3<f64> = e.fixed_view::<3, 3>(0, 0).into();
    Pose3::new(
        Rotation3::from_matrix_unchecked(r),
        e.fixed_view::<3, 1>(0, 3).into(),
    )
}

/// `Exp(θ)` of SO(3) from the matrix series.
pub fn series_exp_so3(theta: &Vector3<f64>) -> Rotation3 {
    series_exp_se3(&Vector3::zeros(), theta).rotation
}

/// `x ⊕ δ` with the series exponential.
pub fn perturb(x: &Element, delta: &DVector<f64>) -> Element {
    match x {
        Element::Rn(v) => Element::Rn(v + delta),
        Element::So3(r) => {
            Element::So3(r.compose(&series_exp_so3(&Vector3::new(delta[0], delta[1], delta[2]))))
        }
        Element::Se3(p) => {
            let rho = Vector3::new(delta[0], delta[1], delta[2]);
            let theta = Vector3::new(delta[3], delta[4], delta[5]);
            Element::Se3(p.compose(&series_exp_se3(&rho, &theta)))
        }
    }
}

/// Jacobian of `residual` with respect to `states[index]`, by central
/// differences along each tangent basis direction.
pub fn finite_difference_states<E, F>(
    residual: F,
    states: &[Element],
    index: usize,
    step: f64,
) -> Result<DMatrix<f64>, E>
where
    F: Fn(&[&Element]) -> Result<DVector<f64>, E>,
{
    let n = states[index].dim();
    let mut columns = Vec::with_capacity(n);
    let eval = |delta: DVector<f64>| {
        let mut moved: Vec<Element> = states.to_vec();
        moved[index] = perturb(&states[index], &delta);
        let refs: Vec<&Element> = moved.iter().collect();
        residual(&refs)
    };
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = step;
        let plus = eval(e.clone())?;
        let minus = eval(-e)?;
        columns.push((plus - minus) / (2.0 * step));
    }
    Ok(DMatrix::from_columns(&columns))
}

/// Jacobian of a residual evaluated on a full set of values with respect to
/// the variable `key`.
pub fn finite_difference_jacobian<F>(
    residual: F,
    values: &Values,
    key: &VariableKey,
    step: f64,
) -> Result<DMatrix<f64>, GraphError>
where
    F: Fn(&Values) -> Result<DVector<f64>, GraphError>,
{
    let x = values.get(key)?.clone();
    let n = x.dim();
    let mut columns = Vec::with_capacity(n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = step;
        let mut plus = values.clone();
        plus.insert(key, perturb(&x, &e))?;
        let mut minus = values.clone();
        minus.insert(key, perturb(&x, &-e))?;
        columns.push((residual(&plus)? - residual(&minus)?) / (2.0 * step));
    }
    Ok(DMatrix::from_columns(&columns))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{exp_se3, EuclidPoint};
    use nalgebra::Vector6;

    #[test]
    fn series_matches_closed_form() {
        let xi = Vector6::new(0.3, -0.2, 1.0, 0.7, -1.1, 0.4);
        let a = series_exp_se3(&xi.fixed_rows::<3>(0).into(), &xi.fixed_rows::<3>(3).into());
        let b = exp_se3(&xi).unwrap();
        assert!((a.to_homogeneous() - b.to_homogeneous()).amax() < 1e-13);
    }

    #[test]
    fn linear_residual_is_exact() {
        let x: Element = EuclidPoint::new(1.0, 2.0, 3.0).into();
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, -1.0, 0.5, 4.0]);
        let f = |s: &[&Element]| -> Result<DVector<f64>, ()> {
            match s[0] {
                Element::Rn(v) => Ok(&a * v),
                _ => Err(()),
            }
        };
        let j = finite_difference_states(f, &[x], 0, FD_STEP).unwrap();
        assert!((j - &a).amax() < 1e-8);
    }
}
