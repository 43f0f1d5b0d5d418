use nalgebra::{DMatrix, DVector};

use super::GraphError;

/// Gaussian noise with covariance `Σ` and cached square-root information `W`,
/// `WᵀW = Σ⁻¹` (here `W = L⁻¹` for the Cholesky factor `Σ = L Lᵀ`).
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    covariance: DMatrix<f64>,
    sqrt_information: DMatrix<f64>,
}

impl NoiseModel {
    pub fn from_covariance(covariance: DMatrix<f64>) -> Result<Self, GraphError> {
        let n = covariance.nrows();
        if n == 0 || covariance.ncols() != n {
            return Err(GraphError::InvalidNoise("covariance must be square".into()));
        }
        if !covariance.iter().all(|v| v.is_finite()) {
            return Err(GraphError::InvalidNoise(
                "covariance has non-finite entries".into(),
            ));
        }
        let asym = (&covariance - covariance.transpose()).abs().max();
        if asym > 1e-12 * covariance.abs().max().max(1.0) {
            return Err(GraphError::InvalidNoise(
                "covariance is not symmetric".into(),
            ));
        }
        let chol = covariance.clone().cholesky().ok_or_else(|| {
            GraphError::InvalidNoise("covariance is not positive definite".into())
        })?;
        let l = chol.l();
        let sqrt_information = l
            .solve_lower_triangular(&DMatrix::identity(n, n))
            .ok_or_else(|| GraphError::InvalidNoise("singular Cholesky factor".into()))?;
        Ok(Self {
            covariance,
            sqrt_information,
        })
    }

    pub fn from_sigmas(sigmas: &[f64]) -> Result<Self, GraphError> {
        if sigmas.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(GraphError::InvalidNoise(format!(
                "standard deviations must be positive, got {sigmas:?}"
            )));
        }
        let var = DVector::from_iterator(sigmas.len(), sigmas.iter().map(|s| s * s));
        Self::from_covariance(DMatrix::from_diagonal(&var))
    }

    pub fn isotropic(dim: usize, sigma: f64) -> Result<Self, GraphError> {
        Self::from_sigmas(&vec![sigma; dim])
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.covariance
    }

    pub fn sqrt_information(&self) -> &DMatrix<f64> {
        &self.sqrt_information
    }

    /// Same shape, covariance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, GraphError> {
        Self::from_covariance(&self.covariance * factor)
    }

    pub fn whiten(&self, r: &DVector<f64>) -> DVector<f64> {
        &self.sqrt_information * r
    }

    pub fn whiten_matrix(&self, j: &DMatrix<f64>) -> DMatrix<f64> {
        &self.sqrt_information * j
    }

    /// `εᵀ Σ⁻¹ ε`.
    pub fn mahalanobis_squared(&self, r: &DVector<f64>) -> f64 {
        self.whiten(r).norm_squared()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn whitening_reproduces_mahalanobis() {
        let cov = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5]);
        let noise = NoiseModel::from_covariance(cov.clone()).unwrap();
        let e = DVector::from_vec(vec![0.4, -1.0, 2.0]);
        let direct = (e.transpose() * cov.try_inverse().unwrap() * &e)[0];
        assert_relative_eq!(noise.mahalanobis_squared(&e), direct, epsilon = 1e-12);
    }

    #[test]
    fn rejects_indefinite() {
        let cov = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(NoiseModel::from_covariance(cov).is_err());
        assert!(NoiseModel::from_sigmas(&[1.0, 0.0]).is_err());
    }
}
