//! Exact Gaussian draws from the kernel matrix on small grids.
//!
//! The matrix is factored through its symmetric eigendecomposition
//! `Σ = V Λ Vᵀ`, so `L = V Λ^{1/2}` exists for singular (pinned) grids too.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use super::CovarianceKernel;
use crate::error::{KarlinError, Result};
use crate::geometry::Geometry;

pub const MAX_CHOLESKY_POINTS: usize = 4096;

#[derive(Clone, Debug)]
pub struct GaussianFactor {
    factor: DMatrix<f64>,
}

impl GaussianFactor {
    pub fn new(kernel: &CovarianceKernel<'_>, indices: &[usize]) -> Result<Self> {
        let n = indices.len();
        if n == 0 || n > MAX_CHOLESKY_POINTS {
            return Err(KarlinError::InvalidGrid(format!(
                "exact Gaussian factor needs 1..={MAX_CHOLESKY_POINTS} points, got {n}"
            )));
        }
        Self::from_covariance(DMatrix::from_row_slice(n, n, &kernel.matrix(indices)))
    }

    pub fn from_covariance(cov: DMatrix<f64>) -> Result<Self> {
        let trace = cov.trace();
        let floor = -1e-8 * trace.abs();
        let eig = SymmetricEigen::new(cov);
        let mut scales = eig.eigenvalues.clone();
        for v in scales.iter_mut() {
            if *v < floor {
                return Err(KarlinError::NotPositiveSemidefinite { eigenvalue: *v, floor });
            }
            *v = v.max(0.0).sqrt();
        }
        let factor = eig.eigenvectors * DMatrix::from_diagonal(&scales);
        Ok(Self { factor })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let z = DVector::from_fn(self.dim(), |_, _| rng.sample::<f64, _>(StandardNormal));
        (&self.factor * z).iter().copied().collect()
    }
}

/// One exact draw over `indices` of `geometry`.
pub fn simulate_gaussian_cholesky<R: Rng + ?Sized>(
    geometry: &Geometry,
    beta: f64,
    indices: &[usize],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let kernel = CovarianceKernel::new(geometry, beta)?;
    Ok(GaussianFactor::new(&kernel, indices)?.sample(rng))
}
