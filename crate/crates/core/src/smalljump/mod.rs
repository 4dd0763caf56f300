//! Gaussian stand-ins for the small jumps.
//!
//! The target is the set-indexed fractional Brownian motion with covariance
//! `½(μ^β(A_s) + μ^β(A_t) - μ^β(A_s Δ A_t))`. Three backends:
//!
//! - [`circulant`]: exact fBm on a uniform half-line grid;
//! - [`aggregation`]: normalized sums of signed odd-occupancy vectors, valid
//!   for every geometry;
//! - [`cholesky`]: exact draws from the covariance matrix, for small grids.

pub mod aggregation;
pub mod cholesky;
pub mod circulant;

use serde::{Deserialize, Serialize};

use crate::error::{KarlinError, Result};
use crate::geometry::Geometry;
use crate::occupancy::OccupancyOptions;
use crate::rng::RngStream;

pub use aggregation::{plan_aggregation, simulate_gaussian_aggregation, AggregationPlan};
pub use cholesky::{simulate_gaussian_cholesky, GaussianFactor, MAX_CHOLESKY_POINTS};
pub use circulant::{simulate_fbm_halfline, uniform_step};

#[derive(Clone, Copy, Debug)]
pub struct CovarianceKernel<'g> {
    geometry: &'g Geometry,
    beta: f64,
}

impl<'g> CovarianceKernel<'g> {
    pub fn new(geometry: &'g Geometry, beta: f64) -> Result<Self> {
        crate::stats::check_beta(beta)?;
        Ok(Self { geometry, beta })
    }

    pub fn hurst(&self) -> f64 {
        self.beta / 2.0
    }

    pub fn geometry(&self) -> &Geometry {
        self.geometry
    }

    pub fn variance(&self, index: usize) -> f64 {
        self.geometry.mu_index_set(index).powf(self.beta)
    }

    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        let m = |x: f64| x.powf(self.beta);
        0.5 * (m(self.geometry.mu_index_set(a)) + m(self.geometry.mu_index_set(b))
            - m(self.geometry.mu_symmetric_difference(a, b)))
    }

    /// Row-major covariance matrix over `indices`.
    pub fn matrix(&self, indices: &[usize]) -> Vec<f64> {
        let n = indices.len();
        let mut out = vec![0.0; n * n];
        for (r, &a) in indices.iter().enumerate() {
            for (c, &b) in indices.iter().enumerate().skip(r) {
                let v = self.covariance(a, b);
                out[r * n + c] = v;
                out[c * n + r] = v;
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaussianBackend {
    /// Circulant on uniform half-line grids, aggregation elsewhere.
    #[default]
    Auto,
    Circulant,
    Aggregation,
    Cholesky,
}

impl GaussianBackend {
    pub fn name(self) -> &'static str {
        match self {
            GaussianBackend::Auto => "auto",
            GaussianBackend::Circulant => "circulant",
            GaussianBackend::Aggregation => "aggregation",
            GaussianBackend::Cholesky => "cholesky",
        }
    }

    pub fn resolve(self, geometry: &Geometry) -> GaussianBackend {
        match (self, geometry) {
            (GaussianBackend::Auto, Geometry::HalfLine { grid }) if uniform_step(grid).is_some() => {
                GaussianBackend::Circulant
            }
            (GaussianBackend::Auto, _) => GaussianBackend::Aggregation,
            (other, _) => other,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianDraw {
    pub values: Vec<f64>,
    pub backend: GaussianBackend,
    /// Aggregation size, when that backend ran.
    pub m: Option<u64>,
    pub aborted: u64,
}

/// One Gaussian field with the set-indexed fBm covariance on all of `geometry`.
pub fn simulate_gaussian(
    geometry: &Geometry,
    beta: f64,
    backend: GaussianBackend,
    aggregation_tolerance: f64,
    occupancy: OccupancyOptions,
    stream: &RngStream,
) -> Result<GaussianDraw> {
    let backend = backend.resolve(geometry);
    let mut rng = stream.clone();
    match backend {
        GaussianBackend::Circulant => {
            let Geometry::HalfLine { grid } = geometry else {
                return Err(KarlinError::Unsupported(format!(
                    "circulant backend needs a half-line grid, got {}",
                    geometry.name()
                )));
            };
            Ok(GaussianDraw {
                values: simulate_fbm_halfline(grid, beta, &mut rng)?,
                backend,
                m: None,
                aborted: 0,
            })
        }
        GaussianBackend::Aggregation => {
            let plan = plan_aggregation(beta, geometry.mu_window(), aggregation_tolerance)?;
            let out = simulate_gaussian_aggregation(geometry, beta, &plan, occupancy, stream)?;
            Ok(GaussianDraw {
                values: out.values,
                backend,
                m: Some(plan.m),
                aborted: out.aborted,
            })
        }
        GaussianBackend::Cholesky => {
            let indices: Vec<usize> = (0..geometry.len()).collect();
            Ok(GaussianDraw {
                values: simulate_gaussian_cholesky(geometry, beta, &indices, &mut rng)?,
                backend,
                m: None,
                aborted: 0,
            })
        }
        GaussianBackend::Auto => unreachable!("resolved above"),
    }
}
