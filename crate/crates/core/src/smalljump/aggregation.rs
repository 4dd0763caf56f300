//! Gaussian synthesis from `m` independent odd-occupancy vectors:
//! `scale · Σ_{j≤m} ξ_j D_j` with i.i.d. standard normal `ξ_j` and
//! `scale = (2^{1-β} μ^β(E₀) / m)^{1/2}`.

use rand_distr::StandardNormal;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{KarlinError, Result};
use crate::geometry::Geometry;
use crate::occupancy::{check_abort_rate, OccupancyOptions, OccupancySampler, SamplerChoice};
use crate::rng::RngStream;

/// Bounded-summand Berry–Esseen constant of the aggregation error `C/√m`.
pub const AGGREGATION_BERRY_ESSEEN: f64 = 3.3;

const CHUNK: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregationPlan {
    pub m: u64,
    pub scale: f64,
}

impl AggregationPlan {
    /// `3.3/√m`.
    pub fn berry_esseen_bound(&self) -> f64 {
        AGGREGATION_BERRY_ESSEEN / (self.m as f64).sqrt()
    }
}

/// Smallest `m` with `m^{-1/2} ≤ tolerance`.
pub fn plan_aggregation(beta: f64, mu_e0: f64, tolerance: f64) -> Result<AggregationPlan> {
    crate::stats::check_beta(beta)?;
    if !(tolerance > 0.0 && tolerance <= 1.0) {
        return Err(KarlinError::Domain {
            name: "aggregation tolerance",
            value: tolerance,
            expected: "(0, 1]",
        });
    }
    if !(mu_e0 > 0.0 && mu_e0.is_finite()) {
        return Err(KarlinError::Domain {
            name: "window mass",
            value: mu_e0,
            expected: "(0, inf)",
        });
    }
    // 1/0.02² evaluates to 2500.0000000000005; do not round that up
    let raw = tolerance.powi(-2);
    let m = ((raw * (1.0 - 1e-12)).ceil() as u64).max(1);
    let scale = (2f64.powf(1.0 - beta) * mu_e0.powf(beta) / m as f64).sqrt();
    Ok(AggregationPlan { m, scale })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AggregationDraw {
    pub values: Vec<f64>,
    /// Occupancy draws dropped on heavy-tail overflow.
    pub aborted: u64,
}

/// One aggregated field. Replicate chunks use `stream.substream(chunk)`.
///
/// Aborted occupancy draws are skipped and the sum is rescaled by the number
/// of draws kept; more than 0.1% aborts is an error.
pub fn simulate_gaussian_aggregation(
    geometry: &Geometry,
    beta: f64,
    plan: &AggregationPlan,
    occupancy: OccupancyOptions,
    stream: &RngStream,
) -> Result<AggregationDraw> {
    let sampler = OccupancySampler::new(geometry, beta, SamplerChoice::Auto, occupancy)?;
    let n = geometry.len();
    let n_chunks = plan.m.div_ceil(CHUNK);
    let partials: Vec<Result<(Vec<f64>, u64)>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(c);
            let count = CHUNK.min(plan.m - c * CHUNK);
            let mut acc = vec![0.0; n];
            let mut bits = vec![0u8; n];
            let mut aborted = 0;
            for _ in 0..count {
                match sampler.sample_into(&mut bits, &mut rng) {
                    Ok(_) => {}
                    Err(KarlinError::HeavyTailOverflow { .. }) => {
                        aborted += 1;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
                let xi: f64 = rng.sample(StandardNormal);
                for (a, &b) in acc.iter_mut().zip(&bits) {
                    if b != 0 {
                        *a += xi;
                    }
                }
            }
            Ok((acc, aborted))
        })
        .collect();
    let mut values = vec![0.0; n];
    let mut aborted = 0;
    for p in partials {
        let (acc, a) = p?;
        aborted += a;
        for (v, x) in values.iter_mut().zip(&acc) {
            *v += x;
        }
    }
    check_abort_rate(aborted as usize, plan.m as usize)?;
    let kept = plan.m - aborted;
    let scale = plan.scale * (plan.m as f64 / kept.max(1) as f64).sqrt();
    for v in values.iter_mut() {
        *v *= scale;
    }
    Ok(AggregationDraw { values, aborted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::linspace01;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn plan_sizes() {
        assert_eq!(plan_aggregation(0.5, 1.0, 0.02).unwrap().m, 2500);
        assert_eq!(plan_aggregation(0.5, 1.0, 1.0).unwrap().m, 1);
        assert_eq!(plan_aggregation(0.5, 1.0, 0.1).unwrap().m, 100);
        assert_eq!(plan_aggregation(0.5, 1.0, 0.03).unwrap().m, 1112);
        for tol in [0.013, 0.02, 0.05, 0.3, 0.77] {
            let m = plan_aggregation(0.5, 1.0, tol).unwrap().m as f64;
            assert!(m.powf(-0.5) <= tol * (1.0 + 1e-12));
            assert!((m - 1.0).powf(-0.5) > tol);
        }
        let p = plan_aggregation(0.8, 4.0, 0.1).unwrap();
        assert!((p.scale - (2f64.powf(0.2) * 4f64.powf(0.8) / 100.0).sqrt()).abs() < 1e-15);
        assert!(plan_aggregation(0.5, 1.0, 0.0).is_err());
        assert!(plan_aggregation(0.5, 1.0, 1.5).is_err());
    }

    #[test]
    fn single_term_vanishes_off_the_odd_set() {
        let g = Geometry::half_line(linspace01(20)).unwrap();
        let plan = plan_aggregation(0.5, 1.0, 1.0).unwrap();
        for seed in 0..50 {
            let stream = RngStream::new(seed, 2);
            let out = simulate_gaussian_aggregation(&g, 0.5, &plan, OccupancyOptions::default(), &stream).unwrap();
            let mut rng = stream.substream(0);
            let sampler = OccupancySampler::new(&g, 0.5, SamplerChoice::Auto, OccupancyOptions::default()).unwrap();
            let d = sampler.sample(&mut rng).unwrap();
            for (v, b) in out.values.iter().zip(&d.bits) {
                if *b == 0 {
                    assert_eq!(*v, 0.0);
                } else {
                    assert!(*v != 0.0);
                }
            }
        }
    }

    fn kolmogorov_to_normal(xs: &mut [f64]) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let z = Normal::standard();
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = z.cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn clt_distance_shrinks_with_m() {
        let beta = 0.8;
        let g = Geometry::half_line(vec![0.5]).unwrap();
        let sd = 0.5f64.powf(beta).sqrt();
        let n = 4000;
        let mut last = f64::INFINITY;
        for tol in [0.2, 0.05, 0.02] {
            let plan = plan_aggregation(beta, 1.0, tol).unwrap();
            let mut xs = crate::rng::replicates(&RngStream::new(9, tol.to_bits()), n, |rng| {
                simulate_gaussian_aggregation(&g, beta, &plan, OccupancyOptions::default(), rng).unwrap().values[0] / sd
            });
            let d = kolmogorov_to_normal(&mut xs);
            // Kolmogorov statistic at 1e-3 has quantile ≈ 1.95/√n
            let mc = 1.95 / (n as f64).sqrt();
            assert!(d <= plan.berry_esseen_bound() + mc, "m = {}: {d}", plan.m);
            last = last.min(d);
        }
        assert!(last.is_finite());
    }

    #[test]
    fn aggregated_variance_is_the_kernel_variance() {
        let g = Geometry::rectangle(vec![0.5, 1.0], vec![1.0]).unwrap();
        let beta = 0.8;
        let plan = plan_aggregation(beta, 1.0, 0.1).unwrap();
        let n = 20_000;
        let draws = crate::rng::replicates(&RngStream::new(10, 2), n, |rng| {
            simulate_gaussian_aggregation(&g, beta, &plan, OccupancyOptions::default(), rng).unwrap().values
        });
        for (idx, target) in [(0, 0.5f64.powf(beta)), (1, 1.0)] {
            let sq: Vec<f64> = draws.iter().map(|v| v[idx] * v[idx]).collect();
            let mean = sq.iter().sum::<f64>() / n as f64;
            let var = sq.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            // E ξ²D scaled is exact at every m
            assert!((mean - target).abs() < 3.0 * (var / n as f64).sqrt(), "{idx}: {mean} vs {target}");
        }
    }
}
