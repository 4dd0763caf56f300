//! Fractional Brownian motion by circulant embedding of its increments.

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{KarlinError, Result};

/// Step `δ` if the grid is `0, δ, 2δ, …` or `δ, 2δ, …`.
pub fn uniform_step(grid: &[f64]) -> Option<f64> {
    let last = *grid.last()?;
    let offset = if grid[0] == 0.0 { 0.0 } else { 1.0 };
    let steps = grid.len() as f64 - 1.0 + offset;
    let delta = last / steps;
    if !(delta > 0.0) {
        return None;
    }
    grid.iter()
        .enumerate()
        .all(|(k, &t)| (t - (k as f64 + offset) * delta).abs() <= 1e-9 * delta)
        .then_some(delta)
}

/// Autocovariance of fractional Gaussian noise with step `δ`.
fn fgn_autocovariance(k: usize, hurst: f64, delta: f64) -> f64 {
    let h2 = 2.0 * hurst;
    let k = k as f64;
    let p = |x: f64| x.abs().powf(h2);
    0.5 * delta.powf(h2) * (p(k + 1.0) - 2.0 * p(k) + p(k - 1.0))
}

/// Exact fBm with `Cov(B_s, B_t) = ½(s^β + t^β - |s-t|^β)` on a uniform grid.
///
/// A leading grid point at 0 gets `B(0) = 0`.
pub fn simulate_fbm_halfline<R: Rng + ?Sized>(grid: &[f64], beta: f64, rng: &mut R) -> Result<Vec<f64>> {
    crate::stats::check_beta(beta)?;
    let delta = uniform_step(grid).ok_or_else(|| {
        KarlinError::InvalidGrid("circulant embedding needs a uniform grid starting at 0 or at its step".into())
    })?;
    let leading_zero = grid[0] == 0.0;
    let m = if leading_zero { grid.len() - 1 } else { grid.len() };
    let increments = fgn(m, beta / 2.0, delta, rng)?;
    let mut out = Vec::with_capacity(grid.len());
    if leading_zero {
        out.push(0.0);
    }
    let mut acc = 0.0;
    for x in increments {
        acc += x;
        out.push(acc);
    }
    Ok(out)
}

/// `m` fractional Gaussian noise values.
fn fgn<R: Rng + ?Sized>(m: usize, hurst: f64, delta: f64, rng: &mut R) -> Result<Vec<f64>> {
    if m == 0 {
        return Ok(Vec::new());
    }
    let size = (2 * (m - 1)).max(2).next_power_of_two();
    let half = size / 2;
    let mut row: Vec<Complex64> = (0..size)
        .map(|j| {
            let k = if j <= half { j } else { size - j };
            Complex64::new(fgn_autocovariance(k, hurst, delta), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(size);
    fft.process(&mut row);
    let max = row.iter().map(|c| c.re).fold(f64::MIN, f64::max);
    let floor = -1e-9 * max;
    if let Some(bad) = row.iter().find(|c| c.re < floor) {
        return Err(KarlinError::CirculantNegative {
            eigenvalue: bad.re,
            floor,
        });
    }
    let mut w: Vec<Complex64> = row
        .iter()
        .map(|c| {
            let s = (c.re.max(0.0) / size as f64).sqrt();
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            Complex64::new(s * z1, s * z2)
        })
        .collect();
    fft.process(&mut w);
    Ok(w[..m].iter().map(|c| c.re).collect())
}
