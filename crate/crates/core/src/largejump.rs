//! Compound-Poisson large-jump field `Σ_{j≤N} V_j D_j`.
//!
//! `N ~ Poisson(2^{1-β} μ^β(E₀) C_α ε^{-α})`, `V_j` symmetric Pareto with
//! `|V_j| > ε`, `D_j` independent odd-occupancy vectors. Jumps are generated
//! in fixed-size chunks, one substream per chunk, so the field does not depend
//! on the number of worker threads. Chunk partial sums are reduced in chunk
//! order.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::Geometry;
use crate::occupancy::{OccupancyMeta, OccupancyOptions, OccupancySampler, SamplerChoice};
use crate::rng::{streams, RngStream};
use crate::stats::{sample_jump_count, sample_jump_magnitude, JumpLaw, DEFAULT_JUMP_MEAN_CAP};

/// Jumps per substream.
pub const CHUNK_SIZE: u64 = 256;
/// Chunks evaluated per parallel wave; bounds memory at `WAVE * grid size`.
const WAVE: u64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LargeJumpOptions {
    pub sampler: SamplerChoice,
    pub occupancy: OccupancyOptions,
    pub jump_mean_cap: f64,
    /// Keep the per-jump magnitudes and occupancy metadata.
    pub record_jumps: bool,
}

impl Default for LargeJumpOptions {
    fn default() -> Self {
        Self {
            sampler: SamplerChoice::Auto,
            occupancy: OccupancyOptions::default(),
            jump_mean_cap: DEFAULT_JUMP_MEAN_CAP,
            record_jumps: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub magnitude: f64,
    pub occupancy: OccupancyMeta,
    pub bits: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LargeJumpSample {
    pub values: Vec<f64>,
    pub shape: Vec<usize>,
    pub jump_count: u64,
    pub jump_mean: f64,
    pub clamped: u64,
    pub jumps: Option<Vec<Jump>>,
}

struct Partial {
    values: Vec<f64>,
    clamped: u64,
    jumps: Vec<Jump>,
}

fn simulate_chunk<R: Rng + ?Sized>(
    sampler: &OccupancySampler<'_>,
    alpha: f64,
    epsilon: f64,
    count: u64,
    record: bool,
    rng: &mut R,
) -> Result<Partial> {
    let n = sampler.geometry().len();
    let mut values = vec![0.0; n];
    let mut bits = vec![0u8; n];
    let mut clamped = 0;
    let mut jumps = Vec::new();
    for _ in 0..count {
        let v = sample_jump_magnitude(alpha, epsilon, rng);
        let meta = sampler.sample_into(&mut bits, rng)?;
        clamped += meta.clamped as u64;
        for (acc, &b) in values.iter_mut().zip(&bits) {
            if b != 0 {
                *acc += v;
            }
        }
        if record {
            jumps.push(Jump {
                magnitude: v,
                occupancy: meta,
                bits: bits.clone(),
            });
        }
    }
    Ok(Partial { values, clamped, jumps })
}

/// One draw of the large-jump field on `geometry`.
///
/// Any occupancy failure (including a heavy-tail overflow) fails the whole
/// sample.
pub fn simulate_large_jump(
    geometry: &Geometry,
    alpha: f64,
    beta: f64,
    epsilon: f64,
    options: &LargeJumpOptions,
    stream: &RngStream,
) -> Result<LargeJumpSample> {
    let law = JumpLaw::new(alpha, epsilon, geometry.mu_window(), beta)?;
    let sampler = OccupancySampler::new(geometry, beta, options.sampler, options.occupancy)?;
    let jump_count = sample_jump_count(&law, options.jump_mean_cap, &mut stream.substream(streams::JUMP_COUNT))?;
    let chunk_root = stream.substream(streams::JUMP_CHUNKS);
    let n_chunks = jump_count.div_ceil(CHUNK_SIZE);

    let mut values = vec![0.0; geometry.len()];
    let mut clamped = 0;
    let mut jumps = options.record_jumps.then(Vec::new);
    let mut start = 0;
    while start < n_chunks {
        let end = (start + WAVE).min(n_chunks);
        let partials: Vec<Result<Partial>> = (start..end)
            .into_par_iter()
            .map(|c| {
                let count = CHUNK_SIZE.min(jump_count - c * CHUNK_SIZE);
                let mut rng = chunk_root.substream(c);
                simulate_chunk(&sampler, alpha, epsilon, count, options.record_jumps, &mut rng)
            })
            .collect();
        for p in partials {
            let p = p?;
            for (acc, v) in values.iter_mut().zip(&p.values) {
                *acc += v;
            }
            clamped += p.clamped;
            if let Some(list) = jumps.as_mut() {
                list.extend(p.jumps);
            }
        }
        start = end;
    }
    Ok(LargeJumpSample {
        values,
        shape: geometry.shape(),
        jump_count,
        jump_mean: law.mean(),
        clamped,
        jumps,
    })
}

/// `E[cos(aX) - 1]` for `X` Pareto on `(1, ∞)` with density `α x^{-α-1}`.
///
/// Log-scale quadrature below `x = 1/a`, period-wise quadrature in `u = ax`
/// up to a whole number of periods, then the integrated-by-parts tail.
pub fn pareto_cos_moment(alpha: f64, a: f64) -> f64 {
    use crate::stats::adaptive_simpson;
    use std::f64::consts::TAU;

    let a = a.abs();
    if a == 0.0 {
        return 0.0;
    }
    let mut head = 0.0;
    if a < 1.0 {
        let f = |s: f64| ((a * s.exp()).cos() - 1.0) * alpha * (-alpha * s).exp();
        let top = (1.0 / a).ln();
        let pieces = (top.ceil() as usize).max(1);
        let h = top / pieces as f64;
        for k in 0..pieces {
            head += adaptive_simpson(&f, k as f64 * h, (k + 1) as f64 * h, 1e-15, 40);
        }
    }
    let u0 = a.max(1.0);
    let periods = 2000.0;
    let cut = ((u0 / TAU).ceil() + periods) * TAU;
    let g = |u: f64| (u.cos() - 1.0) * u.powf(-alpha - 1.0);
    let mut body = 0.0;
    let panel = TAU / 4.0;
    let mut lo = u0;
    while lo < cut {
        let hi = (lo + panel).min(cut);
        body += adaptive_simpson(&g, lo, hi, 1e-16, 40);
        lo = hi;
    }
    // ∫_cut^∞ (cos u - 1) u^{-α-1} du with sin(cut) = 0, cos(cut) = 1
    let tail = -cut.powf(-alpha) / alpha + (alpha + 1.0) * cut.powf(-alpha - 2.0);
    head + alpha * a.powf(alpha) * (body + tail)
}

/// `log E exp(iθ Y(t))` of the large-jump field at an index whose odd
/// probability is `p_odd`: `E[N] · p_odd · E[cos(θV) - 1]`.
pub fn large_jump_log_cf(alpha: f64, epsilon: f64, e0_mass: f64, beta: f64, p_odd: f64, theta: f64) -> Result<f64> {
    let law = JumpLaw::new(alpha, epsilon, e0_mass, beta)?;
    Ok(law.mean() * p_odd * pareto_cos_moment(alpha, theta * epsilon))
}
