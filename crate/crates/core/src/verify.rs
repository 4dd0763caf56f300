//! Monte Carlo checks against closed-form laws.
//!
//! Every check is a pure function of its stream and configuration and returns
//! a [`TestReport`]. Each check also accepts a deliberately wrong model so that
//! callers can confirm it has power.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::assembler::{assemble_with_stream, SimParams};
use crate::error::{KarlinError, Result};
use crate::geometry::Geometry;
use crate::occupancy::{
    expected_joint_odd_probability, expected_odd_probability, sample_occupancy_batch, OccupancyOptions,
    OccupancySampler, SamplerChoice, SamplerKind,
};
use crate::rng::{replicates, RngStream};
use crate::smalljump::{simulate_gaussian, CovarianceKernel, GaussianBackend};
use crate::stats::Sibuya;

pub const DEFAULT_SIGNIFICANCE: f64 = 1e-3;
pub const DEFAULT_CF_TOLERANCE: f64 = 0.05;
/// Number of standard errors allowed for moment comparisons.
pub const SE_MULTIPLIER: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    /// What `statistic` is compared to: a significance level when `p_value`
    /// is set, otherwise an upper bound.
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub replicates: u64,
    pub passed: bool,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl TestReport {
    pub fn summary(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        match self.p_value {
            Some(p) => format!(
                "{verdict} {}: statistic {}, p = {:.3e} (alpha {})",
                self.name,
                num(self.statistic),
                p,
                self.threshold
            ),
            None => format!(
                "{verdict} {}: statistic {} vs threshold {}",
                self.name,
                num(self.statistic),
                num(self.threshold)
            ),
        }
    }
}

fn num(x: f64) -> String {
    if x != 0.0 && x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

/// Pearson statistic and degrees of freedom, pooling adjacent bins until each
/// expected count is at least 5.
pub fn chi_square_gof(observed: &[u64], expected: &[f64]) -> (f64, usize) {
    assert_eq!(observed.len(), expected.len());
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let (mut o, mut e) = (0.0, 0.0);
    for (&ob, &ex) in observed.iter().zip(expected) {
        o += ob as f64;
        e += ex;
        if e >= 5.0 {
            pooled.push((o, e));
            o = 0.0;
            e = 0.0;
        }
    }
    if e > 0.0 || o > 0.0 {
        match pooled.last_mut() {
            Some(last) => {
                last.0 += o;
                last.1 += e;
            }
            None => pooled.push((o, e)),
        }
    }
    let stat = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, pooled.len().saturating_sub(1))
}

/// Two-sample chi-square statistic on binned counts and its degrees of freedom.
pub fn chi_square_two_sample(a: &[u64], b: &[u64]) -> (f64, usize) {
    assert_eq!(a.len(), b.len());
    let na: u64 = a.iter().sum();
    let nb: u64 = b.iter().sum();
    let ka = (nb as f64 / na as f64).sqrt();
    let kb = (na as f64 / nb as f64).sqrt();
    let mut stat = 0.0;
    let mut bins = 0usize;
    for (&x, &y) in a.iter().zip(b) {
        if x + y == 0 {
            continue;
        }
        bins += 1;
        stat += (ka * x as f64 - kb * y as f64).powi(2) / (x + y) as f64;
    }
    (stat, bins.saturating_sub(1))
}

pub fn chi_square_p_value(stat: f64, dof: usize) -> f64 {
    if dof == 0 {
        return 1.0;
    }
    ChiSquared::new(dof as f64).expect("positive dof").sf(stat)
}

/// Asymptotic Kolmogorov tail `P(K > λ)`.
fn kolmogorov_tail(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=200 {
        let k = k as f64;
        let term = 2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp();
        sum += term;
        if term.abs() < 1e-16 {
            break;
        }
    }
    sum.clamp(0.0, 1.0)
}

/// Two-sample Kolmogorov–Smirnov statistic and asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mut a = x.to_vec();
    let mut b = y.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (n, m) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < a.len() && j < b.len() {
        let v = a[i].min(b[j]);
        while i < a.len() && a[i] <= v {
            i += 1;
        }
        while j < b.len() && b[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let ne = (n * m / (n + m)).sqrt();
    (d, kolmogorov_tail((ne + 0.12 + 0.11 / ne) * d))
}

/// `n` items from chunks of `chunk` consecutive draws, chunk `c` drawn from
/// `stream.substream(c)`.
fn chunked<T, F>(stream: &RngStream, n: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut RngStream) -> T + Sync,
{
    let n_chunks = n.div_ceil(chunk);
    let parts: Vec<Vec<T>> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream.substream(c as u64);
            let count = chunk.min(n - c * chunk);
            (0..count).map(|_| f(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Chi-square GOF of Sibuya draws on `k = 1..50` plus a tail bin, and the
/// unit mass `P(Q = 1) = β` within 3 SE. `model_beta` is the law tested
/// against (equal to `beta` for the honest check).
pub fn check_sibuya_gof(beta: f64, model_beta: f64, n_samples: usize, stream: &RngStream) -> Result<TestReport> {
    const BINS: u64 = 50;
    let law = Sibuya::new(beta)?;
    let model = Sibuya::new(model_beta)?;
    let draws = chunked(stream, n_samples, 10_000, |rng| law.sample(rng));
    let mut observed = vec![0u64; BINS as usize + 1];
    for q in draws {
        observed[(q.min(BINS + 1) - 1) as usize] += 1;
    }
    let n = n_samples as f64;
    let mut expected: Vec<f64> = (1..=BINS).map(|k| n * model.pmf(k)).collect();
    let head: f64 = expected.iter().sum();
    expected.push((n - head).max(0.0));
    let (stat, dof) = chi_square_gof(&observed, &expected);
    let p = chi_square_p_value(stat, dof);
    let freq1 = observed[0] as f64 / n;
    let se1 = (model_beta * (1.0 - model_beta) / n).sqrt();
    let z1 = (freq1 - model_beta) / se1;
    Ok(TestReport {
        name: format!("sibuya-gof beta={beta} model={model_beta}"),
        statistic: stat,
        threshold: DEFAULT_SIGNIFICANCE,
        p_value: Some(p),
        replicates: n_samples as u64,
        passed: p > DEFAULT_SIGNIFICANCE && z1.abs() <= SE_MULTIPLIER,
        seed: stream.seed(),
        notes: vec![format!("P(Q=1) = {freq1:.5} (z = {z1:.2}), dof = {dof}")],
    })
}

fn default_indices(geometry: &Geometry) -> Vec<usize> {
    let n = geometry.len();
    let mut idx = vec![0, n / 4, n / 2, (3 * n) / 4, n - 1];
    idx.dedup();
    idx
}

/// Empirical `E D_t` and `P(D_s = D_t = 1)` against the closed forms.
///
/// `model_beta` is the β used for the closed forms. Indices default to a
/// spread of up to five grid points; every pair among them is compared.
/// Which occupancy moments a check compares.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Moments {
    Marginal,
    Pairwise,
    Both,
}

#[allow(clippy::too_many_arguments)]
pub fn check_occupancy_moments(
    geometry: &Geometry,
    beta: f64,
    model_beta: f64,
    sampler: SamplerChoice,
    moments: Moments,
    indices: Option<&[usize]>,
    n_replicates: usize,
    stream: &RngStream,
) -> Result<TestReport> {
    let s = OccupancySampler::new(geometry, beta, sampler, OccupancyOptions::default())?;
    let batch = sample_occupancy_batch(&s, n_replicates, stream)?;
    let idx = indices.map(<[usize]>::to_vec).unwrap_or_else(|| default_indices(geometry));
    let m = batch.samples.len() as f64;
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    let z = |freq: f64, p: f64| {
        let se = (p * (1.0 - p) / m).sqrt();
        if se == 0.0 {
            if (freq - p).abs() > 0.0 { f64::INFINITY } else { 0.0 }
        } else {
            (freq - p) / se
        }
    };
    let marginal = moments != Moments::Pairwise;
    let pairwise = moments != Moments::Marginal;
    for &t in idx.iter().filter(|_| marginal) {
        let freq = batch.samples.iter().filter(|d| d.bits[t] == 1).count() as f64 / m;
        let p = expected_odd_probability(geometry, model_beta, t);
        let zt = z(freq, p);
        worst = worst.max(zt.abs());
        notes.push(format!("mean[{t}] {freq:.5} vs {p:.5} (z = {zt:.2})"));
    }
    for (k, &a) in idx.iter().enumerate().filter(|_| pairwise) {
        for &b in &idx[k + 1..] {
            let freq = batch.samples.iter().filter(|d| d.bits[a] == 1 && d.bits[b] == 1).count() as f64 / m;
            let p = expected_joint_odd_probability(geometry, model_beta, a, b);
            let zt = z(freq, p);
            worst = worst.max(zt.abs());
            notes.push(format!("pair[{a},{b}] {freq:.5} vs {p:.5} (z = {zt:.2})"));
        }
    }
    if batch.aborted > 0 {
        notes.push(format!("{} replicates aborted on overflow", batch.aborted));
    }
    let kind = match s.kind() {
        SamplerKind::Fast => "fast",
        SamplerKind::Generic => "generic",
    };
    Ok(TestReport {
        name: format!(
            "occupancy-{} {} {kind} beta={beta} model={model_beta}",
            match moments {
                Moments::Marginal => "marginal",
                Moments::Pairwise => "pairwise",
                Moments::Both => "moments",
            },
            geometry.name()
        ),
        statistic: worst,
        threshold: SE_MULTIPLIER,
        p_value: None,
        replicates: n_replicates as u64,
        passed: worst <= SE_MULTIPLIER,
        seed: stream.seed(),
        notes,
    })
}

fn outcome_code(bits: &[u8]) -> usize {
    bits.iter().enumerate().map(|(i, &b)| (b as usize) << i).sum()
}

/// Two-sample chi-square on the joint law of `D` (fast against generic).
///
/// `prob_scale` multiplies the fast sampler's cell probabilities; 1 is the
/// honest check.
pub fn check_sampler_equivalence(
    geometry: &Geometry,
    beta: f64,
    prob_scale: f64,
    n_replicates: usize,
    stream: &RngStream,
) -> Result<TestReport> {
    if geometry.len() > 4 {
        return Err(KarlinError::InvalidGrid(format!(
            "joint-law comparison needs at most 4 grid points, got {}",
            geometry.len()
        )));
    }
    let fast_opts = OccupancyOptions {
        prob_scale,
        ..Default::default()
    };
    let fast = OccupancySampler::new(geometry, beta, SamplerChoice::Fast, fast_opts)?;
    let generic = OccupancySampler::new(geometry, beta, SamplerChoice::Generic, OccupancyOptions::default())?;
    let a = sample_occupancy_batch(&fast, n_replicates, &stream.substream(0))?;
    let b = sample_occupancy_batch(&generic, n_replicates, &stream.substream(1))?;
    let outcomes = 1 << geometry.len();
    let tally = |samples: &[crate::occupancy::OddOccupancy]| {
        let mut c = vec![0u64; outcomes];
        for s in samples {
            c[outcome_code(&s.bits)] += 1;
        }
        c
    };
    let (stat, dof) = chi_square_two_sample(&tally(&a.samples), &tally(&b.samples));
    let p = chi_square_p_value(stat, dof);
    Ok(TestReport {
        name: format!("sampler-equivalence {} beta={beta} scale={prob_scale}", geometry.name()),
        statistic: stat,
        threshold: DEFAULT_SIGNIFICANCE,
        p_value: Some(p),
        replicates: n_replicates as u64,
        passed: p > DEFAULT_SIGNIFICANCE,
        seed: stream.seed(),
        notes: vec![format!("dof = {dof}, generic aborts = {}", b.aborted)],
    })
}

/// `E cos(θ Y(t))` of the target law: `exp(-μ^β |θ|^α)` for α < 2 and the
/// Gaussian `exp(-μ^β θ²/2)` at α = 2.
pub fn target_cf(alpha: f64, beta: f64, mu: f64, theta: f64) -> f64 {
    let scale = mu.powf(beta);
    if alpha == 2.0 {
        (-scale * theta * theta / 2.0).exp()
    } else {
        (-scale * theta.abs().powf(alpha)).exp()
    }
}

/// Empirical characteristic function of the assembled field at one index.
///
/// `model` gives the (α, β) of the target; pass the simulated values for the
/// honest check.
#[allow(clippy::too_many_arguments)]
pub fn check_marginal_cf(
    geometry: &Geometry,
    params: &SimParams,
    model: (f64, f64),
    index: usize,
    thetas: &[f64],
    n_replicates: usize,
    tolerance: f64,
    stream: &RngStream,
) -> Result<TestReport> {
    let values: Vec<Result<f64>> =
        replicates(stream, n_replicates, |rng| Ok(assemble_with_stream(geometry, params, rng)?.combined.values[index]));
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let mu = geometry.mu_index_set(index);
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for &theta in thetas {
        let emp = values.iter().map(|y| (theta * y).cos()).sum::<f64>() / n_replicates as f64;
        let target = target_cf(model.0, model.1, mu, theta);
        worst = worst.max((emp - target).abs());
        notes.push(format!("theta {theta}: {emp:.4} vs {target:.4}"));
    }
    Ok(TestReport {
        name: format!(
            "marginal-cf {} alpha={} beta={} model=({}, {})",
            geometry.name(),
            params.alpha,
            params.beta,
            model.0,
            model.1
        ),
        statistic: worst,
        threshold: tolerance,
        p_value: None,
        replicates: n_replicates as u64,
        passed: worst <= tolerance,
        seed: stream.seed(),
        notes,
    })
}

/// Sample covariance of a Gaussian backend on `indices` against the kernel
/// with `model_beta`, entrywise within 3 SE plus `slack`.
#[allow(clippy::too_many_arguments)]
pub fn check_gaussian_covariance(
    geometry: &Geometry,
    beta: f64,
    model_beta: f64,
    backend: GaussianBackend,
    aggregation_tolerance: f64,
    indices: &[usize],
    slack: f64,
    n_paths: usize,
    stream: &RngStream,
) -> Result<TestReport> {
    let paths: Vec<Result<Vec<f64>>> = replicates(stream, n_paths, |rng| {
        let draw = simulate_gaussian(geometry, beta, backend, aggregation_tolerance, OccupancyOptions::default(), rng)?;
        Ok(indices.iter().map(|&i| draw.values[i]).collect())
    });
    let paths: Vec<Vec<f64>> = paths.into_iter().collect::<Result<_>>()?;
    let kernel = CovarianceKernel::new(geometry, model_beta)?;
    let n = n_paths as f64;
    let mut worst: f64 = 0.0;
    let mut notes = Vec::new();
    for (r, &a) in indices.iter().enumerate() {
        for (c, &b) in indices.iter().enumerate().skip(r) {
            let prods: Vec<f64> = paths.iter().map(|p| p[r] * p[c]).collect();
            let mean = prods.iter().sum::<f64>() / n;
            let var = prods.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            let target = kernel.covariance(a, b);
            // excess over the allowed band, in units of the band
            let band = SE_MULTIPLIER * se + slack;
            let ratio = if band > 0.0 { (mean - target).abs() / band } else { 0.0 };
            worst = worst.max(ratio);
            if ratio > 0.5 {
                notes.push(format!("cov[{a},{b}] {mean:.4} vs {target:.4} (band {band:.4})"));
            }
        }
    }
    Ok(TestReport {
        name: format!(
            "gaussian-covariance {} {} beta={beta} model={model_beta}",
            geometry.name(),
            backend.resolve(geometry).name()
        ),
        statistic: worst,
        threshold: 1.0,
        p_value: None,
        replicates: n_paths as u64,
        passed: worst <= 1.0,
        seed: stream.seed(),
        notes,
    })
}

/// Point estimate and standard error of `E f(X)` over draws.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
