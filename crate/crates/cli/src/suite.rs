//! The named statistical checks behind `ksf verify`.

use anyhow::{bail, Result};

use karlin_core::assembler::{choose_epsilon, epsilon_bound, EpsilonChoice, SimParams, SkipGaussian};
use karlin_core::geometry::{linspace01, Geometry, SphereIndex};
use karlin_core::occupancy::SamplerChoice;
use karlin_core::smalljump::GaussianBackend;
use karlin_core::stats::c_alpha;
use karlin_core::verify::{
    check_gaussian_covariance, check_marginal_cf, check_occupancy_moments, check_sampler_equivalence, check_sibuya_gof,
    Moments, TestReport, DEFAULT_CF_TOLERANCE,
};
use karlin_core::RngStream;

pub const CHECKS: &[&str] = &[
    "sibuya",
    "marginal",
    "pairwise",
    "equivalence",
    "circulant",
    "cholesky",
    "aggregation",
    "cf",
    "epsilon",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    Full,
    /// A tenth of the full sample sizes.
    Quick,
}

impl Scale {
    fn n(self, full: usize) -> usize {
        match self {
            Scale::Full => full,
            Scale::Quick => (full / 10).max(1),
        }
    }
}

/// The lattices the occupancy laws are checked on, with the samplers and
/// memory parameters that apply to each.
pub fn occupancy_cases() -> Vec<(Geometry, Vec<(SamplerChoice, f64)>)> {
    let both = vec![(SamplerChoice::Fast, 0.3), (SamplerChoice::Fast, 0.8), (SamplerChoice::Generic, 0.8)];
    let generic = vec![(SamplerChoice::Generic, 0.8)];
    let axis: Vec<f64> = (1..=5).map(|i| i as f64 / 5.0).collect();
    vec![
        (Geometry::half_line((1..=16).map(|i| i as f64 / 16.0).collect()).expect("valid grid"), both.clone()),
        (Geometry::rectangle(axis.clone(), axis).expect("valid grid"), both),
        (Geometry::chentsov(linspace01(5), linspace01(5)).expect("valid grid"), generic.clone()),
        (Geometry::sphere_lattice(6, 5, SphereIndex::Pinned).expect("valid grid"), generic),
    ]
}

fn moments(which: Moments, scale: Scale, seed: u64, stream_base: u64) -> Result<Vec<TestReport>> {
    let mut out = Vec::new();
    let mut id = stream_base;
    for (g, cases) in occupancy_cases() {
        for (sampler, beta) in cases {
            id += 1;
            out.push(check_occupancy_moments(&g, beta, beta, sampler, which, None, scale.n(100_000), &RngStream::new(seed, id))?);
        }
    }
    Ok(out)
}

/// Matching the fast samplers against the generic one, plus a control with
/// inflated cell probabilities whose report passes when the test rejects it.
fn equivalence(scale: Scale, seed: u64) -> Result<Vec<TestReport>> {
    let n = scale.n(100_000);
    let line = Geometry::half_line(vec![0.25, 0.5, 0.75, 1.0])?;
    let rect = Geometry::rectangle(vec![0.5, 1.0], vec![0.5, 1.0])?;
    let mut out = vec![
        check_sampler_equivalence(&line, 0.5, 1.0, n, &RngStream::new(seed, 301))?,
        check_sampler_equivalence(&rect, 0.5, 1.0, n, &RngStream::new(seed, 302))?,
    ];
    let mut control = check_sampler_equivalence(&line, 0.5, 1.5, n, &RngStream::new(seed, 303))?;
    control.notes.push(format!("misspecified control; rejected = {}", !control.passed));
    control.name = format!("control {}", control.name);
    control.passed = !control.passed;
    out.push(control);
    Ok(out)
}

fn aggregation_cases() -> Result<Vec<Geometry>> {
    Ok(vec![
        Geometry::half_line(vec![0.25, 0.5, 0.75, 1.0])?,
        Geometry::rectangle(vec![0.5, 1.0], vec![0.5, 1.0])?,
        Geometry::chentsov(vec![0.3, 1.0], vec![0.2, 0.9])?,
        Geometry::sphere_lattice(3, 3, SphereIndex::Pinned)?,
    ])
}

fn cf_cases() -> Vec<SimParams> {
    let mut small = SimParams::new(0.5, 0.8);
    small.epsilon = EpsilonChoice::Fixed(1e-4);
    small.skip_gaussian = SkipGaussian::Yes;
    vec![small, SimParams::new(1.2, 0.8), SimParams::new(1.8, 0.8)]
}

/// `choose_epsilon` against the bound it inverts, and the closed form at α = 1.
pub fn epsilon_report(seed: u64) -> Result<TestReport> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in 0..=19 {
        let alpha = 1.0 + 0.05 * k as f64;
        for tol in [1e-3, 0.01, 0.05, 0.2] {
            let eps = choose_epsilon(alpha, tol)?;
            worst = worst.max((epsilon_bound(alpha, eps)? - tol).abs() / tol);
            count += 1;
        }
    }
    let at_one = choose_epsilon(1.0, 0.01)?;
    let closed = (0.02f64).powi(2) * c_alpha(1.0)?;
    let closed_dev = (at_one - closed).abs() / closed;
    let quoted_dev = (at_one - 2.546e-4).abs() / 2.546e-4;
    Ok(TestReport {
        name: "epsilon-selection".into(),
        statistic: worst,
        threshold: 1e-12,
        p_value: None,
        replicates: count,
        passed: worst <= 1e-12 && closed_dev <= 1e-12 && quoted_dev < 5e-4,
        seed,
        notes: vec![format!("alpha = 1, tol = 0.01: epsilon = {at_one:.6e} (closed form {closed:.6e})")],
    })
}

pub fn run_check(name: &str, scale: Scale, seed: u64) -> Result<Vec<TestReport>> {
    Ok(match name {
        "sibuya" => [0.2, 0.5, 0.8]
            .iter()
            .enumerate()
            .map(|(k, &b)| check_sibuya_gof(b, b, scale.n(1_000_000), &RngStream::new(seed, 100 + k as u64)))
            .collect::<karlin_core::Result<_>>()?,
        "marginal" => moments(Moments::Marginal, scale, seed, 200)?,
        "pairwise" => moments(Moments::Pairwise, scale, seed, 250)?,
        "equivalence" => equivalence(scale, seed)?,
        "circulant" | "cholesky" => {
            let backend = if name == "circulant" { GaussianBackend::Circulant } else { GaussianBackend::Cholesky };
            let g = Geometry::half_line((1..=8).map(|i| i as f64 / 8.0).collect())?;
            let idx: Vec<usize> = (0..8).collect();
            [0.3, 0.8]
                .iter()
                .enumerate()
                .map(|(k, &b)| {
                    check_gaussian_covariance(&g, b, b, backend, 0.02, &idx, 0.0, scale.n(10_000), &RngStream::new(seed, 400 + k as u64 + 10 * (name == "cholesky") as u64))
                })
                .collect::<karlin_core::Result<_>>()?
        }
        "aggregation" => aggregation_cases()?
            .iter()
            .enumerate()
            .map(|(k, g)| {
                let idx: Vec<usize> = (0..g.len()).collect();
                check_gaussian_covariance(g, 0.8, 0.8, GaussianBackend::Aggregation, 0.02, &idx, 0.02, scale.n(2000), &RngStream::new(seed, 500 + k as u64))
            })
            .collect::<karlin_core::Result<_>>()?,
        "cf" => {
            let g = Geometry::half_line(vec![1.0])?;
            cf_cases()
                .iter()
                .enumerate()
                .map(|(k, p)| {
                    check_marginal_cf(&g, p, (p.alpha, p.beta), 0, &[0.5, 1.0, 2.0], scale.n(100_000), DEFAULT_CF_TOLERANCE, &RngStream::new(seed, 600 + k as u64))
                })
                .collect::<karlin_core::Result<_>>()?
        }
        "epsilon" => vec![epsilon_report(seed)?],
        other => bail!("unknown check {other:?}; available: {}", CHECKS.join(", ")),
    })
}
