//! Sampling primitives and analytic constants.
//!
//! The stable constant follows the series-representation convention
//! `C_α = (∫₀^∞ x^{-α} sin x dx)^{-1}`, which normalizes the compound-Poisson
//! series to the characteristic function `exp(-μ^β(A)|θ|^α)` on the whole range
//! `α ∈ (0,2)`. The integral `∫₀^∞ x^{-α-1} sin x dx` converges only for
//! `α < 1`, so it cannot serve as the definition.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{check_open, KarlinError, Result};

/// Default cap on the jump-count Poisson mean.
pub const DEFAULT_JUMP_MEAN_CAP: f64 = 1e8;
/// Default cap on a single Sibuya draw in the generic occupancy sampler.
pub const DEFAULT_SIBUYA_CAP: u64 = 100_000_000;

/// Stability index α ∈ (0,2] and Karlin index β ∈ (0,1).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StableParams {
    alpha: f64,
    beta: f64,
}

impl StableParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 2.0) {
            return Err(KarlinError::Domain {
                name: "alpha",
                value: alpha,
                expected: "(0, 2]",
            });
        }
        check_beta(beta)?;
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Hurst index of the Gaussian (α = 2) member of the family.
    pub fn hurst(&self) -> f64 {
        self.beta / 2.0
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<()> {
    check_open("beta", beta, 0.0, 1.0, "(0, 1)")
}

pub(crate) fn check_alpha_jump(alpha: f64) -> Result<()> {
    check_open("alpha", alpha, 0.0, 2.0, "(0, 2)")
}

/// `C_α = (1-α) / (Γ(2-α) cos(πα/2))`, with the limit `2/π` at α = 1.
///
/// Written as `x / (Γ(1+x) sin(πx/2))` with `x = 1-α`, which has no
/// cancellation near α = 1.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_alpha_jump(alpha)?;
    let x = 1.0 - alpha;
    if x == 0.0 {
        return Ok(2.0 / PI);
    }
    Ok(x / (gamma(1.0 + x) * (PI * x / 2.0).sin()))
}

/// Standard deviation of the jumps of magnitude at most ε:
/// `(αC_α/(2-α))^{1/2} ε^{1-α/2}`.
pub fn sigma_alpha(alpha: f64, epsilon: f64) -> Result<f64> {
    let c = c_alpha(alpha)?;
    if epsilon.is_nan() || epsilon < 0.0 {
        return Err(KarlinError::Domain {
            name: "epsilon",
            value: epsilon,
            expected: "[0, inf)",
        });
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    Ok((alpha * c / (2.0 - alpha)).sqrt() * epsilon.powf(1.0 - alpha / 2.0))
}

/// Sibuya(β) law: `P(Q = k) = β/Γ(1-β) · Γ(k-β)/Γ(k+1)`, pgf `1 - (1-z)^β`.
///
/// Draws use the mixed-Poisson identity `Q = 1 + Poisson(G₁ G_{1-β} / G_β)`
/// with independent standard Gamma variables.
#[derive(Clone, Debug)]
pub struct Sibuya {
    beta: f64,
    log_norm: f64,
    g_beta: Gamma<f64>,
    g_complement: Gamma<f64>,
}

impl Sibuya {
    pub fn new(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        Ok(Self {
            beta,
            log_norm: beta.ln() - ln_gamma(1.0 - beta),
            g_beta: Gamma::new(beta, 1.0).expect("shape validated"),
            g_complement: Gamma::new(1.0 - beta, 1.0).expect("shape validated"),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Probability mass at `k`, evaluated in log space. Zero for `k = 0`.
    pub fn pmf(&self, k: u64) -> f64 {
        if k == 0 {
            return 0.0;
        }
        let k = k as f64;
        (self.log_norm + ln_gamma(k - self.beta) - ln_gamma(k + 1.0)).exp()
    }

    /// The random Poisson parameter `Λ_β = G₁ G_{1-β} / G_β`.
    ///
    /// May be `+inf` when `G_β` underflows, which happens for small β.
    pub fn sample_parameter<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let g1: f64 = Exp1.sample(rng);
        let gc = self.g_complement.sample(rng);
        let gb = self.g_beta.sample(rng);
        g1 * gc / gb
    }

    /// An uncapped draw. Values beyond `u64::MAX` saturate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let lambda = self.sample_parameter(rng);
        sample_poisson(lambda, rng).saturating_add(1)
    }

    /// A draw that fails with [`KarlinError::HeavyTailOverflow`] above `cap`.
    pub fn sample_capped<R: Rng + ?Sized>(&self, cap: u64, rng: &mut R) -> Result<u64> {
        let lambda = self.sample_parameter(rng);
        if !lambda.is_finite() || lambda >= Poisson::<f64>::MAX_LAMBDA {
            return Err(KarlinError::HeavyTailOverflow { cap });
        }
        let q = sample_poisson(lambda, rng).saturating_add(1);
        if q > cap {
            Err(KarlinError::HeavyTailOverflow { cap })
        } else {
            Ok(q)
        }
    }
}

pub fn sibuya_pmf(beta: f64, k: u64) -> Result<f64> {
    Ok(Sibuya::new(beta)?.pmf(k))
}

pub fn sample_sibuya<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<u64> {
    Ok(Sibuya::new(beta)?.sample(rng))
}

pub fn sample_sibuya_parameter<R: Rng + ?Sized>(beta: f64, rng: &mut R) -> Result<f64> {
    Ok(Sibuya::new(beta)?.sample_parameter(rng))
}

/// `P(Λ_β > x)`.
///
/// Conditioning on `B = G_β/(G_β+G_{1-β}) ~ Beta(β, 1-β)` gives
/// `P(Λ > x) = E exp(-x B/(1-B))`, integrated after the substitution
/// `b = s^{1/β}` which removes the endpoint singularity at zero.
pub fn lambda_tail_probability(beta: f64, x: f64) -> Result<f64> {
    check_beta(beta)?;
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let integrand = |s: f64| {
        let b = s.powf(1.0 / beta);
        if b >= 1.0 {
            return 0.0;
        }
        (-x * b / (1.0 - b)).exp() * (1.0 - b).powf(-beta)
    };
    let norm = (PI * beta).sin() / (PI * beta);
    // most of the mass sits near s ~ x^{-β}; split there
    let knee = x.powf(-beta).min(0.5);
    let head = adaptive_simpson(&integrand, 0.0, knee, 1e-13, 50);
    let tail = adaptive_simpson(&integrand, knee, 1.0, 1e-13, 50);
    Ok((norm * (head + tail)).clamp(0.0, 1.0))
}

/// Poisson jump count `N_{α,ε}` and its mean `2^{1-β} μ^β(E₀) C_α ε^{-α}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpLaw {
    pub alpha: f64,
    pub epsilon: f64,
    pub e0_mass: f64,
    pub beta: f64,
}

impl JumpLaw {
    pub fn new(alpha: f64, epsilon: f64, e0_mass: f64, beta: f64) -> Result<Self> {
        check_alpha_jump(alpha)?;
        check_beta(beta)?;
        if !(epsilon > 0.0) || epsilon.is_infinite() {
            return Err(KarlinError::Domain {
                name: "epsilon",
                value: epsilon,
                expected: "(0, inf)",
            });
        }
        if !(e0_mass > 0.0) || e0_mass.is_infinite() {
            return Err(KarlinError::Domain {
                name: "e0_mass",
                value: e0_mass,
                expected: "(0, inf)",
            });
        }
        Ok(Self {
            alpha,
            epsilon,
            e0_mass,
            beta,
        })
    }

    /// Control-measure mass `2^{1-β} μ^β(E₀)`.
    pub fn control_mass(&self) -> f64 {
        2f64.powf(1.0 - self.beta) * self.e0_mass.powf(self.beta)
    }

    pub fn mean(&self) -> f64 {
        let c = c_alpha(self.alpha).expect("alpha validated");
        self.control_mass() * c * self.epsilon.powf(-self.alpha)
    }
}

pub fn sample_jump_count<R: Rng + ?Sized>(law: &JumpLaw, mean_cap: f64, rng: &mut R) -> Result<u64> {
    let mean = law.mean();
    if !(mean <= mean_cap) {
        return Err(KarlinError::ResolutionTooFine { mean, cap: mean_cap });
    }
    Ok(sample_poisson(mean, rng))
}

/// Symmetric Pareto jump `S·ε·U^{-1/α}` with density `ε^α (α/2)|y|^{-α-1}` on `|y| > ε`.
pub fn sample_jump_magnitude<R: Rng + ?Sized>(alpha: f64, epsilon: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(Open01);
    let magnitude = epsilon * u.powf(-1.0 / alpha);
    if rng.random::<bool>() {
        magnitude
    } else {
        -magnitude
    }
}

/// Poisson draw that accepts a zero mean and saturates beyond the sampler's range.
pub(crate) fn sample_poisson<R: Rng + ?Sized>(lambda: f64, rng: &mut R) -> u64 {
    if !(lambda > 0.0) {
        return 0;
    }
    if lambda >= Poisson::<f64>::MAX_LAMBDA {
        return u64::MAX;
    }
    let draw: f64 = Poisson::new(lambda).expect("positive finite mean").sample(rng);
    draw as u64
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

pub(crate) fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn recurse(
        f: &impl Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use approx::assert_relative_eq;

    /// `∫₀^∞ x^{-α} sin x dx` through `x^{-α} = Γ(α)^{-1} ∫₀^∞ t^{α-1} e^{-xt} dt`,
    /// i.e. `Γ(α)^{-1} ∫_ℝ e^{αu} / (1 + e^{2u}) du` after `t = e^u`. Trapezoid
    /// on a smooth, doubly exponentially decaying integrand.
    fn sine_moment_quadrature(alpha: f64) -> f64 {
        let h = 0.005;
        let lo = -40.0 / alpha;
        let hi = 40.0 / (2.0 - alpha);
        let n = ((hi - lo) / h).ceil() as usize;
        let mut acc = 0.0;
        for i in 0..=n {
            let u = lo + i as f64 * h;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            let f = if u < 0.0 {
                (alpha * u).exp() / (1.0 + (2.0 * u).exp())
            } else {
                ((alpha - 2.0) * u).exp() / (1.0 + (-2.0 * u).exp())
            };
            acc += w * f;
        }
        acc * h / gamma(alpha)
    }

    fn c_alpha_oracle(alpha: f64) -> f64 {
        1.0 / sine_moment_quadrature(alpha)
    }

    #[test]
    fn c_alpha_closed_form_values() {
        assert_relative_eq!(c_alpha(1.0).unwrap(), 2.0 / PI, max_relative = 1e-15);
        assert_relative_eq!(c_alpha(0.5).unwrap(), 0.797_884_560_802_865_4, max_relative = 1e-12);
    }

    #[test]
    fn c_alpha_matches_quadrature() {
        for &alpha in &[0.3, 0.7, 1.0, 1.3, 1.7, 1.95] {
            let exact = c_alpha(alpha).unwrap();
            let oracle = c_alpha_oracle(alpha);
            assert_relative_eq!(exact, oracle, max_relative = 1e-8);
        }
    }

    #[test]
    fn c_alpha_continuous_at_one() {
        let at = c_alpha(1.0).unwrap();
        for d in [1e-10, 1e-12, 1e-14] {
            assert!((c_alpha(1.0 - d).unwrap() - at).abs() < 1e-9);
            assert!((c_alpha(1.0 + d).unwrap() - at).abs() < 1e-9);
        }
        // one-sided difference quotients agree: no kink at 1
        let d = 1e-5;
        let left = (at - c_alpha(1.0 - d).unwrap()) / d;
        let right = (c_alpha(1.0 + d).unwrap() - at) / d;
        assert!((left - right).abs() < 1e-3);
    }

    #[test]
    fn c_alpha_vanishes_towards_two() {
        // the quadrature oracle decreases monotonically on the approach to α = 2
        let alphas = [1.9, 1.95, 1.99, 1.999];
        let values: Vec<f64> = alphas.iter().map(|&a| c_alpha(a).unwrap()).collect();
        for w in values.windows(2) {
            assert!(w[1] < w[0]);
        }
        assert!(values[3] < 2e-3);
        assert_relative_eq!(values[1], c_alpha_oracle(1.95), max_relative = 1e-8);
    }

    #[test]
    fn c_alpha_rejects_out_of_range() {
        for a in [0.0, -1.0, 2.0, 2.5, f64::NAN] {
            assert!(c_alpha(a).is_err());
        }
    }

    #[test]
    fn sigma_alpha_values() {
        assert_relative_eq!(
            sigma_alpha(1.0, 0.01).unwrap(),
            (2.0 / PI).sqrt() * 0.1,
            max_relative = 1e-14
        );
        assert_eq!(sigma_alpha(1.3, 0.0).unwrap(), 0.0);
        assert!(sigma_alpha(1.3, -1.0).is_err());
        assert!(sigma_alpha(2.0, 0.1).is_err());
    }

    #[test]
    fn sigma_alpha_matches_quadrature() {
        // ∫_{-ε}^{ε} v² (αC/2)|v|^{-1-α} dv = αC ∫₀^ε v^{1-α} dv; v = ε e^{-u}
        for &(alpha, eps) in &[(1.8f64, 0.1f64), (0.3, 0.5), (0.7, 0.01), (1.0, 0.2), (1.3, 1e-3), (1.7, 0.05), (1.95, 0.3)] {
            let c = c_alpha_oracle(alpha);
            let p = 2.0 - alpha;
            let upper = 60.0 / p;
            let n = 400_000;
            let h = upper / n as f64;
            let mut acc = 0.0;
            for i in 0..=n {
                let u = i as f64 * h;
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                acc += w * (-p * u).exp();
            }
            let moment = alpha * c * eps.powf(p) * acc * h;
            assert_relative_eq!(sigma_alpha(alpha, eps).unwrap(), moment.sqrt(), max_relative = 1e-8);
        }
    }

    #[test]
    fn sigma_alpha_increases_in_epsilon() {
        let mut prev = 0.0;
        for i in 1..50 {
            let s = sigma_alpha(1.4, i as f64 * 0.02).unwrap();
            assert!(s > prev);
            prev = s;
        }
    }

    #[test]
    fn sibuya_pmf_against_recursion() {
        // P(k+1)/P(k) = (k-β)/(k+1)
        for &beta in &[0.1, 0.5, 0.8, 0.95] {
            let law = Sibuya::new(beta).unwrap();
            let mut p = beta;
            for k in 1..2000u64 {
                assert_relative_eq!(law.pmf(k), p, max_relative = 1e-10);
                p *= (k as f64 - beta) / (k as f64 + 1.0);
            }
        }
        assert_relative_eq!(sibuya_pmf(0.5, 2).unwrap(), 0.125, max_relative = 1e-13);
        assert_relative_eq!(sibuya_pmf(0.5, 1).unwrap(), 0.5, max_relative = 1e-13);
    }

    #[test]
    fn sibuya_pmf_partial_sums_below_one() {
        let law = Sibuya::new(0.6).unwrap();
        let mut total = 0.0;
        let mut last = 0.0;
        for k in 1..=100_000 {
            total += law.pmf(k);
            assert!(total < 1.0);
            last = total;
        }
        // remaining tail ~ k^{-β}/Γ(1-β)
        let tail = 100_000f64.powf(-0.6) / gamma(0.4);
        assert_relative_eq!(1.0 - last, tail, max_relative = 1e-3);
    }

    #[test]
    fn sibuya_pmf_heavy_tail_asymptotic() {
        for &beta in &[0.2, 0.5, 0.8] {
            let k = 10_000u64;
            let asym = beta / gamma(1.0 - beta) * (k as f64).powf(-1.0 - beta);
            let ratio = sibuya_pmf(beta, k).unwrap() / asym;
            assert!((ratio - 1.0).abs() < 0.01, "beta {beta}: ratio {ratio}");
        }
    }

    #[test]
    fn sibuya_draws_are_positive_and_hit_one_with_probability_beta() {
        let mut rng = RngStream::new(11, 0);
        let law = Sibuya::new(0.4).unwrap();
        let n = 200_000;
        let mut ones = 0;
        for _ in 0..n {
            let q = law.sample(&mut rng);
            assert!(q >= 1);
            if q == 1 {
                ones += 1;
            }
        }
        let freq = ones as f64 / n as f64;
        let se = (0.4 * 0.6 / n as f64).sqrt();
        assert!((freq - 0.4).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn sibuya_pgf_matches() {
        let mut rng = RngStream::new(5, 1);
        let beta = 0.7;
        let law = Sibuya::new(beta).unwrap();
        let n = 200_000;
        let draws: Vec<u64> = (0..n).map(|_| law.sample(&mut rng)).collect();
        for &z in &[0.2f64, 0.5, 0.9] {
            let vals: Vec<f64> = draws
                .iter()
                .map(|&q| if q > 5000 { 0.0 } else { z.powi(q as i32) })
                .collect();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
            let target = 1.0 - (1.0 - z).powf(beta);
            assert!((mean - target).abs() < 3.0 * (var / n as f64).sqrt(), "z {z}: {mean} vs {target}");
        }
    }

    #[test]
    fn sibuya_parameter_is_positive() {
        let mut rng = RngStream::new(8, 0);
        let law = Sibuya::new(0.3).unwrap();
        for _ in 0..10_000 {
            assert!(law.sample_parameter(&mut rng) > 0.0);
        }
    }

    #[test]
    fn capped_sibuya_reports_overflow() {
        let mut rng = RngStream::new(9, 0);
        let law = Sibuya::new(0.05).unwrap();
        let aborted = (0..20_000)
            .filter(|_| law.sample_capped(10, &mut rng).is_err())
            .count();
        // P(Q > 10) for β = 0.05 is 1 - Σ_{k≤10} pmf ≈ 0.87
        let p_le: f64 = (1..=10).map(|k| law.pmf(k)).sum();
        let expected = (1.0 - p_le) * 20_000.0;
        assert!((aborted as f64 - expected).abs() < 5.0 * expected.sqrt() + 5.0);
    }

    #[test]
    fn lambda_tail_probability_matches_monte_carlo() {
        let mut rng = RngStream::new(21, 0);
        let beta = 0.5;
        let law = Sibuya::new(beta).unwrap();
        let n = 200_000;
        let draws: Vec<f64> = (0..n).map(|_| law.sample_parameter(&mut rng)).collect();
        for &x in &[0.1, 1.0, 10.0, 100.0] {
            let p = lambda_tail_probability(beta, x).unwrap();
            let freq = draws.iter().filter(|&&l| l > x).count() as f64 / n as f64;
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((freq - p).abs() < 4.0 * se, "x {x}: {freq} vs {p}");
        }
        assert_eq!(lambda_tail_probability(beta, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn jump_law_mean_and_cap() {
        let law = JumpLaw::new(1.2, 0.01, 1.0, 0.8).unwrap();
        let expected = 2f64.powf(0.2) * c_alpha(1.2).unwrap() * 0.01f64.powf(-1.2);
        assert_relative_eq!(law.mean(), expected, max_relative = 1e-14);
        let mut rng = RngStream::new(1, 0);
        assert!(matches!(
            sample_jump_count(&law, 10.0, &mut rng),
            Err(KarlinError::ResolutionTooFine { .. })
        ));
        let far = JumpLaw::new(1.2, 1e9, 1.0, 0.8).unwrap();
        assert!(far.mean() < 1e-9);
        assert_eq!(sample_jump_count(&far, DEFAULT_JUMP_MEAN_CAP, &mut rng).unwrap(), 0);
        assert!(JumpLaw::new(1.2, 0.0, 1.0, 0.8).is_err());
        assert!(JumpLaw::new(2.0, 0.1, 1.0, 0.8).is_err());
    }

    #[test]
    fn jump_count_empirical_mean() {
        let law = JumpLaw::new(1.5, 0.3, 1.0, 0.5).unwrap();
        let mut rng = RngStream::new(4, 4);
        let n = 100_000;
        let total: u64 = (0..n)
            .map(|_| sample_jump_count(&law, DEFAULT_JUMP_MEAN_CAP, &mut rng).unwrap())
            .sum();
        let mean = total as f64 / n as f64;
        let se = (law.mean() / n as f64).sqrt();
        assert!((mean - law.mean()).abs() < 3.0 * se);
    }

    #[test]
    fn jump_magnitudes_follow_pareto_tail() {
        let mut rng = RngStream::new(77, 0);
        let (alpha, eps) = (1.3, 0.05);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_jump_magnitude(alpha, eps, &mut rng)).collect();
        assert!(draws.iter().all(|v| v.abs() > eps));
        for &a in &[2.0f64, 5.0, 20.0] {
            let p = a.powf(-alpha);
            let freq = draws.iter().filter(|v| v.abs() > a * eps).count() as f64 / n as f64;
            assert!((freq - p).abs() < 3.0 * (p * (1.0 - p) / n as f64).sqrt(), "a {a}");
        }
        let sign_mean = draws.iter().map(|v| v.signum()).sum::<f64>() / n as f64;
        assert!(sign_mean.abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn jump_magnitude_median_at_alpha_one() {
        let mut rng = RngStream::new(78, 0);
        let mut abs: Vec<f64> = (0..200_001).map(|_| sample_jump_magnitude(1.0, 1.0, &mut rng).abs()).collect();
        abs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = abs[100_000];
        // density of |V| at 2 is 1/4: sd of the sample median ≈ 1/(2·f·√n)
        assert!((median - 2.0).abs() < 3.0 * 2.0 / (200_001f64).sqrt());
    }

    #[test]
    fn stable_params_validation() {
        assert!(StableParams::new(2.0, 0.5).is_ok());
        assert!(StableParams::new(0.0, 0.5).is_err());
        assert!(StableParams::new(1.0, 1.0).is_err());
        assert!(StableParams::new(1.0, 0.0).is_err());
        assert_eq!(StableParams::new(1.5, 0.6).unwrap().hurst(), 0.3);
    }
}
