//! Odd-occupancy vectors `D_t = 1{|R_β ∩ A_t| odd}`.
//!
//! Two families of samplers:
//!
//! - the generic sampler draws `Q_β` points of `E₀` and flips parities point
//!   by point; it works for every geometry;
//! - the fast samplers for the half line and the rectangle lattice never draw
//!   `Q_β`. Given `Λ_β` the cell parities `B` are independent Bernoulli
//!   variables, and `D` is the parity of their (double) cumulative sum plus
//!   the membership indicator of one extra uniform point.
//!
//! The generic sampler keeps a flip buffer in difference form: each point
//! toggles the boundary of the region it lies in, and a prefix XOR at the end
//! turns boundaries into parities. Points are never stored.

use std::f64::consts::PI;

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{KarlinError, Result};
use crate::geometry::{in_hemisphere, Geometry, Point, SphereIndex, NORTH_POLE};
use crate::rng::{replicates, RngStream};
use crate::stats::{Sibuya, DEFAULT_SIBUYA_CAP};

/// Largest tolerated fraction of aborted replicates in a batch.
pub const MAX_ABORT_FRACTION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    Generic,
    Fast,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerChoice {
    /// Fast path where the geometry has one, generic otherwise.
    #[default]
    Auto,
    Generic,
    Fast,
}

/// The mixing variable a sample was drawn with.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mixing {
    /// Number of points `Q_β` (generic sampler).
    Count(u64),
    /// Poisson parameter `Λ_β`, after clamping (fast samplers).
    Parameter(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyMeta {
    pub sampler: SamplerKind,
    pub mixing: Mixing,
    /// `Λ_β` exceeded `λ₀` and was clamped.
    pub clamped: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OddOccupancy {
    /// One 0/1 entry per grid index, row-major over `shape`.
    pub bits: Vec<u8>,
    pub shape: Vec<usize>,
    pub meta: OccupancyMeta,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyOptions {
    /// Optional clamp `Λ_β ∧ λ₀` for the fast samplers.
    pub lambda0: Option<f64>,
    /// Cap on `Q_β` for the generic sampler.
    pub sibuya_cap: u64,
    /// Multiplies every cell probability of the fast samplers. Anything other
    /// than 1 gives a wrong law; used as a misspecified control.
    pub prob_scale: f64,
}

impl Default for OccupancyOptions {
    fn default() -> Self {
        Self {
            lambda0: None,
            sibuya_cap: DEFAULT_SIBUYA_CAP,
            prob_scale: 1.0,
        }
    }
}

/// Cell parity probability `(1 - e^{-2wΛ})/2` of a Poisson(wΛ) count.
#[inline]
pub fn odd_probability(width: f64, lambda: f64) -> f64 {
    if width <= 0.0 {
        0.0
    } else if lambda.is_infinite() {
        0.5
    } else {
        -0.5 * (-2.0 * width * lambda).exp_m1()
    }
}

#[inline]
fn bernoulli_threshold(p: f64) -> u64 {
    // P(next_u64 < threshold) = threshold / 2^64
    if p <= 0.0 {
        0
    } else if p >= 1.0 {
        u64::MAX
    } else {
        (p * 18_446_744_073_709_551_616.0) as u64
    }
}

fn cell_widths(grid: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    grid.iter()
        .map(|&t| {
            let w = t - prev;
            prev = t;
            w
        })
        .collect()
}

/// Draws odd-occupancy vectors for one geometry and β.
#[derive(Clone, Debug)]
pub struct OccupancySampler<'g> {
    geometry: &'g Geometry,
    sibuya: Sibuya,
    kind: SamplerKind,
    options: OccupancyOptions,
    widths: [Vec<f64>; 2],
    /// (cos φ, sin φ) per sphere column.
    trig: Vec<(f64, f64)>,
}

impl<'g> OccupancySampler<'g> {
    pub fn new(geometry: &'g Geometry, beta: f64, choice: SamplerChoice, options: OccupancyOptions) -> Result<Self> {
        let sibuya = Sibuya::new(beta)?;
        let has_fast = matches!(geometry, Geometry::HalfLine { .. } | Geometry::Rectangle { .. });
        let kind = match choice {
            SamplerChoice::Auto if has_fast => SamplerKind::Fast,
            SamplerChoice::Auto | SamplerChoice::Generic => SamplerKind::Generic,
            SamplerChoice::Fast if has_fast => SamplerKind::Fast,
            SamplerChoice::Fast => {
                return Err(KarlinError::Unsupported(format!(
                    "no fast odd-occupancy sampler for the {} geometry",
                    geometry.name()
                )))
            }
        };
        if let Some(l0) = options.lambda0 {
            if !(l0 > 0.0) {
                return Err(KarlinError::Domain {
                    name: "lambda0",
                    value: l0,
                    expected: "(0, inf]",
                });
            }
        }
        let widths = match geometry {
            Geometry::HalfLine { grid } => [cell_widths(grid), Vec::new()],
            Geometry::Rectangle { t1, t2 } => [cell_widths(t1), cell_widths(t2)],
            _ => [Vec::new(), Vec::new()],
        };
        let trig = match geometry {
            Geometry::Sphere { phis, .. } => phis.iter().map(|p| (p.cos(), p.sin())).collect(),
            _ => Vec::new(),
        };
        Ok(Self {
            geometry,
            sibuya,
            kind,
            options,
            widths,
            trig,
        })
    }

    pub fn kind(&self) -> SamplerKind {
        self.kind
    }

    pub fn geometry(&self) -> &Geometry {
        self.geometry
    }

    pub fn beta(&self) -> f64 {
        self.sibuya.beta()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<OddOccupancy> {
        let mut bits = vec![0u8; self.geometry.len()];
        let meta = self.sample_into(&mut bits, rng)?;
        Ok(OddOccupancy {
            bits,
            shape: self.geometry.shape(),
            meta,
        })
    }

    /// Writes one sample into `bits` (length = grid size), reusing the buffer.
    pub fn sample_into<R: Rng + ?Sized>(&self, bits: &mut [u8], rng: &mut R) -> Result<OccupancyMeta> {
        debug_assert_eq!(bits.len(), self.geometry.len());
        match self.kind {
            SamplerKind::Generic => self.generic_into(bits, rng),
            SamplerKind::Fast => Ok(self.fast_into(bits, rng)),
        }
    }

    fn generic_into<R: Rng + ?Sized>(&self, bits: &mut [u8], rng: &mut R) -> Result<OccupancyMeta> {
        let q = self.sibuya.sample_capped(self.options.sibuya_cap, rng)?;
        bits.fill(0);
        let mut origin_parity = 0u8;
        for _ in 0..q {
            let point = self.geometry.sample_window_point(rng);
            self.mark(&point, bits, &mut origin_parity);
        }
        self.resolve(bits, origin_parity);
        Ok(OccupancyMeta {
            sampler: SamplerKind::Generic,
            mixing: Mixing::Count(q),
            clamped: false,
        })
    }

    /// Toggles the flip buffer for one point.
    fn mark(&self, point: &Point, flips: &mut [u8], origin_parity: &mut u8) {
        match (self.geometry, point) {
            (Geometry::HalfLine { grid }, Point::Line(u)) => {
                let i0 = grid.partition_point(|t| t < u);
                if i0 < flips.len() {
                    flips[i0] ^= 1;
                }
            }
            (Geometry::Rectangle { t1, t2 }, Point::Plane(u)) => {
                let i0 = t1.partition_point(|t| *t < u[0]);
                let j0 = t2.partition_point(|t| *t < u[1]);
                if i0 < t1.len() && j0 < t2.len() {
                    flips[i0 * t2.len() + j0] ^= 1;
                }
            }
            (Geometry::Chentsov2D { xs, ys }, Point::Polar { angle, radius }) => {
                let (s2, s1) = angle.sin_cos();
                let r = *radius;
                // ⟨s,t⟩ is linear: its lattice maximum sits at a corner
                let (x0, x1) = (xs[0], xs[xs.len() - 1]);
                let (y0, y1) = (ys[0], ys[ys.len() - 1]);
                let bound = (s1 * x0).max(s1 * x1) + (s2 * y0).max(s2 * y1);
                if !(r < bound + 1e-12) {
                    return;
                }
                let n2 = ys.len();
                for (i, &x) in xs.iter().enumerate() {
                    let row = &mut flips[i * n2..(i + 1) * n2];
                    if s2 > 0.0 {
                        let j0 = ys.partition_point(|&y| !(r < s1 * x + s2 * y));
                        if j0 < n2 {
                            row[j0] ^= 1;
                        }
                    } else if s2 < 0.0 {
                        let j1 = ys.partition_point(|&y| r < s1 * x + s2 * y);
                        if j1 > 0 {
                            row[0] ^= 1;
                            if j1 < n2 {
                                row[j1] ^= 1;
                            }
                        }
                    } else if r < s1 * x + s2 * ys[0] {
                        row[0] ^= 1;
                    }
                }
            }
            (Geometry::Sphere { thetas, index, .. }, Point::Sphere(y)) => {
                if *index == SphereIndex::Pinned && in_hemisphere(&NORTH_POLE, y) {
                    *origin_parity ^= 1;
                }
                let n2 = thetas.len();
                let c = y[2];
                for (i, &(cp, sp)) in self.trig.iter().enumerate() {
                    // ⟨x(φ,θ), y⟩ = a sin θ + c cos θ, positive on one θ-interval
                    let a = cp * y[0] + sp * y[1];
                    let (lo, hi) = if c > 0.0 {
                        let cut = c.atan2(-a);
                        (0, thetas.partition_point(|&t| t < cut))
                    } else if c < 0.0 {
                        let cut = (-c).atan2(a);
                        (thetas.partition_point(|&t| t <= cut), n2)
                    } else if a > 0.0 {
                        (thetas.partition_point(|&t| t <= 0.0), thetas.partition_point(|&t| t < PI))
                    } else {
                        (0, 0)
                    };
                    if lo < hi {
                        let row = &mut flips[i * n2..(i + 1) * n2];
                        row[lo] ^= 1;
                        if hi < n2 {
                            row[hi] ^= 1;
                        }
                    }
                }
            }
            _ => unreachable!("window point matches geometry"),
        }
    }

    /// Turns the flip buffer into parities.
    fn resolve(&self, flips: &mut [u8], origin_parity: u8) {
        let shape = self.geometry.shape();
        let n2 = if shape.len() == 2 { shape[1] } else { shape[0] };
        for row in flips.chunks_mut(n2) {
            prefix_xor(row);
        }
        if let Geometry::Rectangle { t2, .. } = self.geometry {
            prefix_xor_columns(flips, t2.len());
        }
        if origin_parity == 1 {
            for b in flips.iter_mut() {
                *b ^= 1;
            }
        }
    }

    fn sample_lambda<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, bool) {
        let lambda = self.sibuya.sample_parameter(rng);
        match self.options.lambda0 {
            Some(l0) if lambda > l0 => (l0, true),
            _ => (lambda, false),
        }
    }

    fn fast_into<R: Rng + ?Sized>(&self, bits: &mut [u8], rng: &mut R) -> OccupancyMeta {
        let (lambda, clamped) = self.sample_lambda(rng);
        let scale = self.options.prob_scale;
        match self.geometry {
            Geometry::HalfLine { grid } => {
                for (b, &w) in bits.iter_mut().zip(&self.widths[0]) {
                    let thr = bernoulli_threshold(scale * odd_probability(w, lambda));
                    *b = (rng.next_u64() < thr) as u8;
                }
                let u: f64 = rng.sample(Open01);
                let mut acc = 0u8;
                for (b, &t) in bits.iter_mut().zip(grid) {
                    acc ^= *b;
                    *b = acc ^ (u <= t) as u8;
                }
            }
            Geometry::Rectangle { t1, t2 } => {
                let n2 = t2.len();
                for (row, &w1) in bits.chunks_mut(n2).zip(&self.widths[0]) {
                    for (b, &w2) in row.iter_mut().zip(&self.widths[1]) {
                        let thr = bernoulli_threshold(scale * odd_probability(w1 * w2, lambda));
                        *b = (rng.next_u64() < thr) as u8;
                    }
                }
                let u1: f64 = rng.sample(Open01);
                let u2: f64 = rng.sample(Open01);
                for row in bits.chunks_mut(n2) {
                    prefix_xor(row);
                }
                prefix_xor_columns(bits, n2);
                let i0 = t1.partition_point(|&t| t < u1);
                let j0 = t2.partition_point(|&t| t < u2);
                for row in bits.chunks_mut(n2).skip(i0) {
                    for b in row.iter_mut().skip(j0) {
                        *b ^= 1;
                    }
                }
            }
            _ => unreachable!("fast path only exists for lattice geometries"),
        }
        OccupancyMeta {
            sampler: SamplerKind::Fast,
            mixing: Mixing::Parameter(lambda),
            clamped,
        }
    }
}

fn prefix_xor(row: &mut [u8]) {
    let mut acc = 0u8;
    for b in row.iter_mut() {
        acc ^= *b;
        *b = acc;
    }
}

fn prefix_xor_columns(bits: &mut [u8], n2: usize) {
    let n1 = bits.len() / n2;
    for i in 1..n1 {
        let (prev, cur) = bits.split_at_mut(i * n2);
        let prev = &prev[(i - 1) * n2..];
        for (c, p) in cur[..n2].iter_mut().zip(prev) {
            *c ^= *p;
        }
    }
}

/// Parities of an explicit point set, via the same flip-buffer machinery.
pub fn parity_of_points(geometry: &Geometry, points: &[Point]) -> Vec<u8> {
    let sampler = OccupancySampler::new(geometry, 0.5, SamplerChoice::Generic, OccupancyOptions::default())
        .expect("valid beta");
    let mut bits = vec![0u8; geometry.len()];
    let mut origin = 0u8;
    for p in points {
        sampler.mark(p, &mut bits, &mut origin);
    }
    sampler.resolve(&mut bits, origin);
    bits
}

pub fn sample_occupancy_generic<R: Rng + ?Sized>(geometry: &Geometry, beta: f64, rng: &mut R) -> Result<OddOccupancy> {
    OccupancySampler::new(geometry, beta, SamplerChoice::Generic, OccupancyOptions::default())?.sample(rng)
}

pub fn sample_occupancy_halfline<R: Rng + ?Sized>(
    grid: &[f64],
    beta: f64,
    lambda0: Option<f64>,
    rng: &mut R,
) -> Result<OddOccupancy> {
    let geometry = Geometry::half_line(grid.to_vec())?;
    let options = OccupancyOptions {
        lambda0,
        ..Default::default()
    };
    OccupancySampler::new(&geometry, beta, SamplerChoice::Fast, options)?.sample(rng)
}

pub fn sample_occupancy_rectangle<R: Rng + ?Sized>(
    grid1: &[f64],
    grid2: &[f64],
    beta: f64,
    lambda0: Option<f64>,
    rng: &mut R,
) -> Result<OddOccupancy> {
    let geometry = Geometry::rectangle(grid1.to_vec(), grid2.to_vec())?;
    let options = OccupancyOptions {
        lambda0,
        ..Default::default()
    };
    OccupancySampler::new(&geometry, beta, SamplerChoice::Fast, options)?.sample(rng)
}

#[derive(Clone, Debug)]
pub struct BatchOutcome {
    pub samples: Vec<OddOccupancy>,
    /// Replicates aborted on heavy-tail overflow; they are left out of `samples`.
    pub aborted: usize,
    pub clamped: usize,
}

/// Independent replicates, replicate `k` drawn from `stream.substream(k)`.
///
/// Fails if more than [`MAX_ABORT_FRACTION`] of the replicates abort.
pub fn sample_occupancy_batch(sampler: &OccupancySampler<'_>, n: usize, stream: &RngStream) -> Result<BatchOutcome> {
    let results = replicates(stream, n, |rng| sampler.sample(rng));
    let mut samples = Vec::with_capacity(n);
    let mut aborted = 0;
    for r in results {
        match r {
            Ok(s) => samples.push(s),
            Err(KarlinError::HeavyTailOverflow { .. }) => aborted += 1,
            Err(e) => return Err(e),
        }
    }
    check_abort_rate(aborted, n)?;
    let clamped = samples.iter().filter(|s| s.meta.clamped).count();
    Ok(BatchOutcome {
        samples,
        aborted,
        clamped,
    })
}

pub(crate) fn check_abort_rate(aborted: usize, total: usize) -> Result<()> {
    if aborted as f64 > MAX_ABORT_FRACTION * total as f64 {
        Err(KarlinError::AbortRate {
            aborted,
            total,
            limit_fraction: MAX_ABORT_FRACTION,
        })
    } else {
        Ok(())
    }
}

/// Closed form `E D_t = 2^{β-1} μ^β(A_t) / μ^β(E₀)`.
pub fn expected_odd_probability(geometry: &Geometry, beta: f64, index: usize) -> f64 {
    2f64.powf(beta - 1.0) * (geometry.mu_index_set(index) / geometry.mu_window()).powf(beta)
}

/// Closed form `P(D_a = 1, D_b = 1) = 2^{β-1}/μ^β(E₀) · ½(μ^β(A_a) + μ^β(A_b) - μ^β(A_a Δ A_b))`.
pub fn expected_joint_odd_probability(geometry: &Geometry, beta: f64, a: usize, b: usize) -> f64 {
    let m = |x: f64| x.powf(beta);
    let half_cov = 0.5
        * (m(geometry.mu_index_set(a)) + m(geometry.mu_index_set(b)) - m(geometry.mu_symmetric_difference(a, b)));
    2f64.powf(beta - 1.0) / m(geometry.mu_window()) * half_cov
}
