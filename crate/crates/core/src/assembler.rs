//! Final field `Y ≈ Σ_j V_j D_j + σ_α(ε)·G`.
//!
//! Choosing ε: for α ∈ [1, 2) the truncation level solves
//! `(2-α)^{3/2} / ((3-α)√(αC_α)) · ε^{α/2} = tol`. Below α = 1 the Gaussian
//! term is dropped and ε defaults to `1e-4`. At α = 2 only the Gaussian field
//! is drawn.
//!
//! Pinned spheres are simulated with hemisphere index sets and pinned down at
//! the north pole afterwards.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{KarlinError, Result};
use crate::field::{Component, FieldGrid, FieldMeta};
use crate::geometry::{Geometry, SphereIndex};
use crate::largejump::{simulate_large_jump, Jump, LargeJumpOptions};
use crate::occupancy::{OccupancyOptions, SamplerChoice};
use crate::rng::{streams, RngStream};
use crate::smalljump::{simulate_gaussian, GaussianBackend};
use crate::stats::{c_alpha, lambda_tail_probability, sigma_alpha, JumpLaw, StableParams, DEFAULT_JUMP_MEAN_CAP};

/// Truncation level used below α = 1.
pub const SMALL_ALPHA_EPSILON: f64 = 1e-4;
/// i.i.d. Berry–Esseen constant.
pub const BERRY_ESSEEN: f64 = 0.4785;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum EpsilonChoice {
    #[default]
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SkipGaussian {
    #[default]
    Auto,
    Yes,
    No,
}

impl FromStr for EpsilonChoice {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(EpsilonChoice::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v > 0.0 && v.is_finite() => Ok(EpsilonChoice::Fixed(v)),
            _ => Err(format!("epsilon must be a positive number or \"auto\", got {s:?}")),
        }
    }
}

impl fmt::Display for EpsilonChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EpsilonChoice::Auto => f.write_str("auto"),
            EpsilonChoice::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for EpsilonChoice {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            EpsilonChoice::Auto => s.serialize_str("auto"),
            EpsilonChoice::Fixed(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for EpsilonChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => EpsilonChoice::from_str(&v.to_string()).map_err(serde::de::Error::custom),
            Repr::Word(w) => EpsilonChoice::from_str(&w).map_err(serde::de::Error::custom),
        }
    }
}

impl FromStr for SkipGaussian {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(SkipGaussian::Auto),
            "true" | "yes" | "on" => Ok(SkipGaussian::Yes),
            "false" | "no" | "off" => Ok(SkipGaussian::No),
            _ => Err(format!("skip_gaussian must be true, false or \"auto\", got {s:?}")),
        }
    }
}

impl Serialize for SkipGaussian {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SkipGaussian::Auto => s.serialize_str("auto"),
            SkipGaussian::Yes => s.serialize_bool(true),
            SkipGaussian::No => s.serialize_bool(false),
        }
    }
}

impl<'de> Deserialize<'de> for SkipGaussian {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Flag(bool),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Flag(true) => Ok(SkipGaussian::Yes),
            Repr::Flag(false) => Ok(SkipGaussian::No),
            Repr::Word(w) => SkipGaussian::from_str(&w).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimParams {
    pub alpha: f64,
    pub beta: f64,
    pub epsilon: EpsilonChoice,
    pub marginal_tolerance: f64,
    pub aggregation_tolerance: f64,
    pub skip_gaussian: SkipGaussian,
    pub lambda0: Option<f64>,
    pub seed: u64,
    pub backend: GaussianBackend,
    pub sampler: SamplerChoice,
    pub jump_mean_cap: f64,
    pub sibuya_cap: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            beta: 0.5,
            epsilon: EpsilonChoice::Auto,
            marginal_tolerance: 0.01,
            aggregation_tolerance: 0.02,
            skip_gaussian: SkipGaussian::Auto,
            lambda0: None,
            seed: 0,
            backend: GaussianBackend::Auto,
            sampler: SamplerChoice::Auto,
            jump_mean_cap: DEFAULT_JUMP_MEAN_CAP,
            sibuya_cap: crate::stats::DEFAULT_SIBUYA_CAP,
        }
    }
}

impl SimParams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self {
            alpha,
            beta,
            ..Default::default()
        }
    }

    fn occupancy_options(&self) -> OccupancyOptions {
        OccupancyOptions {
            lambda0: self.lambda0,
            sibuya_cap: self.sibuya_cap,
            prob_scale: 1.0,
        }
    }

    /// Fills in ε and the Gaussian switch.
    pub fn resolve(&self) -> Result<Resolved> {
        StableParams::new(self.alpha, self.beta)?;
        for (name, v) in [
            ("marginal tolerance", self.marginal_tolerance),
            ("aggregation tolerance", self.aggregation_tolerance),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(KarlinError::Domain {
                    name,
                    value: v,
                    expected: "(0, 1]",
                });
            }
        }
        let alpha = self.alpha;
        if alpha == 2.0 {
            if let EpsilonChoice::Fixed(_) = self.epsilon {
                return Err(KarlinError::Unsupported("alpha = 2 has no jumps; epsilon must be auto".into()));
            }
            if self.skip_gaussian == SkipGaussian::Yes {
                return Err(KarlinError::Unsupported("alpha = 2 is purely Gaussian; it cannot skip the Gaussian part".into()));
            }
            return Ok(Resolved {
                epsilon: None,
                sigma: 1.0,
                jumps: false,
                gaussian: true,
            });
        }
        let epsilon = match self.epsilon {
            EpsilonChoice::Fixed(e) => e,
            EpsilonChoice::Auto if alpha < 1.0 => SMALL_ALPHA_EPSILON,
            EpsilonChoice::Auto => choose_epsilon(alpha, self.marginal_tolerance)?,
        };
        let gaussian = match self.skip_gaussian {
            SkipGaussian::Yes => false,
            SkipGaussian::No => true,
            SkipGaussian::Auto => alpha >= 1.0,
        };
        Ok(Resolved {
            epsilon: Some(epsilon),
            sigma: if gaussian { sigma_alpha(alpha, epsilon)? } else { 0.0 },
            jumps: true,
            gaussian,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Resolved {
    pub epsilon: Option<f64>,
    /// Multiplier of the Gaussian field (1 at α = 2).
    pub sigma: f64,
    pub jumps: bool,
    pub gaussian: bool,
}

/// `ε`-dependent factor of the marginal small-jump error bound.
pub fn epsilon_bound(alpha: f64, epsilon: f64) -> Result<f64> {
    let c = c_alpha(alpha)?;
    Ok((2.0 - alpha).powf(1.5) / ((3.0 - alpha) * (alpha * c).sqrt()) * epsilon.powf(alpha / 2.0))
}

/// Closed-form ε with `epsilon_bound(α, ε) = tolerance`, for α ∈ [1, 2).
pub fn choose_epsilon(alpha: f64, tolerance: f64) -> Result<f64> {
    if !(1.0..2.0).contains(&alpha) {
        return Err(KarlinError::Domain {
            name: "alpha",
            value: alpha,
            expected: "[1, 2); below 1 use a fixed epsilon",
        });
    }
    if !(tolerance > 0.0 && tolerance < 1.0) {
        return Err(KarlinError::Domain {
            name: "marginal tolerance",
            value: tolerance,
            expected: "(0, 1)",
        });
    }
    let c = c_alpha(alpha)?;
    Ok((tolerance * (3.0 - alpha) * (alpha * c).sqrt() / (2.0 - alpha).powf(1.5)).powf(2.0 / alpha))
}

/// `Y(x) - Y(o)`.
pub fn pin_down_sphere(field: &FieldGrid, origin_index: usize) -> FieldGrid {
    let o = field.values[origin_index];
    let mut out = field.clone();
    for v in out.values.iter_mut() {
        *v -= o;
    }
    out.values[origin_index] = 0.0;
    out.meta.origin_index = Some(origin_index);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Assembled {
    pub large: Option<FieldGrid>,
    /// Already multiplied by `σ_α(ε)`.
    pub small: Option<FieldGrid>,
    pub combined: FieldGrid,
    /// Per-jump records, when requested. On a pinned sphere these are in the
    /// hemisphere view, before the pin-down.
    pub jumps: Option<Vec<Jump>>,
}

impl Assembled {
    pub fn component(&self, c: Component) -> Option<&FieldGrid> {
        match c {
            Component::Large => self.large.as_ref(),
            Component::Small => self.small.as_ref(),
            Component::Combined => Some(&self.combined),
        }
    }
}

/// One field on `geometry` from `params.seed`.
pub fn assemble(geometry: &Geometry, params: &SimParams) -> Result<Assembled> {
    assemble_with_stream(geometry, params, &RngStream::new(params.seed, 0))
}

/// As [`assemble`], with the large and small parts drawn from fixed
/// substreams of `root`.
pub fn assemble_with_stream(geometry: &Geometry, params: &SimParams, root: &RngStream) -> Result<Assembled> {
    assemble_impl(geometry, params, root, false)
}

/// As [`assemble`], also keeping every large jump in [`Assembled::jumps`].
pub fn assemble_with_jumps(geometry: &Geometry, params: &SimParams) -> Result<Assembled> {
    assemble_impl(geometry, params, &RngStream::new(params.seed, 0), true)
}

fn assemble_impl(geometry: &Geometry, params: &SimParams, root: &RngStream, record_jumps: bool) -> Result<Assembled> {
    let resolved = params.resolve()?;
    let (sim_geometry, origin) = match geometry {
        Geometry::Sphere {
            index: SphereIndex::Pinned,
            ..
        } => {
            let origin = geometry.origin_index().ok_or_else(|| {
                KarlinError::Unsupported("pinned sphere needs the north pole on the lattice (first theta = 0)".into())
            })?;
            (geometry.with_sphere_index(SphereIndex::Hemisphere), Some(origin))
        }
        _ => (geometry.clone(), None),
    };
    let shape = geometry.shape();
    let n = geometry.len();
    let mut meta = base_meta(geometry, params, &resolved)?;
    let mut jumps = None;

    let large = if resolved.jumps {
        let epsilon = resolved.epsilon.expect("jumps imply epsilon");
        let options = LargeJumpOptions {
            sampler: params.sampler,
            occupancy: params.occupancy_options(),
            jump_mean_cap: params.jump_mean_cap,
            record_jumps,
        };
        let s = simulate_large_jump(
            &sim_geometry,
            params.alpha,
            params.beta,
            epsilon,
            &options,
            &root.substream(streams::LARGE_JUMP),
        )?;
        meta.jump_count = Some(s.jump_count);
        meta.clamped = s.clamped;
        jumps = s.jumps;
        Some(s.values)
    } else {
        None
    };

    let small = if resolved.gaussian {
        let draw = simulate_gaussian(
            &sim_geometry,
            params.beta,
            params.backend,
            params.aggregation_tolerance,
            params.occupancy_options(),
            &root.substream(streams::SMALL_JUMP),
        )?;
        meta.gaussian_backend = Some(draw.backend.name().to_string());
        meta.aggregation_m = draw.m;
        meta.aborted = draw.aborted;
        Some(draw.values.into_iter().map(|v| resolved.sigma * v).collect::<Vec<f64>>())
    } else {
        None
    };

    let combined: Vec<f64> = match (&large, &small) {
        (Some(l), Some(s)) => l.iter().zip(s).map(|(a, b)| a + b).collect(),
        (Some(l), None) => l.clone(),
        (None, Some(s)) => s.clone(),
        (None, None) => vec![0.0; n],
    };

    let wrap = |values: Vec<f64>, component| -> Result<FieldGrid> {
        let f = FieldGrid::new(values, shape.clone(), component, meta.clone())?;
        Ok(match origin {
            Some(o) => pin_down_sphere(&f, o),
            None => f,
        })
    };
    Ok(Assembled {
        large: large.map(|v| wrap(v, Component::Large)).transpose()?,
        small: small.map(|v| wrap(v, Component::Small)).transpose()?,
        combined: wrap(combined, Component::Combined)?,
        jumps,
    })
}

fn base_meta(geometry: &Geometry, params: &SimParams, resolved: &Resolved) -> Result<FieldMeta> {
    let mut meta = FieldMeta {
        geometry: geometry.name().to_string(),
        alpha: params.alpha,
        beta: params.beta,
        seed: params.seed,
        epsilon: resolved.epsilon,
        lambda0: params.lambda0,
        ..Default::default()
    };
    if resolved.gaussian {
        meta.sigma = Some(resolved.sigma);
    }
    if let Some(eps) = resolved.epsilon {
        meta.c_alpha = Some(c_alpha(params.alpha)?);
        let law = JumpLaw::new(params.alpha, eps, geometry.mu_window(), params.beta)?;
        meta.jump_mean = Some(law.mean());
        if let Some(l0) = params.lambda0 {
            meta.clamp_exceedance_bound = Some((law.mean() * lambda_tail_probability(params.beta, l0)?).min(1.0));
        }
        if resolved.gaussian {
            let factor = epsilon_bound(params.alpha, eps)?;
            meta.marginal_bound = Some(
                (0..geometry.len())
                    .map(|i| {
                        let mu = geometry.mu_index_set(i);
                        (mu > 0.0).then(|| BERRY_ESSEEN * factor / mu.powf(params.beta / 2.0))
                    })
                    .collect(),
            );
        }
    }
    Ok(meta)
}
