//! Run configuration: defaults, TOML config files and command-line flags.
//!
//! Flags override config-file entries, which override defaults. The seed
//! falls back to `KSF_SEED` when neither a flag nor the file sets it.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use karlin_core::assembler::{EpsilonChoice, SimParams, SkipGaussian};
use karlin_core::geometry::{linspace01, Geometry, SphereIndex};
use karlin_core::occupancy::SamplerChoice;
use karlin_core::smalljump::GaussianBackend;
use karlin_core::Component;

pub const SEED_ENV: &str = "KSF_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    #[default]
    Simulate,
    OddOccupancy,
    Verify,
    Bench,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeometryKind {
    #[default]
    #[value(name = "halfline")]
    HalfLine,
    Rectangle,
    #[value(name = "chentsov2d")]
    Chentsov2d,
    Sphere,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ComponentSel {
    Large,
    Small,
    #[default]
    Combined,
    All,
}

impl ComponentSel {
    pub fn components(self) -> Vec<Component> {
        match self {
            ComponentSel::Large => vec![Component::Large],
            ComponentSel::Small => vec![Component::Small],
            ComponentSel::Combined => vec![Component::Combined],
            ComponentSel::All => vec![Component::Large, Component::Small, Component::Combined],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Bin,
    Image,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Bin => "ksf",
            Format::Image => "png",
        }
    }
}

/// Grid sizes `N` or `NxM`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridSpec {
    pub n1: usize,
    pub n2: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { n1: 100, n2: None }
    }
}

impl FromStr for GridSpec {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |part: &str| -> std::result::Result<usize, String> {
            match part.trim().parse::<usize>() {
                Ok(v) if v > 0 => Ok(v),
                _ => Err(format!("grid size must be N or NxM with positive integers, got {s:?}")),
            }
        };
        match s.split_once(['x', 'X']) {
            Some((a, b)) => Ok(GridSpec {
                n1: parse(a)?,
                n2: Some(parse(b)?),
            }),
            None => Ok(GridSpec { n1: parse(s)?, n2: None }),
        }
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.n2 {
            Some(m) => write!(f, "{}x{}", self.n1, m),
            None => write!(f, "{}", self.n1),
        }
    }
}

impl Serialize for GridSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for GridSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Size(u64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Size(n) => GridSpec::from_str(&n.to_string()),
            Repr::Text(t) => GridSpec::from_str(&t),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub kind: GeometryKind,
    pub grid: GridSpec,
    /// Upper ends of the plane axes; grids run from 0 to the extent.
    pub extent: [f64; 2],
    pub sphere_index: SphereIndex,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            kind: GeometryKind::HalfLine,
            grid: GridSpec::default(),
            extent: [1.0, 1.0],
            sphere_index: SphereIndex::Pinned,
        }
    }
}

impl GeometryConfig {
    /// The lattice: `n` equally spaced points from 0 to the extent per plane
    /// axis, or an `n × m` polar lattice (azimuth × colatitude) on the sphere.
    pub fn build(&self) -> Result<Geometry> {
        let GridSpec { n1, n2 } = self.grid;
        let axis = |n: usize, extent: f64| linspace01(n).into_iter().map(|v| v * extent).collect::<Vec<f64>>();
        let g = match self.kind {
            GeometryKind::HalfLine => {
                if n2.is_some() {
                    bail!("the half-line takes a single grid size (--grid N), got {}", self.grid);
                }
                Geometry::half_line(axis(n1, self.extent[0]))
            }
            GeometryKind::Rectangle => Geometry::rectangle(axis(n1, self.extent[0]), axis(n2.unwrap_or(n1), self.extent[1])),
            GeometryKind::Chentsov2d => Geometry::chentsov(axis(n1, self.extent[0]), axis(n2.unwrap_or(n1), self.extent[1])),
            GeometryKind::Sphere => Geometry::sphere_lattice(n1, n2.unwrap_or(n1), self.sphere_index),
        };
        Ok(g?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    pub beta: f64,
    /// Replicates per timed batch of the fast sampler.
    pub replicates: usize,
    /// Replicates per timed batch of the generic sampler.
    pub generic_replicates: usize,
    pub repeats: usize,
    pub generic: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 300, 1000, 3000],
            beta: 0.3,
            replicates: 2000,
            generic_replicates: 200,
            repeats: 5,
            generic: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub subcommand: Subcommand,
    pub geometry: GeometryConfig,
    pub sim: SimParams,
    /// Path stem; files get `.<component>.<ext>` and `.json` appended.
    pub output: PathBuf,
    pub format: Format,
    pub component: ComponentSel,
    /// Also write PNG heatmaps next to CSV or binary grids.
    pub heatmap: bool,
    /// Write the list of large jumps.
    pub provenance: bool,
    pub threads: Option<usize>,
    /// Occupancy vectors per `odd-occupancy` run.
    pub replicates: usize,
    /// Checks run by `verify`; empty means the whole suite.
    pub checks: Vec<String>,
    /// Run `verify` at a tenth of the full sample sizes.
    pub quick: bool,
    pub bench: BenchConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            subcommand: Subcommand::Simulate,
            geometry: GeometryConfig::default(),
            sim: SimParams::default(),
            output: PathBuf::from("ksf"),
            format: Format::Csv,
            component: ComponentSel::Combined,
            heatmap: false,
            provenance: false,
            threads: None,
            replicates: 1,
            checks: Vec::new(),
            quick: false,
            bench: BenchConfig::default(),
        }
    }
}

fn parse_sampler(s: &str) -> std::result::Result<SamplerChoice, String> {
    match s {
        "auto" => Ok(SamplerChoice::Auto),
        "generic" => Ok(SamplerChoice::Generic),
        "fast" => Ok(SamplerChoice::Fast),
        _ => Err(format!("sampler must be auto, generic or fast, got {s:?}")),
    }
}

fn parse_backend(s: &str) -> std::result::Result<GaussianBackend, String> {
    match s {
        "auto" => Ok(GaussianBackend::Auto),
        "circulant" => Ok(GaussianBackend::Circulant),
        "aggregation" => Ok(GaussianBackend::Aggregation),
        "cholesky" => Ok(GaussianBackend::Cholesky),
        _ => Err(format!("backend must be auto, circulant, aggregation or cholesky, got {s:?}")),
    }
}

fn parse_sphere_index(s: &str) -> std::result::Result<SphereIndex, String> {
    match s {
        "pinned" => Ok(SphereIndex::Pinned),
        "hemisphere" => Ok(SphereIndex::Hemisphere),
        _ => Err(format!("sphere index must be pinned or hemisphere, got {s:?}")),
    }
}

/// Flags shared by every subcommand. Unset flags leave the file or default value.
#[derive(Clone, Debug, Default, Args)]
pub struct Flags {
    /// TOML file with any subset of the run configuration.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Stability index in (0, 2].
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Memory parameter in (0, 1).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Jump truncation level: a positive number or "auto".
    #[arg(long, value_name = "NUMBER|auto")]
    pub epsilon: Option<EpsilonChoice>,
    #[arg(long, value_enum)]
    pub geometry: Option<GeometryKind>,
    /// Grid size N or NxM.
    #[arg(long, value_name = "N[xM]")]
    pub grid: Option<GridSpec>,
    /// Upper end of both plane axes.
    #[arg(long)]
    pub extent: Option<f64>,
    /// Sphere indexing: pinned or hemisphere.
    #[arg(long, value_parser = parse_sphere_index)]
    pub sphere_index: Option<SphereIndex>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Aggregation tolerance; m = ceil(T^-2) occupancy vectors.
    #[arg(long = "m-tol", value_name = "T")]
    pub m_tol: Option<f64>,
    /// Marginal tolerance used to choose epsilon.
    #[arg(long = "eps-tol", value_name = "T")]
    pub eps_tol: Option<f64>,
    /// Clamp on the Poisson parameter of the fast samplers.
    #[arg(long, value_name = "L")]
    pub lambda0: Option<f64>,
    /// Skip the Gaussian part: true, false or auto.
    #[arg(long)]
    pub skip_gaussian: Option<SkipGaussian>,
    /// Gaussian backend: auto, circulant, aggregation or cholesky.
    #[arg(long, value_parser = parse_backend)]
    pub backend: Option<GaussianBackend>,
    /// Occupancy sampler: auto, generic or fast.
    #[arg(long, value_parser = parse_sampler)]
    pub sampler: Option<SamplerChoice>,
    #[arg(long, value_enum)]
    pub component: Option<ComponentSel>,
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads (default: available parallelism).
    #[arg(long, value_name = "K")]
    pub threads: Option<usize>,
    /// Also write PNG heatmaps.
    #[arg(long)]
    pub heatmap: bool,
    /// Write the list of large jumps.
    #[arg(long)]
    pub provenance: bool,
    /// Number of occupancy vectors to draw.
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Check to run (repeatable): sibuya, marginal, pairwise, equivalence, circulant, cholesky, aggregation, cf, epsilon.
    #[arg(long = "check", value_name = "NAME")]
    pub checks: Vec<String>,
    /// Smaller verification sample sizes.
    #[arg(long)]
    pub quick: bool,
    /// Benchmark grid sizes, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    /// Timed repeats per benchmark cell.
    #[arg(long)]
    pub repeats: Option<usize>,
}

impl RunConfig {
    /// Defaults, then the config file, then flags, then the seed fallback.
    pub fn resolve(subcommand: Subcommand, flags: &Flags, env_seed: Option<&str>) -> Result<RunConfig> {
        let (mut cfg, file_sets_seed) = match &flags.config {
            Some(path) => Self::load_file(path)?,
            None => (RunConfig::default(), false),
        };
        cfg.subcommand = subcommand;
        cfg.apply(flags);
        if flags.seed.is_none() && !file_sets_seed {
            if let Some(raw) = env_seed {
                cfg.sim.seed = raw
                    .trim()
                    .parse()
                    .with_context(|| format!("{SEED_ENV} must be a non-negative integer, got {raw:?}"))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load_file(path: &Path) -> Result<(RunConfig, bool)> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config file {}", path.display()))?;
        let table: toml::Table = toml::from_str(&text).with_context(|| format!("{} is not valid TOML", path.display()))?;
        let sets_seed = table.get("sim").and_then(|s| s.get("seed")).is_some();
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("invalid configuration in {}", path.display()))?;
        Ok((cfg, sets_seed))
    }

    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let cfg: RunConfig = toml::from_str(text).context("invalid configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    fn apply(&mut self, f: &Flags) {
        let sim = &mut self.sim;
        set(&mut sim.alpha, f.alpha);
        set(&mut sim.beta, f.beta);
        set(&mut sim.epsilon, f.epsilon);
        set(&mut sim.seed, f.seed);
        set(&mut sim.aggregation_tolerance, f.m_tol);
        set(&mut sim.marginal_tolerance, f.eps_tol);
        set(&mut sim.skip_gaussian, f.skip_gaussian);
        set(&mut sim.backend, f.backend);
        set(&mut sim.sampler, f.sampler);
        if f.lambda0.is_some() {
            sim.lambda0 = f.lambda0;
        }
        let g = &mut self.geometry;
        set(&mut g.kind, f.geometry);
        set(&mut g.grid, f.grid);
        set(&mut g.sphere_index, f.sphere_index);
        if let Some(e) = f.extent {
            g.extent = [e, e];
        }
        set(&mut self.component, f.component);
        set(&mut self.output, f.output.clone());
        set(&mut self.format, f.format);
        if f.threads.is_some() {
            self.threads = f.threads;
        }
        self.heatmap |= f.heatmap;
        self.provenance |= f.provenance;
        set(&mut self.replicates, f.replicates);
        if !f.checks.is_empty() {
            self.checks = f.checks.clone();
        }
        self.quick |= f.quick;
        set(&mut self.bench.sizes, f.sizes.clone());
        set(&mut self.bench.repeats, f.repeats);
    }

    /// Range checks with messages naming the offending option.
    pub fn validate(&self) -> Result<()> {
        let s = &self.sim;
        if !(s.alpha > 0.0 && s.alpha <= 2.0) {
            bail!("--alpha must lie in (0, 2], got {}", s.alpha);
        }
        if !(s.beta > 0.0 && s.beta < 1.0) {
            bail!("--beta must lie strictly between 0 and 1, got {}", s.beta);
        }
        if !(s.marginal_tolerance > 0.0 && s.marginal_tolerance <= 1.0) {
            bail!("--eps-tol must lie in (0, 1], got {}", s.marginal_tolerance);
        }
        if !(s.aggregation_tolerance > 0.0 && s.aggregation_tolerance <= 1.0) {
            bail!("--m-tol must lie in (0, 1], got {}", s.aggregation_tolerance);
        }
        if let EpsilonChoice::Fixed(e) = s.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                bail!("--epsilon must be positive or \"auto\", got {e}");
            }
            if s.alpha == 2.0 {
                bail!("--epsilon must be auto at alpha = 2 (the field has no jumps)");
            }
        }
        if s.alpha == 2.0 && s.skip_gaussian == SkipGaussian::Yes {
            bail!("--skip-gaussian cannot be true at alpha = 2 (the field is purely Gaussian)");
        }
        if let Some(l) = s.lambda0 {
            if !(l > 0.0) {
                bail!("--lambda0 must be positive, got {l}");
            }
        }
        if !(s.jump_mean_cap > 0.0) || s.sibuya_cap == 0 {
            bail!("jump_mean_cap and sibuya_cap must be positive");
        }
        let g = &self.geometry;
        for e in g.extent {
            if !(e > 0.0 && e <= 1.0) {
                bail!("--extent must lie in (0, 1] (the window is the unit interval or square), got {e}");
            }
        }
        if g.kind == GeometryKind::HalfLine && g.grid.n2.is_some() {
            bail!("the half-line takes a single grid size (--grid N), got {}", g.grid);
        }
        if g.kind == GeometryKind::Sphere && g.grid.n2.unwrap_or(g.grid.n1) < 2 {
            bail!("the sphere lattice needs at least 2 colatitudes (--grid NxM with M >= 2)");
        }
        if self.threads == Some(0) {
            bail!("--threads must be at least 1");
        }
        if self.replicates == 0 {
            bail!("--replicates must be at least 1");
        }
        let b = &self.bench;
        if b.sizes.is_empty() || b.sizes.contains(&0) {
            bail!("--sizes must list positive grid sizes");
        }
        if b.repeats == 0 || b.replicates == 0 || b.generic_replicates == 0 {
            bail!("benchmark repeats and replicate counts must be positive");
        }
        if !(b.beta > 0.0 && b.beta < 1.0) {
            bail!("bench.beta must lie strictly between 0 and 1, got {}", b.beta);
        }
        for c in &self.checks {
            if !crate::suite::CHECKS.contains(&c.as_str()) {
                bail!("unknown check {c:?}; available: {}", crate::suite::CHECKS.join(", "));
            }
        }
        Ok(())
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spec_parsing() {
        assert_eq!("300x150".parse::<GridSpec>().unwrap(), GridSpec { n1: 300, n2: Some(150) });
        assert_eq!("1000".parse::<GridSpec>().unwrap(), GridSpec { n1: 1000, n2: None });
        assert!("0x3".parse::<GridSpec>().is_err());
        assert!("ax3".parse::<GridSpec>().is_err());
        assert_eq!(GridSpec { n1: 4, n2: Some(5) }.to_string(), "4x5");
    }

    #[test]
    fn toml_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.sim.alpha = 1.2;
        cfg.sim.epsilon = EpsilonChoice::Fixed(0.003);
        cfg.sim.lambda0 = Some(50.0);
        cfg.geometry.kind = GeometryKind::Sphere;
        cfg.geometry.grid = GridSpec { n1: 30, n2: Some(15) };
        cfg.threads = Some(2);
        cfg.checks = vec!["sibuya".into()];
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
        let default_text = RunConfig::default().to_toml().unwrap();
        assert_eq!(RunConfig::from_toml(&default_text).unwrap(), RunConfig::default());
    }

    #[test]
    fn file_entries_fill_in_defaults() {
        let cfg = RunConfig::from_toml("format = \"bin\"\n[sim]\nalpha = 0.7\n[geometry]\nkind = \"rectangle\"\ngrid = \"8x4\"\n").unwrap();
        assert_eq!(cfg.sim.alpha, 0.7);
        assert_eq!(cfg.sim.beta, SimParams::default().beta);
        assert_eq!(cfg.format, Format::Bin);
        assert_eq!(cfg.geometry.build().unwrap().shape(), vec![8, 4]);
        assert!(RunConfig::from_toml("[sim]\nalpah = 1.0\n").is_err());
    }

    #[test]
    fn invalid_ranges_are_rejected_with_the_flag_name() {
        for (text, flag) in [
            ("[sim]\nbeta = 1.0\n", "--beta"),
            ("[sim]\nalpha = 2.5\n", "--alpha"),
            ("[sim]\naggregation_tolerance = 0.0\n", "--m-tol"),
            ("[geometry]\nextent = [1.5, 1.0]\n", "--extent"),
            ("[geometry]\ngrid = \"3x3\"\n", "single grid size"),
            ("checks = [\"nope\"]\n", "unknown check"),
        ] {
            let err = RunConfig::from_toml(text).unwrap_err().to_string();
            assert!(err.contains(flag), "{text}: {err}");
        }
    }

    #[test]
    fn precedence_flags_file_env() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[sim]\nalpha = 0.9\nbeta = 0.4\n").unwrap();
        let mut flags = Flags {
            config: Some(path.clone()),
            beta: Some(0.6),
            ..Default::default()
        };
        let cfg = RunConfig::resolve(Subcommand::Simulate, &flags, Some("17")).unwrap();
        assert_eq!((cfg.sim.alpha, cfg.sim.beta, cfg.sim.seed), (0.9, 0.6, 17));
        flags.seed = Some(3);
        assert_eq!(RunConfig::resolve(Subcommand::Simulate, &flags, Some("17")).unwrap().sim.seed, 3);
        std::fs::write(&path, "[sim]\nseed = 8\n").unwrap();
        flags.seed = None;
        assert_eq!(RunConfig::resolve(Subcommand::Simulate, &flags, Some("17")).unwrap().sim.seed, 8);
        assert!(RunConfig::resolve(Subcommand::Simulate, &Flags::default(), Some("x")).is_err());
        assert_eq!(RunConfig::resolve(Subcommand::Simulate, &Flags::default(), None).unwrap().sim.seed, 0);
    }

    #[test]
    fn geometry_lattices() {
        let mut g = GeometryConfig {
            kind: GeometryKind::Chentsov2d,
            grid: GridSpec { n1: 3, n2: Some(2) },
            extent: [0.5, 1.0],
            ..Default::default()
        };
        match g.build().unwrap() {
            Geometry::Chentsov2D { xs, ys } => {
                assert_eq!(xs, vec![0.0, 0.25, 0.5]);
                assert_eq!(ys, vec![0.0, 1.0]);
            }
            other => panic!("{other:?}"),
        }
        g.kind = GeometryKind::Sphere;
        let s = g.build().unwrap();
        assert_eq!(s.shape(), vec![3, 2]);
        assert_eq!(s.origin_index(), Some(0));
    }
}
