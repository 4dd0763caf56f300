//! Timing of the fast and generic occupancy samplers across grid sizes.
//!
//! Each cell times `repeats` sequential batches and reports the median of
//! batch time divided by batch size.

use std::time::Instant;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use karlin_core::geometry::Geometry;
use karlin_core::occupancy::{OccupancyOptions, OccupancySampler, SamplerChoice, SamplerKind};
use karlin_core::{KarlinError, RngStream};

use crate::config::{BenchConfig, GeometryKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub sampler: SamplerKind,
    pub n: usize,
    pub replicates: usize,
    pub median_seconds: f64,
    pub aborted: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub geometry: String,
    pub beta: f64,
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of log time against log n for the fast sampler.
    pub fast_slope: f64,
    /// Generic over fast median time at each size timed for both.
    pub ratios: Vec<(usize, f64)>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sampler,n,replicates,median_seconds_per_replicate,aborted\n");
        for r in &self.rows {
            let name = match r.sampler {
                SamplerKind::Fast => "fast",
                SamplerKind::Generic => "generic",
            };
            out.push_str(&format!("{name},{},{},{:e},{}\n", r.n, r.replicates, r.median_seconds, r.aborted));
        }
        out
    }

    pub fn ratio_at(&self, n: usize) -> Option<f64> {
        self.ratios.iter().find(|(m, _)| *m == n).map(|(_, r)| *r)
    }
}

fn bench_geometry(kind: GeometryKind, n: usize) -> Result<Geometry> {
    Ok(match kind {
        GeometryKind::HalfLine => Geometry::half_line((1..=n).map(|i| i as f64 / n as f64).collect())?,
        GeometryKind::Rectangle => {
            let k = ((n as f64).sqrt().round() as usize).max(1);
            let axis: Vec<f64> = (1..=k).map(|i| i as f64 / k as f64).collect();
            Geometry::rectangle(axis.clone(), axis)?
        }
        other => bail!("bench runs on the half-line or the rectangle, not {other:?}"),
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn time_cell(sampler: &OccupancySampler<'_>, replicates: usize, repeats: usize, stream: &RngStream) -> Result<(f64, usize)> {
    let mut bits = vec![0u8; sampler.geometry().len()];
    let mut aborted = 0;
    let mut times = Vec::with_capacity(repeats);
    // one untimed warm-up batch
    for rep in 0..=repeats {
        let mut rng = stream.substream(rep as u64);
        let start = Instant::now();
        for _ in 0..replicates {
            match sampler.sample_into(&mut bits, &mut rng) {
                Ok(_) => {}
                Err(KarlinError::HeavyTailOverflow { .. }) => aborted += 1,
                Err(e) => return Err(e.into()),
            }
        }
        let elapsed = start.elapsed().as_secs_f64();
        if rep > 0 {
            times.push(elapsed / replicates as f64);
        }
    }
    Ok((median(times), aborted))
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Sequential timings; run on one thread so cells do not compete.
pub fn run_bench(kind: GeometryKind, cfg: &BenchConfig, seed: u64) -> Result<BenchReport> {
    let mut rows = Vec::new();
    let mut fast_points = Vec::new();
    let mut ratios = Vec::new();
    let mut geometry_name = String::new();
    for (k, &n) in cfg.sizes.iter().enumerate() {
        let g = bench_geometry(kind, n)?;
        geometry_name = g.name().to_string();
        let cells = g.len();
        let fast = OccupancySampler::new(&g, cfg.beta, SamplerChoice::Fast, OccupancyOptions::default())?;
        let stream = RngStream::new(seed, 10 + k as u64);
        let (t_fast, a_fast) = time_cell(&fast, cfg.replicates, cfg.repeats, &stream.substream(0))?;
        rows.push(BenchRow {
            sampler: SamplerKind::Fast,
            n: cells,
            replicates: cfg.replicates,
            median_seconds: t_fast,
            aborted: a_fast,
        });
        fast_points.push(((cells as f64).ln(), t_fast.ln()));
        if cfg.generic {
            let generic = OccupancySampler::new(&g, cfg.beta, SamplerChoice::Generic, OccupancyOptions::default())?;
            let (t_gen, a_gen) = time_cell(&generic, cfg.generic_replicates, cfg.repeats, &stream.substream(1))?;
            rows.push(BenchRow {
                sampler: SamplerKind::Generic,
                n: cells,
                replicates: cfg.generic_replicates,
                median_seconds: t_gen,
                aborted: a_gen,
            });
            ratios.push((cells, t_gen / t_fast));
        }
    }
    let fast_slope = if fast_points.len() >= 2 { slope(&fast_points) } else { f64::NAN };
    Ok(BenchReport {
        geometry: geometry_name,
        beta: cfg.beta,
        rows,
        fast_slope,
        ratios,
    })
}
