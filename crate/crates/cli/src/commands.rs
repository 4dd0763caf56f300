//! Subcommand drivers. Each returns the files it wrote.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use karlin_core::assembler::{assemble, assemble_with_jumps};
use karlin_core::field::FieldMeta;
use karlin_core::occupancy::{sample_occupancy_batch, Mixing, OccupancyOptions, OccupancySampler, SamplerKind};
use karlin_core::verify::TestReport;
use karlin_core::RngStream;

use crate::bench::{run_bench as bench_timings, BenchReport};
use crate::config::{ComponentSel, Format, RunConfig, Subcommand};
use crate::output::{heatmap, with_suffix, write_csv, write_json, write_ksf, write_png};
use crate::suite::{run_check, Scale, CHECKS};

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub passed: bool,
}

/// Runs the configured subcommand, inside a pool of `threads` workers if set.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    let go = || match cfg.subcommand {
        Subcommand::Simulate => run_simulate(cfg).map(|files| Outcome { files, passed: true }),
        Subcommand::OddOccupancy => run_odd_occupancy(cfg).map(|files| Outcome { files, passed: true }),
        Subcommand::Verify => run_verify(cfg),
        Subcommand::Bench => run_bench(cfg).map(|(files, _)| Outcome { files, passed: true }),
    };
    match cfg.threads {
        Some(k) => rayon::ThreadPoolBuilder::new().num_threads(k).build()?.install(go),
        None => go(),
    }
}

fn write_grid(cfg: &RunConfig, stem: &str, values: &[f64], shape: &[usize], meta: &str) -> Result<Vec<PathBuf>> {
    let path = with_suffix(&cfg.output, &format!(".{stem}.{}", cfg.format.extension()));
    match cfg.format {
        Format::Csv => write_csv(&path, values, shape)?,
        Format::Bin => write_ksf(&path, values, shape, meta)?,
        Format::Image => write_png(&path, &heatmap(values, shape))?,
    }
    let mut files = vec![path];
    if cfg.heatmap && cfg.format != Format::Image {
        let png = with_suffix(&cfg.output, &format!(".{stem}.png"));
        write_png(&png, &heatmap(values, shape))?;
        files.push(png);
    }
    Ok(files)
}

#[derive(Serialize)]
struct SimulateSidecar<'a> {
    command: &'static str,
    config: &'a RunConfig,
    shape: Vec<usize>,
    components: Vec<&'static str>,
    missing: Vec<&'static str>,
    meta: &'a FieldMeta,
    files: Vec<String>,
}

fn file_names(files: &[PathBuf]) -> Vec<String> {
    files.iter().map(|p| p.display().to_string()).collect()
}

pub fn run_simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let geometry = cfg.geometry.build()?;
    let assembled = if cfg.provenance {
        assemble_with_jumps(&geometry, &cfg.sim)
    } else {
        assemble(&geometry, &cfg.sim)
    }
    .context("simulation failed")?;
    let mut files = Vec::new();
    let mut written = Vec::new();
    let mut missing = Vec::new();
    for c in cfg.component.components() {
        let Some(field) = assembled.component(c) else {
            if cfg.component != ComponentSel::All {
                bail!(
                    "this run has no {} part (alpha = {}, skip_gaussian = {}); choose another --component",
                    c.name(),
                    cfg.sim.alpha,
                    serde_json::to_string(&cfg.sim.skip_gaussian)?
                );
            }
            missing.push(c.name());
            continue;
        };
        let meta = serde_json::to_string(&field.meta)?;
        files.extend(write_grid(cfg, c.name(), &field.values, &field.shape, &meta)?);
        written.push(c.name());
    }
    if let Some(jumps) = &assembled.jumps {
        let path = with_suffix(&cfg.output, ".jumps.csv");
        let mut text = String::from("jump,magnitude,sampler,mixing,clamped\n");
        for (k, j) in jumps.iter().enumerate() {
            let sampler = match j.occupancy.sampler {
                SamplerKind::Fast => "fast",
                SamplerKind::Generic => "generic",
            };
            let mixing = match j.occupancy.mixing {
                Mixing::Count(q) => q.to_string(),
                Mixing::Parameter(l) => l.to_string(),
            };
            text.push_str(&format!("{k},{},{sampler},{mixing},{}\n", j.magnitude, j.occupancy.clamped));
        }
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        files.push(path);
    }
    let sidecar = with_suffix(&cfg.output, ".json");
    write_json(
        &sidecar,
        &SimulateSidecar {
            command: "simulate",
            config: cfg,
            shape: geometry.shape(),
            components: written,
            missing,
            meta: &assembled.combined.meta,
            files: file_names(&files),
        },
    )?;
    files.push(sidecar);
    Ok(files)
}

#[derive(Serialize)]
struct OccupancySidecar<'a> {
    command: &'static str,
    config: &'a RunConfig,
    sampler: SamplerKind,
    seed: u64,
    shape: Vec<usize>,
    replicates: usize,
    aborted: usize,
    clamped: usize,
    /// `Q` (generic) or `Λ` (fast) per kept replicate.
    mixing: Vec<Mixing>,
    files: Vec<String>,
}

pub fn run_odd_occupancy(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let geometry = cfg.geometry.build()?;
    let options = OccupancyOptions {
        lambda0: cfg.sim.lambda0,
        sibuya_cap: cfg.sim.sibuya_cap,
        prob_scale: 1.0,
    };
    let sampler = OccupancySampler::new(&geometry, cfg.sim.beta, cfg.sim.sampler, options)?;
    let batch = sample_occupancy_batch(&sampler, cfg.replicates, &RngStream::new(cfg.sim.seed, 0))?;
    let mut shape = geometry.shape();
    if cfg.replicates > 1 {
        shape.insert(0, batch.samples.len());
    }
    let values: Vec<f64> = batch.samples.iter().flat_map(|s| s.bits.iter().map(|&b| f64::from(b))).collect();
    let mixing: Vec<Mixing> = batch.samples.iter().map(|s| s.meta.mixing).collect();
    let meta = serde_json::json!({
        "sampler": sampler.kind(),
        "beta": cfg.sim.beta,
        "seed": cfg.sim.seed,
        "aborted": batch.aborted,
        "clamped": batch.clamped,
        "mixing": mixing,
    });
    let mut files = write_grid(cfg, "occupancy", &values, &shape, &meta.to_string())?;
    let sidecar = with_suffix(&cfg.output, ".json");
    write_json(
        &sidecar,
        &OccupancySidecar {
            command: "odd-occupancy",
            config: cfg,
            sampler: sampler.kind(),
            seed: cfg.sim.seed,
            shape,
            replicates: cfg.replicates,
            aborted: batch.aborted,
            clamped: batch.clamped,
            mixing,
            files: file_names(&files),
        },
    )?;
    files.push(sidecar);
    Ok(files)
}

#[derive(Serialize)]
struct VerifyRecord<'a> {
    check: &'a str,
    #[serde(flatten)]
    report: &'a TestReport,
}

/// Prints one line per report and writes all reports as JSON.
pub fn run_verify(cfg: &RunConfig) -> Result<Outcome> {
    let names: Vec<&str> = if cfg.checks.is_empty() {
        CHECKS.to_vec()
    } else {
        cfg.checks.iter().map(String::as_str).collect()
    };
    let scale = if cfg.quick { Scale::Quick } else { Scale::Full };
    let mut all = Vec::new();
    for name in names {
        for report in run_check(name, scale, cfg.sim.seed).with_context(|| format!("check {name} failed to run"))? {
            println!("{}", report.summary());
            all.push((name, report));
        }
    }
    let passed = all.iter().all(|(_, r)| r.passed);
    let records: Vec<VerifyRecord> = all.iter().map(|(check, report)| VerifyRecord { check, report }).collect();
    let path = with_suffix(&cfg.output, ".verify.json");
    write_json(&path, &records)?;
    Ok(Outcome {
        files: vec![path],
        passed,
    })
}

pub fn run_bench(cfg: &RunConfig) -> Result<(Vec<PathBuf>, BenchReport)> {
    let report = bench_timings(cfg.geometry.kind, &cfg.bench, cfg.sim.seed)?;
    let csv = with_suffix(&cfg.output, ".bench.csv");
    std::fs::write(&csv, report.to_csv()).with_context(|| format!("cannot write {}", csv.display()))?;
    let json = with_suffix(&cfg.output, ".bench.json");
    write_json(&json, &report)?;
    println!("fast-path log-log slope: {:.3}", report.fast_slope);
    for (n, r) in &report.ratios {
        println!("generic/fast at n = {n}: {r:.1}x");
    }
    Ok((vec![csv, json], report))
}

