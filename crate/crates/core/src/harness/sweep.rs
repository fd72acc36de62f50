//! Grid sweeps and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{GridPoint, SweepConfig};
use crate::error::{Result, ZoError};
use crate::optimizer::{run, RunRecord};
use crate::rng::derive_seed;

pub const CSV_HEADER: [&str; 15] = [
    "config_digest",
    "problem",
    "geometry",
    "estimator",
    "schedule",
    "d",
    "T",
    "m",
    "alpha_mult",
    "u_mult",
    "replication",
    "seed",
    "final_gap",
    "evaluations_total",
    "wall_time_s",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_digest: String,
    pub problem: String,
    pub geometry: String,
    pub estimator: String,
    pub schedule: String,
    pub d: usize,
    #[serde(rename = "T")]
    pub t: u64,
    pub m: usize,
    pub alpha_mult: f64,
    pub u_mult: f64,
    pub replication: usize,
    pub seed: u64,
    pub final_gap: f64,
    pub evaluations_total: u64,
    pub wall_time_s: f64,
}

/// `row_seed = mix(master_seed, grid_index, replication)`.
pub fn row_seed(master_seed: u64, grid_index: usize, replication: usize) -> u64 {
    derive_seed(master_seed, grid_index as u64, replication as u64)
}

/// Worker count from `ZO_WORKERS`; serial when unset.
pub fn workers_from_env() -> Result<usize> {
    match std::env::var("ZO_WORKERS") {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(ZoError::Config(format!("ZO_WORKERS must be a positive integer, got {s:?}"))),
        },
    }
}

/// Execute one grid point and replication, returning the full run record.
pub fn run_point(cfg: &SweepConfig, p: &GridPoint, replication: usize) -> Result<RunRecord> {
    let seed = row_seed(cfg.master_seed, p.index, replication);
    let s = cfg.setup(p, seed)?;
    let mut rec = run(s.problem.as_ref(), &s.geometry, &s.domain, &s.estimator, &s.schedule, p.t, seed)?;
    rec.config_digest = cfg.digest();
    Ok(rec)
}

fn run_row(cfg: &SweepConfig, digest: &str, p: &GridPoint, replication: usize) -> Result<SweepRow> {
    let seed = row_seed(cfg.master_seed, p.index, replication);
    let s = cfg.setup(p, seed)?;
    let rec = run(s.problem.as_ref(), &s.geometry, &s.domain, &s.estimator, &s.schedule, p.t, seed)?;
    Ok(SweepRow {
        config_digest: digest.to_string(),
        problem: s.problem.name().to_string(),
        geometry: s.geometry.label().to_string(),
        estimator: s.estimator.label(),
        schedule: s.schedule.family.label().to_string(),
        d: p.d,
        t: p.t,
        m: p.m,
        alpha_mult: s.schedule.alpha_mult,
        u_mult: s.schedule.u_mult,
        replication,
        seed,
        final_gap: rec.final_gap,
        evaluations_total: rec.evaluations_total,
        wall_time_s: if cfg.record_timing { rec.wall_time_s } else { 0.0 },
    })
}

/// Run every grid point × replication on `workers` threads. Rows come back
/// in `(grid index, replication)` order whatever the completion order.
pub fn run_sweep(cfg: &SweepConfig, workers: usize) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let digest = cfg.digest();
    let jobs: Vec<(GridPoint, usize)> = cfg
        .grid_points()
        .into_iter()
        .flat_map(|p| (0..cfg.replications).map(move |r| (p, r)))
        .collect();
    // fail fast on configuration errors before spawning work
    if let Some((p, _)) = jobs.first() {
        cfg.setup(p, 0)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ZoError::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<Result<SweepRow>> =
        pool.install(|| jobs.par_iter().map(|(p, r)| run_row(cfg, &digest, p, *r)).collect());
    results.into_iter().collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(rows: &[SweepRow], path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(f))
}

/// Parse a sweep CSV, checking the header first.
pub fn read_csv<R: Read>(input: R) -> Result<Vec<SweepRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let missing: Vec<&str> = CSV_HEADER
        .iter()
        .copied()
        .filter(|c| !header.iter().any(|h| h == *c))
        .collect();
    if !missing.is_empty() {
        return Err(ZoError::Data(format!("CSV is missing columns: {}", missing.join(", "))));
    }
    let mut rows = Vec::new();
    for rec in r.deserialize() {
        rows.push(rec.map_err(|e| ZoError::Data(e.to_string()))?);
    }
    Ok(rows)
}

pub fn read_csv_file(path: &Path) -> Result<Vec<SweepRow>> {
    read_csv(std::fs::File::open(path)?)
}
