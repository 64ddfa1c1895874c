//! Simulation sweeps: one row per (sweep point, seed) plus one aggregate
//! row per point holding the across-seed mean and its standard error.

use anyhow::{Context, Result};
use rayon::prelude::*;
use ris_mac::config::SystemConfig;
use ris_mac::sim::{run_scheme, Metrics, Scheme, METRICS_HEADER};

pub const AGGREGATE: &str = "mean";

pub fn header(keys: &[String]) -> Vec<String> {
    let mut h = vec!["point".to_string()];
    h.extend(keys.iter().cloned());
    h.push("mode".into());
    h.push("seed".into());
    h.extend(METRICS_HEADER.iter().map(|s| s.to_string()));
    h.extend(METRICS_HEADER.iter().map(|s| format!("{s}_se")));
    h
}

/// Runs every (config, seed) pair on the worker pool. The result keeps
/// the input order: one inner vector per config, one entry per seed.
pub fn run_grid(jobs: &[(SystemConfig, Scheme)], seeds: &[u64], frames: usize) -> Result<Vec<Vec<Metrics>>> {
    let flat: Vec<(usize, u64)> = (0..jobs.len())
        .flat_map(|i| seeds.iter().map(move |&s| (i, s)))
        .collect();
    let results: Vec<Metrics> = flat
        .par_iter()
        .map(|&(i, seed)| {
            let (config, scheme) = &jobs[i];
            run_scheme(config, *scheme, seed, frames).with_context(|| format!("sweep point {i}, seed {seed}"))
        })
        .collect::<Result<_>>()?;
    let mut it = results.into_iter();
    Ok(jobs
        .iter()
        .map(|_| it.by_ref().take(seeds.len()).collect())
        .collect())
}

pub fn mean_se(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Column-wise mean and standard error; columns that are empty in any
/// run stay empty.
fn aggregate(runs: &[Metrics]) -> (Vec<String>, Vec<String>) {
    let rows: Vec<Vec<String>> = runs.iter().map(Metrics::csv_row).collect();
    (0..METRICS_HEADER.len())
        .map(|j| {
            let xs: Option<Vec<f64>> = rows.iter().map(|r| r[j].parse::<f64>().ok()).collect();
            match xs {
                Some(xs) if !xs.is_empty() => {
                    let (m, se) = mean_se(&xs);
                    (m.to_string(), se.map_or(String::new(), |s| s.to_string()))
                }
                _ => (String::new(), String::new()),
            }
        })
        .unzip()
}

pub fn rows(
    points: &[Vec<(String, String)>],
    schemes: &[Scheme],
    seeds: &[u64],
    results: &[Vec<Metrics>],
) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    for (i, ((point, scheme), runs)) in points.iter().zip(schemes).zip(results).enumerate() {
        let lead = |seed: String| {
            let mut r = vec![i.to_string()];
            r.extend(point.iter().map(|(_, v)| v.clone()));
            r.push(scheme.name().to_string());
            r.push(seed);
            r
        };
        for (seed, m) in seeds.iter().zip(runs) {
            let mut r = lead(seed.to_string());
            r.extend(m.csv_row());
            r.resize(r.len() + METRICS_HEADER.len(), String::new());
            out.push(r);
        }
        let (mean, se) = aggregate(runs);
        let mut r = lead(AGGREGATE.to_string());
        r.extend(mean);
        r.extend(se);
        out.push(r);
    }
    out
}
