//! Plot-ready series for the evaluation figures. Each curve goes to its
//! own CSV (x, y and, for simulated curves, the standard error of y).

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use ris_mac::channel::realize_channels;
use ris_mac::config::SystemConfig;
use ris_mac::markov::{analytic_throughput, solve_multi_channel, SolverOptions};
use ris_mac::protocol::AccessPoint;
use ris_mac::sim::{Metrics, Scheme};

use crate::analyze::effective_zeta;
use crate::simulate::{mean_se, run_grid};
use crate::sweep;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    SnrVsElements,
    PowerVsDistance,
    ThroughputVsUsers,
    SnrVsGroups,
    PowerVsDistanceGroups,
    GroupThroughputVsUsers,
    CollisionVsUsers,
    ServedVsNegotiation,
}

impl Figure {
    pub const ALL: [Figure; 8] = [
        Figure::SnrVsElements,
        Figure::PowerVsDistance,
        Figure::ThroughputVsUsers,
        Figure::SnrVsGroups,
        Figure::PowerVsDistanceGroups,
        Figure::GroupThroughputVsUsers,
        Figure::CollisionVsUsers,
        Figure::ServedVsNegotiation,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Figure::SnrVsElements => "7a",
            Figure::PowerVsDistance => "7b",
            Figure::ThroughputVsUsers => "7c",
            Figure::SnrVsGroups => "8a",
            Figure::PowerVsDistanceGroups => "8b",
            Figure::GroupThroughputVsUsers => "8c",
            Figure::CollisionVsUsers => "9a",
            Figure::ServedVsNegotiation => "9b",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Figure::SnrVsElements => "SNR vs number of RIS elements",
            Figure::PowerVsDistance => "required transmit power vs distance",
            Figure::ThroughputVsUsers => "normalized throughput vs number of users",
            Figure::SnrVsGroups => "SNR vs number of RIS groups",
            Figure::PowerVsDistanceGroups => "required transmit power vs distance, grouped surface",
            Figure::GroupThroughputVsUsers => "normalized throughput vs number of users, grouped surface",
            Figure::CollisionVsUsers => "collision probability vs number of users",
            Figure::ServedVsNegotiation => "served users vs negotiation period",
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Figure {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Figure::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| anyhow!("unknown figure {s:?}; expected one of 7a 7b 7c 8a 8b 8c 9a 9b or all"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub name: String,
    pub x: &'static str,
    pub y: &'static str,
    pub points: Vec<(f64, f64, Option<f64>)>,
}

impl Curve {
    fn new(name: impl Into<String>, x: &'static str, y: &'static str) -> Self {
        Self {
            name: name.into(),
            x,
            y,
            points: Vec::new(),
        }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record([self.x.to_string(), self.y.to_string(), format!("{}_se", self.y)])?;
        for (x, y, se) in &self.points {
            w.write_record([x.to_string(), y.to_string(), se.map_or(String::new(), |s| s.to_string())])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimBudget {
    pub seeds: usize,
    pub seed_base: u64,
    pub frames: usize,
}

impl SimBudget {
    fn seeds(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed_base + i).collect()
    }
}

const DISTANCES: [f64; 4] = [30.0, 60.0, 90.0, 120.0];
const GROUPS: [usize; 5] = [1, 2, 4, 8, 16];

fn with(base: &SystemConfig, sets: &[(&str, String)]) -> Result<SystemConfig> {
    let point: Vec<(String, String)> = sets.iter().map(|(k, v)| (k.to_string(), v.clone())).collect();
    sweep::configure(base, &point)
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

/// SNR of user 0 on group 0, with and without the surface, at the
/// optimizer's transmit power.
struct LinkBudget {
    snr: f64,
    direct_snr: f64,
    rho2: f64,
}

fn link_budget(config: &SystemConfig, seed: u64) -> Result<LinkBudget> {
    let one = SystemConfig {
        users: 1,
        ..config.clone()
    };
    let channels = realize_channels(&one, seed)?;
    let mut ap = AccessPoint::new(&one, &channels, one.is_multichannel());
    let link = ap.link(0, 0).map_err(|r| anyhow!("link: {r:?}"))?;
    let mut direct = AccessPoint::new(&one, &channels, false).without_surface();
    let direct = direct.link(0, 0).map_err(|r| anyhow!("direct link: {r:?}"))?;
    Ok(LinkBudget {
        snr: link.snr,
        direct_snr: direct.snr,
        rho2: link.rho2,
    })
}

/// Transmit power that brings the received SNR up to what the direct link
/// achieves at power P from the reference distance. SNR is linear in the
/// transmit power, so it is a rescaling of the optimized link.
fn required_power(config: &SystemConfig, reference_snr: f64, seed: u64) -> Result<(f64, f64)> {
    let b = link_budget(config, seed)?;
    let with_ris = reference_snr * b.rho2 / b.snr;
    let without = reference_snr * config.tx_power_w / b.direct_snr;
    Ok((with_ris, without))
}

fn snr_vs_elements(base: &SystemConfig, seed: u64) -> Result<Vec<Curve>> {
    let ns = [16usize, 32, 64, 96, 128, 160, 192, 224, 256];
    let mut out = Vec::new();
    for d in DISTANCES {
        let mut ris = Curve::new(format!("d{d}"), "N", "snr_db");
        let mut direct = Curve::new(format!("d{d}_no_ris"), "N", "snr_db");
        for n in ns {
            let c = SystemConfig {
                elements: n,
                distance_m: d,
                ..base.clone()
            };
            let b = link_budget(&c, seed)?;
            ris.points.push((n as f64, db(b.snr), None));
            direct.points.push((n as f64, db(b.direct_snr), None));
        }
        out.extend([ris, direct]);
    }
    Ok(out)
}

fn reference_snr(base: &SystemConfig, seed: u64) -> Result<f64> {
    Ok(link_budget(base, seed)?.direct_snr)
}

fn distances() -> impl Iterator<Item = f64> {
    (3..=12).map(|i| f64::from(i) * 10.0)
}

fn power_vs_distance(base: &SystemConfig, seed: u64) -> Result<Vec<Curve>> {
    let target = reference_snr(base, seed)?;
    let mut out = Vec::new();
    let mut direct = Curve::new("no_ris", "d_m", "power_dbm");
    for n in [32usize, 64, 128, 256] {
        let mut curve = Curve::new(format!("N{n}"), "d_m", "power_dbm");
        for d in distances() {
            let c = SystemConfig {
                elements: n,
                distance_m: d,
                ..base.clone()
            };
            let (p, p0) = required_power(&c, target, seed)?;
            curve.points.push((d, db(p * 1e3), None));
            if n == 32 {
                direct.points.push((d, db(p0 * 1e3), None));
            }
        }
        out.push(curve);
    }
    out.push(direct);
    Ok(out)
}

fn snr_vs_groups(base: &SystemConfig, seed: u64) -> Result<Vec<Curve>> {
    let mut out = Vec::new();
    for d in DISTANCES {
        let mut curve = Curve::new(format!("d{d}"), "L", "snr_db");
        for l in GROUPS {
            let c = with(base, &[("L", l.to_string()), ("d", d.to_string())])?;
            curve.points.push((l as f64, db(link_budget(&c, seed)?.snr), None));
        }
        out.push(curve);
    }
    Ok(out)
}

fn power_vs_distance_groups(base: &SystemConfig, seed: u64) -> Result<Vec<Curve>> {
    let target = reference_snr(base, seed)?;
    let mut out = Vec::new();
    for l in GROUPS {
        let mut curve = Curve::new(format!("L{l}"), "d_m", "power_dbm");
        for d in distances() {
            let c = with(base, &[("L", l.to_string()), ("d", d.to_string())])?;
            curve.points.push((d, db(required_power(&c, target, seed)?.0 * 1e3), None));
        }
        out.push(curve);
    }
    Ok(out)
}

/// Simulated curves: one job per (curve, x), pooled over seeds on the
/// worker pool.
fn simulated(
    specs: Vec<(String, Scheme, Vec<(f64, SystemConfig)>)>,
    x: &'static str,
    y: &'static str,
    metric: fn(&Metrics) -> f64,
    budget: SimBudget,
) -> Result<Vec<Curve>> {
    let jobs: Vec<(SystemConfig, Scheme)> = specs
        .iter()
        .flat_map(|(_, s, pts)| pts.iter().map(move |(_, c)| (c.clone(), *s)))
        .collect();
    let results = run_grid(&jobs, &budget.seeds(), budget.frames)?;
    let mut it = results.into_iter();
    Ok(specs
        .into_iter()
        .map(|(name, _, pts)| {
            let mut curve = Curve::new(name, x, y);
            for (xv, _) in pts {
                let runs = it.next().unwrap_or_default();
                let ys: Vec<f64> = runs.iter().map(metric).collect();
                let (m, se) = mean_se(&ys);
                curve.points.push((xv, m, se));
            }
            curve
        })
        .collect())
}

fn bound_curve(name: String, x: &'static str, y: &'static str, pts: &[(f64, SystemConfig)]) -> Result<Curve> {
    let mut curve = Curve::new(name, x, y);
    for (xv, c) in pts {
        let multi = solve_multi_channel(c, &SolverOptions::from_config(c))?;
        let zeta = if c.is_multichannel() {
            effective_zeta(&multi)
        } else {
            multi.per_busy[0].zeta.success
        };
        curve.points.push((*xv, analytic_throughput(c, zeta), None));
    }
    Ok(curve)
}

fn throughput_vs_users(base: &SystemConfig, budget: SimBudget) -> Result<Vec<Curve>> {
    let ks: Vec<usize> = std::iter::once(1).chain((10..=100).step_by(10)).collect();
    let points = |r: u32| -> Result<Vec<(f64, SystemConfig)>> {
        ks.iter()
            .map(|&k| Ok((k as f64, with(base, &[("L", "1".into()), ("K", k.to_string()), ("r_max", r.to_string())])?)))
            .collect()
    };
    let mut specs = Vec::new();
    let mut bounds = Vec::new();
    for r in [5u32, 10, 20] {
        let pts = points(r)?;
        bounds.push(bound_curve(format!("bound_r{r}"), "K", "throughput", &pts)?);
        specs.push((format!("mdr_r{r}"), Scheme::MdrScmu, pts));
    }
    specs.push(("csma_r20".into(), Scheme::CsmaBaseline, points(20)?));
    let mut out = simulated(specs, "K", "throughput", Metrics::throughput, budget)?;
    out.extend(bounds);
    Ok(out)
}

fn group_throughput_vs_users(base: &SystemConfig, budget: SimBudget) -> Result<Vec<Curve>> {
    let mut specs = Vec::new();
    let mut bounds = Vec::new();
    for l in [2usize, 4, 8, 16] {
        let pts: Vec<(f64, SystemConfig)> = (50..=300)
            .step_by(50)
            .map(|k| Ok((k as f64, with(base, &[("L", l.to_string()), ("K", k.to_string())])?)))
            .collect::<Result<_>>()?;
        bounds.push(bound_curve(format!("bound_L{l}"), "K", "throughput", &pts)?);
        specs.push((format!("L{l}"), Scheme::MdrMcmu, pts));
    }
    let mut out = simulated(specs, "K", "throughput", Metrics::throughput, budget)?;
    out.extend(bounds);
    Ok(out)
}

fn collision_vs_users(base: &SystemConfig, budget: SimBudget) -> Result<Vec<Curve>> {
    let specs = GROUPS
        .iter()
        .map(|&l| {
            let pts = (10..=100)
                .step_by(10)
                .map(|k| Ok((k as f64, with(base, &[("L", l.to_string()), ("K", k.to_string())])?)))
                .collect::<Result<Vec<_>>>()?;
            let scheme = if l > 1 { Scheme::MdrMcmu } else { Scheme::MdrScmu };
            Ok((format!("L{l}"), scheme, pts))
        })
        .collect::<Result<Vec<_>>>()?;
    simulated(specs, "K", "collision_prob", Metrics::collision_probability, budget)
}

fn served_vs_negotiation(base: &SystemConfig, budget: SimBudget) -> Result<Vec<Curve>> {
    let specs = GROUPS
        .iter()
        .map(|&l| {
            let pts = [0.02, 0.03, 0.05]
                .iter()
                .map(|&th| {
                    let c = with(base, &[("L", l.to_string()), ("K", "300".into()), ("t_h", th.to_string())])?;
                    Ok((th, c))
                })
                .collect::<Result<Vec<_>>>()?;
            let scheme = if l > 1 { Scheme::MdrMcmu } else { Scheme::MdrScmu };
            Ok((format!("L{l}"), scheme, pts))
        })
        .collect::<Result<Vec<_>>>()?;
    simulated(specs, "t_h_s", "served_users", Metrics::served_per_frame, budget)
}

pub fn curves(figure: Figure, base: &SystemConfig, budget: SimBudget) -> Result<Vec<Curve>> {
    let report = base.validate();
    if !report.is_ok() {
        bail!("invalid configuration:\n{report}");
    }
    let seed = budget.seed_base;
    match figure {
        Figure::SnrVsElements => snr_vs_elements(base, seed),
        Figure::PowerVsDistance => power_vs_distance(base, seed),
        Figure::ThroughputVsUsers => throughput_vs_users(base, budget),
        Figure::SnrVsGroups => snr_vs_groups(base, seed),
        Figure::PowerVsDistanceGroups => power_vs_distance_groups(base, seed),
        Figure::GroupThroughputVsUsers => group_throughput_vs_users(base, budget),
        Figure::CollisionVsUsers => collision_vs_users(base, budget),
        Figure::ServedVsNegotiation => served_vs_negotiation(base, budget),
    }
}

/// Writes one CSV per curve plus `manifest.csv` and the base `config.txt`.
pub fn write_all(figures: &[Figure], base: &SystemConfig, budget: SimBudget, dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    std::fs::write(dir.join("config.txt"), base.to_text())?;
    let mut manifest = csv::Writer::from_path(dir.join("manifest.csv"))?;
    manifest.write_record([
        "figure", "title", "curve", "file", "x", "y", "points", "seeds", "seed_base", "frames",
    ])?;
    let mut files = Vec::new();
    for &fig in figures {
        for curve in curves(fig, base, budget).with_context(|| format!("figure {fig}"))? {
            let file = format!("fig{}_{}.csv", fig.id(), curve.name);
            curve.write_csv(&dir.join(&file))?;
            let simulated = curve.points.iter().any(|p| p.2.is_some());
            let (seeds, frames) = if simulated {
                (budget.seeds.to_string(), budget.frames.to_string())
            } else {
                (String::new(), String::new())
            };
            manifest.write_record([
                fig.id().to_string(),
                fig.title().to_string(),
                curve.name.clone(),
                file.clone(),
                curve.x.to_string(),
                curve.y.to_string(),
                curve.points.len().to_string(),
                seeds,
                budget.seed_base.to_string(),
                frames,
            ])?;
            files.push(file);
        }
    }
    manifest.flush()?;
    Ok(files)
}
