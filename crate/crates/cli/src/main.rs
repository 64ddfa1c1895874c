mod analyze;
mod figures;
mod simulate;
mod sweep;

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use ris_mac::config::SystemConfig;
use ris_mac::sim::Scheme;

use figures::{Figure, SimBudget};
use sweep::Sweep;

#[derive(Parser)]
#[command(name = "ris-mac", version, about = "RIS-assisted MAC analysis and simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the contention and occupancy models for each sweep point.
    Analyze {
        #[command(flatten)]
        common: Common,
    },
    /// Simulate each sweep point for several seeds.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// mdr-scmu, mdr-mcmu, csma-baseline, no-ris, or auto (by channel count).
        #[arg(long, default_value = "auto")]
        mode: String,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long, default_value_t = 50)]
        frames: usize,
    },
    /// Write the figure series as CSV files plus a manifest.
    Figures {
        /// Figure ids (7a 7b 7c 8a 8b 8c 9a 9b) or `all`.
        #[arg(default_value = "all")]
        which: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Override one parameter, `key=value`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        sets: Vec<String>,
        #[arg(long, default_value_t = 3)]
        seeds: usize,
        #[arg(long, default_value_t = 1)]
        seed_base: u64,
        #[arg(long, default_value_t = 20)]
        frames: usize,
        #[arg(long, default_value = "figures")]
        out_dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Parameter file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one parameter, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// `key=a:b:step` or `key=v1,v2,...`; repeat for a cartesian product.
    #[arg(long, value_name = "SPEC")]
    sweep: Vec<String>,
    /// First seed; seeds are consecutive from here.
    #[arg(long, default_value_t = 1)]
    seed_base: u64,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn load_config(path: Option<&Path>, sets: &[String]) -> Result<SystemConfig> {
    let mut config = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            SystemConfig::parse(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SystemConfig::default(),
    };
    for s in sets {
        let (k, v) = s
            .split_once('=')
            .with_context(|| format!("--set {s:?}: expected key=value"))?;
        sweep::apply(&mut config, k.trim(), v.trim()).with_context(|| format!("--set {s}"))?;
    }
    Ok(config)
}

fn write_csv(out: Option<&Path>, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let sink: Box<dyn Write> = match out {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

fn analyze(common: &Common) -> Result<()> {
    let base = load_config(common.config.as_deref(), &common.sets)?;
    let sweep = Sweep::parse(&common.sweep)?;
    let points = sweep.points();
    let configs = points
        .iter()
        .map(|p| sweep::configure(&base, p))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<Vec<String>> = configs
        .par_iter()
        .zip(&points)
        .enumerate()
        .map(|(i, (c, p))| {
            let mut r = vec![i.to_string()];
            r.extend(p.iter().map(|(_, v)| v.clone()));
            r.extend(analyze::row(c, common.seed_base));
            r
        })
        .collect();
    let mut header = vec!["point".to_string()];
    header.extend(sweep.keys());
    header.extend(analyze::COLUMNS.iter().map(|s| s.to_string()));
    write_csv(common.out.as_deref(), &header, &rows)
}

fn simulate(common: &Common, mode: &str, seeds: usize, frames: usize) -> Result<()> {
    if seeds == 0 {
        bail!("--seeds must be at least 1");
    }
    let base = load_config(common.config.as_deref(), &common.sets)?;
    let sweep = Sweep::parse(&common.sweep)?;
    let points = sweep.points();
    let fixed: Option<Scheme> = match mode {
        "auto" => None,
        m => Some(m.parse().map_err(anyhow::Error::msg)?),
    };
    let jobs = points
        .iter()
        .map(|p| {
            let c = sweep::configure(&base, p)?;
            let scheme = fixed.unwrap_or_else(|| Scheme::for_config(&c));
            Ok((c, scheme))
        })
        .collect::<Result<Vec<_>>>()?;
    let seed_list: Vec<u64> = (0..seeds as u64).map(|i| common.seed_base + i).collect();
    let results = simulate::run_grid(&jobs, &seed_list, frames)?;
    let schemes: Vec<Scheme> = jobs.iter().map(|j| j.1).collect();
    let rows = simulate::rows(&points, &schemes, &seed_list, &results);
    write_csv(common.out.as_deref(), &simulate::header(&sweep.keys()), &rows)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { common } => analyze(&common),
        Command::Simulate {
            common,
            mode,
            seeds,
            frames,
        } => simulate(&common, &mode, seeds, frames),
        Command::Figures {
            which,
            config,
            sets,
            seeds,
            seed_base,
            frames,
            out_dir,
        } => {
            if seeds == 0 {
                bail!("--seeds must be at least 1");
            }
            let base = load_config(config.as_deref(), &sets)?;
            let figs: Vec<Figure> = if which.iter().any(|w| w == "all") {
                Figure::ALL.to_vec()
            } else {
                which.iter().map(|w| w.parse()).collect::<Result<_>>()?
            };
            let budget = SimBudget {
                seeds,
                seed_base,
                frames,
            };
            let files = figures::write_all(&figs, &base, budget, &out_dir)?;
            eprintln!("wrote {} curves to {}", files.len(), out_dir.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
