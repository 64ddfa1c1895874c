//! Analytical rows: the contention fixed point, sub-channel occupancy,
//! throughput bound and capacity for each sweep point.

use anyhow::Result;
use ris_mac::channel::realize_channels;
use ris_mac::config::SystemConfig;
use ris_mac::markov::{
    analytic_throughput, capacity_mcmu, capacity_scmu, lanes_per_channel, solve_multi_channel,
    suggested_cycle, MarkovError, MarkovSolution, MultiChannelSolution, SolverOptions,
};
use ris_mac::protocol::AccessPoint;
use ris_mac::reservation::solve_scmu_counts;

pub const COLUMNS: [&str; 24] = [
    "users",
    "groups",
    "subchannels",
    "tau",
    "p",
    "q",
    "gamma",
    "eta",
    "zeta_s",
    "zeta_e",
    "zeta_c",
    "res_tau",
    "res_p",
    "res_q",
    "iterations",
    "converged",
    "zeta_s_eff",
    "occupancy",
    "lanes",
    "cycle_suggested_tx",
    "throughput",
    "mean_snr_db",
    "capacity_bps",
    "error",
];

/// Contention success probability averaged over the busy-channel states
/// in which users are negotiating for a channel.
pub fn effective_zeta(multi: &MultiChannelSolution) -> f64 {
    let busy: f64 = multi.occupancy[1..].iter().sum();
    if busy <= 0.0 {
        return multi.per_busy[0].zeta.success;
    }
    multi
        .per_busy
        .iter()
        .zip(&multi.occupancy[1..])
        .map(|(s, pi)| s.zeta.success * pi)
        .sum::<f64>()
        / busy
}

/// SNR of every user on its group, with the configured phase resolution.
fn user_snrs(config: &SystemConfig, seed: u64) -> Result<Vec<f64>> {
    let channels = realize_channels(config, seed)?;
    let mut ap = AccessPoint::new(config, &channels, config.is_multichannel());
    let groups = ap.channel_count();
    (0..config.users)
        .map(|k| {
            ap.link(k, k % groups)
                .map(|l| l.snr)
                .map_err(|r| anyhow::anyhow!("user {k}: {r:?}"))
        })
        .collect()
}

fn solution_fields(s: &MarkovSolution, tol: f64) -> Vec<String> {
    vec![
        s.tau.to_string(),
        s.p.to_string(),
        s.q.to_string(),
        s.gamma.to_string(),
        s.eta.to_string(),
        s.zeta.success.to_string(),
        s.zeta.empty.to_string(),
        s.zeta.collision.to_string(),
        s.residuals.tau.to_string(),
        s.residuals.collision.to_string(),
        s.residuals.balance.to_string(),
        s.iterations.to_string(),
        (s.residuals.max() < tol).to_string(),
    ]
}

/// One row for `config`. Solver failures are reported in the `error`
/// column rather than aborting the sweep.
pub fn row(config: &SystemConfig, seed: u64) -> Vec<String> {
    let mut out = vec![
        config.users.to_string(),
        config.groups.to_string(),
        config.subchannels.to_string(),
    ];
    let blank = |out: &mut Vec<String>, from: usize| out.resize(from, String::new());
    let report = config.validate();
    if !report.is_ok() {
        blank(&mut out, COLUMNS.len() - 1);
        out.push(report.to_string().replace('\n', "; "));
        return out;
    }
    let opts = SolverOptions::from_config(config);
    let multi = match solve_multi_channel(config, &opts) {
        Ok(m) => m,
        Err(e) => {
            if let MarkovError::NonConvergence { last, .. } = &e {
                out.extend(solution_fields(last, opts.tol));
            }
            blank(&mut out, COLUMNS.len() - 1);
            out.push(e.to_string());
            return out;
        }
    };
    let single = &multi.per_busy[0];
    out.extend(solution_fields(single, opts.tol));
    let zeta = if config.is_multichannel() {
        effective_zeta(&multi)
    } else {
        single.zeta.success
    };
    out.push(zeta.to_string());
    let occ: Vec<String> = multi.occupancy.iter().map(|p| p.to_string()).collect();
    out.push(occ.join(";"));
    out.push(lanes_per_channel(config).to_string());
    out.push(suggested_cycle(config, single.zeta.success).negotiations.to_string());
    out.push(analytic_throughput(config, zeta).to_string());

    let ledger = config.transmission_slots() * config.subchannels.max(1) as u32;
    let capacity = user_snrs(config, seed).and_then(|snr| {
        let counts = solve_scmu_counts(config.users, config.r_max, ledger)?;
        let mean_db = 10.0 * (snr.iter().sum::<f64>() / snr.len().max(1) as f64).log10();
        let cap = if config.is_multichannel() {
            capacity_mcmu(config, &multi, &snr, &counts)
        } else {
            capacity_scmu(config, single, &snr, &counts)
        };
        Ok((mean_db, cap))
    });
    match capacity {
        Ok((snr_db, cap)) => {
            out.push(snr_db.to_string());
            out.push(cap.to_string());
            out.push(String::new());
        }
        Err(e) => {
            out.push(String::new());
            out.push(String::new());
            out.push(e.to_string());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_has_every_column() {
        let c = SystemConfig {
            users: 10,
            ..SystemConfig::default()
        };
        let r = row(&c, 1);
        assert_eq!(r.len(), COLUMNS.len());
        assert_eq!(r[15], "true");
        assert!(r[23].is_empty(), "{}", r[23]);
    }

    #[test]
    fn invalid_config_is_flagged() {
        let c = SystemConfig {
            groups: 2,
            subchannels: 4,
            ..SystemConfig::default()
        };
        let r = row(&c, 1);
        assert_eq!(r.len(), COLUMNS.len());
        assert!(!r[23].is_empty());
    }
}
