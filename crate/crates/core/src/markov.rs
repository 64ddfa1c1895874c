//! Two-state (contention/transmission) Markov model of the protocol, its
//! multi-channel extension, channel occupancy and capacity.

use std::io::Write;

use thiserror::Error;

use crate::config::{ContenderPopulation, SystemConfig};

#[derive(Debug, Error, PartialEq)]
pub enum MarkovError {
    #[error("no sign change for the transmit-probability residual (at 0: {at_lo}, at 1: {at_hi})")]
    NoSignChange { at_lo: f64, at_hi: f64 },
    #[error("fixed point did not converge after {iterations} iterations (q residual {residual})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Box<MarkovSolution>,
    },
    #[error("rate denominator is zero")]
    ZeroDenominator,
    #[error("busy-channel count {j} outside 1..={channels}")]
    ChannelIndex { j: usize, channels: usize },
    #[error("invalid input: {0}")]
    BadInput(&'static str),
}

/// Backoff and population parameters of the contention chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backoff {
    pub users: usize,
    pub cw_min: u32,
    pub max_stage: u32,
    pub population: ContenderPopulation,
}

impl Backoff {
    pub fn from_config(c: &SystemConfig) -> Self {
        Self {
            users: c.users,
            cw_min: c.cw_min,
            max_stage: c.max_stage,
            population: c.population,
        }
    }

    /// Number of stations that can collide with a tagged one.
    pub fn others(&self, q: f64) -> f64 {
        match self.population {
            ContenderPopulation::AllUsers => self.users as f64 - 1.0,
            ContenderPopulation::ContendingFraction => self.users as f64 * q - 1.0,
        }
    }
}

/// Per-slot transmit probability of a user given its collision
/// probability `p` and contention-return probability `q`.
///
/// Written with the geometric sum in place of (1 - (2p)^m)/(1 - 2p), which
/// is the same expression without the removable singularity at p = 1/2.
pub fn transmit_probability(p: f64, q: f64, cw_min: u32, max_stage: u32) -> f64 {
    let w0 = f64::from(cw_min);
    let x = 2.0 * p;
    let mut geometric = 0.0;
    let mut term = 1.0;
    for _ in 0..max_stage {
        geometric += term;
        term *= x;
    }
    2.0 * q / (q * ((w0 + 1.0) + p * w0 * geometric) + 2.0 * (1.0 - q) * (1.0 - p))
}

pub fn collision_probability(tau: f64, others: f64) -> f64 {
    1.0 - (1.0 - tau).powf(others)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSolution {
    pub tau: f64,
    pub p: f64,
    /// |tau - transmit_probability(p)|.
    pub tau_residual: f64,
    /// |p - collision_probability(tau)|.
    pub p_residual: f64,
}

/// Solves the transmit/collision probability pair by bisection on tau.
pub fn tau_fixed_point(backoff: &Backoff, q: f64) -> Result<TauSolution, MarkovError> {
    if backoff.users == 0 {
        return Err(MarkovError::BadInput("at least one user"));
    }
    if !(q > 0.0 && q <= 1.0) {
        return Err(MarkovError::BadInput("q must be in (0, 1]"));
    }
    let others = backoff.others(q);
    let residual = |tau: f64| {
        let p = collision_probability(tau, others);
        tau - transmit_probability(p, q, backoff.cw_min, backoff.max_stage)
    };
    let finish = |tau: f64| {
        let p = collision_probability(tau, others);
        TauSolution {
            tau,
            p,
            tau_residual: (tau - transmit_probability(p, q, backoff.cw_min, backoff.max_stage)).abs(),
            p_residual: 0.0,
        }
    };
    if others == 0.0 {
        return Ok(finish(transmit_probability(0.0, q, backoff.cw_min, backoff.max_stage)));
    }

    let (mut lo, mut hi) = (0.0f64, 1.0 - f64::EPSILON);
    let (r_lo, r_hi) = (residual(lo), residual(hi));
    if !(r_lo <= 0.0 && r_hi >= 0.0) {
        return Err(MarkovError::NoSignChange {
            at_lo: r_lo,
            at_hi: r_hi,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) <= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau = if residual(lo).abs() <= residual(hi).abs() { lo } else { hi };
    Ok(finish(tau))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContentionProbs {
    pub success: f64,
    pub empty: f64,
    pub collision: f64,
}

/// Probabilities that a contention slot carries exactly one, no, or
/// several eRTS.
pub fn contention_probs(tau: f64, backoff: &Backoff, q: f64) -> ContentionProbs {
    let others = backoff.others(q);
    let n = others + 1.0;
    let success = if tau == 0.0 { 0.0 } else { n * tau * (1.0 - tau).powf(others) };
    let empty = (1.0 - tau).powf(n);
    ContentionProbs {
        success,
        empty,
        collision: 1.0 - (success + empty),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotDurations {
    pub success: f64,
    pub collision: f64,
    pub idle: f64,
}

impl SlotDurations {
    pub fn from_config(c: &SystemConfig) -> Self {
        let t = c.timings();
        Self {
            success: t.success,
            collision: t.collision,
            idle: c.slot_s,
        }
    }
}

/// Rate of successful negotiations per user in contention.
pub fn negotiation_rate(probs: &ContentionProbs, slots: &SlotDurations) -> Result<f64, MarkovError> {
    let denom = probs.empty * slots.idle + probs.success * slots.success + probs.collision * slots.collision;
    if denom == 0.0 {
        return Err(MarkovError::ZeroDenominator);
    }
    Ok(probs.success / denom)
}

/// Rate of leaving the transmission state.
pub fn release_rate(data_s: f64, r_max: u32) -> Result<f64, MarkovError> {
    let d = data_s * f64::from(r_max);
    if d <= 0.0 {
        return Err(MarkovError::ZeroDenominator);
    }
    Ok(1.0 / d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    pub tau: f64,
    pub collision: f64,
    /// |q - eta/(gamma + eta)|.
    pub balance: f64,
}

impl Residuals {
    pub fn max(&self) -> f64 {
        self.tau.max(self.collision).max(self.balance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovSolution {
    /// Number of busy sub-channels the solution is conditioned on.
    pub busy: usize,
    pub tau: f64,
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub eta: f64,
    pub zeta: ContentionProbs,
    pub residuals: Residuals,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub q0: f64,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            q0: 0.5,
            damping: 0.5,
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

impl SolverOptions {
    pub fn from_config(c: &SystemConfig) -> Self {
        Self {
            q0: c.initial_q,
            ..Self::default()
        }
    }
}

/// Damped iteration q -> (tau, p) -> zeta -> gamma -> q for a given
/// release rate.
pub fn solve_with_release(
    backoff: &Backoff,
    slots: &SlotDurations,
    eta: f64,
    busy: usize,
    opts: &SolverOptions,
) -> Result<MarkovSolution, MarkovError> {
    if !(eta > 0.0) {
        return Err(MarkovError::BadInput("release rate must be positive"));
    }
    let evaluate = |q: f64, iterations: usize| -> Result<(MarkovSolution, f64), MarkovError> {
        let t = tau_fixed_point(backoff, q)?;
        let zeta = contention_probs(t.tau, backoff, q);
        let gamma = negotiation_rate(&zeta, slots)?;
        let q_next = eta / (gamma + eta);
        Ok((
            MarkovSolution {
                busy,
                tau: t.tau,
                p: t.p,
                q,
                gamma,
                eta,
                zeta,
                residuals: Residuals {
                    tau: t.tau_residual,
                    collision: t.p_residual,
                    balance: (q - q_next).abs(),
                },
                iterations,
            },
            q_next,
        ))
    };

    let mut q = opts.q0;
    for it in 0..opts.max_iter {
        let (sol, q_next) = evaluate(q, it)?;
        if sol.residuals.balance < opts.tol {
            return Ok(sol);
        }
        q += opts.damping * (q_next - q);
    }
    let (last, _) = evaluate(q, opts.max_iter)?;
    Err(MarkovError::NonConvergence {
        iterations: opts.max_iter,
        residual: last.residuals.balance,
        last: Box::new(last),
    })
}

pub fn solve_self_consistent(config: &SystemConfig, opts: &SolverOptions) -> Result<MarkovSolution, MarkovError> {
    multi_channel_solution(config, 1, opts)
}

/// Solution conditioned on `j` busy sub-channels (release rate j*eta).
pub fn multi_channel_solution(config: &SystemConfig, j: usize, opts: &SolverOptions) -> Result<MarkovSolution, MarkovError> {
    if j == 0 || j > config.subchannels.max(1) {
        return Err(MarkovError::ChannelIndex {
            j,
            channels: config.subchannels,
        });
    }
    let eta = release_rate(config.data_s, config.r_max)? * j as f64;
    solve_with_release(
        &Backoff::from_config(config),
        &SlotDurations::from_config(config),
        eta,
        j,
        opts,
    )
}

/// Occupancy distribution pi_0..pi_C of a loss system with state-dependent
/// arrival rates `arrivals[l]` (l busy channels) and per-channel release
/// rate `eta`.
pub fn mmc_steady_state(arrivals: &[f64], eta: f64) -> Result<Vec<f64>, MarkovError> {
    if !(eta > 0.0) || arrivals.iter().any(|&g| !(g >= 0.0) || !g.is_finite()) {
        return Err(MarkovError::BadInput("rates must be positive and finite"));
    }
    let mut terms = Vec::with_capacity(arrivals.len() + 1);
    terms.push(1.0f64);
    for (l, &g) in arrivals.iter().enumerate() {
        let prev = terms[l];
        terms.push(prev * g / (eta * (l + 1) as f64));
    }
    let total: f64 = terms.iter().sum();
    Ok(terms.into_iter().map(|t| t / total).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultiChannelSolution {
    /// Solutions for j = 1..=C busy channels.
    pub per_busy: Vec<MarkovSolution>,
    /// Occupancy probabilities for 0..=C busy channels.
    pub occupancy: Vec<f64>,
}

impl MultiChannelSolution {
    /// Arrival rate used in state `l`; the idle state contends like the
    /// single-busy-channel regime.
    pub fn arrival_rate(&self, l: usize) -> f64 {
        self.per_busy[l.max(1) - 1].gamma
    }
}

pub fn solve_multi_channel(config: &SystemConfig, opts: &SolverOptions) -> Result<MultiChannelSolution, MarkovError> {
    let c = config.subchannels.max(1);
    let per_busy = (1..=c)
        .map(|j| multi_channel_solution(config, j, opts))
        .collect::<Result<Vec<_>, _>>()?;
    let arrivals: Vec<f64> = (0..c).map(|l| per_busy[l.max(1) - 1].gamma).collect();
    let occupancy = mmc_steady_state(&arrivals, release_rate(config.data_s, config.r_max)?)?;
    Ok(MultiChannelSolution { per_busy, occupancy })
}

fn rate_sum(snr: &[f64], counts: &[u32]) -> f64 {
    snr.iter()
        .zip(counts)
        .map(|(&s, &r)| f64::from(r) * (1.0 + s).log2())
        .sum()
}

/// Total capacity of single-channel operation, bit/s.
pub fn capacity_scmu(config: &SystemConfig, sol: &MarkovSolution, snr: &[f64], counts: &[u32]) -> f64 {
    let t_s = config.timings().success;
    config.data_s * config.negotiation_s * sol.zeta.success / (config.frame_s * t_s * config.users as f64)
        * config.bandwidth_hz
        * rate_sum(snr, counts)
}

/// Total capacity of multi-channel operation, bit/s.
pub fn capacity_mcmu(config: &SystemConfig, multi: &MultiChannelSolution, snr: &[f64], counts: &[u32]) -> f64 {
    let t_s = config.timings().success;
    let c = config.subchannels.max(1) as f64;
    let weight: f64 = multi
        .per_busy
        .iter()
        .enumerate()
        .map(|(i, s)| s.zeta.success * multi.occupancy[i + 1])
        .sum();
    config.data_s * config.negotiation_s * config.bandwidth_hz / (config.frame_s * t_s * config.users as f64 * c)
        * weight
        * rate_sum(snr, counts)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSuggestion {
    /// Expected successful negotiations per negotiation phase, floored.
    pub negotiations: u64,
    pub cycle_s: f64,
}

/// Floors `x`, treating values within 1e-9 (relative) below an integer as
/// that integer so decimal inputs such as 0.02 * 0.0828 / 92e-6 give 18.
pub fn robust_floor(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

pub fn suggested_cycle(config: &SystemConfig, zeta_success: f64) -> CycleSuggestion {
    let t_s = config.timings().success;
    let n = robust_floor(config.negotiation_s * zeta_success / t_s).max(0.0);
    CycleSuggestion {
        negotiations: n as u64,
        cycle_s: n * config.data_s,
    }
}

/// Reservation lanes per channel: distinct starts of a periodic schedule
/// of `r_max` transmissions that stay inside the transmission phase.
pub fn lanes_per_channel(config: &SystemConfig) -> u32 {
    let cycle = config.cycle_slots();
    let span = (config.r_max.max(1) - 1) * cycle;
    config.transmission_slots().saturating_sub(span).min(cycle)
}

/// Analytical normalized throughput: expected grants per frame, capped by
/// the available lanes, each carrying `r_max` transmissions, over the
/// frame time of all sub-channels.
pub fn analytic_throughput(config: &SystemConfig, zeta_success: f64) -> f64 {
    let t_s = config.timings().success;
    let c = config.subchannels.max(1) as f64;
    let grants = config.negotiation_s * zeta_success / t_s;
    let lanes = f64::from(lanes_per_channel(config)) * c;
    grants.min(lanes) * f64::from(config.r_max) * config.data_s / (config.frame_s * c)
}

pub const CSV_HEADER: [&str; 15] = [
    "busy", "tau", "p", "q", "gamma", "eta", "zeta_s", "zeta_e", "zeta_c", "pi", "res_tau", "res_p", "res_q",
    "iterations", "converged",
];

/// One row per busy-channel count, with the occupancy probability when known.
pub fn write_csv<W: Write>(rows: &[MarkovSolution], occupancy: Option<&[f64]>, tol: f64, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in rows {
        let pi = occupancy
            .and_then(|o| o.get(s.busy))
            .map_or(String::new(), |p| p.to_string());
        w.write_record(&[
            s.busy.to_string(),
            s.tau.to_string(),
            s.p.to_string(),
            s.q.to_string(),
            s.gamma.to_string(),
            s.eta.to_string(),
            s.zeta.success.to_string(),
            s.zeta.empty.to_string(),
            s.zeta.collision.to_string(),
            pi,
            s.residuals.tau.to_string(),
            s.residuals.collision.to_string(),
            s.residuals.balance.to_string(),
            s.iterations.to_string(),
            (s.residuals.balance < tol).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
