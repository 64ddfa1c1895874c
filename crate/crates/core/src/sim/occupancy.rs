//! Sub-channel occupancy under continuous contention: every successful
//! negotiation seizes a free sub-channel for `r_max` data slots, and the
//! contention probability follows the number of busy sub-channels.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::engine::SimError;
use crate::config::SystemConfig;
use crate::markov::{multi_channel_solution, SolverOptions};
use crate::protocol::{user_tick, Backlog, BackoffRules, Handshake, Holding, SlotView, UserState};

#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyReport {
    /// Seconds spent with 0..=C busy sub-channels after warm-up.
    pub time_in_state: Vec<f64>,
    pub arrivals: u64,
    /// Successful negotiations that found every sub-channel busy.
    pub blocked: u64,
    /// Contention probability used with j busy sub-channels.
    pub q: Vec<f64>,
}

impl OccupancyReport {
    pub fn fractions(&self) -> Vec<f64> {
        let total: f64 = self.time_in_state.iter().sum();
        self.time_in_state.iter().map(|t| t / total).collect()
    }
}

fn ns(s: f64) -> u64 {
    (s * 1e9).round() as u64
}

pub fn simulate_occupancy(config: &SystemConfig, seed: u64, horizon_s: f64) -> Result<OccupancyReport, SimError> {
    let c = config.subchannels.max(1);
    let opts = SolverOptions::from_config(config);
    let mut q = Vec::with_capacity(c + 1);
    for j in 1..=c {
        q.push(multi_channel_solution(config, j, &opts)?.q);
    }
    q.insert(0, q[0]);

    let rules = BackoffRules {
        cw_min: config.cw_min,
        max_stage: config.max_stage,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut users: Vec<UserState> = (0..config.users)
        .map(|_| UserState::new(&rules, Backlog::Saturated, &mut rng))
        .collect();
    let t = config.timings();
    let (idle, success, collision) = (ns(config.slot_s), ns(t.success), ns(t.collision));
    let service = ns(config.data_s * f64::from(config.r_max));
    let horizon = ns(horizon_s);
    let warmup = horizon / 10;

    let mut busy: Vec<u64> = Vec::new();
    let mut time_in_state = vec![0u64; c + 1];
    let mut arrivals = 0;
    let mut blocked = 0;
    let mut now = 0u64;
    let mut senders = Vec::new();
    let granted = Handshake::Reserved(Holding { id: 0, channel: 0 });
    while now < horizon {
        let j = busy.len();
        senders.clear();
        senders.extend((0..users.len()).filter(|&i| users[i].ready(now)));
        let dur = match senders.len() {
            0 => idle,
            1 => success,
            _ => collision,
        };
        let end = now + dur;
        // releases inside the slot change the state mid-slot
        busy.sort_unstable();
        let mut cursor = now;
        while let Some(&r) = busy.first() {
            if r > end {
                break;
            }
            let r = r.max(cursor);
            account(&mut time_in_state, busy.len(), cursor, r, warmup);
            cursor = r;
            busy.remove(0);
        }
        account(&mut time_in_state, busy.len(), cursor, end, warmup);
        now = end;
        if senders.len() == 1 && now > warmup {
            arrivals += 1;
        }
        if senders.len() == 1 {
            if j < c {
                busy.push(now + service);
            } else if now > warmup {
                blocked += 1;
            }
        }
        for i in 0..users.len() {
            let view = match senders.as_slice() {
                [] => SlotView::Idle,
                [k] if *k == i => SlotView::Negotiated(granted),
                s if s.contains(&i) => SlotView::Collided,
                _ => SlotView::Busy,
            };
            user_tick(&mut users[i], view, q[j], &rules, &mut rng);
        }
    }
    Ok(OccupancyReport {
        time_in_state: time_in_state.iter().map(|&t| t as f64 * 1e-9).collect(),
        arrivals,
        blocked,
        q,
    })
}

fn account(acc: &mut [u64], state: usize, from: u64, to: u64, warmup: u64) {
    let from = from.max(warmup);
    if to > from {
        acc[state] += to - from;
    }
}
