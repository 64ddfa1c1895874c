//! Frame-by-frame simulation of the reservation protocol and the
//! baselines it is compared with.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::metrics::{Counters, FrameMetrics, Metrics, RunningMean};
use super::schedule::transmission_phase_schedule;
use crate::channel::{realize_channels, ChannelError, ChannelRealization};
use crate::config::{SystemConfig, Traffic, ValidationReport};
use crate::markov::MarkovError;
use crate::protocol::{
    ap_handle_erts, controller_apply, nav_update, user_tick, AccessPoint, Backlog, BackoffRules, Erts, Handshake,
    Holding, Node, Overheard, PacketKind, Reply, ReservationLedger, SlotView, Trace, TraceEvent, UserState,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    MdrScmu,
    MdrMcmu,
    CsmaBaseline,
    NoRis,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::MdrScmu, Scheme::MdrMcmu, Scheme::CsmaBaseline, Scheme::NoRis];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::MdrScmu => "mdr-scmu",
            Scheme::MdrMcmu => "mdr-mcmu",
            Scheme::CsmaBaseline => "csma-baseline",
            Scheme::NoRis => "no-ris",
        }
    }

    /// The reservation scheme matching the configured channel count.
    pub fn for_config(config: &SystemConfig) -> Self {
        if config.is_multichannel() {
            Scheme::MdrMcmu
        } else {
            Scheme::MdrScmu
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode {s:?}; expected one of mdr-scmu, mdr-mcmu, csma-baseline, no-ris"))
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration:\n{0}")]
    Invalid(ValidationReport),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error("{0} needs a single sub-channel")]
    NeedsSingleChannel(Scheme),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Re-check the ledger after every commit.
    pub checks: bool,
    pub trace: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: Metrics,
    pub trace: Vec<TraceEvent>,
}

fn ns(seconds: f64) -> u64 {
    (seconds * 1e9).round() as u64
}

/// Independent streams so that drawing a channel index never shifts the
/// backoff draws.
fn streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut backoff = ChaCha8Rng::seed_from_u64(seed);
    backoff.set_stream(1);
    let mut request = ChaCha8Rng::seed_from_u64(seed);
    request.set_stream(2);
    (backoff, request)
}

/// Success rate seen on the common channel, for the contention
/// probability estimate.
#[derive(Debug, Clone, Copy, Default)]
struct RateEstimate {
    successes: u64,
    time_s: f64,
}

impl RateEstimate {
    fn q(&self, eta: f64) -> Option<f64> {
        (self.time_s > 0.0).then(|| eta / (self.successes as f64 / self.time_s + eta))
    }
}

struct SlotTimes {
    idle: u64,
    success: u64,
    collision: u64,
    erts: u64,
    after_erts: u64,
}

impl SlotTimes {
    fn new(config: &SystemConfig, data_after_success: f64) -> Self {
        let t = config.timings();
        Self {
            idle: ns(config.slot_s),
            success: ns(t.success + data_after_success),
            collision: ns(t.collision),
            erts: ns(t.erts),
            after_erts: ns(config.sifs_s + t.ects),
        }
    }

    fn of(&self, senders: usize) -> u64 {
        match senders {
            0 => self.idle,
            1 => self.success,
            _ => self.collision,
        }
    }
}

fn check_config(config: &SystemConfig) -> Result<(), SimError> {
    let report = config.validate();
    if report.is_ok() {
        Ok(())
    } else {
        Err(SimError::Invalid(report))
    }
}

fn initial_backlog(config: &SystemConfig) -> Backlog {
    match config.traffic {
        Traffic::Saturated => Backlog::Saturated,
        Traffic::PerFrame(_) => Backlog::Packets(0),
    }
}

fn view_of(i: usize, senders: &[usize], handshake: Option<Handshake>) -> SlotView {
    match (senders, handshake) {
        ([], _) => SlotView::Idle,
        ([k], Some(h)) if *k == i => SlotView::Negotiated(h),
        (s, _) if s.len() > 1 && s.contains(&i) => SlotView::Collided,
        _ => SlotView::Busy,
    }
}

/// Runs the scheme matching the configuration.
pub fn run(config: &SystemConfig, seed: u64, frames: usize) -> Result<Metrics, SimError> {
    run_scheme(config, Scheme::for_config(config), seed, frames)
}

pub fn run_scheme(config: &SystemConfig, scheme: Scheme, seed: u64, frames: usize) -> Result<Metrics, SimError> {
    Ok(run_with(config, scheme, seed, frames, RunOptions::default())?.metrics)
}

pub fn run_baseline_csma(config: &SystemConfig, seed: u64, frames: usize) -> Result<Metrics, SimError> {
    run_scheme(config, Scheme::CsmaBaseline, seed, frames)
}

pub fn run_no_ris(config: &SystemConfig, seed: u64, frames: usize) -> Result<Metrics, SimError> {
    run_scheme(config, Scheme::NoRis, seed, frames)
}

pub fn run_with(
    config: &SystemConfig,
    scheme: Scheme,
    seed: u64,
    frames: usize,
    opts: RunOptions,
) -> Result<RunOutput, SimError> {
    check_config(config)?;
    match scheme {
        Scheme::CsmaBaseline => run_csma(config, seed, frames, opts),
        Scheme::MdrScmu if config.is_multichannel() => Err(SimError::NeedsSingleChannel(scheme)),
        _ => {
            let channels = realize_channels(config, seed)?;
            Ok(Mdr::new(config, scheme, seed, opts, &channels).run(frames))
        }
    }
}

struct Mdr<'a> {
    config: &'a SystemConfig,
    multichannel: bool,
    rules: BackoffRules,
    times: SlotTimes,
    users: Vec<UserState>,
    backoff_rng: ChaCha8Rng,
    request_rng: ChaCha8Rng,
    ledger: ReservationLedger,
    opts: RunOptions,
    trace: Trace,
    ap: AccessPoint<'a>,
}

impl<'a> Mdr<'a> {
    fn new(
        config: &'a SystemConfig,
        scheme: Scheme,
        seed: u64,
        opts: RunOptions,
        channels: &'a ChannelRealization,
    ) -> Self {
        let multichannel = match scheme {
            Scheme::MdrMcmu => true,
            Scheme::NoRis => config.is_multichannel(),
            _ => false,
        };
        let rules = BackoffRules {
            cw_min: config.cw_min,
            max_stage: config.max_stage,
        };
        let mut ap = AccessPoint::new(config, channels, multichannel);
        if scheme == Scheme::NoRis {
            ap = ap.without_surface();
        }
        let (mut backoff_rng, request_rng) = streams(seed);
        let backlog = initial_backlog(config);
        let users = (0..config.users)
            .map(|_| UserState::new(&rules, backlog, &mut backoff_rng))
            .collect();
        let groups = if multichannel { config.groups } else { 1 };
        Self {
            config,
            multichannel,
            rules,
            times: SlotTimes::new(config, 0.0),
            users,
            backoff_rng,
            request_rng,
            ledger: ReservationLedger::new(groups, config.transmission_slots()),
            opts,
            trace: if opts.trace { Trace::enabled() } else { Trace::default() },
            ap,
        }
    }

    fn run(mut self, frames: usize) -> RunOutput {
        let config = self.config;
        let eta = config.eta();
        let warm = if frames > config.warmup_frames { config.warmup_frames } else { 0 };
        let mut q = config.initial_q;
        let mut estimate = RateEstimate::default();
        let mut total = Counters::default();
        let mut per_frame = Vec::with_capacity(frames);
        let mut user_snr = vec![RunningMean::default(); config.users];

        for f in 0..frames {
            let mut c = Counters {
                frames: 1,
                elapsed_s: config.frame_s,
                ..Counters::default()
            };
            let used = self.negotiate(f, q, &mut c);
            estimate.successes += c.success;
            estimate.time_s += used as f64 * 1e-9;
            let q_used = q;
            q = estimate.q(eta).unwrap_or(q);
            if f + 1 == warm {
                estimate = RateEstimate::default();
            }
            let mut snr = vec![RunningMean::default(); config.users];
            self.transmit(f, &mut c, &mut snr);
            if f >= warm {
                total += &c;
                for (a, b) in user_snr.iter_mut().zip(snr) {
                    *a += b;
                }
            }
            per_frame.push(FrameMetrics {
                frame: f,
                warmup: f < warm,
                q: q_used,
                counters: c,
            });
        }
        RunOutput {
            metrics: Metrics {
                channels: self.ledger.channels(),
                counters: total,
                frames: per_frame,
                user_snr,
                final_q: q,
            },
            trace: self.trace.into_events(),
        }
    }

    /// One negotiation phase; returns the contention time used, ns.
    fn negotiate(&mut self, frame: usize, q: f64, c: &mut Counters) -> u64 {
        let config = self.config;
        self.ledger.clear();
        for u in &mut self.users {
            u.new_frame();
            if let Traffic::PerFrame(n) = config.traffic {
                u.backlog.add(u64::from(n));
            }
        }
        let horizon = ns(config.negotiation_s);
        let mut holding = vec![false; config.users];
        let mut negotiated = vec![false; config.users];
        let mut senders = Vec::new();
        let mut t = 0u64;
        let mut slot = 0u64;
        loop {
            senders.clear();
            senders.extend((0..self.users.len()).filter(|&i| self.users[i].ready(t)));
            let dur = self.times.of(senders.len());
            if t + dur > horizon {
                break;
            }
            c.slots += 1;
            let mut handshake = None;
            match senders.len() {
                0 => c.idle += 1,
                1 => {
                    c.success += 1;
                    c.attempts += 1;
                    let k = senders[0];
                    handshake = Some(self.handshake(frame, slot, k, c));
                    holding[k] |= matches!(handshake, Some(Handshake::Reserved(_)));
                    negotiated[k] = true;
                    let heard = Overheard {
                        kind: PacketKind::Erts,
                        ends_at: t + self.times.erts,
                        remaining: self.times.after_erts,
                        channel: None,
                    };
                    for (i, u) in self.users.iter_mut().enumerate() {
                        if i != k {
                            nav_update(u, &heard);
                        }
                    }
                }
                n => {
                    c.collision += 1;
                    c.attempts += n as u64;
                    c.collided += n as u64;
                    let who = senders.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(",");
                    self.trace.push(|| TraceEvent {
                        frame,
                        slot,
                        node: Node::Ap,
                        event: "collision",
                        fields: vec![("users", who)],
                    });
                }
            }
            t += dur;
            for i in 0..self.users.len() {
                let view = view_of(i, &senders, handshake);
                user_tick(&mut self.users[i], view, q, &self.rules, &mut self.backoff_rng);
            }
            slot += 1;
        }
        if c.idle + c.success + c.collision != c.slots {
            c.conservation_failures += 1;
        }
        c.served = negotiated.iter().filter(|&&s| s).count() as u64;
        c.holders = holding.iter().filter(|&&s| s).count() as u64;
        t
    }

    fn handshake(&mut self, frame: usize, slot: u64, k: usize, c: &mut Counters) -> Handshake {
        let config = self.config;
        let cycle = config.cycle_slots();
        let user = &mut self.users[k];
        let count = user.backlog.request(config.r_max);
        let start = self.request_rng.gen_range(0..cycle.max(1));
        let group = if self.multichannel {
            let open: Vec<usize> = (0..self.ap.channel_count()).filter(|g| !user.refused.contains(g)).collect();
            let pool = if open.is_empty() { (0..self.ap.channel_count()).collect() } else { open };
            if pool.len() == 1 {
                Some(pool[0])
            } else {
                Some(pool[self.request_rng.gen_range(0..pool.len())])
            }
        } else {
            None
        };
        let erts = Erts {
            sender: k,
            start,
            count,
            cycle,
            channel: group,
            group,
        };
        self.trace.push(|| TraceEvent {
            frame,
            slot,
            node: Node::User(k),
            event: "erts",
            fields: vec![
                ("start", start.to_string()),
                ("count", count.to_string()),
                ("group", group.map_or("-".into(), |g| g.to_string())),
            ],
        });
        let ects = ap_handle_erts(&mut self.ledger, &erts, &mut self.ap);
        let outcome = match ects.reply {
            Reply::Granted { moved, id, .. } => {
                c.grants += 1;
                c.moved += u64::from(moved);
                user.backlog.take(count);
                if self.opts.checks && self.ledger.check_invariants().is_err() {
                    c.ledger_conflicts += 1;
                }
                Handshake::Reserved(Holding {
                    id,
                    channel: group.unwrap_or(0),
                })
            }
            Reply::NoReservation => {
                c.refusals += 1;
                if let Some(g) = group {
                    if !user.refused.contains(&g) {
                        user.refused.push(g);
                    }
                }
                let retry = self.multichannel && self.ap.channel_count() > 1;
                c.retries += u64::from(retry);
                Handshake::Refused { retry }
            }
            Reply::Rejected(_) => {
                c.rejected += 1;
                Handshake::Refused { retry: false }
            }
        };
        self.trace.push(|| TraceEvent {
            frame,
            slot,
            node: Node::Ap,
            event: "ects",
            fields: vec![
                ("to", k.to_string()),
                ("reply", format!("{:?}", ects.reply)),
                ("rho2", ects.rho2.to_string()),
            ],
        });
        outcome
    }

    fn transmit(&mut self, frame: usize, c: &mut Counters, snr: &mut [RunningMean]) {
        let config = self.config;
        if self.ledger.check_invariants().is_err() {
            c.ledger_conflicts += 1;
        }
        let plan = transmission_phase_schedule(&self.ledger, config);
        let bandwidth = config.bandwidth_hz / self.ledger.channels() as f64;
        let mut i = 0;
        while i < plan.len() {
            let s = plan[i].slot;
            let applied = controller_apply(&self.ledger, s);
            let mut seen = vec![false; self.ledger.channels()];
            while i < plan.len() && plan[i].slot == s {
                let p = plan[i];
                if applied[p.channel].owner != Some(p.user) {
                    c.unreserved_tx += 1;
                }
                if std::mem::replace(&mut seen[p.channel], true) {
                    c.ledger_conflicts += 1;
                }
                c.data_tx += 1;
                c.data_airtime_s += config.data_s;
                c.bits += bandwidth * (1.0 + p.snr).log2() * config.data_s;
                c.power.push(p.rho2);
                c.snr.push(p.snr);
                snr[p.user].push(p.snr);
                self.trace.push(|| TraceEvent {
                    frame,
                    slot: u64::from(s),
                    node: Node::Surface(p.channel),
                    event: "data",
                    fields: vec![("user", p.user.to_string()), ("snr", p.snr.to_string())],
                });
                i += 1;
            }
        }
    }
}

/// Conventional CSMA/CA over the whole frame: every data transmission is
/// preceded by its own handshake and the surface is set per transmission.
fn run_csma(config: &SystemConfig, seed: u64, frames: usize, opts: RunOptions) -> Result<RunOutput, SimError> {
    let channels = realize_channels(config, seed)?;
    let mut ap = AccessPoint::new(config, &channels, false);
    let rules = BackoffRules {
        cw_min: config.cw_min,
        max_stage: config.max_stage,
    };
    let (mut rng, _) = streams(seed);
    let mut users: Vec<UserState> = (0..config.users)
        .map(|_| UserState::new(&rules, Backlog::Saturated, &mut rng))
        .collect();
    let times = SlotTimes::new(config, config.data_s + config.ack_s);
    let horizon = ns(config.frame_s);
    let warm = if frames > config.warmup_frames { config.warmup_frames } else { 0 };
    let mut trace = if opts.trace { Trace::enabled() } else { Trace::default() };
    let mut total = Counters::default();
    let mut per_frame = Vec::with_capacity(frames);
    let mut user_snr = vec![RunningMean::default(); config.users];
    let mut senders = Vec::new();

    for f in 0..frames {
        let mut c = Counters {
            frames: 1,
            elapsed_s: config.frame_s,
            ..Counters::default()
        };
        let mut negotiated = vec![false; config.users];
        let mut snr = vec![RunningMean::default(); config.users];
        let mut t = 0u64;
        let mut slot = 0u64;
        loop {
            senders.clear();
            senders.extend((0..users.len()).filter(|&i| users[i].ready(t)));
            let dur = times.of(senders.len());
            if t + dur > horizon {
                break;
            }
            c.slots += 1;
            let mut handshake = None;
            match senders.len() {
                0 => c.idle += 1,
                1 => {
                    let k = senders[0];
                    c.success += 1;
                    c.attempts += 1;
                    c.grants += 1;
                    negotiated[k] = true;
                    let link = ap.link(k, 0).ok();
                    if let Some(link) = link {
                        c.data_tx += 1;
                        c.data_airtime_s += config.data_s;
                        c.bits += config.bandwidth_hz * (1.0 + link.snr).log2() * config.data_s;
                        c.power.push(link.rho2);
                        c.snr.push(link.snr);
                        snr[k].push(link.snr);
                    } else {
                        c.rejected += 1;
                    }
                    trace.push(|| TraceEvent {
                        frame: f,
                        slot,
                        node: Node::User(k),
                        event: "data",
                        fields: vec![],
                    });
                    handshake = Some(Handshake::Reserved(Holding { id: 0, channel: 0 }));
                }
                n => {
                    c.collision += 1;
                    c.attempts += n as u64;
                    c.collided += n as u64;
                }
            }
            t += dur;
            for i in 0..users.len() {
                let view = view_of(i, &senders, handshake);
                user_tick(&mut users[i], view, 1.0, &rules, &mut rng);
            }
            slot += 1;
        }
        if c.idle + c.success + c.collision != c.slots {
            c.conservation_failures += 1;
        }
        c.served = negotiated.iter().filter(|&&s| s).count() as u64;
        c.holders = c.served;
        if f >= warm {
            total += &c;
            for (a, b) in user_snr.iter_mut().zip(snr) {
                *a += b;
            }
        }
        per_frame.push(FrameMetrics {
            frame: f,
            warmup: f < warm,
            q: 1.0,
            counters: c,
        });
    }
    Ok(RunOutput {
        metrics: Metrics {
            channels: 1,
            counters: total,
            frames: per_frame,
            user_snr,
            final_q: 1.0,
        },
        trace: trace.into_events(),
    })
}
