//! Access point: validates reservation requests, picks a conflict-free
//! schedule, optimizes power and phases, and commits to the ledger.

use num_complex::Complex64;

use super::ledger::{Reservation, ReservationLedger};
use super::packet::{Ects, Erts, RejectReason, Reply};
use crate::channel::{ChannelRealization, RisSetting};
use crate::config::SystemConfig;
use crate::phase::{alternating_optimize, AlternatingOptions, PowerBudget};

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub rho2: f64,
    pub setting: RisSetting,
    pub snr: f64,
}

/// Everything the AP needs besides the ledger. Optimized links are cached
/// per (user, group): channels do not change within a run.
#[derive(Debug, Clone)]
pub struct AccessPoint<'a> {
    config: &'a SystemConfig,
    channels: &'a ChannelRealization,
    groups: Vec<Vec<usize>>,
    multichannel: bool,
    reflect: bool,
    opts: AlternatingOptions,
    cache: Vec<Option<Link>>,
}

impl<'a> AccessPoint<'a> {
    pub fn new(config: &'a SystemConfig, channels: &'a ChannelRealization, multichannel: bool) -> Self {
        let groups: Vec<Vec<usize>> = if multichannel {
            (0..config.groups).map(|l| config.group_elements(l)).collect()
        } else {
            vec![(0..config.elements).collect()]
        };
        let cache = vec![None; channels.users.len() * groups.len()];
        Self {
            config,
            channels,
            groups,
            multichannel,
            reflect: true,
            opts: AlternatingOptions::new(config.phase),
            cache,
        }
    }

    /// Direct link only at full transmit power.
    pub fn without_surface(mut self) -> Self {
        self.reflect = false;
        self
    }

    pub fn channel_count(&self) -> usize {
        self.groups.len()
    }

    pub fn multichannel(&self) -> bool {
        self.multichannel
    }

    /// Optimized power, phases and SNR for `user` on `group`.
    pub fn link(&mut self, user: usize, group: usize) -> Result<Link, RejectReason> {
        let slot = user * self.groups.len() + group;
        if let Some(link) = &self.cache[slot] {
            return Ok(link.clone());
        }
        let ch = &self.channels.users[user];
        let noise = self.config.noise_w;
        let link = if self.reflect {
            let (from, to) = ch.subset(&self.groups[group]);
            let budget = PowerBudget {
                tx_w: self.config.tx_power_w,
                ris_w: self.config.ris_power_w,
                groups: self.groups.len(),
            };
            let out = alternating_optimize(ch.direct, &from, &to, budget, noise, self.opts)
                .map_err(|_| RejectReason::PowerInfeasible)?;
            Link {
                rho2: out.rho.norm_sqr(),
                setting: RisSetting::Phases(out.phases),
                snr: out.snr,
            }
        } else {
            let p = self.config.tx_power_w;
            Link {
                rho2: p,
                setting: RisSetting::Neutral,
                snr: (ch.direct * Complex64::new(p.sqrt(), 0.0)).norm_sqr() / noise,
            }
        };
        self.cache[slot] = Some(link.clone());
        Ok(link)
    }

    fn validate(&self, erts: &Erts) -> Result<usize, RejectReason> {
        if erts.count == 0 || erts.count > self.config.r_max {
            return Err(RejectReason::CountOutOfRange);
        }
        if erts.cycle != self.config.cycle_slots() {
            return Err(RejectReason::CycleMismatch);
        }
        if erts.sender >= self.channels.users.len() {
            return Err(RejectReason::UnknownChannel);
        }
        if !self.multichannel {
            return match (erts.channel, erts.group) {
                (None, None) => Ok(0),
                _ => Err(RejectReason::UnexpectedChannel),
            };
        }
        match (erts.channel, erts.group) {
            (Some(c), Some(l)) if c != l => Err(RejectReason::ChannelGroupMismatch),
            (Some(c), Some(_)) if c >= self.groups.len() => Err(RejectReason::UnknownChannel),
            (Some(c), Some(_)) => Ok(c),
            _ => Err(RejectReason::MissingChannel),
        }
    }
}

/// Handles one eRTS that arrived without collision. The requested start is
/// granted when its whole schedule is free; otherwise the earliest free
/// start on the same channel; otherwise the reply carries no reservation.
pub fn ap_handle_erts(ledger: &mut ReservationLedger, erts: &Erts, ap: &mut AccessPoint<'_>) -> Ects {
    let reply = |reply, rho2| Ects {
        receiver: erts.sender,
        reply,
        count: erts.count,
        cycle: erts.cycle,
        channel: erts.channel,
        group: erts.group,
        rho2,
    };
    let channel = match ap.validate(erts) {
        Ok(c) => c,
        Err(why) => return reply(Reply::Rejected(why), 0.0),
    };
    let (start, moved) = if erts.start < erts.cycle && ledger.is_free(channel, erts.start, erts.count, erts.cycle) {
        (erts.start, false)
    } else {
        match ledger.first_free_start(channel, erts.count, erts.cycle) {
            Some(s) => (s, true),
            None => return reply(Reply::NoReservation, 0.0),
        }
    };
    let link = match ap.link(erts.sender, channel) {
        Ok(l) => l,
        Err(why) => return reply(Reply::Rejected(why), 0.0),
    };
    let rho2 = link.rho2;
    let id = ledger
        .commit(Reservation {
            user: erts.sender,
            channel,
            start,
            count: erts.count,
            cycle: erts.cycle,
            rho2,
            setting: link.setting,
            snr: link.snr,
        })
        .expect("schedule was checked free");
    reply(Reply::Granted { start, moved, id }, rho2)
}
