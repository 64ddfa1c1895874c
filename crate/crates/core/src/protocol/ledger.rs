//! AP-side record of which user owns each (sub-channel, transmission slot)
//! and the surface configuration to apply there.

use thiserror::Error;

use crate::channel::RisSetting;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("channel {channel} slot {slot} already owned by reservation {owner}")]
    Conflict { channel: usize, slot: u32, owner: usize },
    #[error("schedule start {start}, count {count}, cycle {cycle} leaves the transmission phase")]
    OutOfRange { start: u32, count: u32, cycle: u32 },
    #[error("unknown channel {0}")]
    UnknownChannel(usize),
    #[error("reservation {id} missing from channel {channel} slot {slot}")]
    Unmarked { id: usize, channel: usize, slot: u32 },
    #[error("empty schedule")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reservation {
    pub user: usize,
    pub channel: usize,
    pub start: u32,
    pub count: u32,
    pub cycle: u32,
    pub rho2: f64,
    /// Phases of the channel's group (or the whole surface).
    pub setting: RisSetting,
    pub snr: f64,
}

impl Reservation {
    pub fn slots(&self) -> impl Iterator<Item = u32> + '_ {
        periodic_slots(self.start, self.count, self.cycle)
    }
}

pub fn periodic_slots(start: u32, count: u32, cycle: u32) -> impl Iterator<Item = u32> {
    (0..count).map(move |i| start + i * cycle)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservationLedger {
    slots: u32,
    owners: Vec<Vec<Option<usize>>>,
    reservations: Vec<Reservation>,
}

impl ReservationLedger {
    pub fn new(channels: usize, slots: u32) -> Self {
        Self {
            slots,
            owners: vec![vec![None; slots as usize]; channels],
            reservations: Vec::new(),
        }
    }

    pub fn channels(&self) -> usize {
        self.owners.len()
    }

    pub fn slots(&self) -> u32 {
        self.slots
    }

    pub fn reservations(&self) -> &[Reservation] {
        &self.reservations
    }

    pub fn get(&self, id: usize) -> Option<&Reservation> {
        self.reservations.get(id)
    }

    pub fn owner(&self, channel: usize, slot: u32) -> Option<usize> {
        self.owners.get(channel)?.get(slot as usize).copied().flatten()
    }

    pub fn clear(&mut self) {
        for ch in &mut self.owners {
            ch.iter_mut().for_each(|s| *s = None);
        }
        self.reservations.clear();
    }

    fn fits(&self, start: u32, count: u32, cycle: u32) -> bool {
        count > 0 && u64::from(start) + u64::from(count - 1) * u64::from(cycle) < u64::from(self.slots)
    }

    pub fn is_free(&self, channel: usize, start: u32, count: u32, cycle: u32) -> bool {
        channel < self.channels()
            && self.fits(start, count, cycle)
            && periodic_slots(start, count, cycle).all(|s| self.owners[channel][s as usize].is_none())
    }

    /// Earliest start in the first cycle whose whole schedule is free.
    pub fn first_free_start(&self, channel: usize, count: u32, cycle: u32) -> Option<u32> {
        (0..cycle.max(1)).find(|&s| self.is_free(channel, s, count, cycle))
    }

    pub fn commit(&mut self, reservation: Reservation) -> Result<usize, LedgerError> {
        let Reservation {
            channel,
            start,
            count,
            cycle,
            ..
        } = reservation;
        if channel >= self.channels() {
            return Err(LedgerError::UnknownChannel(channel));
        }
        if count == 0 {
            return Err(LedgerError::Empty);
        }
        if !self.fits(start, count, cycle) {
            return Err(LedgerError::OutOfRange { start, count, cycle });
        }
        if let Some(slot) = periodic_slots(start, count, cycle).find(|&s| self.owners[channel][s as usize].is_some()) {
            let owner = self.owners[channel][slot as usize].unwrap_or_default();
            return Err(LedgerError::Conflict { channel, slot, owner });
        }
        let id = self.reservations.len();
        for s in periodic_slots(start, count, cycle) {
            self.owners[channel][s as usize] = Some(id);
        }
        self.reservations.push(reservation);
        Ok(id)
    }

    /// No slot is covered by two reservations on the same channel, and the
    /// owner table matches the committed reservations exactly.
    pub fn check_invariants(&self) -> Result<(), LedgerError> {
        let mut cover: Vec<Vec<Option<usize>>> = vec![vec![None; self.slots as usize]; self.channels()];
        for (id, r) in self.reservations.iter().enumerate() {
            if r.channel >= self.channels() {
                return Err(LedgerError::UnknownChannel(r.channel));
            }
            if !self.fits(r.start, r.count, r.cycle) {
                return Err(LedgerError::OutOfRange {
                    start: r.start,
                    count: r.count,
                    cycle: r.cycle,
                });
            }
            for s in r.slots() {
                let cell = &mut cover[r.channel][s as usize];
                if let Some(owner) = *cell {
                    return Err(LedgerError::Conflict {
                        channel: r.channel,
                        slot: s,
                        owner,
                    });
                }
                *cell = Some(id);
            }
        }
        for (channel, (want, have)) in cover.iter().zip(&self.owners).enumerate() {
            if let Some(slot) = (0..self.slots).find(|&s| want[s as usize] != have[s as usize]) {
                let id = want[slot as usize].or(have[slot as usize]).unwrap_or_default();
                return Err(LedgerError::Unmarked { id, channel, slot });
            }
        }
        Ok(())
    }
}

/// What the surface controller applies on one channel's group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSetting<'a> {
    pub channel: usize,
    pub owner: Option<usize>,
    pub setting: &'a RisSetting,
}

static NEUTRAL: RisSetting = RisSetting::Neutral;

/// Surface configuration per channel group for a transmission slot.
pub fn controller_apply(ledger: &ReservationLedger, slot: u32) -> Vec<GroupSetting<'_>> {
    (0..ledger.channels())
        .map(|channel| match ledger.owner(channel, slot) {
            Some(id) => GroupSetting {
                channel,
                owner: Some(ledger.reservations[id].user),
                setting: &ledger.reservations[id].setting,
            },
            None => GroupSetting {
                channel,
                owner: None,
                setting: &NEUTRAL,
            },
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn res(user: usize, channel: usize, start: u32, count: u32, cycle: u32) -> Reservation {
        Reservation {
            user,
            channel,
            start,
            count,
            cycle,
            rho2: 1e-3,
            setting: RisSetting::Phases(vec![user as f64]),
            snr: 1.0,
        }
    }

    #[test]
    fn commit_and_lookup() {
        let mut l = ReservationLedger::new(2, 12);
        let id = l.commit(res(7, 1, 1, 3, 4)).unwrap();
        assert_eq!(l.owner(1, 1), Some(id));
        assert_eq!(l.owner(1, 5), Some(id));
        assert_eq!(l.owner(1, 9), Some(id));
        assert_eq!(l.owner(1, 2), None);
        assert_eq!(l.owner(0, 1), None);
        l.check_invariants().unwrap();

        let g = controller_apply(&l, 5);
        assert_eq!(g[1].owner, Some(7));
        assert_eq!(g[1].setting, &RisSetting::Phases(vec![7.0]));
        assert_eq!(g[0].setting, &RisSetting::Neutral);
        assert!(controller_apply(&l, 6).iter().all(|g| g.owner.is_none()));
    }

    #[test]
    fn conflicts_rejected() {
        let mut l = ReservationLedger::new(1, 12);
        l.commit(res(0, 0, 1, 3, 4)).unwrap();
        assert!(matches!(l.commit(res(1, 0, 5, 1, 4)), Err(LedgerError::Conflict { slot: 5, .. })));
        assert!(!l.is_free(0, 1, 2, 4));
        assert_eq!(l.first_free_start(0, 3, 4), Some(0));
        l.commit(res(1, 0, 0, 3, 4)).unwrap();
        assert_eq!(l.first_free_start(0, 3, 4), Some(2));
        l.check_invariants().unwrap();
    }

    #[test]
    fn out_of_range() {
        let mut l = ReservationLedger::new(1, 12);
        assert!(matches!(l.commit(res(0, 0, 1, 4, 4)), Err(LedgerError::OutOfRange { .. })));
        assert!(matches!(l.commit(res(0, 1, 1, 1, 4)), Err(LedgerError::UnknownChannel(1))));
        assert_eq!(l.first_free_start(0, 4, 4), None);
        assert!(l.is_free(0, 3, 3, 4));
    }

    #[test]
    fn clear_empties() {
        let mut l = ReservationLedger::new(1, 12);
        l.commit(res(0, 0, 1, 3, 4)).unwrap();
        l.clear();
        assert!(l.reservations().is_empty());
        assert_eq!(l.owner(0, 1), None);
    }
}
