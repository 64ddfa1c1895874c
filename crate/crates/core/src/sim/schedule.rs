//! Expansion of committed reservations into per-slot transmissions.

use crate::config::SystemConfig;
use crate::protocol::ReservationLedger;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannedTx {
    pub slot: u32,
    pub channel: usize,
    pub user: usize,
    pub reservation: usize,
    pub rho2: f64,
    pub snr: f64,
}

/// All reserved transmissions ordered by slot, then channel. Slots past
/// the transmission phase are dropped.
pub fn transmission_phase_schedule(ledger: &ReservationLedger, config: &SystemConfig) -> Vec<PlannedTx> {
    let limit = config.transmission_slots().min(ledger.slots());
    let mut plan: Vec<PlannedTx> = ledger
        .reservations()
        .iter()
        .enumerate()
        .flat_map(|(id, r)| {
            r.slots().map(move |slot| PlannedTx {
                slot,
                channel: r.channel,
                user: r.user,
                reservation: id,
                rho2: r.rho2,
                snr: r.snr,
            })
        })
        .filter(|p| p.slot < limit)
        .collect();
    plan.sort_by_key(|p| (p.slot, p.channel));
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::RisSetting;
    use crate::protocol::Reservation;

    #[test]
    fn periodic_layout() {
        let c = SystemConfig::default();
        let mut l = ReservationLedger::new(1, c.transmission_slots());
        assert!(transmission_phase_schedule(&l, &c).is_empty());
        l.commit(Reservation {
            user: 0,
            channel: 0,
            start: 1,
            count: 3,
            cycle: 4,
            rho2: 1.0,
            setting: RisSetting::Neutral,
            snr: 1.0,
        })
        .unwrap();
        let slots: Vec<u32> = transmission_phase_schedule(&l, &c).iter().map(|p| p.slot).collect();
        assert_eq!(slots, vec![1, 5, 9]);
    }
}
