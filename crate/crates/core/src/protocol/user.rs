//! User-side backoff machine. One call of [`user_tick`] per virtual slot
//! of the negotiation phase: an idle slot, a successful handshake or a
//! collision each advance the counter once.

use rand::Rng;

use super::packet::PacketKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Contending,
    Transmitting,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backlog {
    Saturated,
    Packets(u64),
}

impl Backlog {
    pub fn is_empty(self) -> bool {
        self == Backlog::Packets(0)
    }

    /// Transmissions to request, at most `r_max`.
    pub fn request(self, r_max: u32) -> u32 {
        match self {
            Backlog::Saturated => r_max,
            Backlog::Packets(n) => n.min(u64::from(r_max)) as u32,
        }
    }

    pub fn take(&mut self, n: u32) {
        if let Backlog::Packets(left) = self {
            *left = left.saturating_sub(u64::from(n));
        }
    }

    pub fn add(&mut self, n: u64) {
        if let Backlog::Packets(left) = self {
            *left += n;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Holding {
    pub id: usize,
    pub channel: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BackoffRules {
    pub cw_min: u32,
    pub max_stage: u32,
}

impl BackoffRules {
    pub fn window(&self, stage: u32) -> u32 {
        self.cw_min << stage
    }

    fn draw<R: Rng>(&self, stage: u32, rng: &mut R) -> u32 {
        rng.gen_range(0..self.window(stage))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserState {
    pub mode: Mode,
    pub stage: u32,
    pub counter: u32,
    /// Network allocation vector expiry, ns.
    pub nav_until: u64,
    pub backlog: Backlog,
    /// Most recent reservation of the current frame.
    pub holding: Option<Holding>,
    /// Groups that refused this user in the current frame.
    pub refused: Vec<usize>,
}

impl UserState {
    pub fn new<R: Rng>(rules: &BackoffRules, backlog: Backlog, rng: &mut R) -> Self {
        Self {
            mode: Mode::Contending,
            stage: 0,
            counter: rules.draw(0, rng),
            nav_until: 0,
            backlog,
            holding: None,
            refused: Vec::new(),
        }
    }

    pub fn ready(&self, now: u64) -> bool {
        self.mode == Mode::Contending && self.counter == 0 && now >= self.nav_until && !self.backlog.is_empty()
    }

    pub fn check(&self, rules: &BackoffRules) -> bool {
        self.stage <= rules.max_stage && self.counter < rules.window(self.stage)
    }

    fn restart<R: Rng>(&mut self, rules: &BackoffRules, rng: &mut R) {
        self.stage = 0;
        self.counter = rules.draw(0, rng);
    }

    /// Clears per-frame state; mode and backoff carry over. Frame times
    /// restart at zero, so the NAV does too.
    pub fn new_frame(&mut self) {
        self.nav_until = 0;
        self.holding = None;
        self.refused.clear();
    }
}

/// What the user saw in the slot that just ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotView {
    Idle,
    /// Someone else's handshake or collision.
    Busy,
    /// The user's own eRTS collided.
    Collided,
    /// The user's own handshake completed.
    Negotiated(Handshake),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Handshake {
    Reserved(Holding),
    /// Refused; with `retry` the user contends again at once for
    /// another group.
    Refused { retry: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    None,
    SendErts,
    EnterTransmission,
    LeaveTransmission,
    Retry,
}

/// Slot-start poll: a contending user whose counter reached zero sends.
pub fn poll(state: &UserState, now: u64) -> Action {
    if state.ready(now) {
        Action::SendErts
    } else {
        Action::None
    }
}

/// Advances the machine past one virtual slot. `q` is the probability
/// of starting a new backoff instead of entering (or leaving) the
/// transmission state.
pub fn user_tick<R: Rng>(state: &mut UserState, view: SlotView, q: f64, rules: &BackoffRules, rng: &mut R) -> Action {
    if state.mode == Mode::Transmitting {
        if rng.gen::<f64>() < q {
            state.mode = Mode::Contending;
            state.restart(rules, rng);
            return Action::LeaveTransmission;
        }
        return Action::None;
    }
    match view {
        SlotView::Idle | SlotView::Busy => {
            state.counter = state.counter.saturating_sub(1);
            Action::None
        }
        SlotView::Collided => {
            state.stage = (state.stage + 1).min(rules.max_stage);
            state.counter = rules.draw(state.stage, rng);
            Action::None
        }
        SlotView::Negotiated(hs) => {
            if let Handshake::Reserved(h) = hs {
                state.holding = Some(h);
            }
            if let Handshake::Refused { retry: true } = hs {
                state.restart(rules, rng);
                return Action::Retry;
            }
            if rng.gen::<f64>() < q {
                state.restart(rules, rng);
                Action::None
            } else {
                state.mode = Mode::Transmitting;
                Action::EnterTransmission
            }
        }
    }
}

/// A packet overheard on the common channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Overheard {
    pub kind: PacketKind,
    /// End of the packet, ns.
    pub ends_at: u64,
    /// Remaining exchange after the packet ends, ns.
    pub remaining: u64,
    /// Sub-channel the exchange protects; `None` for the common channel.
    pub channel: Option<usize>,
}

/// Defers the user until the overheard exchange is over. Traffic on a
/// sub-channel only silences users holding that sub-channel.
pub fn nav_update(state: &mut UserState, packet: &Overheard) {
    if let Some(c) = packet.channel {
        if state.holding.map(|h| h.channel) != Some(c) {
            return;
        }
    }
    let until = packet.ends_at + packet.remaining;
    state.nav_until = state.nav_until.max(until);
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const RULES: BackoffRules = BackoffRules { cw_min: 15, max_stage: 6 };

    fn state(stage: u32, counter: u32) -> UserState {
        UserState {
            mode: Mode::Contending,
            stage,
            counter,
            nav_until: 0,
            backlog: Backlog::Saturated,
            holding: None,
            refused: Vec::new(),
        }
    }

    #[test]
    fn idle_slot_decrements() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut s = state(2, 3);
        assert_eq!(user_tick(&mut s, SlotView::Idle, 0.5, &RULES, &mut rng), Action::None);
        assert_eq!(s.counter, 2);
        assert_eq!(s.stage, 2);
    }

    #[test]
    fn zero_counter_sends() {
        assert_eq!(poll(&state(0, 0), 0), Action::SendErts);
        assert_eq!(poll(&state(0, 1), 0), Action::None);
        let mut s = state(0, 0);
        s.nav_until = 10;
        assert_eq!(poll(&s, 5), Action::None);
        s.mode = Mode::Transmitting;
        assert_eq!(poll(&s, 20), Action::None);
    }

    #[test]
    fn collision_at_last_stage_keeps_stage() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut max_seen = 0;
        for _ in 0..2000 {
            let mut s = state(6, 0);
            user_tick(&mut s, SlotView::Collided, 0.5, &RULES, &mut rng);
            assert_eq!(s.stage, 6);
            assert!(s.counter < 64 * 15);
            max_seen = max_seen.max(s.counter);
        }
        assert!(max_seen > 900);
    }

    #[test]
    fn success_with_q_one_restarts() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut s = state(3, 0);
        let hold = Holding { id: 0, channel: 0 };
        let a = user_tick(&mut s, SlotView::Negotiated(Handshake::Reserved(hold)), 1.0, &RULES, &mut rng);
        assert_eq!(a, Action::None);
        assert_eq!(s.stage, 0);
        assert!(s.counter < 15);
        assert_eq!(s.holding, Some(hold));
    }

    #[test]
    fn success_with_q_zero_enters_transmission() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut s = state(1, 0);
        let hold = Holding { id: 0, channel: 0 };
        let a = user_tick(&mut s, SlotView::Negotiated(Handshake::Reserved(hold)), 0.0, &RULES, &mut rng);
        assert_eq!(a, Action::EnterTransmission);
        assert_eq!(s.mode, Mode::Transmitting);
        assert_eq!(poll(&s, u64::MAX), Action::None);
        // row 7 with q = 0, row 6 with q = 1
        assert_eq!(user_tick(&mut s, SlotView::Idle, 0.0, &RULES, &mut rng), Action::None);
        assert_eq!(user_tick(&mut s, SlotView::Idle, 1.0, &RULES, &mut rng), Action::LeaveTransmission);
        assert_eq!(s.mode, Mode::Contending);
        assert_eq!(s.stage, 0);
    }

    #[test]
    fn retry_restarts_at_stage_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut s = state(4, 0);
        let a = user_tick(&mut s, SlotView::Negotiated(Handshake::Refused { retry: true }), 0.0, &RULES, &mut rng);
        assert_eq!(a, Action::Retry);
        assert_eq!(s.mode, Mode::Contending);
        assert_eq!(s.stage, 0);
    }

    #[test]
    fn nav_rules() {
        let mut s = state(0, 3);
        let erts = Overheard {
            kind: PacketKind::Erts,
            ends_at: 1000,
            remaining: 500,
            channel: None,
        };
        nav_update(&mut s, &erts);
        assert_eq!(s.nav_until, 1500);
        // an older packet never shortens the NAV
        nav_update(&mut s, &Overheard { ends_at: 10, remaining: 0, ..erts });
        assert_eq!(s.nav_until, 1500);
        // other sub-channel: ignored
        s.holding = Some(Holding { id: 1, channel: 2 });
        nav_update(&mut s, &Overheard { ends_at: 9000, channel: Some(1), ..erts });
        assert_eq!(s.nav_until, 1500);
        nav_update(&mut s, &Overheard { ends_at: 9000, channel: Some(2), ..erts });
        assert_eq!(s.nav_until, 9500);
    }
}
