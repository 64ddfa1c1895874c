//! State machines of the reservation protocol: users, access point and
//! surface controller.

pub mod ap;
pub mod ledger;
pub mod packet;
pub mod trace;
pub mod user;

pub use ap::{ap_handle_erts, AccessPoint, Link};
pub use ledger::{controller_apply, periodic_slots, GroupSetting, LedgerError, Reservation, ReservationLedger};
pub use packet::{Ects, Erts, PacketKind, RejectReason, Reply};
pub use trace::{Node, Trace, TraceEvent};
pub use user::{
    nav_update, poll, user_tick, Action, Backlog, BackoffRules, Handshake, Holding, Mode, Overheard, SlotView,
    UserState,
};
