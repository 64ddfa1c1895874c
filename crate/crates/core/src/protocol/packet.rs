//! Control packets exchanged on the common channel.

use crate::config::SystemConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PacketKind {
    Erts,
    Ects,
    Ack,
}

impl PacketKind {
    pub fn airtime(self, config: &SystemConfig) -> f64 {
        match self {
            PacketKind::Erts => config.airtime(config.erts_bytes),
            PacketKind::Ects => config.airtime(config.ects_bytes),
            PacketKind::Ack => config.ack_s,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PacketKind::Erts => "erts",
            PacketKind::Ects => "ects",
            PacketKind::Ack => "ack",
        }
    }
}

/// Reservation request. `channel` and `group` are only present in
/// multi-channel operation and must agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Erts {
    pub sender: usize,
    /// Requested first transmission slot.
    pub start: u32,
    pub count: u32,
    pub cycle: u32,
    pub channel: Option<usize>,
    pub group: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RejectReason {
    CountOutOfRange,
    UnknownChannel,
    ChannelGroupMismatch,
    UnexpectedChannel,
    MissingChannel,
    CycleMismatch,
    PowerInfeasible,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reply {
    /// Reservation committed. `moved` is set when the AP picked a start
    /// other than the requested one.
    Granted { start: u32, moved: bool, id: usize },
    /// No conflict-free schedule left on the requested channel.
    NoReservation,
    Rejected(RejectReason),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ects {
    pub receiver: usize,
    pub reply: Reply,
    pub count: u32,
    pub cycle: u32,
    pub channel: Option<usize>,
    pub group: Option<usize>,
    /// Granted transmit power in watts; zero without a grant.
    pub rho2: f64,
}

impl Ects {
    pub fn granted(&self) -> bool {
        matches!(self.reply, Reply::Granted { .. })
    }
}
