//! Simulator and analytical model for an RIS-assisted reservation MAC.
//!
//! Users contend on a common channel with a CSMA/CA backoff, negotiate
//! transmission slots, power and surface phases with the AP in an
//! eRTS/eCTS handshake, and then transmit in their reserved slots while
//! the surface reflects toward the AP.

pub mod channel;
pub mod config;
pub mod phase;
pub mod markov;
pub mod protocol;
pub mod reservation;
pub mod sim;
