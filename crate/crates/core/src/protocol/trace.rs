//! One line per protocol event.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Node {
    Ap,
    User(usize),
    Surface(usize),
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Ap => write!(f, "ap"),
            Node::User(k) => write!(f, "u{k}"),
            Node::Surface(l) => write!(f, "ris{l}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEvent {
    pub frame: usize,
    /// Negotiation slot index, or transmission slot in the data phase.
    pub slot: u64,
    pub node: Node,
    pub event: &'static str,
    pub fields: Vec<(&'static str, String)>,
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "frame={} slot={} node={} event={}", self.frame, self.slot, self.node, self.event)?;
        for (k, v) in &self.fields {
            write!(f, " {k}={v}")?;
        }
        Ok(())
    }
}

/// Event sink; disabled sinks drop everything.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    enabled: bool,
    events: Vec<TraceEvent>,
}

impl Trace {
    pub fn enabled() -> Self {
        Self {
            enabled: true,
            events: Vec::new(),
        }
    }

    pub fn is_enabled(&self) -> bool {
        self.enabled
    }

    pub fn push(&mut self, make: impl FnOnce() -> TraceEvent) {
        if self.enabled {
            self.events.push(make());
        }
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn into_events(self) -> Vec<TraceEvent> {
        self.events
    }
}
