//! Scenario parameters, the text config format and feasibility checks.
//!
//! The config format is one `key = value` pair per line with `#` comments.
//! Powers carry a unit (`5 dBm`, `0.002 W`); the cycle length is either a
//! transmission count (`18 tx`) or a duration (`0.009 s`).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Relative slack when comparing time budgets that come from decimal input.
const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    MissingEquals { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseResolution {
    Continuous,
    Bits(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    /// Free-space amplitudes and path-length phases.
    GeometricLos,
    /// Free-space amplitudes, seeded uniform phases.
    RandomPhase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathModel {
    /// RIS placed `ris_offset_h` from the AP and `ris_offset_v` off the user line.
    Placement,
    /// Reflected path as long as the direct path.
    EqualPaths,
}

/// Who the analytical model counts as contending in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContenderPopulation {
    /// Every user runs the backoff chain; exponent K-1.
    AllUsers,
    /// Only the expected contention-mode share Kq; exponent Kq-1.
    ContendingFraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Traffic {
    Saturated,
    /// Fixed number of packets arriving at every user each frame.
    PerFrame(u32),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CycleSpec {
    Transmissions(u32),
    Seconds(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub x: u32,
    pub y: u32,
}

impl Grid {
    pub fn cells(self) -> usize {
        self.x as usize * self.y as usize
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timings {
    pub erts: f64,
    pub ects: f64,
    /// Duration of a successful negotiation.
    pub success: f64,
    /// Duration of a collided negotiation.
    pub collision: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub users: usize,
    pub elements: usize,
    pub groups: usize,
    pub subchannels: usize,
    pub surface: Grid,
    /// `None` derives the group shape by halving the surface.
    pub group_shape: Option<Grid>,
    pub bandwidth_hz: f64,
    pub carrier_hz: f64,
    pub tx_power_w: f64,
    pub ris_power_w: f64,
    pub noise_w: f64,
    pub phase: PhaseResolution,
    pub distance_m: f64,
    pub ris_offset_h_m: f64,
    pub ris_offset_v_m: f64,
    pub path_model: PathModel,
    pub channel_mode: ChannelMode,
    pub frame_s: f64,
    pub negotiation_s: f64,
    pub transmission_s: f64,
    pub data_s: f64,
    pub cycle: CycleSpec,
    pub r_max: u32,
    pub sifs_s: f64,
    pub difs_s: f64,
    pub slot_s: f64,
    pub ack_s: f64,
    pub erts_bytes: u32,
    pub ects_bytes: u32,
    pub cw_min: u32,
    pub cw_max: u32,
    pub max_stage: u32,
    pub population: ContenderPopulation,
    pub traffic: Traffic,
    pub warmup_frames: usize,
    pub initial_q: f64,
}

pub fn dbm_to_w(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) / 1000.0
}

pub fn w_to_dbm(w: f64) -> f64 {
    10.0 * (w * 1000.0).log10()
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            users: 100,
            elements: 128,
            groups: 1,
            subchannels: 1,
            surface: Grid { x: 16, y: 8 },
            group_shape: None,
            bandwidth_hz: 10e6,
            carrier_hz: 5e9,
            tx_power_w: dbm_to_w(5.0),
            ris_power_w: 0.0,
            noise_w: dbm_to_w(-80.0),
            phase: PhaseResolution::Bits(2),
            distance_m: 60.0,
            ris_offset_h_m: 2.0,
            ris_offset_v_m: 5.0,
            path_model: PathModel::Placement,
            channel_mode: ChannelMode::GeometricLos,
            frame_s: 0.2,
            negotiation_s: 0.02,
            transmission_s: 0.18,
            data_s: 0.5e-3,
            cycle: CycleSpec::Transmissions(18),
            r_max: 20,
            sifs_s: 10e-6,
            difs_s: 50e-6,
            slot_s: 20e-6,
            ack_s: 0.0,
            erts_bytes: 24,
            ects_bytes: 16,
            cw_min: 15,
            cw_max: 960,
            max_stage: 6,
            population: ContenderPopulation::AllUsers,
            traffic: Traffic::Saturated,
            warmup_frames: 2,
            initial_q: 0.5,
        }
    }
}

impl SystemConfig {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    /// Codebook size, `None` for continuous phases.
    pub fn codebook_size(&self) -> Option<u32> {
        match self.phase {
            PhaseResolution::Continuous => None,
            PhaseResolution::Bits(b) => Some(1u32 << b),
        }
    }

    pub fn phase_step(&self) -> Option<f64> {
        self.codebook_size()
            .map(|n| std::f64::consts::TAU / f64::from(n))
    }

    pub fn airtime(&self, bytes: u32) -> f64 {
        8.0 * f64::from(bytes) / self.bandwidth_hz
    }

    pub fn timings(&self) -> Timings {
        let erts = self.airtime(self.erts_bytes);
        let ects = self.airtime(self.ects_bytes);
        Timings {
            erts,
            ects,
            success: erts + ects + self.difs_s + self.sifs_s,
            collision: erts + self.difs_s,
        }
    }

    /// Cycle length in data-transmission slots.
    pub fn cycle_slots(&self) -> u32 {
        match self.cycle {
            CycleSpec::Transmissions(n) => n,
            CycleSpec::Seconds(s) => (s / self.data_s).round() as u32,
        }
    }

    pub fn cycle_seconds(&self) -> f64 {
        f64::from(self.cycle_slots()) * self.data_s
    }

    /// Data-transmission slots in one transmission phase.
    pub fn transmission_slots(&self) -> u32 {
        (self.transmission_s / self.data_s * (1.0 + TIME_SLACK)).floor() as u32
    }

    /// Per-user rate of leaving the transmission state.
    pub fn eta(&self) -> f64 {
        1.0 / (self.data_s * f64::from(self.r_max))
    }

    pub fn power_budget(&self) -> f64 {
        self.tx_power_w - self.ris_power_w / self.groups as f64
    }

    pub fn elements_per_group(&self) -> usize {
        self.elements / self.groups.max(1)
    }

    pub fn is_multichannel(&self) -> bool {
        self.subchannels > 1
    }

    /// Group tile shape, explicit or obtained by halving the longer side
    /// of the surface until there are `groups` tiles.
    pub fn group_grid(&self) -> Option<Grid> {
        if let Some(g) = self.group_shape {
            return Some(g);
        }
        let mut g = self.surface;
        let mut tiles = 1usize;
        while tiles < self.groups {
            if g.x > g.y && g.x % 2 == 0 {
                g.x /= 2;
            } else if g.y % 2 == 0 {
                g.y /= 2;
            } else if g.x % 2 == 0 {
                g.x /= 2;
            } else {
                return None;
            }
            tiles *= 2;
        }
        (tiles == self.groups).then_some(g)
    }

    /// Element indices of group `l`. Elements are numbered row-major over
    /// the surface grid and groups tile the grid row-major.
    pub fn group_elements(&self, l: usize) -> Vec<usize> {
        if self.groups <= 1 {
            return (0..self.elements).collect();
        }
        let Some(tile) = self.group_grid() else {
            let size = self.elements_per_group();
            return (l * size..(l + 1) * size).collect();
        };
        let per_row = (self.surface.x / tile.x) as usize;
        let (tx, ty) = (l % per_row, l / per_row);
        let mut out = Vec::with_capacity(tile.cells());
        for row in 0..tile.y as usize {
            for col in 0..tile.x as usize {
                let y = ty * tile.y as usize + row;
                let x = tx * tile.x as usize + col;
                out.push(y * self.surface.x as usize + x);
            }
        }
        out
    }

    pub fn validate(&self) -> ValidationReport {
        validate(self)
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::MissingEquals { line })?;
            cfg.set(key.trim(), value.trim()).map_err(|e| e.at_line(line))?;
        }
        Ok(cfg)
    }

    /// Sets one key. Accepts the documented keys and the short symbol
    /// aliases (`K`, `N`, `L`, `C`, `b`, `d`, `t_h`, ...).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = |reason: &str| ConfigError::BadValue {
            line: 0,
            key: key.to_string(),
            value: value.to_string(),
            reason: reason.to_string(),
        };
        let int = |v: &str| -> Result<u64, ConfigError> {
            if let Ok(n) = v.parse::<u64>() {
                return Ok(n);
            }
            // sweep values arrive as floats such as `20.0`
            match v.parse::<f64>() {
                Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 1e15 => Ok(x as u64),
                _ => Err(bad("expected a nonnegative integer")),
            }
        };
        let real = |v: &str| -> Result<f64, ConfigError> {
            v.parse::<f64>().map_err(|_| bad("expected a number"))
        };
        let grid = |v: &str| -> Result<Grid, ConfigError> {
            let (x, y) = v
                .split_once(['x', ':'])
                .ok_or_else(|| bad("expected `AxB`"))?;
            Ok(Grid {
                x: x.trim().parse().map_err(|_| bad("expected `AxB`"))?,
                y: y.trim().parse().map_err(|_| bad("expected `AxB`"))?,
            })
        };
        let power = |v: &str| -> Result<f64, ConfigError> {
            let mut parts = v.split_whitespace();
            let num = real(parts.next().unwrap_or(""))?;
            match parts.next().map(str::to_ascii_lowercase).as_deref() {
                Some("dbm") => Ok(dbm_to_w(num)),
                Some("w") | None => {
                    if num < 0.0 {
                        Err(bad("power in W must be nonnegative"))
                    } else {
                        Ok(num)
                    }
                }
                Some("mw") => Ok(num / 1000.0),
                Some(_) => Err(bad("unit must be dBm, mW or W")),
            }
        };

        match key {
            "users" | "K" => self.users = int(value)? as usize,
            "ris_elements" | "N" => self.elements = int(value)? as usize,
            "ris_groups" | "L" => self.groups = int(value)? as usize,
            "subchannels" | "C" => self.subchannels = int(value)? as usize,
            "ris_grid" => self.surface = grid(value)?,
            "group_grid" => {
                self.group_shape = if value == "auto" {
                    None
                } else {
                    Some(grid(value)?)
                }
            }
            "bandwidth" | "B" => self.bandwidth_hz = real(value)?,
            "carrier" | "f_c" => self.carrier_hz = real(value)?,
            "tx_power" | "P" => self.tx_power_w = power(value)?,
            "ris_power" | "P_RIS" => self.ris_power_w = power(value)?,
            "noise_power" | "sigma2" => self.noise_w = power(value)?,
            "phase_bits" | "b" => {
                self.phase = if value == "continuous" {
                    PhaseResolution::Continuous
                } else {
                    PhaseResolution::Bits(int(value)? as u32)
                }
            }
            "distance" | "d" => self.distance_m = real(value)?,
            "ris_offset_h" | "d_h" => self.ris_offset_h_m = real(value)?,
            "ris_offset_v" | "d_v" => self.ris_offset_v_m = real(value)?,
            "path_model" => {
                self.path_model = match value {
                    "placement" => PathModel::Placement,
                    "equal-paths" => PathModel::EqualPaths,
                    _ => return Err(bad("expected placement or equal-paths")),
                }
            }
            "channel_mode" => {
                self.channel_mode = match value {
                    "geometric-los" => ChannelMode::GeometricLos,
                    "random-phase" => ChannelMode::RandomPhase,
                    _ => return Err(bad("expected geometric-los or random-phase")),
                }
            }
            "frame_time" | "T" => self.frame_s = real(value)?,
            "negotiation_time" | "t_h" => self.negotiation_s = real(value)?,
            "transmission_time" | "t_r" => self.transmission_s = real(value)?,
            "data_time" | "t_p" => self.data_s = real(value)?,
            "cycle" | "T_cycle" => {
                let mut parts = value.split_whitespace();
                let num = parts.next().unwrap_or("");
                self.cycle = match parts.next() {
                    Some("tx") | None => CycleSpec::Transmissions(int(num)? as u32),
                    Some("s") => CycleSpec::Seconds(real(num)?),
                    Some(_) => return Err(bad("unit must be tx or s")),
                }
            }
            "r_max" => self.r_max = int(value)? as u32,
            "sifs" => self.sifs_s = real(value)?,
            "difs" => self.difs_s = real(value)?,
            "slot_time" | "delta" => self.slot_s = real(value)?,
            "ack_time" => self.ack_s = real(value)?,
            "erts_bytes" => self.erts_bytes = int(value)? as u32,
            "ects_bytes" => self.ects_bytes = int(value)? as u32,
            "cw_min" | "W0" => self.cw_min = int(value)? as u32,
            "cw_max" => self.cw_max = int(value)? as u32,
            "max_stage" | "m" => self.max_stage = int(value)? as u32,
            "contenders" => {
                self.population = match value {
                    "all-users" => ContenderPopulation::AllUsers,
                    "contending-fraction" => ContenderPopulation::ContendingFraction,
                    _ => return Err(bad("expected all-users or contending-fraction")),
                }
            }
            "traffic" => {
                self.traffic = if value == "saturated" {
                    Traffic::Saturated
                } else {
                    Traffic::PerFrame(int(value)? as u32)
                }
            }
            "warmup_frames" => self.warmup_frames = int(value)? as usize,
            "initial_q" => self.initial_q = real(value)?,
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: 0,
                    key: key.to_string(),
                })
            }
        }
        Ok(())
    }

    /// Serializes every key. Powers are written in watts so that parsing
    /// the output reproduces the config bit for bit.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        put("users", self.users.to_string());
        put("ris_elements", self.elements.to_string());
        put("ris_groups", self.groups.to_string());
        put("subchannels", self.subchannels.to_string());
        put("ris_grid", self.surface.to_string());
        put(
            "group_grid",
            self.group_shape.map_or("auto".into(), |g| g.to_string()),
        );
        put("bandwidth", self.bandwidth_hz.to_string());
        put("carrier", self.carrier_hz.to_string());
        put("tx_power", format!("{} W", self.tx_power_w));
        put("ris_power", format!("{} W", self.ris_power_w));
        put("noise_power", format!("{} W", self.noise_w));
        put(
            "phase_bits",
            match self.phase {
                PhaseResolution::Continuous => "continuous".into(),
                PhaseResolution::Bits(b) => b.to_string(),
            },
        );
        put("distance", self.distance_m.to_string());
        put("ris_offset_h", self.ris_offset_h_m.to_string());
        put("ris_offset_v", self.ris_offset_v_m.to_string());
        put(
            "path_model",
            match self.path_model {
                PathModel::Placement => "placement",
                PathModel::EqualPaths => "equal-paths",
            }
            .into(),
        );
        put(
            "channel_mode",
            match self.channel_mode {
                ChannelMode::GeometricLos => "geometric-los",
                ChannelMode::RandomPhase => "random-phase",
            }
            .into(),
        );
        put("frame_time", self.frame_s.to_string());
        put("negotiation_time", self.negotiation_s.to_string());
        put("transmission_time", self.transmission_s.to_string());
        put("data_time", self.data_s.to_string());
        put(
            "cycle",
            match self.cycle {
                CycleSpec::Transmissions(n) => format!("{n} tx"),
                CycleSpec::Seconds(x) => format!("{x} s"),
            },
        );
        put("r_max", self.r_max.to_string());
        put("sifs", self.sifs_s.to_string());
        put("difs", self.difs_s.to_string());
        put("slot_time", self.slot_s.to_string());
        put("ack_time", self.ack_s.to_string());
        put("erts_bytes", self.erts_bytes.to_string());
        put("ects_bytes", self.ects_bytes.to_string());
        put("cw_min", self.cw_min.to_string());
        put("cw_max", self.cw_max.to_string());
        put("max_stage", self.max_stage.to_string());
        put(
            "contenders",
            match self.population {
                ContenderPopulation::AllUsers => "all-users",
                ContenderPopulation::ContendingFraction => "contending-fraction",
            }
            .into(),
        );
        put(
            "traffic",
            match self.traffic {
                Traffic::Saturated => "saturated".into(),
                Traffic::PerFrame(n) => n.to_string(),
            },
        );
        put("warmup_frames", self.warmup_frames.to_string());
        put("initial_q", self.initial_q.to_string());
        s
    }
}

impl FromStr for SystemConfig {
    type Err = ConfigError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl ConfigError {
    fn at_line(self, line: usize) -> Self {
        match self {
            ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line, key },
            ConfigError::BadValue {
                key, value, reason, ..
            } => ConfigError::BadValue {
                line,
                key,
                value,
                reason,
            },
            other => other,
        }
    }
}

/// Which rule a violation breaks: one of the numbered problem constraints
/// or a structural consistency rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Constraint(u8),
    Structural,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.rule {
            Rule::Constraint(n) => write!(f, "C{n}: {}", self.message),
            Rule::Structural => write!(f, "structural: {}", self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }

    pub fn mentions(&self, text: &str) -> bool {
        self.violations.iter().any(|v| v.message.contains(text))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(c: &SystemConfig) -> ValidationReport {
    let mut out = Vec::new();
    let mut structural = |ok: bool, msg: &str| {
        if !ok {
            out.push(Violation {
                rule: Rule::Structural,
                message: msg.to_string(),
            });
        }
    };

    structural(c.users >= 1, "at least one user is required");
    structural(c.groups >= 1 && c.subchannels >= 1, "L and C must be at least 1");
    structural(c.groups == c.subchannels, "L must equal C");
    structural(
        c.groups >= 1 && c.elements % c.groups == 0,
        "N must be divisible by L",
    );
    structural(c.surface.cells() == c.elements, "RIS grid A_x*A_y must equal N");
    match c.group_grid() {
        Some(g) => {
            structural(
                g.cells() * c.groups == c.elements,
                "group grid l_x*l_y must equal N/L",
            );
            structural(
                g.x > 0 && g.y > 0 && c.surface.x % g.x == 0 && c.surface.y % g.y == 0,
                "group grid must tile the RIS grid",
            );
        }
        None => structural(false, "group grid cannot be derived from the RIS grid"),
    }
    structural(c.bandwidth_hz > 0.0, "bandwidth must be positive");
    structural(c.carrier_hz > 0.0, "carrier frequency must be positive");
    structural(c.noise_w > 0.0, "noise power must be positive");
    if let PhaseResolution::Bits(b) = c.phase {
        structural((1..=16).contains(&b), "phase bits must be in 1..=16");
    }
    structural(c.distance_m > 0.0, "distance must be positive");
    structural(
        c.ris_offset_v_m >= 0.0 && c.ris_offset_h_m >= 0.0,
        "RIS offsets must be nonnegative",
    );
    structural(
        c.distance_m > c.ris_offset_v_m,
        "distance must exceed the vertical RIS offset",
    );
    structural(
        c.cw_min >= 1 && u64::from(c.cw_max) == (u64::from(c.cw_min) << c.max_stage.min(32)),
        "CW_max must equal 2^m * CW_min",
    );
    structural(c.slot_s > 0.0, "slot time must be positive");
    structural(
        c.sifs_s >= 0.0 && c.difs_s >= 0.0 && c.ack_s >= 0.0,
        "interframe spaces must be nonnegative",
    );
    structural(c.data_s > 0.0, "data transmission time must be positive");
    structural(c.cycle_slots() >= 1, "cycle must hold at least one transmission");
    structural(
        c.initial_q > 0.0 && c.initial_q <= 1.0,
        "initial q must be in (0, 1]",
    );
    if c.r_max >= 1 && c.cycle_slots() >= 1 && c.data_s > 0.0 {
        let needed = u64::from(c.r_max - 1) * u64::from(c.cycle_slots()) + 1;
        structural(
            needed <= u64::from(c.transmission_slots()),
            "r_max periodic transmissions must fit in the transmission phase",
        );
    }

    let mut constraint = |ok: bool, n: u8, msg: &str| {
        if !ok {
            out.push(Violation {
                rule: Rule::Constraint(n),
                message: msg.to_string(),
            });
        }
    };
    if c.groups <= 1 {
        constraint(
            c.tx_power_w > c.ris_power_w,
            1,
            "transmit budget P - P_RIS must be positive",
        );
    } else {
        constraint(
            c.power_budget() > 0.0,
            7,
            "transmit budget P - P_RIS/L must be positive",
        );
    }
    constraint(
        (c.negotiation_s + c.transmission_s - c.frame_s).abs() <= TIME_SLACK * c.frame_s.abs(),
        4,
        "t_h + t_r must equal T",
    );
    constraint(
        c.negotiation_s > 0.0 && c.transmission_s > 0.0,
        4,
        "t_h and t_r must be positive",
    );
    constraint(c.r_max >= 1, if c.groups > 1 { 11 } else { 6 }, "r_max must be at least 1");

    ValidationReport { violations: out }
}

/// Checks the reservation-volume constraint once the success probability
/// is known: expected reserved airtime must fit in the transmission phase.
pub fn check_reservation_volume(c: &SystemConfig, zeta_s: f64) -> Option<Violation> {
    let t_s = c.timings().success;
    let lhs = c.data_s / t_s * f64::from(c.r_max) * zeta_s;
    let rhs = c.transmission_s / c.negotiation_s;
    (lhs > rhs * (1.0 + TIME_SLACK)).then(|| Violation {
        rule: Rule::Constraint(if c.groups > 1 { 11 } else { 5 }),
        message: format!("reserved volume {lhs:.4} exceeds t_r/t_h = {rhs:.4}"),
    })
}
