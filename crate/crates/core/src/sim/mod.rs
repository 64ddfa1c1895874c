//! Slotted simulation of whole frames, plus the contention-only occupancy
//! model used to check the sub-channel analysis.

pub mod engine;
pub mod metrics;
pub mod occupancy;
pub mod schedule;

pub use engine::{run, run_baseline_csma, run_no_ris, run_scheme, run_with, RunOptions, RunOutput, Scheme, SimError};
pub use metrics::{Counters, FrameMetrics, Metrics, RunningMean, METRICS_HEADER};
pub use occupancy::{simulate_occupancy, OccupancyReport};
pub use schedule::{transmission_phase_schedule, PlannedTx};
