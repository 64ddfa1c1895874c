//! Counters collected by a run. Counters add up across runs; means are
//! merged with their weights.

use std::io::Write;
use std::ops::AddAssign;

/// Mean that stays exact when every sample is equal.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunningMean {
    pub mean: f64,
    pub count: u64,
}

impl RunningMean {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.mean += (x - self.mean) / self.count as f64;
    }

    pub fn get(&self) -> Option<f64> {
        (self.count > 0).then_some(self.mean)
    }
}

impl AddAssign for RunningMean {
    fn add_assign(&mut self, other: Self) {
        if other.count == 0 {
            return;
        }
        let n = self.count + other.count;
        self.mean += (other.mean - self.mean) * (other.count as f64 / n as f64);
        self.count = n;
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counters {
    pub frames: u64,
    pub elapsed_s: f64,
    /// Virtual slots of the contention process.
    pub slots: u64,
    pub idle: u64,
    pub success: u64,
    pub collision: u64,
    /// eRTS transmissions and how many of them collided.
    pub attempts: u64,
    pub collided: u64,
    pub grants: u64,
    /// Grants at a start other than the requested one.
    pub moved: u64,
    pub refusals: u64,
    pub retries: u64,
    pub rejected: u64,
    pub data_tx: u64,
    pub data_airtime_s: f64,
    pub bits: f64,
    /// Distinct users with a collision-free handshake, per frame, summed.
    pub served: u64,
    /// Distinct users holding a reservation, per frame, summed.
    pub holders: u64,
    pub power: RunningMean,
    pub snr: RunningMean,
    pub ledger_conflicts: u64,
    pub unreserved_tx: u64,
    pub conservation_failures: u64,
}

impl AddAssign<&Counters> for Counters {
    fn add_assign(&mut self, o: &Counters) {
        self.frames += o.frames;
        self.elapsed_s += o.elapsed_s;
        self.slots += o.slots;
        self.idle += o.idle;
        self.success += o.success;
        self.collision += o.collision;
        self.attempts += o.attempts;
        self.collided += o.collided;
        self.grants += o.grants;
        self.moved += o.moved;
        self.refusals += o.refusals;
        self.retries += o.retries;
        self.rejected += o.rejected;
        self.data_tx += o.data_tx;
        self.data_airtime_s += o.data_airtime_s;
        self.bits += o.bits;
        self.served += o.served;
        self.holders += o.holders;
        self.power += o.power;
        self.snr += o.snr;
        self.ledger_conflicts += o.ledger_conflicts;
        self.unreserved_tx += o.unreserved_tx;
        self.conservation_failures += o.conservation_failures;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameMetrics {
    pub frame: usize,
    pub warmup: bool,
    /// Contention probability used during the frame.
    pub q: f64,
    pub counters: Counters,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Sub-channels sharing the airtime; throughput is normalized by it.
    pub channels: usize,
    /// Steady-state totals (warm-up frames excluded).
    pub counters: Counters,
    pub frames: Vec<FrameMetrics>,
    /// Mean SNR of each user's data transmissions.
    pub user_snr: Vec<RunningMean>,
    pub final_q: f64,
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

impl Metrics {
    pub fn zeta_success(&self) -> f64 {
        ratio(self.counters.success as f64, self.counters.slots as f64)
    }

    pub fn zeta_empty(&self) -> f64 {
        ratio(self.counters.idle as f64, self.counters.slots as f64)
    }

    pub fn zeta_collision(&self) -> f64 {
        ratio(self.counters.collision as f64, self.counters.slots as f64)
    }

    /// Fraction of eRTS transmissions that collided.
    pub fn collision_probability(&self) -> f64 {
        ratio(self.counters.collided as f64, self.counters.attempts as f64)
    }

    pub fn throughput(&self) -> f64 {
        ratio(self.counters.data_airtime_s, self.counters.elapsed_s * self.channels.max(1) as f64)
    }

    pub fn capacity_bps(&self) -> f64 {
        ratio(self.counters.bits, self.counters.elapsed_s)
    }

    pub fn served_per_frame(&self) -> f64 {
        ratio(self.counters.served as f64, self.counters.frames as f64)
    }

    pub fn holders_per_frame(&self) -> f64 {
        ratio(self.counters.holders as f64, self.counters.frames as f64)
    }

    pub fn mean_power_w(&self) -> Option<f64> {
        self.counters.power.get()
    }

    pub fn mean_snr(&self) -> Option<f64> {
        self.counters.snr.get()
    }

    /// Sums the counters of runs with the same channel count.
    pub fn merge(&mut self, other: &Metrics) {
        self.counters += &other.counters;
        self.frames.extend(other.frames.iter().cloned());
        if self.user_snr.len() < other.user_snr.len() {
            self.user_snr.resize(other.user_snr.len(), RunningMean::default());
        }
        for (a, b) in self.user_snr.iter_mut().zip(&other.user_snr) {
            *a += *b;
        }
        self.final_q = other.final_q;
    }

    pub fn is_clean(&self) -> bool {
        let c = &self.counters;
        c.ledger_conflicts == 0 && c.unreserved_tx == 0 && c.conservation_failures == 0
    }

    pub fn csv_row(&self) -> Vec<String> {
        let c = &self.counters;
        let snr_db = self.mean_snr().map_or(String::new(), |s| (10.0 * s.log10()).to_string());
        vec![
            c.frames.to_string(),
            c.elapsed_s.to_string(),
            c.slots.to_string(),
            c.idle.to_string(),
            c.success.to_string(),
            c.collision.to_string(),
            self.zeta_success().to_string(),
            self.zeta_empty().to_string(),
            self.zeta_collision().to_string(),
            c.attempts.to_string(),
            c.collided.to_string(),
            self.collision_probability().to_string(),
            c.grants.to_string(),
            c.moved.to_string(),
            c.refusals.to_string(),
            c.retries.to_string(),
            c.data_tx.to_string(),
            self.throughput().to_string(),
            self.capacity_bps().to_string(),
            self.served_per_frame().to_string(),
            self.holders_per_frame().to_string(),
            self.mean_power_w().map_or(String::new(), |p| p.to_string()),
            snr_db,
            c.ledger_conflicts.to_string(),
            c.unreserved_tx.to_string(),
            c.conservation_failures.to_string(),
            self.final_q.to_string(),
        ]
    }

    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(METRICS_HEADER)?;
        w.write_record(self.csv_row())?;
        w.flush()?;
        Ok(())
    }
}

pub const METRICS_HEADER: [&str; 27] = [
    "frames",
    "elapsed_s",
    "slots",
    "idle",
    "success",
    "collision",
    "zeta_s",
    "zeta_e",
    "zeta_c",
    "attempts",
    "collided",
    "collision_prob",
    "grants",
    "moved",
    "refusals",
    "retries",
    "data_tx",
    "throughput",
    "capacity_bps",
    "served_per_frame",
    "holders_per_frame",
    "mean_power_w",
    "mean_snr_db",
    "ledger_conflicts",
    "unreserved_tx",
    "conservation_failures",
    "final_q",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_mean_is_exact_for_constant_samples() {
        let p = 10f64.powf(0.5) * 1e-3;
        let mut m = RunningMean::default();
        for _ in 0..1000 {
            m.push(p);
        }
        assert_eq!(m.get(), Some(p));
        let mut other = RunningMean::default();
        other.push(p);
        m += other;
        assert_eq!(m.get(), Some(p));
    }

    #[test]
    fn running_mean_merges() {
        let mut a = RunningMean::default();
        let mut b = RunningMean::default();
        [1.0, 2.0, 3.0].iter().for_each(|&x| a.push(x));
        [5.0, 7.0].iter().for_each(|&x| b.push(x));
        a += b;
        assert!((a.mean - 3.6).abs() < 1e-12);
        assert_eq!(a.count, 5);
    }
}
