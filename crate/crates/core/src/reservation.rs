//! Integer programs for the number of reserved transmissions per user and,
//! with several sub-channels, the sub-channel each user reserves.
//!
//! Both are solved by best-first branch-and-bound. Users are decided one at
//! a time; a decision is either "no reservation" or a (channel, count) pair.
//! Among optimal solutions the one with the smallest per-channel maximum
//! user count wins, then the lexicographically smallest list of
//! (channel, count) decisions.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ReservationError {
    #[error("infeasible: {0}")]
    Infeasible(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReservationProblem {
    pub users: usize,
    pub r_max: u32,
    /// Free ledger slots on each sub-channel.
    pub capacity: Vec<u32>,
    /// Users that must hold a reservation.
    pub target: usize,
}

/// One user's decision: `channel == 0` means no reservation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Decision {
    pub channel: usize,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReservationPlan {
    /// Channel per user, 1-based; 0 for users without a reservation.
    pub channels: Vec<usize>,
    pub counts: Vec<u32>,
    pub objective: u64,
    pub nodes: usize,
}

impl ReservationPlan {
    pub fn reserved(&self) -> usize {
        self.channels.iter().filter(|&&c| c > 0).count()
    }

    pub fn max_load(&self, channels: usize) -> usize {
        (1..=channels)
            .map(|c| self.channels.iter().filter(|&&x| x == c).count())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    bound: u64,
    load: usize,
    prefix: Vec<Decision>,
    value: u64,
    used: Vec<u32>,
    users_per_channel: Vec<usize>,
    assigned: usize,
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the greatest: high bound, then low load, then
        // lexicographically small prefix.
        self.bound
            .cmp(&other.bound)
            .then_with(|| other.load.cmp(&self.load))
            .then_with(|| other.prefix.cmp(&self.prefix))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl ReservationProblem {
    fn channels(&self) -> usize {
        self.capacity.len()
    }

    /// LP-relaxation bound of the undecided users: the still-needed
    /// reservations can spread fractionally over the remaining capacity.
    /// `None` when no completion is feasible.
    fn bound(&self, value: u64, used: &[u32], assigned: usize, decided: usize) -> Option<u64> {
        let left_users = self.users - decided;
        let needed = self.target.checked_sub(assigned)?;
        if needed > left_users {
            return None;
        }
        let room: u64 = self
            .capacity
            .iter()
            .zip(used)
            .map(|(&c, &u)| u64::from(c - u))
            .sum();
        if (needed as u64) > room {
            return None;
        }
        Some(value + room.min(needed as u64 * u64::from(self.r_max)))
    }

    fn load_floor(&self, per_channel: &[usize]) -> usize {
        let current = per_channel.iter().copied().max().unwrap_or(0);
        let spread = self.target.div_ceil(self.channels().max(1));
        current.max(spread)
    }

    pub fn solve(&self) -> Result<ReservationPlan, ReservationError> {
        if self.r_max == 0 {
            return Err(ReservationError::Infeasible("r_max must be at least 1"));
        }
        if self.target > self.users {
            return Err(ReservationError::Infeasible("more reservations required than users"));
        }
        if self.channels() == 0 && self.target > 0 {
            return Err(ReservationError::Infeasible("no sub-channel available"));
        }
        let c = self.channels();
        let used = vec![0u32; c];
        let per = vec![0usize; c];
        let Some(bound) = self.bound(0, &used, 0, 0) else {
            return Err(ReservationError::Infeasible(
                "ledger cannot give every reserving user one slot",
            ));
        };

        let mut heap = BinaryHeap::new();
        heap.push(Node {
            bound,
            load: self.load_floor(&per),
            prefix: Vec::new(),
            value: 0,
            used,
            users_per_channel: per,
            assigned: 0,
        });
        let mut nodes = 0usize;
        while let Some(node) = heap.pop() {
            nodes += 1;
            let depth = node.prefix.len();
            if depth == self.users {
                return Ok(ReservationPlan {
                    channels: node.prefix.iter().map(|d| d.channel).collect(),
                    counts: node.prefix.iter().map(|d| d.count).collect(),
                    objective: node.value,
                    nodes,
                });
            }
            let push = |decision: Decision, heap: &mut BinaryHeap<Node>| {
                let mut used = node.used.clone();
                let mut per = node.users_per_channel.clone();
                let mut assigned = node.assigned;
                if decision.channel > 0 {
                    used[decision.channel - 1] += decision.count;
                    per[decision.channel - 1] += 1;
                    assigned += 1;
                }
                let value = node.value + u64::from(decision.count);
                if let Some(bound) = self.bound(value, &used, assigned, depth + 1) {
                    let mut prefix = node.prefix.clone();
                    prefix.push(decision);
                    heap.push(Node {
                        bound,
                        load: self.load_floor(&per),
                        prefix,
                        value,
                        used,
                        users_per_channel: per,
                        assigned,
                    });
                }
            };
            push(Decision { channel: 0, count: 0 }, &mut heap);
            for ch in 1..=c {
                let free = self.capacity[ch - 1] - node.used[ch - 1];
                for r in 1..=self.r_max.min(free) {
                    push(Decision { channel: ch, count: r }, &mut heap);
                }
            }
        }
        Err(ReservationError::Infeasible("no feasible assignment"))
    }
}

/// Reserved-transmission counts for single-channel operation: every user
/// gets between 1 and `r_max` transmissions and all of them must fit in
/// the `ledger` slots of the transmission phase.
pub fn solve_scmu_counts(users: usize, r_max: u32, ledger: u32) -> Result<Vec<u32>, ReservationError> {
    if (ledger as usize) < users {
        return Err(ReservationError::Infeasible(
            "ledger cannot give every user one transmission",
        ));
    }
    let plan = ReservationProblem {
        users,
        r_max,
        capacity: vec![ledger],
        target: users,
    }
    .solve()?;
    Ok(plan.counts)
}

/// Joint sub-channel selection and counts for multi-channel operation.
pub fn solve_mcmu_assignment(problem: &ReservationProblem) -> Result<ReservationPlan, ReservationError> {
    problem.solve()
}

/// Checks a plan against the problem constraints without using the solver.
pub fn check_plan(problem: &ReservationProblem, plan: &ReservationPlan) -> Result<(), String> {
    if plan.channels.len() != problem.users || plan.counts.len() != problem.users {
        return Err("plan length differs from user count".into());
    }
    let mut used = vec![0u64; problem.capacity.len()];
    for (k, (&c, &r)) in plan.channels.iter().zip(&plan.counts).enumerate() {
        if c == 0 {
            if r != 0 {
                return Err(format!("user {k} transmits without a reservation"));
            }
            continue;
        }
        if c > problem.capacity.len() {
            return Err(format!("user {k} on unknown channel {c}"));
        }
        if r < 1 || r > problem.r_max {
            return Err(format!("user {k} count {r} outside 1..={}", problem.r_max));
        }
        used[c - 1] += u64::from(r);
    }
    for (c, (&u, &cap)) in used.iter().zip(&problem.capacity).enumerate() {
        if u > u64::from(cap) {
            return Err(format!("channel {} over capacity: {u} > {cap}", c + 1));
        }
    }
    if plan.reserved() != problem.target {
        return Err(format!("{} reservations, target {}", plan.reserved(), problem.target));
    }
    let total: u64 = plan.counts.iter().map(|&r| u64::from(r)).sum();
    if total != plan.objective {
        return Err("objective does not match counts".into());
    }
    Ok(())
}
