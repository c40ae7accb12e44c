//! Exhaustive reference for the blocking time, and task-set generators.
//!
//! The oracle walks the whole uninformed space: for every lower-priority job
//! either none or one of its sections, in every combination. A combination
//! counts if some order of it is an admissible chain.

mod generate;

use std::collections::HashSet;

use serde::Serialize;

pub use generate::{generate_antidiagonal_family, random_taskset, RandomLimits};

use crate::admissibility::extension_verdict;
use crate::deadlock::{check_deadlock_free, DeadlockVerdict};
use crate::error::{Error, Result};
use crate::taskset::{chain_duration, SectionRef, TaskSet, ZChain};
use crate::time::Time;

pub const DEFAULT_LIMIT: u128 = 1_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleResult {
    pub job: usize,
    pub best_duration: Time,
    /// One admissible order per best section set.
    pub best_chains: Vec<ZChain>,
    /// Size of the uninformed space, every combination visited.
    pub chains_enumerated: u128,
    /// Combinations with an admissible order.
    pub admissible_sets: usize,
}

/// `∏_{j>i} (|β_j| + 1)`.
pub fn search_space_size(ts: &TaskSet, i: usize) -> u128 {
    ts.jobs()
        .iter()
        .skip(i)
        .map(|j| j.sections.len() as u128 + 1)
        .fold(1u128, |acc, k| acc.saturating_mul(k))
}

pub fn brute_force_blocking_time(ts: &TaskSet, i: usize) -> Result<OracleResult> {
    brute_force_with_limit(ts, i, DEFAULT_LIMIT)
}

pub fn brute_force_with_limit(ts: &TaskSet, i: usize, limit: u128) -> Result<OracleResult> {
    ts.check_job(i)?;
    if let DeadlockVerdict::Cyclic { cycle } = check_deadlock_free(ts) {
        return Err(Error::Cyclic(cycle));
    }
    let space = search_space_size(ts, i);
    if space > limit {
        return Err(Error::LimitExceeded { space, limit });
    }

    let lower: Vec<Vec<SectionRef>> = ts
        .jobs()
        .iter()
        .skip(i)
        .map(|j| j.sections.iter().map(|s| s.id()).collect())
        .collect();
    // Mixed-radix counter; digit 0 means "no section of this job".
    let mut digits = vec![0usize; lower.len()];
    let mut result = OracleResult {
        job: i,
        best_duration: Time::ZERO,
        best_chains: vec![ZChain::new()],
        chains_enumerated: 0,
        admissible_sets: 0,
    };
    loop {
        result.chains_enumerated += 1;
        let picked: Vec<SectionRef> = digits
            .iter()
            .zip(&lower)
            .filter(|(&d, _)| d > 0)
            .map(|(&d, secs)| secs[d - 1])
            .collect();
        if let Some(order) = admissible_order(ts, i, &picked) {
            result.admissible_sets += 1;
            let d = chain_duration(ts, &order);
            if d > result.best_duration {
                result.best_duration = d;
                result.best_chains.clear();
            }
            if d == result.best_duration && !order.is_empty() {
                result.best_chains.push(ZChain::from(order));
            }
        }
        if !advance(&mut digits, &lower) {
            break;
        }
    }
    if result.best_duration > Time::ZERO {
        result.best_chains.retain(|c| !c.is_empty());
    }
    Ok(result)
}

fn advance(digits: &mut [usize], lower: &[Vec<SectionRef>]) -> bool {
    for (d, secs) in digits.iter_mut().zip(lower) {
        if *d < secs.len() {
            *d += 1;
            return true;
        }
        *d = 0;
    }
    false
}

/// Depth-first over orders of `picked`, skipping member sets already known
/// to be dead ends.
fn admissible_order(ts: &TaskSet, i: usize, picked: &[SectionRef]) -> Option<Vec<SectionRef>> {
    let mut resources = HashSet::new();
    if !picked.iter().all(|&z| resources.insert(ts.section(z).resource)) {
        return None;
    }
    fn go(
        ts: &TaskSet,
        i: usize,
        picked: &[SectionRef],
        used: u32,
        order: &mut Vec<SectionRef>,
        dead: &mut HashSet<u32>,
    ) -> bool {
        if order.len() == picked.len() {
            return true;
        }
        if dead.contains(&used) {
            return false;
        }
        for (k, &z) in picked.iter().enumerate() {
            if used & (1 << k) == 0 && extension_verdict(ts, i, order, z).admissible {
                order.push(z);
                if go(ts, i, picked, used | (1 << k), order, dead) {
                    return true;
                }
                order.pop();
            }
        }
        dead.insert(used);
        false
    }
    let mut order = Vec::with_capacity(picked.len());
    go(ts, i, picked, 0, &mut order, &mut HashSet::new()).then_some(order)
}
