//! When a chain of critical sections can block a job all at once.
//!
//! A chain is built one section at a time. Each new section must come from a
//! new job (NBJ), hold a new resource (NBR), be maximal in the scope induced
//! by the chain so far (LSM), and neither obstruct a higher-priority member
//! (FHO) nor be obstructed by a lower-priority one (FLO).

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::Serialize;

use crate::bound::{AssignmentSet, BlockingMatrix};
use crate::error::{Error, Result};
use crate::relevance::{chain_induced_set, direct_blocking_resources};
use crate::taskset::{ResourceSet, SectionRef, TaskSet, ZChain};
use crate::time::Time;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Condition {
    #[serde(rename = "NBJ")]
    NewJob,
    #[serde(rename = "NBR")]
    NewResource,
    #[serde(rename = "LSM")]
    ScopeMaximal,
    #[serde(rename = "FHO")]
    HigherObstruction,
    #[serde(rename = "FLO")]
    LowerObstruction,
    #[serde(rename = "induction-compatibility")]
    InductionCompatibility,
    #[serde(rename = "duration-mismatch")]
    DurationMismatch,
}

impl Condition {
    pub fn tag(self) -> &'static str {
        match self {
            Condition::NewJob => "NBJ",
            Condition::NewResource => "NBR",
            Condition::ScopeMaximal => "LSM",
            Condition::HigherObstruction => "FHO",
            Condition::LowerObstruction => "FLO",
            Condition::InductionCompatibility => "induction-compatibility",
            Condition::DurationMismatch => "duration-mismatch",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_condition: Option<Condition>,
    /// Two sections in conflict, when the failure has a natural pair.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<(SectionRef, SectionRef)>,
    /// Index in the chain of the first offending section.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub position: Option<usize>,
}

impl AdmissibilityVerdict {
    pub fn ok() -> Self {
        AdmissibilityVerdict {
            admissible: true,
            failed_condition: None,
            witness: None,
            position: None,
        }
    }

    pub fn fail(condition: Condition, witness: Option<(SectionRef, SectionRef)>) -> Self {
        AdmissibilityVerdict {
            admissible: false,
            failed_condition: Some(condition),
            witness,
            position: None,
        }
    }

    fn at(mut self, position: usize) -> Self {
        self.position = Some(position);
        self
    }
}

impl fmt::Display for AdmissibilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.admissible {
            return f.write_str("admissible");
        }
        write!(f, "inadmissible")?;
        if let Some(c) = self.failed_condition {
            write!(f, ": {c}")?;
        }
        if let Some(p) = self.position {
            write!(f, " at position {}", p + 1)?;
        }
        if let Some((a, b)) = self.witness {
            write!(f, " ({a} vs {b})")?;
        }
        Ok(())
    }
}

fn check_distinct(ts: &TaskSet, chain: &[SectionRef]) -> Result<()> {
    let mut jobs = BTreeSet::new();
    let mut resources = BTreeSet::new();
    for &z in chain {
        let s = ts.check_section(z)?;
        if !jobs.insert(z.job) || !resources.insert(s.resource) {
            return Err(Error::Precondition(format!(
                "chain members must have distinct jobs and resources ({z} repeats one)"
            )));
        }
    }
    Ok(())
}

/// Members of `chain` that are induction compatible: their resource directly
/// blocks `J_i`, or it is used by a section nested in another compatible
/// member.
pub fn induction_compatible_members(ts: &TaskSet, i: usize, chain: &[SectionRef]) -> BTreeSet<SectionRef> {
    let direct = direct_blocking_resources(ts, i);
    let mut compatible: BTreeSet<SectionRef> = chain
        .iter()
        .copied()
        .filter(|&z| direct.contains(&ts.section(z).resource))
        .collect();
    loop {
        let grown: Vec<SectionRef> = chain
            .iter()
            .copied()
            .filter(|z| !compatible.contains(z))
            .filter(|&z| {
                let r = ts.section(z).resource;
                compatible
                    .iter()
                    .any(|&c| c.job != z.job && ts.nested(c).iter().any(|s| s.resource == r))
            })
            .collect();
        if grown.is_empty() {
            return compatible;
        }
        compatible.extend(grown);
    }
}

/// Whether `z` is induction compatible within `chain ∪ {z}`.
pub fn is_induction_compatible(ts: &TaskSet, i: usize, chain: &[SectionRef], z: SectionRef) -> Result<bool> {
    let mut all: Vec<SectionRef> = chain.iter().copied().filter(|&c| c != z).collect();
    all.push(z);
    check_distinct(ts, &all)?;
    Ok(induction_compatible_members(ts, i, &all).contains(&z))
}

/// Checks `z` against the conditions in order NBJ, NBR, LSM, FHO, FLO. `chain`
/// must itself be admissible.
pub fn is_admissible_extension(
    ts: &TaskSet,
    i: usize,
    chain: &[SectionRef],
    z: SectionRef,
) -> Result<AdmissibilityVerdict> {
    ts.check_section(z)?;
    let prefix = is_admissible_chain(ts, i, chain)?;
    if !prefix.admissible {
        return Err(Error::Precondition(format!(
            "the chain being extended is not admissible ({prefix})"
        )));
    }
    Ok(extension_verdict(ts, i, chain, z))
}

/// [`is_admissible_extension`] without validating `chain`.
pub(crate) fn extension_verdict(
    ts: &TaskSet,
    i: usize,
    chain: &[SectionRef],
    z: SectionRef,
) -> AdmissibilityVerdict {
    let new = ts.section(z);

    if let Some(&m) = chain.iter().find(|m| m.job == z.job) {
        return AdmissibilityVerdict::fail(Condition::NewJob, Some((m, z)));
    }
    if let Some(&m) = chain.iter().find(|&&m| ts.section(m).resource == new.resource) {
        return AdmissibilityVerdict::fail(Condition::NewResource, Some((m, z)));
    }

    // Only lower-priority jobs block; their sections are the only ones a
    // blocking scope can contain.
    let scope = chain_induced_set(ts, i, chain);
    if z.job <= i || !scope.contains(&new.resource) {
        return AdmissibilityVerdict::fail(Condition::ScopeMaximal, None);
    }
    if let Some(outer) = ts.ancestors(z).find(|a| scope.contains(&a.resource)) {
        return AdmissibilityVerdict::fail(Condition::ScopeMaximal, Some((outer.id(), z)));
    }

    if let Some(w) = higher_obstruction(ts, chain, z) {
        return AdmissibilityVerdict::fail(Condition::HigherObstruction, Some(w));
    }
    if let Some(w) = lower_obstruction(ts, chain, z) {
        return AdmissibilityVerdict::fail(Condition::LowerObstruction, Some(w));
    }
    AdmissibilityVerdict::ok()
}

/// A member `z_{h,r}` of a higher-priority job is preceded by `z_{h,q}` on a
/// resource that `z` holds or is nested in. Returns `(z_{h,q}, z_{j,s})`.
fn higher_obstruction(ts: &TaskSet, chain: &[SectionRef], z: SectionRef) -> Option<(SectionRef, SectionRef)> {
    for &m in chain.iter().filter(|m| m.job < z.job) {
        for held in ts.enclosing_or_self(z) {
            let earlier = &ts.sections(m.job)[..m.position - 1];
            if let Some(q) = earlier.iter().find(|q| q.resource == held.resource) {
                return Some((q.id(), held.id()));
            }
        }
    }
    None
}

/// `z` is preceded by `z_{j,o}` on a resource held by a lower-priority member
/// (directly or through an enclosing section). Returns `(z_{j,o}, z_{l,q})`.
fn lower_obstruction(ts: &TaskSet, chain: &[SectionRef], z: SectionRef) -> Option<(SectionRef, SectionRef)> {
    let earlier = &ts.sections(z.job)[..z.position - 1];
    for &m in chain.iter().filter(|m| m.job > z.job) {
        for held in ts.enclosing_or_self(m) {
            if let Some(o) = earlier.iter().find(|o| o.resource == held.resource) {
                return Some((o.id(), held.id()));
            }
        }
    }
    None
}

/// Checks each prefix extension in the chain's order. Sections of jobs that
/// do not have lower priority than `J_i` fail LSM.
pub fn is_admissible_chain(ts: &TaskSet, i: usize, chain: &[SectionRef]) -> Result<AdmissibilityVerdict> {
    for &z in chain {
        ts.check_section(z)?;
    }
    Ok(chain_verdict(ts, i, chain))
}

pub(crate) fn chain_verdict(ts: &TaskSet, i: usize, chain: &[SectionRef]) -> AdmissibilityVerdict {
    for (k, &z) in chain.iter().enumerate() {
        let v = extension_verdict(ts, i, &chain[..k], z);
        if !v.admissible {
            return v.at(k);
        }
    }
    AdmissibilityVerdict::ok()
}

/// Admissibility of a chain claimed to block `J_i` for `value`.
pub fn verify_witness(ts: &TaskSet, i: usize, chain: &[SectionRef], value: Time) -> Result<AdmissibilityVerdict> {
    let v = is_admissible_chain(ts, i, chain)?;
    if v.admissible && crate::taskset::chain_duration(ts, chain) != value {
        return Ok(AdmissibilityVerdict::fail(Condition::DurationMismatch, None));
    }
    Ok(v)
}

/// Some order of `sections` forming an admissible chain, if any.
///
/// Whether a section extends a chain depends only on the chain's members, so
/// the search remembers member sets that lead nowhere.
pub fn find_admissible_order(ts: &TaskSet, i: usize, sections: &[SectionRef]) -> Result<Option<ZChain>> {
    for &z in sections {
        ts.check_section(z)?;
    }
    if sections.len() > 64 {
        return Err(Error::InvalidParameter(format!(
            "cannot order more than 64 sections (got {})",
            sections.len()
        )));
    }
    let mut dead = HashSet::new();
    let mut order = Vec::with_capacity(sections.len());
    Ok(order_from(ts, i, sections, 0, &mut order, &mut dead).then(|| ZChain::from(order)))
}

fn order_from(
    ts: &TaskSet,
    i: usize,
    sections: &[SectionRef],
    used: u64,
    order: &mut Vec<SectionRef>,
    dead: &mut HashSet<u64>,
) -> bool {
    if order.len() == sections.len() {
        return true;
    }
    if dead.contains(&used) {
        return false;
    }
    for (k, &z) in sections.iter().enumerate() {
        if used & (1 << k) != 0 || !extension_verdict(ts, i, order, z).admissible {
            continue;
        }
        order.push(z);
        if order_from(ts, i, sections, used | (1 << k), order, dead) {
            return true;
        }
        order.pop();
    }
    dead.insert(used);
    false
}

/// Outcome of the polynomial check that the bound is attained.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuickCheck {
    pub admissible: bool,
    /// The chain built from the assignment, in construction order. When
    /// `admissible`, an admissible ordering of it realising the bound.
    pub chain: ZChain,
    pub value: Time,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure: Option<AdmissibilityVerdict>,
}

/// Builds a chain from the assignment pairs, growing the induced scope from
/// `R^i` and taking for each pair the leftmost section of maximal duration,
/// then scans it by ascending priority for lower-priority obstruction.
///
/// Sound but incomplete: `true` means the bound is exact, `false` means
/// nothing.
pub fn quick_admissibility_check(
    ts: &TaskSet,
    i: usize,
    d: &BlockingMatrix,
    hset: &AssignmentSet,
    h: Time,
) -> QuickCheck {
    let mut chain = Vec::new();
    let mut value = Time::ZERO;
    let mut scope: ResourceSet = direct_blocking_resources(ts, i);
    let mut pending: Vec<_> = hset.pairs.clone();
    pending.sort();

    while let Some(k) = pending
        .iter()
        .position(|&(j, r)| scope.contains(&r) && !d.lookup(j, r).is_zero())
    {
        let (j, r) = pending.remove(k);
        let want = d.lookup(j, r);
        let Some(s) = ts
            .sections(j)
            .iter()
            .find(|s| s.resource == r && s.duration == want)
        else {
            break;
        };
        value += want;
        chain.push(s.id());
        scope.extend(ts.nested(s.id()).iter().map(|n| n.resource));
        scope.remove(&r);
    }

    let fail = |chain: Vec<SectionRef>, value, v| QuickCheck {
        admissible: false,
        chain: ZChain::from(chain),
        value,
        failure: Some(v),
    };

    if value < h {
        let stuck = pending.first().map(|&(j, r)| (j, r));
        let witness = stuck.and_then(|(j, r)| {
            ts.sections(j)
                .iter()
                .find(|s| s.resource == r)
                .map(|s| (chain.last().copied().unwrap_or(s.id()), s.id()))
        });
        return fail(
            chain,
            value,
            AdmissibilityVerdict::fail(Condition::InductionCompatibility, witness),
        );
    }

    // Lowest priority first; every member must be reachable while the
    // lower-priority members hold their resources.
    let mut held = ResourceSet::new();
    let mut by_job = chain.clone();
    by_job.sort_by_key(|z| std::cmp::Reverse(z.job));
    for &z in &by_job {
        if let Some(o) = ts.sections(z.job)[..z.position]
            .iter()
            .find(|o| held.contains(&o.resource))
        {
            let holder = by_job
                .iter()
                .filter(|m| m.job > z.job)
                .flat_map(|&m| ts.enclosing_or_self(m))
                .find(|s| s.resource == o.resource)
                .map(|s| s.id())
                .unwrap_or(z);
            return fail(
                chain,
                value,
                AdmissibilityVerdict::fail(Condition::LowerObstruction, Some((o.id(), holder))),
            );
        }
        held.extend(ts.enclosing_or_self(z).map(|s| s.resource));
    }

    // The construction enforces the other conditions only loosely, so the
    // chain is validated in full before the bound is declared exact.
    let ordered = if chain_verdict(ts, i, &chain).admissible {
        Some(ZChain::from(chain.clone()))
    } else {
        find_admissible_order(ts, i, &chain).ok().flatten()
    };
    match ordered {
        Some(witness) => QuickCheck {
            admissible: true,
            chain: witness,
            value,
            failure: None,
        },
        None => {
            let v = chain_verdict(ts, i, &chain);
            fail(chain, value, v)
        }
    }
}
