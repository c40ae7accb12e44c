//! Task sets: jobs in priority order, each with a properly nested sequence of
//! critical sections.
//!
//! Jobs are indexed from 1 and a smaller index means a higher priority. The
//! `p`-th critical section of job `j` is the segment between its `p`-th wait
//! operation and the matching signal, so positions follow the order in which
//! sections are entered (outer before inner, left to right).

mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::time::Time;

pub use parse::{parse_taskset, serialize_taskset};

/// A shared resource `R_k`. Each resource is guarded by its own binary
/// semaphore, so the resource id doubles as the semaphore id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ResourceId(pub u32);

impl fmt::Display for ResourceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "R{}", self.0)
    }
}

impl Serialize for ResourceId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

pub type ResourceSet = BTreeSet<ResourceId>;
pub type JobSet = BTreeSet<usize>;

/// Identity of a critical section: `z_{job,position}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectionRef {
    pub job: usize,
    pub position: usize,
}

impl SectionRef {
    pub const fn new(job: usize, position: usize) -> Self {
        SectionRef { job, position }
    }
}

/// Shorthand for `SectionRef::new(job, position)`.
pub const fn z(job: usize, position: usize) -> SectionRef {
    SectionRef::new(job, position)
}

impl fmt::Display for SectionRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z{},{}", self.job, self.position)
    }
}

impl Serialize for SectionRef {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl FromStr for SectionRef {
    type Err = Error;

    /// Accepts `z4,1`, `z_{4,1}` and `4,1`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("`{s}` is not a section reference like z4,1"));
        let body = s.trim();
        let body = body.strip_prefix('z').unwrap_or(body);
        let body = body.strip_prefix('_').unwrap_or(body);
        let body = body
            .strip_prefix('{')
            .and_then(|b| b.strip_suffix('}'))
            .unwrap_or(body);
        let (job, pos) = body.split_once(',').ok_or_else(bad)?;
        let job: usize = job.trim().parse().map_err(|_| bad())?;
        let position: usize = pos.trim().parse().map_err(|_| bad())?;
        if job == 0 || position == 0 {
            return Err(bad());
        }
        Ok(SectionRef { job, position })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CriticalSection {
    pub job: usize,
    pub position: usize,
    pub resource: ResourceId,
    pub duration: Time,
    /// Position of the immediately enclosing section of the same job.
    pub parent: Option<usize>,
    /// Position of the last section nested (at any depth) inside this one;
    /// equals `position` for a section without nested sections.
    last_nested: usize,
}

impl CriticalSection {
    pub fn id(&self) -> SectionRef {
        SectionRef::new(self.job, self.position)
    }

    /// Positions of the sections strictly contained in this one.
    pub fn nested_positions(&self) -> std::ops::RangeInclusive<usize> {
        self.position + 1..=self.last_nested
    }

    pub fn has_nested(&self) -> bool {
        self.last_nested > self.position
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Job {
    pub index: usize,
    pub sections: Vec<CriticalSection>,
}

impl Job {
    pub fn section(&self, position: usize) -> Option<&CriticalSection> {
        position.checked_sub(1).and_then(|p| self.sections.get(p))
    }

    pub fn uses(&self, resource: ResourceId) -> bool {
        self.sections.iter().any(|s| s.resource == resource)
    }

    pub fn resources(&self) -> ResourceSet {
        self.sections.iter().map(|s| s.resource).collect()
    }
}

/// One bracket group `[R<k>: <duration> <nested>*]`, used to build task sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bracket {
    pub resource: ResourceId,
    pub duration: Time,
    pub nested: Vec<Bracket>,
}

impl Bracket {
    pub fn new(resource: u32, duration: impl Into<Time>) -> Self {
        Bracket {
            resource: ResourceId(resource),
            duration: duration.into(),
            nested: Vec::new(),
        }
    }

    pub fn with(mut self, nested: Bracket) -> Self {
        self.nested.push(nested);
        self
    }
}

/// An application: jobs `J_1..J_n` listed by descending priority. Immutable
/// once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskSet {
    jobs: Vec<Job>,
    resources: ResourceSet,
}

impl TaskSet {
    /// Builds a task set from one list of top-level brackets per job, the
    /// first list being `J_1`.
    pub fn from_brackets(jobs: Vec<Vec<Bracket>>) -> Result<Self> {
        if jobs.is_empty() {
            return Err(Error::EmptyTaskSet);
        }
        let mut built = Vec::with_capacity(jobs.len());
        let mut resources = ResourceSet::new();
        for (idx, brackets) in jobs.iter().enumerate() {
            let index = idx + 1;
            let mut sections = Vec::new();
            let mut held = Vec::new();
            for b in brackets {
                flatten(index, b, None, &mut held, &mut sections)?;
            }
            resources.extend(sections.iter().map(|s| s.resource));
            built.push(Job { index, sections });
        }
        Ok(TaskSet {
            jobs: built,
            resources,
        })
    }

    /// Number of jobs `n`.
    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    /// Job `J_j` (1-based). Panics when out of range.
    pub fn job(&self, j: usize) -> &Job {
        &self.jobs[j - 1]
    }

    pub fn get_job(&self, j: usize) -> Option<&Job> {
        j.checked_sub(1).and_then(|k| self.jobs.get(k))
    }

    /// `β_j`, the sequence of sections of `J_j`.
    pub fn sections(&self, j: usize) -> &[CriticalSection] {
        &self.job(j).sections
    }

    /// All resources used by some job.
    pub fn resources(&self) -> &ResourceSet {
        &self.resources
    }

    /// Section lookup. Panics when the reference does not exist; use
    /// [`TaskSet::get`] for untrusted references.
    pub fn section(&self, z: SectionRef) -> &CriticalSection {
        self.get(z)
            .unwrap_or_else(|| panic!("section {z} does not exist"))
    }

    pub fn get(&self, z: SectionRef) -> Option<&CriticalSection> {
        self.get_job(z.job).and_then(|j| j.section(z.position))
    }

    pub fn check_section(&self, z: SectionRef) -> Result<&CriticalSection> {
        self.get(z).ok_or(Error::NoSuchSection(z))
    }

    pub fn check_job(&self, j: usize) -> Result<&Job> {
        self.get_job(j).ok_or(Error::NoSuchJob {
            job: j,
            jobs: self.len(),
        })
    }

    /// Strict containment `b ⊂ a`: same job and `b` nested inside `a`.
    pub fn contains(&self, a: SectionRef, b: SectionRef) -> bool {
        if a.job != b.job || a == b {
            return false;
        }
        let outer = self.section(a);
        outer.nested_positions().contains(&b.position)
    }

    /// Enclosing sections of `z`, innermost first.
    pub fn ancestors(&self, z: SectionRef) -> Ancestors<'_> {
        Ancestors {
            job: self.job(z.job),
            next: self.section(z).parent,
        }
    }

    /// `z` followed by its enclosing sections (`z_{j,s} ⊇ z`).
    pub fn enclosing_or_self(&self, z: SectionRef) -> impl Iterator<Item = &CriticalSection> + '_ {
        std::iter::once(self.section(z)).chain(self.ancestors(z))
    }

    /// Sections strictly nested inside `z`, in position order.
    pub fn nested(&self, z: SectionRef) -> &[CriticalSection] {
        let s = self.section(z);
        &self.sections(z.job)[s.position..s.last_nested]
    }

    /// Jobs that use `resource`, ascending.
    pub fn users_of(&self, resource: ResourceId) -> impl Iterator<Item = usize> + '_ {
        self.jobs
            .iter()
            .filter(move |j| j.uses(resource))
            .map(|j| j.index)
    }

    pub fn all_sections(&self) -> impl Iterator<Item = &CriticalSection> + '_ {
        self.jobs.iter().flat_map(|j| j.sections.iter())
    }

    /// Sections with a zero duration; legal but almost always a typo.
    pub fn zero_duration_sections(&self) -> Vec<SectionRef> {
        self.all_sections()
            .filter(|s| s.duration.is_zero())
            .map(CriticalSection::id)
            .collect()
    }

    /// Rebuilds the bracket tree of job `j`.
    pub fn brackets(&self, j: usize) -> Vec<Bracket> {
        let sections = self.sections(j);
        let mut roots = Vec::new();
        let mut p = 1;
        while p <= sections.len() {
            let (b, next) = rebuild(sections, p);
            roots.push(b);
            p = next;
        }
        roots
    }
}

fn rebuild(sections: &[CriticalSection], p: usize) -> (Bracket, usize) {
    let s = &sections[p - 1];
    let mut b = Bracket {
        resource: s.resource,
        duration: s.duration,
        nested: Vec::new(),
    };
    let mut q = p + 1;
    while q <= s.last_nested {
        let (child, next) = rebuild(sections, q);
        b.nested.push(child);
        q = next;
    }
    (b, s.last_nested + 1)
}

fn flatten(
    job: usize,
    b: &Bracket,
    parent: Option<usize>,
    held: &mut Vec<ResourceId>,
    out: &mut Vec<CriticalSection>,
) -> Result<()> {
    let position = out.len() + 1;
    if held.contains(&b.resource) {
        return Err(Error::RelockedResource {
            section: SectionRef::new(job, position),
            resource: b.resource,
        });
    }
    out.push(CriticalSection {
        job,
        position,
        resource: b.resource,
        duration: b.duration,
        parent,
        last_nested: position,
    });
    held.push(b.resource);
    for inner in &b.nested {
        flatten(job, inner, Some(position), held, out)?;
    }
    held.pop();
    let last = out.len();
    out[position - 1].last_nested = last;
    Ok(())
}

pub struct Ancestors<'a> {
    job: &'a Job,
    next: Option<usize>,
}

impl<'a> Iterator for Ancestors<'a> {
    type Item = &'a CriticalSection;

    fn next(&mut self) -> Option<Self::Item> {
        let p = self.next?;
        let s = &self.job.sections[p - 1];
        self.next = s.parent;
        Some(s)
    }
}

/// An ordered sequence of critical sections.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct ZChain(Vec<SectionRef>);

impl ZChain {
    pub fn new() -> Self {
        ZChain(Vec::new())
    }

    pub fn sections(&self) -> &[SectionRef] {
        &self.0
    }

    pub fn push(&mut self, z: SectionRef) {
        self.0.push(z);
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, SectionRef> {
        self.0.iter()
    }

    pub fn contains(&self, z: SectionRef) -> bool {
        self.0.contains(&z)
    }

    pub fn duration(&self, ts: &TaskSet) -> Time {
        chain_duration(ts, &self.0)
    }

    /// The members as a set, ignoring order.
    pub fn as_set(&self) -> BTreeSet<SectionRef> {
        self.0.iter().copied().collect()
    }

    /// Parses a whitespace- or comma-separated list such as `"z4,1 z3,2"`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            let tok = tok.trim_matches(|c| matches!(c, '<' | '>' | '⟨' | '⟩' | ';'));
            if tok.is_empty() {
                continue;
            }
            out.push(tok.trim_end_matches(',').parse()?);
        }
        Ok(ZChain(out))
    }
}

impl From<Vec<SectionRef>> for ZChain {
    fn from(v: Vec<SectionRef>) -> Self {
        ZChain(v)
    }
}

impl FromIterator<SectionRef> for ZChain {
    fn from_iter<I: IntoIterator<Item = SectionRef>>(iter: I) -> Self {
        ZChain(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a ZChain {
    type Item = &'a SectionRef;
    type IntoIter = std::slice::Iter<'a, SectionRef>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

impl fmt::Display for ZChain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (k, z) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{z}")?;
        }
        f.write_str(">")
    }
}

/// `d(Z)`: the sum of the durations of the chain's elements.
pub fn chain_duration(ts: &TaskSet, chain: &[SectionRef]) -> Time {
    chain.iter().map(|&z| ts.section(z).duration).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_jobs() -> TaskSet {
        parse_taskset("J1: [R2: 3 [R1: 1]]\nJ2: [R1: 3] [R1: 4]").unwrap()
    }

    #[test]
    fn positions_follow_wait_order() {
        let ts = two_jobs();
        let j1 = ts.sections(1);
        assert_eq!(j1.len(), 2);
        assert_eq!(j1[0].resource, ResourceId(2));
        assert_eq!(j1[0].duration, Time::from_units(3));
        assert_eq!(j1[1].resource, ResourceId(1));
        assert_eq!(j1[1].parent, Some(1));
        assert_eq!(ts.sections(2)[1].duration, Time::from_units(4));
        assert_eq!(ts.resources().len(), 2);
    }

    #[test]
    fn containment_is_strict_and_per_job() {
        let ts = two_jobs();
        assert!(ts.contains(z(1, 1), z(1, 2)));
        assert!(!ts.contains(z(1, 2), z(1, 1)));
        assert!(!ts.contains(z(2, 1), z(2, 2)));
        assert!(!ts.contains(z(1, 1), z(1, 1)));
        assert!(!ts.contains(z(1, 1), z(2, 1)));
    }

    #[test]
    fn ancestors_innermost_first() {
        let ts = TaskSet::from_brackets(vec![vec![Bracket::new(4, 6)
            .with(Bracket::new(3, 4).with(Bracket::new(2, 2)))]])
        .unwrap();
        let up: Vec<_> = ts.ancestors(z(1, 3)).map(|s| s.position).collect();
        assert_eq!(up, vec![2, 1]);
        assert_eq!(ts.nested(z(1, 1)).len(), 2);
        assert!(ts.nested(z(1, 3)).is_empty());
    }

    #[test]
    fn relocking_an_enclosing_resource_fails() {
        let err = TaskSet::from_brackets(vec![vec![
            Bracket::new(1, 2).with(Bracket::new(2, 1).with(Bracket::new(1, 1))),
        ]])
        .unwrap_err();
        assert_eq!(
            err,
            Error::RelockedResource {
                section: z(1, 3),
                resource: ResourceId(1)
            }
        );
    }

    #[test]
    fn chain_durations() {
        let ts = two_jobs();
        assert_eq!(chain_duration(&ts, &[]), Time::ZERO);
        assert_eq!(chain_duration(&ts, &[z(1, 1), z(2, 2)]), Time::from_units(7));
    }

    #[test]
    fn section_refs_parse() {
        assert_eq!("z4,1".parse::<SectionRef>().unwrap(), z(4, 1));
        assert_eq!("z_{10,2}".parse::<SectionRef>().unwrap(), z(10, 2));
        assert!("z0,1".parse::<SectionRef>().is_err());
        assert!("x".parse::<SectionRef>().is_err());
        let c = ZChain::parse("z4,1 z3,2, z2,1").unwrap();
        assert_eq!(c.sections(), &[z(4, 1), z(3, 2), z(2, 1)]);
        assert_eq!(c.to_string(), "<z4,1 z3,2 z2,1>");
    }

    #[test]
    fn brackets_round_trip() {
        let ts = two_jobs();
        let rebuilt = TaskSet::from_brackets(vec![ts.brackets(1), ts.brackets(2)]).unwrap();
        assert_eq!(rebuilt, ts);
    }
}
