//! Exact blocking time by A* over admissible chains.
//!
//! Nodes are chains; a node's gain is the chain's duration and its heuristic
//! is the assignment bound over the jobs and resources the chain has not
//! used yet. The bound never underestimates, so the first leaf popped from
//! the fringe carries the maximum.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashSet};

use serde::Serialize;

use crate::admissibility::extension_verdict;
use crate::bound::hungarian_bound;
use crate::deadlock::{check_deadlock_free, DeadlockVerdict};
use crate::error::{Error, Result};
use crate::relevance::{
    direct_blocking_jobs, direct_blocking_resources, induced_unchecked, maximal_sequence,
    relevant_jobs, relevant_resources,
};
use crate::taskset::{JobSet, ResourceSet, SectionRef, TaskSet, ZChain};
use crate::time::Time;

/// How the search avoids generating the same chain twice.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DuplicateGuard {
    /// Skip an extension whose section set is contained in the set of some
    /// fringe node.
    #[default]
    SectionSubset,
    /// Skip an extension whose chain is a subsequence of some fringe node's
    /// chain.
    Subsequence,
    /// Skip an extension whose section set equals that of a fringe node or
    /// of a node already expanded.
    SameSet,
}

#[derive(Clone, Debug, Default)]
pub struct SearchOptions {
    pub guard: DuplicateGuard,
    pub trace: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchNode {
    pub id: usize,
    pub chain: ZChain,
    pub chain_resources: ResourceSet,
    pub chain_jobs: JobSet,
    pub remaining_resources: ResourceSet,
    pub remaining_jobs: JobSet,
    pub induced: ResourceSet,
    pub candidate_jobs: JobSet,
    pub gain: Time,
    pub heuristic: Time,
    /// Insertion round into the fringe; higher is newer.
    #[serde(skip)]
    batch: usize,
    /// Position among the nodes inserted in the same round.
    #[serde(skip)]
    sibling: usize,
    #[serde(skip)]
    members: BTreeSet<SectionRef>,
}

impl SearchNode {
    /// Estimated gain `g + h`.
    pub fn estimate(&self) -> Time {
        self.gain + self.heuristic
    }

    pub fn is_leaf(&self) -> bool {
        self.heuristic.is_zero()
    }
}

/// Fringe entry: highest estimate first, then leaves, then the newest
/// insertion round, then earlier siblings.
struct Queued(SearchNode);

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        a.estimate()
            .cmp(&b.estimate())
            .then(a.is_leaf().cmp(&b.is_leaf()))
            .then(a.batch.cmp(&b.batch))
            .then(b.sibling.cmp(&a.sibling))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Queued {}

/// A step of the search, for tracing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "kebab-case")]
pub enum TraceEvent {
    Expand {
        node: usize,
        chain: ZChain,
        estimate: Time,
        children: Vec<TraceChild>,
    },
    /// The node had no admissible extension and went back as a leaf.
    MarkLeaf {
        node: usize,
        chain: ZChain,
        estimate: Time,
    },
    Done {
        node: usize,
        chain: ZChain,
        gain: Time,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TraceChild {
    pub node: usize,
    pub section: SectionRef,
    pub estimate: Time,
    pub leaf: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchResult {
    pub job: usize,
    pub blocking_time: Time,
    pub witness: ZChain,
    /// Heuristic of the root, i.e. the assignment bound.
    pub initial_bound: Time,
    pub nodes_generated: usize,
    pub nodes_expanded: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEvent>,
}

pub struct Search<'a> {
    ts: &'a TaskSet,
    job: usize,
    relevant_resources: ResourceSet,
    relevant_jobs: JobSet,
    options: SearchOptions,
    next_id: usize,
}

impl<'a> Search<'a> {
    pub fn new(ts: &'a TaskSet, i: usize, options: SearchOptions) -> Result<Self> {
        ts.check_job(i)?;
        Ok(Search {
            ts,
            job: i,
            relevant_resources: relevant_resources(ts, i),
            relevant_jobs: relevant_jobs(ts, i),
            options,
            next_id: 0,
        })
    }

    fn fresh_id(&mut self) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    pub fn root(&mut self) -> SearchNode {
        let heuristic =
            hungarian_bound(self.ts, &self.relevant_jobs, &self.relevant_resources).value;
        SearchNode {
            id: self.fresh_id(),
            chain: ZChain::new(),
            chain_resources: ResourceSet::new(),
            chain_jobs: JobSet::new(),
            remaining_resources: self.relevant_resources.clone(),
            remaining_jobs: self.relevant_jobs.clone(),
            induced: direct_blocking_resources(self.ts, self.job),
            candidate_jobs: direct_blocking_jobs(self.ts, self.job),
            gain: Time::ZERO,
            heuristic,
            batch: 0,
            sibling: 0,
            members: BTreeSet::new(),
        }
    }

    /// The node reached by extending the root with `chain` in order, without
    /// checking admissibility.
    pub fn node_for_chain(&mut self, chain: &[SectionRef]) -> Result<SearchNode> {
        for &z in chain {
            self.ts.check_section(z)?;
        }
        let mut node = self.root();
        for &z in chain {
            node = self.child(&node, z);
        }
        Ok(node)
    }

    fn child(&mut self, n: &SearchNode, z: SectionRef) -> SearchNode {
        let ts = self.ts;
        let sec = ts.section(z);
        let mut chain = n.chain.clone();
        chain.push(z);
        let mut members = n.members.clone();
        members.insert(z);
        let mut chain_resources = n.chain_resources.clone();
        chain_resources.insert(sec.resource);
        let mut chain_jobs = n.chain_jobs.clone();
        chain_jobs.insert(z.job);
        let mut remaining_resources = n.remaining_resources.clone();
        remaining_resources.remove(&sec.resource);
        let mut remaining_jobs = n.remaining_jobs.clone();
        remaining_jobs.remove(&z.job);
        let mut induced = n.induced.clone();
        induced.extend(induced_unchecked(ts, self.job, z, &n.induced));
        // Jobs left with a section that is maximal in the new scope and not
        // already covered by the chain's resources.
        let candidate_jobs: JobSet = remaining_jobs
            .iter()
            .copied()
            .filter(|&k| {
                let held = maximal_sequence(ts, k, &chain_resources);
                maximal_sequence(ts, k, &induced)
                    .iter()
                    .any(|s| !held.contains(s))
            })
            .collect();
        let heuristic = if candidate_jobs.is_empty() {
            Time::ZERO
        } else {
            hungarian_bound(ts, &remaining_jobs, &remaining_resources).value
        };
        SearchNode {
            id: self.fresh_id(),
            chain,
            chain_resources,
            chain_jobs,
            remaining_resources,
            remaining_jobs,
            induced,
            candidate_jobs,
            gain: n.gain + sec.duration,
            heuristic,
            batch: 0,
            sibling: 0,
            members,
        }
    }

    /// Admissible extensions of `n` that no node in `fringe` (or, for
    /// [`DuplicateGuard::SameSet`], in `closed`) already covers.
    pub fn successors<'n>(
        &self,
        n: &SearchNode,
        fringe: impl IntoIterator<Item = &'n SearchNode> + Clone,
        closed: &HashSet<BTreeSet<SectionRef>>,
    ) -> Vec<SectionRef> {
        let ts = self.ts;
        let mut out = Vec::new();
        for &j in &n.candidate_jobs {
            let held = maximal_sequence(ts, j, &n.chain_resources);
            for z in maximal_sequence(ts, j, &n.induced) {
                if held.contains(&z) || self.is_duplicate(n, z, fringe.clone(), closed) {
                    continue;
                }
                if extension_verdict(ts, self.job, n.chain.sections(), z).admissible {
                    out.push(z);
                }
            }
        }
        out
    }

    fn is_duplicate<'n>(
        &self,
        n: &SearchNode,
        z: SectionRef,
        fringe: impl IntoIterator<Item = &'n SearchNode>,
        closed: &HashSet<BTreeSet<SectionRef>>,
    ) -> bool {
        match self.options.guard {
            DuplicateGuard::SectionSubset => fringe.into_iter().any(|m| {
                m.members.contains(&z) && n.members.iter().all(|s| m.members.contains(s))
            }),
            DuplicateGuard::Subsequence => {
                let mut ext = n.chain.sections().to_vec();
                ext.push(z);
                fringe
                    .into_iter()
                    .any(|m| is_subsequence(&ext, m.chain.sections()))
            }
            DuplicateGuard::SameSet => {
                let mut set = n.members.clone();
                set.insert(z);
                closed.contains(&set) || fringe.into_iter().any(|m| m.members == set)
            }
        }
    }

    /// Successor nodes of `n`, or `n` itself marked as a leaf when it has
    /// none. Stops early at a leaf child whose gain equals `n`'s estimate.
    pub fn expand<'n>(
        &mut self,
        mut n: SearchNode,
        fringe: impl IntoIterator<Item = &'n SearchNode> + Clone,
        closed: &HashSet<BTreeSet<SectionRef>>,
    ) -> Vec<SearchNode> {
        let mut out = Vec::new();
        for z in self.successors(&n, fringe, closed) {
            let s = self.child(&n, z);
            let stop = s.is_leaf() && s.estimate() == n.estimate();
            out.push(s);
            if stop {
                return out;
            }
        }
        if out.is_empty() {
            n.heuristic = Time::ZERO;
            out.push(n);
        }
        out
    }

    pub fn run(mut self) -> SearchResult {
        let root = self.root();
        let initial_bound = root.heuristic;
        let mut fringe = BinaryHeap::from([Queued(root)]);
        let mut closed = HashSet::new();
        let mut trace = Vec::new();
        let mut expanded = 0;
        let mut batch = 0;
        loop {
            let Queued(n) = fringe.pop().expect("the fringe always holds a leaf before emptying");
            if n.is_leaf() {
                if self.options.trace {
                    trace.push(TraceEvent::Done {
                        node: n.id,
                        chain: n.chain.clone(),
                        gain: n.gain,
                    });
                }
                return SearchResult {
                    job: self.job,
                    blocking_time: n.gain,
                    witness: n.chain,
                    initial_bound,
                    nodes_generated: self.next_id,
                    nodes_expanded: expanded,
                    trace,
                };
            }
            expanded += 1;
            if self.options.guard == DuplicateGuard::SameSet {
                closed.insert(n.members.clone());
            }
            let (id, chain, estimate) = (n.id, n.chain.clone(), n.estimate());
            let children = self.expand(n, fringe.iter().map(|q| &q.0), &closed);
            batch += 1;
            if self.options.trace {
                trace.push(if children.len() == 1 && children[0].id == id {
                    TraceEvent::MarkLeaf {
                        node: id,
                        chain,
                        estimate: children[0].estimate(),
                    }
                } else {
                    TraceEvent::Expand {
                        node: id,
                        chain,
                        estimate,
                        children: children
                            .iter()
                            .map(|c| TraceChild {
                                node: c.id,
                                section: *c.chain.sections().last().expect("child extends"),
                                estimate: c.estimate(),
                                leaf: c.is_leaf(),
                            })
                            .collect(),
                    }
                });
            }
            for (k, mut c) in children.into_iter().enumerate() {
                c.batch = batch;
                c.sibling = k;
                fringe.push(Queued(c));
            }
        }
    }
}

fn is_subsequence(needle: &[SectionRef], hay: &[SectionRef]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|z| it.any(|h| h == z))
}

/// `B_i` with a witness chain.
pub fn blocking_time(ts: &TaskSet, i: usize) -> Result<SearchResult> {
    blocking_time_with(ts, i, &SearchOptions::default())
}

pub fn blocking_time_with(ts: &TaskSet, i: usize, options: &SearchOptions) -> Result<SearchResult> {
    if let DeadlockVerdict::Cyclic { cycle } = check_deadlock_free(ts) {
        return Err(Error::Cyclic(cycle));
    }
    Ok(Search::new(ts, i, options.clone())?.run())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::taskset::z;

    fn t(v: u32) -> Time {
        Time::from_units(v)
    }

    fn traced(guard: DuplicateGuard) -> SearchOptions {
        SearchOptions { guard, trace: true }
    }

    #[test]
    fn root_of_larger_fixture() {
        let f = fixtures::ts_f();
        let mut s = Search::new(&f, 1, SearchOptions::default()).unwrap();
        let root = s.root();
        assert_eq!(root.heuristic, t(33));
        assert_eq!(root.candidate_jobs, [2, 3, 4].into());
        let succ = s.successors(&root, [], &HashSet::new());
        assert_eq!(succ, vec![z(2, 1), z(3, 3), z(4, 4)]);
        let kids = s.expand(root, [], &HashSet::new());
        let f: Vec<Time> = kids.iter().map(SearchNode::estimate).collect();
        assert_eq!(f, vec![t(26), t(10), t(33)]);
        assert!(kids[1].is_leaf());
    }

    #[test]
    fn intermediate_nodes_match_hand_trace() {
        let f = fixtures::ts_f();
        let mut s = Search::new(&f, 1, SearchOptions::default()).unwrap();
        let n1 = s.node_for_chain(&[z(2, 1)]).unwrap();
        assert_eq!(n1.induced.len(), 3);
        assert_eq!(n1.candidate_jobs, [4, 5].into());
        assert_eq!(n1.heuristic, t(20));
        assert_eq!(s.successors(&n1, [], &HashSet::new()), vec![z(4, 1), z(5, 3)]);

        let n3 = s.node_for_chain(&[z(4, 4)]).unwrap();
        assert_eq!(n3.heuristic, t(21));
        assert!(s.successors(&n3, [], &HashSet::new()).is_empty());
        let leaf = s.expand(n3, [], &HashSet::new());
        assert_eq!(leaf.len(), 1);
        assert_eq!(leaf[0].estimate(), t(12));

        let n4 = s.node_for_chain(&[z(2, 1), z(4, 1)]).unwrap();
        assert_eq!((n4.gain, n4.heuristic), (t(9), t(17)));
        let kids = s.expand(n4, [], &HashSet::new());
        let f: Vec<Time> = kids.iter().map(SearchNode::estimate).collect();
        assert_eq!(f, vec![t(26), t(13), t(26), t(16)]);

        let n6 = s.node_for_chain(&[z(2, 1), z(4, 1), z(3, 1)]).unwrap();
        assert_eq!(s.successors(&n6, [], &HashSet::new()), vec![z(5, 3)]);
    }

    #[test]
    fn larger_fixture_exact() {
        for guard in [
            DuplicateGuard::SameSet,
            DuplicateGuard::SectionSubset,
            DuplicateGuard::Subsequence,
        ] {
            let r = blocking_time_with(&fixtures::ts_f(), 1, &traced(guard)).unwrap();
            assert_eq!(r.blocking_time, t(26));
            assert_eq!(r.witness.sections(), &[z(2, 1), z(4, 1), z(3, 1), z(5, 3)]);
            assert_eq!(r.initial_bound, t(33));
            assert_eq!(r.nodes_generated, 11, "{guard:?}");
            assert_eq!(r.nodes_expanded, 5, "{guard:?}");
            for e in &r.trace {
                if let TraceEvent::Expand { estimate, .. } = e {
                    assert!(r.blocking_time <= *estimate);
                }
            }
        }
    }

    #[test]
    fn nested_fixture_exact() {
        let r = blocking_time(&fixtures::ts_a(), 1).unwrap();
        assert_eq!(r.blocking_time, t(11));
        assert_eq!(r.witness.duration(&fixtures::ts_a()), t(11));
    }

    #[test]
    fn lowest_priority_job_is_never_blocked() {
        let r = blocking_time(&fixtures::ts_f(), 5).unwrap();
        assert_eq!(r.blocking_time, Time::ZERO);
        assert!(r.witness.is_empty());
    }

    #[test]
    fn cyclic_sets_are_refused() {
        assert!(matches!(blocking_time(&fixtures::cross(), 1), Err(Error::Cyclic(_))));
    }

    #[test]
    fn unknown_job() {
        assert!(matches!(
            blocking_time(&fixtures::ts_a(), 9),
            Err(Error::NoSuchJob { .. })
        ));
    }

    #[test]
    fn fringe_order() {
        let f = fixtures::ts_f();
        let mut s = Search::new(&f, 1, SearchOptions::default()).unwrap();
        let mut a = s.node_for_chain(&[z(2, 1)]).unwrap();
        let mut b = s.node_for_chain(&[z(5, 3)]).unwrap();
        a.heuristic = t(5);
        b.gain = a.gain;
        b.heuristic = t(5);
        a.batch = 1;
        b.batch = 1;
        a.sibling = 0;
        b.sibling = 1;
        assert!(Queued(a.clone()) > Queued(b.clone()));
        b.batch = 2;
        assert!(Queued(b.clone()) > Queued(a.clone()));
        a.heuristic = Time::ZERO;
        a.gain = b.estimate();
        assert!(Queued(a) > Queued(b));
    }

    #[test]
    fn subsequences() {
        let hay = [z(2, 1), z(4, 1), z(3, 1)];
        assert!(is_subsequence(&[z(2, 1), z(3, 1)], &hay));
        assert!(!is_subsequence(&[z(3, 1), z(2, 1)], &hay));
        assert!(is_subsequence(&[], &hay));
    }
}
