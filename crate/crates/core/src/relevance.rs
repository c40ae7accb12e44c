//! Which resources and jobs can block a given job.
//!
//! Without nesting, `J_i` can be blocked through the resources shared between
//! some job of priority at least `P_i` and some job of lower priority (the
//! *direct* sets `R^i`, `Γ^i`). Nesting adds transitive inheritance: a
//! lower-priority job holding a resource of `R^i` may wait, inside that
//! section, on further resources held by other lower-priority jobs. Those
//! resources are collected by repeatedly applying the induced-set operator
//! until nothing new appears (`R_N^i`, `Γ_N^i`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::taskset::{JobSet, ResourceId, ResourceSet, SectionRef, TaskSet};

/// `R^i`: resources used both by some job `J_k`, `k <= i`, and some job
/// `J_j`, `j > i`.
pub fn direct_blocking_resources(ts: &TaskSet, i: usize) -> ResourceSet {
    let mut high = ResourceSet::new();
    let mut low = ResourceSet::new();
    for job in ts.jobs() {
        let target = if job.index <= i { &mut high } else { &mut low };
        target.extend(job.sections.iter().map(|s| s.resource));
    }
    high.intersection(&low).copied().collect()
}

/// `Γ^i`: lower-priority jobs using a resource of `R^i`.
pub fn direct_blocking_jobs(ts: &TaskSet, i: usize) -> JobSet {
    jobs_using(ts, i, &direct_blocking_resources(ts, i))
}

fn jobs_using(ts: &TaskSet, i: usize, resources: &ResourceSet) -> JobSet {
    ts.jobs()
        .iter()
        .filter(|j| j.index > i && j.sections.iter().any(|s| resources.contains(&s.resource)))
        .map(|j| j.index)
        .collect()
}

/// A section is maximal with respect to `scope` when its resource is in
/// scope and no enclosing section of the same job uses a resource in scope.
pub fn is_maximal(ts: &TaskSet, z: SectionRef, scope: &ResourceSet) -> bool {
    scope.contains(&ts.section(z).resource)
        && !ts.ancestors(z).any(|a| scope.contains(&a.resource))
}

/// `β_j(scope)`: the maximal sections of `J_j`, in order.
pub fn maximal_sequence(ts: &TaskSet, j: usize, scope: &ResourceSet) -> Vec<SectionRef> {
    ts.sections(j)
        .iter()
        .map(|s| s.id())
        .filter(|&z| is_maximal(ts, z, scope))
        .collect()
}

/// `in(J_i, z, scope)`: resources of sections nested in `z` that are outside
/// `scope` and also used by some job `J_k` with `k > i`, `k != j`.
///
/// `z` must be maximal with respect to `scope` and belong to a job of lower
/// priority than `J_i`.
pub fn induced_set(ts: &TaskSet, i: usize, z: SectionRef, scope: &ResourceSet) -> Result<ResourceSet> {
    ts.check_section(z)?;
    if z.job <= i {
        return Err(Error::Precondition(format!(
            "{z} does not belong to a job of lower priority than J{i}"
        )));
    }
    if !is_maximal(ts, z, scope) {
        return Err(Error::Precondition(format!("{z} is not maximal in the given scope")));
    }
    Ok(induced_unchecked(ts, i, z, scope))
}

pub(crate) fn induced_unchecked(
    ts: &TaskSet,
    i: usize,
    z: SectionRef,
    scope: &ResourceSet,
) -> ResourceSet {
    ts.nested(z)
        .iter()
        .map(|s| s.resource)
        .filter(|r| !scope.contains(r))
        .filter(|&r| shared_below(ts, i, z.job, r))
        .collect()
}

/// Whether some job `J_k`, `k > i`, `k != j`, uses `r`.
fn shared_below(ts: &TaskSet, i: usize, j: usize, r: ResourceId) -> bool {
    ts.jobs()
        .iter()
        .skip(i)
        .any(|job| job.index != j && job.uses(r))
}

/// One application of the induced-set operator during the fixpoint.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FixpointStep {
    pub section: SectionRef,
    pub induced: ResourceSet,
    /// The scope after adding `induced`.
    pub scope: ResourceSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Fixpoint {
    pub initial: ResourceSet,
    pub steps: Vec<FixpointStep>,
    pub result: ResourceSet,
}

impl Fixpoint {
    /// `R^(0), R^(1), ...`: the scope before the first step and after each.
    pub fn iterates(&self) -> Vec<ResourceSet> {
        std::iter::once(self.initial.clone())
            .chain(self.steps.iter().map(|s| s.scope.clone()))
            .collect()
    }
}

/// `R_N^i` by fixpoint iteration from `R^i`.
pub fn relevant_resources(ts: &TaskSet, i: usize) -> ResourceSet {
    relevant_resources_traced(ts, i).result
}

/// Like [`relevant_resources`], keeping every step. Each step applies the
/// first productive maximal section, scanning jobs by index and sections in
/// order.
pub fn relevant_resources_traced(ts: &TaskSet, i: usize) -> Fixpoint {
    relevant_resources_with(ts, i, |_| 0)
}

/// Fixpoint iteration where `pick` chooses which of the currently productive
/// maximal sections (those with a non-empty induced set) to apply next. The
/// result does not depend on the choice.
pub fn relevant_resources_with<F>(ts: &TaskSet, i: usize, mut pick: F) -> Fixpoint
where
    F: FnMut(&[SectionRef]) -> usize,
{
    let initial = direct_blocking_resources(ts, i);
    let mut scope = initial.clone();
    let mut steps = Vec::new();
    loop {
        if scope.len() == ts.resources().len() {
            break;
        }
        let productive: Vec<(SectionRef, ResourceSet)> = ts
            .jobs()
            .iter()
            .skip(i)
            .flat_map(|job| maximal_sequence(ts, job.index, &scope))
            .filter_map(|z| {
                let induced = induced_unchecked(ts, i, z, &scope);
                (!induced.is_empty()).then_some((z, induced))
            })
            .collect();
        if productive.is_empty() {
            break;
        }
        let ids: Vec<SectionRef> = productive.iter().map(|(z, _)| *z).collect();
        let k = pick(&ids).min(productive.len() - 1);
        let (section, induced) = productive.into_iter().nth(k).expect("in range");
        scope.extend(induced.iter().copied());
        steps.push(FixpointStep {
            section,
            induced,
            scope: scope.clone(),
        });
    }
    Fixpoint {
        initial,
        steps,
        result: scope,
    }
}

/// `Γ_N^i`: lower-priority jobs using a resource of `R_N^i`.
pub fn relevant_jobs(ts: &TaskSet, i: usize) -> JobSet {
    jobs_using(ts, i, &relevant_resources(ts, i))
}

/// `in(J_i, Z) = R^i ∪ ⋃_{z ∈ Z} in(J_i, z, R^i)`.
pub fn chain_induced_set(ts: &TaskSet, i: usize, chain: &[SectionRef]) -> ResourceSet {
    let base = direct_blocking_resources(ts, i);
    let mut out = base.clone();
    for &z in chain {
        out.extend(induced_unchecked(ts, i, z, &base));
    }
    out
}

/// The direct and transitive blocking sets of one job.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockingScope {
    pub target: usize,
    pub direct_resources: ResourceSet,
    pub direct_jobs: JobSet,
    pub relevant_resources: ResourceSet,
    pub relevant_jobs: JobSet,
    pub fixpoint: Fixpoint,
}

pub fn blocking_scope(ts: &TaskSet, i: usize) -> BlockingScope {
    let fixpoint = relevant_resources_traced(ts, i);
    let relevant_resources = fixpoint.result.clone();
    BlockingScope {
        target: i,
        direct_jobs: jobs_using(ts, i, &fixpoint.initial),
        direct_resources: fixpoint.initial.clone(),
        relevant_jobs: jobs_using(ts, i, &relevant_resources),
        relevant_resources,
        fixpoint,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::taskset::z;

    fn rs(ks: &[u32]) -> ResourceSet {
        ks.iter().map(|&k| ResourceId(k)).collect()
    }

    fn js(ks: &[usize]) -> JobSet {
        ks.iter().copied().collect()
    }

    #[test]
    fn direct_sets() {
        let a = fixtures::ts_a();
        assert_eq!(direct_blocking_resources(&a, 1), rs(&[4]));
        assert_eq!(direct_blocking_jobs(&a, 1), js(&[2, 3]));
        let b = fixtures::ts_b();
        assert_eq!(direct_blocking_resources(&b, 2), rs(&[2, 3, 4]));
        assert_eq!(direct_blocking_jobs(&b, 4), js(&[5, 6]));
        assert!(direct_blocking_resources(&b, 6).is_empty());
        assert!(direct_blocking_jobs(&b, 6).is_empty());
    }

    #[test]
    fn maximality() {
        let a = fixtures::ts_a();
        assert!(is_maximal(&a, z(2, 1), &rs(&[4])));
        assert!(!is_maximal(&a, z(2, 2), &rs(&[3, 4])));
        assert!(is_maximal(&a, z(2, 2), &rs(&[3])));
        assert!(!is_maximal(&a, z(2, 1), &ResourceSet::new()));
    }

    #[test]
    fn maximal_sequences() {
        let a = fixtures::ts_a();
        let scope = rs(&[2, 3, 4]);
        assert_eq!(maximal_sequence(&a, 3, &scope), vec![z(3, 1), z(3, 2), z(3, 4)]);
        assert_eq!(maximal_sequence(&a, 2, &scope), vec![z(2, 1)]);
        assert!(maximal_sequence(&a, 2, &ResourceSet::new()).is_empty());
    }

    #[test]
    fn induced_sets() {
        let a = fixtures::ts_a();
        assert_eq!(induced_set(&a, 1, z(2, 1), &rs(&[4])).unwrap(), rs(&[2, 3]));
        assert_eq!(induced_set(&a, 1, z(3, 2), &rs(&[2, 3, 4])).unwrap(), rs(&[1]));
        assert!(induced_set(&a, 1, z(3, 1), &rs(&[4])).unwrap().is_empty());
    }

    #[test]
    fn induced_set_preconditions() {
        let a = fixtures::ts_a();
        assert!(matches!(
            induced_set(&a, 1, z(2, 2), &rs(&[3, 4])),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            induced_set(&a, 2, z(2, 1), &rs(&[4])),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            induced_set(&a, 1, z(9, 1), &rs(&[4])),
            Err(Error::NoSuchSection(_))
        ));
    }

    #[test]
    fn fixpoint_trace_of_nested_fixture() {
        let a = fixtures::ts_a();
        let fp = relevant_resources_traced(&a, 1);
        assert_eq!(
            fp.iterates(),
            vec![rs(&[4]), rs(&[2, 3, 4]), rs(&[1, 2, 3, 4])]
        );
        assert_eq!(fp.steps[0].section, z(2, 1));
        assert_eq!(fp.steps[1].section, z(3, 2));
        assert_eq!(fp.steps[1].induced, rs(&[1]));
    }

    #[test]
    fn relevant_sets_of_nested_fixture() {
        let a = fixtures::ts_a();
        assert_eq!(relevant_resources(&a, 1), rs(&[1, 2, 3, 4]));
        assert_eq!(relevant_jobs(&a, 1), js(&[2, 3, 4]));
        assert_eq!(relevant_resources(&a, 2), rs(&[1, 2, 3, 4]));
        assert_eq!(relevant_jobs(&a, 2), js(&[3, 4]));
        assert_eq!(relevant_resources(&a, 3), rs(&[1, 2]));
        assert_eq!(relevant_jobs(&a, 3), js(&[4]));
        assert!(relevant_resources(&a, 4).is_empty());
        assert!(relevant_jobs(&a, 4).is_empty());
    }

    #[test]
    fn chain_induced_sets() {
        let a = fixtures::ts_a();
        assert_eq!(chain_induced_set(&a, 1, &[]), rs(&[4]));
        assert_eq!(chain_induced_set(&a, 1, &[z(2, 1)]), rs(&[2, 3, 4]));
        let f = fixtures::ts_f();
        assert_eq!(chain_induced_set(&f, 1, &[z(4, 4)]), rs(&[2, 4]));
    }

    #[test]
    fn larger_fixture_scope() {
        let f = fixtures::ts_f();
        let s = blocking_scope(&f, 1);
        assert_eq!(s.direct_resources, rs(&[4]));
        assert_eq!(s.direct_jobs, js(&[2, 3, 4]));
        assert_eq!(s.relevant_resources, rs(&[1, 2, 3, 4]));
        assert_eq!(s.relevant_jobs, js(&[2, 3, 4, 5]));
    }

    #[test]
    fn pick_order_does_not_matter() {
        let f = fixtures::ts_f();
        let first = relevant_resources_with(&f, 1, |_| 0).result;
        let last = relevant_resources_with(&f, 1, |c| c.len() - 1).result;
        assert_eq!(first, last);
    }
}
