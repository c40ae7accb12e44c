//! A second, deliberately naive reading of the admissibility rules, written
//! from the formulas against nothing but the raw sections and their parent
//! links. The library's predicates must agree with it everywhere.

use std::collections::BTreeSet;

use pipblock::admissibility::is_admissible_chain;
use pipblock::oracle::{random_taskset, RandomLimits};
use pipblock::{fixtures, CriticalSection, ResourceId, SectionRef, TaskSet};

struct Reference<'a> {
    ts: &'a TaskSet,
    i: usize,
}

impl Reference<'_> {
    fn sec(&self, z: SectionRef) -> &CriticalSection {
        &self.ts.jobs()[z.job - 1].sections[z.position - 1]
    }

    fn res(&self, j: usize, p: usize) -> ResourceId {
        self.sec(SectionRef::new(j, p)).resource
    }

    fn count(&self, j: usize) -> usize {
        self.ts.jobs()[j - 1].sections.len()
    }

    /// `outer ⊃ inner`, following parent links up from `inner`.
    fn strictly_contains(&self, outer: SectionRef, inner: SectionRef) -> bool {
        if outer.job != inner.job {
            return false;
        }
        let mut cur = self.sec(inner).parent;
        while let Some(p) = cur {
            if p == outer.position {
                return true;
            }
            cur = self.sec(SectionRef::new(inner.job, p)).parent;
        }
        false
    }

    fn uses(&self, j: usize, r: ResourceId) -> bool {
        (1..=self.count(j)).any(|p| self.res(j, p) == r)
    }

    fn direct(&self) -> BTreeSet<ResourceId> {
        let n = self.ts.len();
        let mut out = BTreeSet::new();
        for k in 1..=self.i {
            for j in self.i + 1..=n {
                for p in 1..=self.count(k) {
                    let r = self.res(k, p);
                    if self.uses(j, r) {
                        out.insert(r);
                    }
                }
            }
        }
        out
    }

    fn induced_by(&self, z: SectionRef, scope: &BTreeSet<ResourceId>) -> BTreeSet<ResourceId> {
        let n = self.ts.len();
        let j = z.job;
        (1..=self.count(j))
            .map(|q| SectionRef::new(j, q))
            .filter(|&w| self.strictly_contains(z, w))
            .map(|w| self.sec(w).resource)
            .filter(|r| !scope.contains(r))
            .filter(|&r| (self.i + 1..=n).any(|k| k != j && self.uses(k, r)))
            .collect()
    }

    fn chain_scope(&self, chain: &[SectionRef]) -> BTreeSet<ResourceId> {
        let base = self.direct();
        let mut out = base.clone();
        for &z in chain {
            out.extend(self.induced_by(z, &base));
        }
        out
    }

    fn extends(&self, chain: &[SectionRef], z: SectionRef) -> bool {
        let (j, p) = (z.job, z.position);
        if j <= self.i {
            return false;
        }
        // NBJ
        if chain.iter().any(|m| m.job == j) {
            return false;
        }
        // NBR
        if chain.iter().any(|&m| self.sec(m).resource == self.sec(z).resource) {
            return false;
        }
        // LSM
        let scope = self.chain_scope(chain);
        if !scope.contains(&self.sec(z).resource) {
            return false;
        }
        for s in 1..=self.count(j) {
            let zs = SectionRef::new(j, s);
            if self.strictly_contains(zs, z) && scope.contains(&self.res(j, s)) {
                return false;
            }
        }
        // FHO
        for &m in chain.iter().filter(|m| m.job < j) {
            for s in 1..=self.count(j) {
                let zs = SectionRef::new(j, s);
                if zs != z && !self.strictly_contains(zs, z) {
                    continue;
                }
                for q in 1..m.position {
                    if self.res(m.job, q) == self.res(j, s) {
                        return false;
                    }
                }
            }
        }
        // FLO
        for &m in chain.iter().filter(|m| m.job > j) {
            for q in 1..=self.count(m.job) {
                let zq = SectionRef::new(m.job, q);
                if zq != m && !self.strictly_contains(zq, m) {
                    continue;
                }
                for o in 1..p {
                    if self.res(j, o) == self.res(m.job, q) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn admissible(&self, chain: &[SectionRef]) -> bool {
        (0..chain.len()).all(|k| self.extends(&chain[..k], chain[k]))
    }
}

/// Every ordered chain of up to `max_len` sections of jobs `J_{i}..J_n`
/// (including `J_i` itself, whose sections must always be rejected).
fn chains(ts: &TaskSet, i: usize, max_len: usize) -> Vec<Vec<SectionRef>> {
    let pool: Vec<SectionRef> = ts
        .all_sections()
        .filter(|s| s.job >= i)
        .map(|s| s.id())
        .collect();
    let mut out = vec![Vec::new()];
    let mut frontier = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for c in &frontier {
            for &z in &pool {
                if !c.contains(&z) {
                    let mut d = c.clone();
                    d.push(z);
                    next.push(d);
                }
            }
        }
        out.extend(next.iter().cloned());
        frontier = next;
    }
    out
}

fn agree_on(ts: &TaskSet, max_len: usize) -> usize {
    let mut admissible = 0;
    for i in 1..=ts.len() {
        let reference = Reference { ts, i };
        for chain in chains(ts, i, max_len) {
            let want = reference.admissible(&chain);
            let got = is_admissible_chain(ts, i, &chain).unwrap();
            assert_eq!(got.admissible, want, "J{i} {chain:?}: {got}");
            admissible += usize::from(want);
        }
    }
    admissible
}

#[test]
fn fixtures_agree() {
    for (name, ts) in fixtures::all() {
        if ts.all_sections().count() > 0 {
            let n = agree_on(&ts, 3);
            assert!(n > 0, "{name} has no admissible chain at all");
        }
    }
}

#[test]
fn longer_chains_on_the_larger_fixture() {
    agree_on(&fixtures::ts_f(), 4);
}

#[test]
fn random_sets_agree() {
    let limits = RandomLimits {
        jobs: 5,
        resources: 4,
        sections_per_job: 3,
        nesting_depth: 2,
    };
    for seed in 0..60 {
        let ts = random_taskset(seed, limits).unwrap();
        agree_on(&ts, 3);
    }
}
