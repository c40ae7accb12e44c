use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::taskset::{Bracket, ResourceId, TaskSet};
use crate::time::Time;

/// Jobs `J_{i+1}..J_n` each lock `R_1..R_{n-i}` one after the other. The
/// section of `J_j` on `R_{n-j+1}` lasts `delta`, every other one `epsilon`.
/// `J_i` touches every resource briefly so that all of them can block it.
pub fn generate_antidiagonal_family(n: usize, i: usize, delta: Time, epsilon: Time) -> Result<TaskSet> {
    if i == 0 || i >= n {
        return Err(Error::InvalidParameter(format!("need 1 <= i < n, got i={i}, n={n}")));
    }
    if epsilon >= delta {
        return Err(Error::InvalidParameter(format!(
            "epsilon ({epsilon}) must be smaller than delta ({delta})"
        )));
    }
    let m = n - i;
    let resource = |p: usize| ResourceId(p as u32);
    let mut jobs: Vec<Vec<Bracket>> = vec![Vec::new(); i - 1];
    jobs.push((1..=m).map(|p| flat(resource(p), epsilon)).collect());
    for j in i + 1..=n {
        let long = n - j + 1;
        jobs.push(
            (1..=m)
                .map(|p| flat(resource(p), if p == long { delta } else { epsilon }))
                .collect(),
        );
    }
    TaskSet::from_brackets(jobs)
}

fn flat(resource: ResourceId, duration: Time) -> Bracket {
    Bracket {
        resource,
        duration,
        nested: Vec::new(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomLimits {
    /// At least two jobs are generated.
    pub jobs: usize,
    pub resources: u32,
    /// Sections per job, nested ones included; each job gets at least one.
    pub sections_per_job: usize,
    /// Most sections that may enclose any one section.
    pub nesting_depth: usize,
}

impl Default for RandomLimits {
    fn default() -> Self {
        RandomLimits {
            jobs: 6,
            resources: 5,
            sections_per_job: 3,
            nesting_depth: 2,
        }
    }
}

/// Reproducible random task set. Nested sections always use a resource with
/// a smaller index than the section around them, so the result is
/// deadlock-free. Durations are whole units from 1 to 9.
pub fn random_taskset(seed: u64, limits: RandomLimits) -> Result<TaskSet> {
    if limits.jobs < 2 || limits.resources == 0 || limits.sections_per_job == 0 {
        return Err(Error::InvalidParameter(
            "need at least 2 jobs, 1 resource and 1 section per job".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=limits.jobs);
    let jobs = (0..n)
        .map(|_| {
            let mut budget = rng.gen_range(1..=limits.sections_per_job);
            let mut top = Vec::new();
            while budget > 0 {
                top.push(random_bracket(&mut rng, limits.resources, limits.nesting_depth, &mut budget));
            }
            top
        })
        .collect();
    TaskSet::from_brackets(jobs)
}

fn random_bracket(rng: &mut ChaCha8Rng, below: u32, depth: usize, budget: &mut usize) -> Bracket {
    let r = rng.gen_range(1..=below);
    let duration = Time::from_units(rng.gen_range(1..=9));
    *budget -= 1;
    let mut nested = Vec::new();
    while depth > 0 && r > 1 && *budget > 0 && rng.gen_bool(0.4) {
        nested.push(random_bracket(rng, r - 1, depth - 1, budget));
    }
    Bracket {
        resource: ResourceId(r),
        duration,
        nested,
    }
}
