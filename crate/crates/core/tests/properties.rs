use std::collections::BTreeSet;

use proptest::prelude::*;
use proptest::sample::select;

use pipblock::admissibility::{is_admissible_chain, quick_admissibility_check, Condition};
use pipblock::bound::{hungarian_bound, job_bound, max_weight_assignment, CostMatrix};
use pipblock::oracle::{brute_force_blocking_time, random_taskset, RandomLimits};
use pipblock::relevance::{relevant_jobs, relevant_resources, relevant_resources_with};
use pipblock::search::{blocking_time_with, DuplicateGuard, SearchOptions, TraceEvent};
use pipblock::{
    chain_duration, parse_taskset, serialize_taskset, Bracket, ResourceId, SectionRef, TaskSet, Time,
};

fn duration() -> impl Strategy<Value = Time> {
    (0i64..60, select(vec![1i64, 1, 1, 2, 3, 4, 5, 10])).prop_map(|(n, d)| Time::from_ratio(n, d))
}

/// Nested sections use smaller resource indices, so nothing is relocked.
fn bracket(below: u32, depth: u32) -> BoxedStrategy<Bracket> {
    (1..=below, duration())
        .prop_flat_map(move |(r, d)| {
            let nested = if depth == 0 || r == 1 {
                Just(Vec::new()).boxed()
            } else {
                prop::collection::vec(bracket(r - 1, depth - 1), 0..3).boxed()
            };
            nested.prop_map(move |nested| Bracket {
                resource: ResourceId(r),
                duration: d,
                nested,
            })
        })
        .boxed()
}

fn taskset() -> impl Strategy<Value = TaskSet> {
    prop::collection::vec(prop::collection::vec(bracket(6, 2), 0..4), 1..6)
        .prop_map(|jobs| TaskSet::from_brackets(jobs).expect("valid by construction"))
}

fn small_taskset() -> impl Strategy<Value = TaskSet> {
    any::<u64>().prop_map(|seed| random_taskset(seed, RandomLimits::default()).unwrap())
}

fn weights() -> impl Strategy<Value = Vec<Vec<Time>>> {
    (1usize..=6, 1usize..=6).prop_flat_map(|(r, c)| {
        prop::collection::vec(prop::collection::vec(duration(), c), r)
    })
}

/// Best sum over matchings of rows to distinct columns, by enumeration.
fn brute_assignment(w: &[Vec<Time>], row: usize, used: &mut Vec<bool>) -> Time {
    if row == w.len() {
        return Time::ZERO;
    }
    let mut best = brute_assignment(w, row + 1, used);
    for c in 0..used.len() {
        if !used[c] {
            used[c] = true;
            best = best.max(w[row][c] + brute_assignment(w, row + 1, used));
            used[c] = false;
        }
    }
    best
}

proptest! {
    #[test]
    fn text_form_round_trips(ts in taskset()) {
        let text = serialize_taskset(&ts);
        let back = parse_taskset(&text).unwrap();
        prop_assert_eq!(&back, &ts);
        prop_assert_eq!(serialize_taskset(&back), text);
    }

    #[test]
    fn assignment_is_optimal(w in weights()) {
        let cols = w[0].len();
        let (h, pairs) = max_weight_assignment(&w, cols);
        prop_assert_eq!(h, brute_assignment(&w, 0, &mut vec![false; cols]));
        let rows: BTreeSet<usize> = pairs.iter().map(|p| p.0).collect();
        let used: BTreeSet<usize> = pairs.iter().map(|p| p.1).collect();
        prop_assert_eq!(rows.len(), pairs.len());
        prop_assert_eq!(used.len(), pairs.len());
        let sum: Time = pairs.iter().map(|&(r, c)| w[r][c]).sum();
        prop_assert_eq!(sum, h);
    }

    #[test]
    fn reductions_leave_zeros(w in weights()) {
        let mut m = CostMatrix::from_weights(&w, w[0].len());
        m.reduce_rows();
        m.reduce_columns();
        let n = m.size();
        for k in 0..n {
            prop_assert!((0..n).any(|c| m.get(k, c).is_zero()));
            prop_assert!((0..n).any(|r| m.get(r, k).is_zero()));
        }
    }

    #[test]
    fn bound_is_monotone(ts in small_taskset(), drop_job in any::<prop::sample::Index>(), drop_res in any::<prop::sample::Index>()) {
        for i in 1..=ts.len() {
            let jobs = relevant_jobs(&ts, i);
            let res = relevant_resources(&ts, i);
            let full = hungarian_bound(&ts, &jobs, &res).value;
            if !jobs.is_empty() {
                let mut fewer = jobs.clone();
                fewer.remove(drop_job.get(&jobs.iter().copied().collect::<Vec<_>>()));
                prop_assert!(hungarian_bound(&ts, &fewer, &res).value <= full);
            }
            if !res.is_empty() {
                let mut fewer = res.clone();
                fewer.remove(drop_res.get(&res.iter().copied().collect::<Vec<_>>()));
                prop_assert!(hungarian_bound(&ts, &jobs, &fewer).value <= full);
            }
        }
    }

    #[test]
    fn fixpoint_ignores_pick_order(ts in taskset(), picks in prop::collection::vec(any::<usize>(), 16)) {
        for i in 1..=ts.len() {
            let mut k = 0;
            let shuffled = relevant_resources_with(&ts, i, |c| {
                k += 1;
                picks[k % picks.len()] % c.len()
            });
            prop_assert_eq!(shuffled.result, relevant_resources(&ts, i));
        }
    }

    #[test]
    fn search_is_exact(ts in small_taskset()) {
        let traced = SearchOptions { trace: true, ..SearchOptions::default() };
        for i in 1..=ts.len() {
            let oracle = brute_force_blocking_time(&ts, i).unwrap();
            let r = blocking_time_with(&ts, i, &traced).unwrap();
            prop_assert_eq!(r.blocking_time, oracle.best_duration, "J{}", i);
            prop_assert!(job_bound(&ts, i).value() >= r.blocking_time);
            prop_assert!(is_admissible_chain(&ts, i, r.witness.sections()).unwrap().admissible);
            prop_assert_eq!(chain_duration(&ts, r.witness.sections()), r.blocking_time);

            let mut expanded = BTreeSet::new();
            for e in &r.trace {
                if let TraceEvent::Expand { chain, estimate, .. } = e {
                    prop_assert!(r.blocking_time <= *estimate);
                    prop_assert!(expanded.insert(chain.sections().to_vec()), "{} expanded twice", chain);
                }
            }
        }
    }

    #[test]
    fn guards_agree(ts in small_taskset()) {
        for i in 1..=ts.len() {
            let values: Vec<Time> = [DuplicateGuard::SectionSubset, DuplicateGuard::Subsequence, DuplicateGuard::SameSet]
                .into_iter()
                .map(|guard| blocking_time_with(&ts, i, &SearchOptions { guard, trace: false }).unwrap().blocking_time)
                .collect();
            prop_assert!(values.windows(2).all(|w| w[0] == w[1]), "{:?}", values);
        }
    }

    #[test]
    fn quick_check_is_sound(ts in small_taskset()) {
        for i in 1..=ts.len() {
            let b = job_bound(&ts, i);
            let q = quick_admissibility_check(&ts, i, &b.matrix, &b.assignment, b.value());
            if q.admissible {
                prop_assert!(is_admissible_chain(&ts, i, q.chain.sections()).unwrap().admissible);
                prop_assert_eq!(q.chain.duration(&ts), b.value());
            }
        }
    }

    #[test]
    fn prefixes_of_admissible_chains_are_admissible(ts in small_taskset()) {
        for i in 1..=ts.len() {
            for chain in brute_force_blocking_time(&ts, i).unwrap().best_chains {
                for k in 0..=chain.len() {
                    prop_assert!(is_admissible_chain(&ts, i, &chain.sections()[..k]).unwrap().admissible);
                }
            }
        }
    }

    #[test]
    fn first_sections_never_obstruct(ts in small_taskset(), mask in any::<u8>()) {
        for i in 1..=ts.len() {
            let chain: Vec<SectionRef> = ts
                .jobs()
                .iter()
                .skip(i)
                .filter(|j| !j.sections.is_empty() && mask & (1 << (j.index % 8)) != 0)
                .map(|j| j.sections[0].id())
                .collect();
            let v = is_admissible_chain(&ts, i, &chain).unwrap();
            prop_assert!(
                !matches!(v.failed_condition, Some(Condition::HigherObstruction | Condition::LowerObstruction)),
                "{}", v
            );
        }
    }
}
