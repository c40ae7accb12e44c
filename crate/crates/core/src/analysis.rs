//! The four steps for every job: deadlock check, bound, quick check and, if
//! still needed, the exact search.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::admissibility::{quick_admissibility_check, QuickCheck};
use crate::bound::{job_bound, AssignmentSet, BlockingMatrix};
use crate::deadlock::{check_deadlock_free, DeadlockVerdict};
use crate::error::Result;
use crate::relevance::{blocking_scope, BlockingScope};
use crate::search::{Search, SearchOptions, TraceEvent};
use crate::taskset::{TaskSet, ZChain};
use crate::time::Time;

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    /// Restrict the report to one job.
    pub job: Option<usize>,
    /// Run the search when the quick check fails.
    pub exact: bool,
    pub trace: bool,
    pub search: SearchOptions,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            job: None,
            exact: true,
            trace: false,
            search: SearchOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum Blocking {
    Exact(Time),
    /// Nesting admits a deadlock.
    Infinite,
    /// Only the bound is known.
    Unknown,
}

impl Blocking {
    pub fn exact(self) -> Option<Time> {
        match self {
            Blocking::Exact(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SearchStats {
    pub nodes_generated: usize,
    pub nodes_expanded: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JobReport {
    pub job: usize,
    pub scope: BlockingScope,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub matrix: Option<BlockingMatrix>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<Time>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assignment: Option<AssignmentSet>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quick_check: Option<QuickCheck>,
    pub blocking: Blocking,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<ZChain>,
    /// Present when the search ran.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchStats>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEvent>,
    pub wall_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub deadlock: DeadlockVerdict,
    pub jobs: Vec<JobReport>,
}

impl AnalysisReport {
    pub fn is_deadlock_free(&self) -> bool {
        self.deadlock.is_acyclic()
    }
}

pub fn analyze(ts: &TaskSet, options: &AnalyzeOptions) -> Result<AnalysisReport> {
    let targets: Vec<usize> = match options.job {
        Some(i) => {
            ts.check_job(i)?;
            vec![i]
        }
        None => (1..=ts.len()).collect(),
    };
    let deadlock = check_deadlock_free(ts);
    let acyclic = deadlock.is_acyclic();
    let jobs = targets
        .into_par_iter()
        .map(|i| analyze_job(ts, i, acyclic, options))
        .collect();
    Ok(AnalysisReport { deadlock, jobs })
}

fn analyze_job(ts: &TaskSet, i: usize, acyclic: bool, options: &AnalyzeOptions) -> JobReport {
    let start = Instant::now();
    let scope = blocking_scope(ts, i);
    let mut report = JobReport {
        job: i,
        scope,
        matrix: None,
        bound: None,
        assignment: None,
        quick_check: None,
        blocking: Blocking::Infinite,
        witness: None,
        search: None,
        trace: Vec::new(),
        wall_time_ms: 0.0,
    };
    if acyclic {
        let b = job_bound(ts, i);
        let quick = quick_admissibility_check(ts, i, &b.matrix, &b.assignment, b.value());
        report.bound = Some(b.value());
        if quick.admissible {
            report.blocking = Blocking::Exact(b.value());
            report.witness = Some(quick.chain.clone());
        } else if options.exact {
            let mut search_options = options.search.clone();
            search_options.trace |= options.trace;
            let result = Search::new(ts, i, search_options)
                .expect("job index checked")
                .run();
            report.blocking = Blocking::Exact(result.blocking_time);
            report.witness = Some(result.witness);
            report.search = Some(SearchStats {
                nodes_generated: result.nodes_generated,
                nodes_expanded: result.nodes_expanded,
            });
            report.trace = result.trace;
        } else {
            report.blocking = Blocking::Unknown;
        }
        report.matrix = Some(b.matrix);
        report.assignment = Some(b.assignment);
        report.quick_check = Some(quick);
    }
    report.wall_time_ms = start.elapsed().as_secs_f64() * 1e3;
    report
}
