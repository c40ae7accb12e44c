//! Plain-text rendering of the reports that `--json` prints.

use std::fmt::{Display, Write};

use pipblock::admissibility::{AdmissibilityVerdict, QuickCheck};
use pipblock::analysis::{AnalysisReport, Blocking, JobReport};
use pipblock::bound::{BlockingMatrix, JobBound};
use pipblock::deadlock::DeadlockVerdict;
use pipblock::oracle::OracleResult;
use pipblock::relevance::BlockingScope;
use pipblock::search::{SearchResult, TraceEvent};
use pipblock::{ResourceId, Time, ZChain};

fn set<T: Display>(items: impl IntoIterator<Item = T>) -> String {
    let items: Vec<String> = items.into_iter().map(|x| x.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

fn jobs<'a>(items: impl IntoIterator<Item = &'a usize>) -> String {
    set(items.into_iter().map(|j| format!("J{j}")))
}

fn cycle(c: &[ResourceId]) -> String {
    c.iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> ")
}

pub fn deadlock(v: &DeadlockVerdict) -> String {
    match v {
        DeadlockVerdict::Acyclic { order } => {
            let order: Vec<String> = order.iter().map(ToString::to_string).collect();
            format!("deadlock-free: resource order {}\n", order.join(" < "))
        }
        DeadlockVerdict::Cyclic { cycle: c } => format!("cyclic resource order: {}\n", cycle(c)),
    }
}

pub fn scope(s: &BlockingScope) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "J{}:", s.target);
    let _ = writeln!(out, "  direct resources   {}", set(&s.direct_resources));
    let _ = writeln!(out, "  direct jobs        {}", jobs(&s.direct_jobs));
    let _ = writeln!(out, "  relevant resources {}", set(&s.relevant_resources));
    let _ = writeln!(out, "  relevant jobs      {}", jobs(&s.relevant_jobs));
    let _ = writeln!(out, "  fixpoint:");
    let _ = writeln!(out, "    start {}", set(&s.fixpoint.initial));
    for step in &s.fixpoint.steps {
        let _ = writeln!(out, "    via {} adds {} -> {}", step.section, set(&step.induced), set(&step.scope));
    }
    out
}

fn matrix(m: &BlockingMatrix, out: &mut String) {
    if m.rows() == 0 || m.cols() == 0 {
        let _ = writeln!(out, "  (empty matrix)");
        return;
    }
    let cells: Vec<Vec<String>> = m.cells.iter().map(|r| r.iter().map(ToString::to_string).collect()).collect();
    let width = cells
        .iter()
        .flatten()
        .map(String::len)
        .chain(m.resources.iter().map(|r| r.to_string().len()))
        .max()
        .unwrap_or(1);
    let label = m.jobs.iter().map(|j| format!("J{j}").len()).max().unwrap_or(2);
    let _ = write!(out, "  {:label$}", "");
    for r in &m.resources {
        let _ = write!(out, " {:>width$}", r.to_string());
    }
    out.push('\n');
    for (j, row) in m.jobs.iter().zip(&cells) {
        let _ = write!(out, "  {:label$}", format!("J{j}"));
        for c in row {
            let _ = write!(out, " {c:>width$}");
        }
        out.push('\n');
    }
}

fn assignment(pairs: &[(usize, ResourceId)]) -> String {
    set(pairs.iter().map(|(j, r)| format!("(J{j}, {r})")))
}

pub fn bound(b: &JobBound) -> String {
    let mut out = format!("J{}: bound {}\n", b.job, b.value());
    matrix(&b.matrix, &mut out);
    let _ = writeln!(out, "  assignment {}", assignment(&b.assignment.pairs));
    out
}

fn quick(q: &QuickCheck) -> String {
    match &q.failure {
        None if q.admissible => format!("attained by {}", q.chain),
        Some(v) => format!("failed, {v}"),
        None => "failed".into(),
    }
}

fn job(r: &JobReport, out: &mut String) {
    let _ = writeln!(out, "J{}:", r.job);
    let s = &r.scope;
    let _ = writeln!(
        out,
        "  scope      {} / {}, relevant {} / {}",
        set(&s.direct_resources),
        jobs(&s.direct_jobs),
        set(&s.relevant_resources),
        jobs(&s.relevant_jobs)
    );
    if let Some(b) = r.bound {
        let pairs = r.assignment.as_ref().map(|a| assignment(&a.pairs)).unwrap_or_default();
        let _ = writeln!(out, "  bound      {b} {pairs}");
    }
    if let Some(q) = &r.quick_check {
        let _ = writeln!(out, "  quick      {}", quick(q));
    }
    let blocking = match r.blocking {
        Blocking::Exact(t) => t.to_string(),
        Blocking::Infinite => "infinite".into(),
        Blocking::Unknown => "unknown (bound only)".into(),
    };
    let _ = write!(out, "  blocking   {blocking}");
    if let Some(w) = &r.witness {
        let _ = write!(out, " via {w}");
    }
    out.push('\n');
    if let Some(s) = &r.search {
        let _ = writeln!(out, "  search     {} generated, {} expanded", s.nodes_generated, s.nodes_expanded);
    }
    for e in &r.trace {
        let _ = writeln!(out, "    {}", event(e));
    }
    let _ = writeln!(out, "  time       {:.3} ms", r.wall_time_ms);
}

pub fn report(r: &AnalysisReport) -> String {
    let mut out = deadlock(&r.deadlock);
    for j in &r.jobs {
        job(j, &mut out);
    }
    out
}

pub fn infinite(i: usize, c: &[ResourceId]) -> String {
    format!("J{i}: blocking infinite (cyclic resource order {})\n", cycle(c))
}

fn event(e: &TraceEvent) -> String {
    match e {
        TraceEvent::Expand { node, chain, estimate, children } => {
            let kids: Vec<String> = children
                .iter()
                .map(|c| format!("n{} +{} f={}{}", c.node, c.section, c.estimate, if c.leaf { " leaf" } else { "" }))
                .collect();
            let kids = if kids.is_empty() { "nothing".into() } else { kids.join(", ") };
            format!("expand n{node} {chain} f={estimate}: {kids}")
        }
        TraceEvent::MarkLeaf { node, chain, estimate } => {
            format!("n{node} {chain} has no admissible extension, leaf with f={estimate}")
        }
        TraceEvent::Done { node, chain, gain } => format!("n{node} {chain} is the first leaf, g={gain}"),
    }
}

pub fn search(r: &SearchResult) -> String {
    let mut out = format!(
        "J{}: blocking time {} via {} (bound {}, {} generated, {} expanded)\n",
        r.job, r.blocking_time, r.witness, r.initial_bound, r.nodes_generated, r.nodes_expanded
    );
    for e in &r.trace {
        let _ = writeln!(out, "  {}", event(e));
    }
    out
}

pub fn chain_check(
    i: usize,
    chain: &ZChain,
    duration: Time,
    verdict: &AdmissibilityVerdict,
    reorder: Option<&ZChain>,
) -> String {
    let mut out = format!("J{i}: {chain} duration {duration}: {verdict}\n");
    if let Some(z) = reorder {
        let _ = writeln!(out, "  admissible as {z}");
    }
    out
}

pub fn oracle(r: &OracleResult) -> String {
    let mut out = format!(
        "J{}: blocking time {} ({} combinations, {} admissible)\n",
        r.job, r.best_duration, r.chains_enumerated, r.admissible_sets
    );
    for c in &r.best_chains {
        let _ = writeln!(out, "  {c}");
    }
    out
}
