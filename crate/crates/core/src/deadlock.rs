//! Deadlock precheck.
//!
//! Resources are vertices; every pair of same-job sections `outer ⊃ inner`
//! contributes an edge `R_outer -> R_inner`. The application is deadlock-free
//! when that graph is acyclic, i.e. every strongly connected component is a
//! single vertex.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::Serialize;

use crate::taskset::{ResourceId, TaskSet};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceOrderGraph {
    vertices: BTreeSet<ResourceId>,
    edges: BTreeMap<ResourceId, BTreeSet<ResourceId>>,
}

impl ResourceOrderGraph {
    pub fn vertices(&self) -> &BTreeSet<ResourceId> {
        &self.vertices
    }

    pub fn successors(&self, r: ResourceId) -> impl Iterator<Item = ResourceId> + '_ {
        self.edges.get(&r).into_iter().flatten().copied()
    }

    pub fn has_edge(&self, from: ResourceId, to: ResourceId) -> bool {
        self.edges.get(&from).is_some_and(|s| s.contains(&to))
    }

    /// All edges in lexicographic order.
    pub fn edges(&self) -> Vec<(ResourceId, ResourceId)> {
        self.edges
            .iter()
            .flat_map(|(&a, bs)| bs.iter().map(move |&b| (a, b)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.values().map(BTreeSet::len).sum()
    }

    /// Tarjan's algorithm. Components come out in reverse topological order;
    /// vertices within a component are sorted.
    pub fn strongly_connected_components(&self) -> Vec<Vec<ResourceId>> {
        let verts: Vec<ResourceId> = self.vertices.iter().copied().collect();
        let index_of: BTreeMap<ResourceId, usize> =
            verts.iter().enumerate().map(|(k, &r)| (r, k)).collect();
        let adj: Vec<Vec<usize>> = verts
            .iter()
            .map(|&r| self.successors(r).map(|s| index_of[&s]).collect())
            .collect();

        let n = verts.len();
        let mut index = vec![usize::MAX; n];
        let mut low = vec![0; n];
        let mut on_stack = vec![false; n];
        let mut stack = Vec::new();
        let mut next = 0;
        let mut out = Vec::new();

        // Explicit call stack of (vertex, next neighbour to visit).
        for root in 0..n {
            if index[root] != usize::MAX {
                continue;
            }
            let mut calls = vec![(root, 0usize)];
            index[root] = next;
            low[root] = next;
            next += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (v, ref mut edge)) = calls.last_mut() {
                if let Some(&w) = adj[v].get(*edge) {
                    *edge += 1;
                    if index[w] == usize::MAX {
                        index[w] = next;
                        low[w] = next;
                        next += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        calls.push((w, 0));
                    } else if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                    continue;
                }
                calls.pop();
                if let Some(&(parent, _)) = calls.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    while let Some(w) = stack.pop() {
                        on_stack[w] = false;
                        comp.push(verts[w]);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort();
                    out.push(comp);
                }
            }
        }
        out
    }
}

pub fn build_order_graph(ts: &TaskSet) -> ResourceOrderGraph {
    let vertices = ts.resources().clone();
    let mut edges: BTreeMap<ResourceId, BTreeSet<ResourceId>> = BTreeMap::new();
    for s in ts.all_sections() {
        for inner in ts.nested(s.id()) {
            edges.entry(s.resource).or_default().insert(inner.resource);
        }
    }
    ResourceOrderGraph { vertices, edges }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum DeadlockVerdict {
    /// `order` lists resources so that every inner resource precedes the
    /// resources of the sections that contain it.
    Acyclic { order: Vec<ResourceId> },
    /// A cycle `R_a -> ... -> R_a`, first vertex repeated at the end.
    Cyclic { cycle: Vec<ResourceId> },
}

impl DeadlockVerdict {
    pub fn is_acyclic(&self) -> bool {
        matches!(self, DeadlockVerdict::Acyclic { .. })
    }
}

pub fn check_deadlock_free(ts: &TaskSet) -> DeadlockVerdict {
    let graph = build_order_graph(ts);
    let sccs = graph.strongly_connected_components();
    let cyclic: Vec<&Vec<ResourceId>> = sccs.iter().filter(|c| c.len() > 1).collect();
    if cyclic.is_empty() {
        return DeadlockVerdict::Acyclic {
            order: resource_order(&graph),
        };
    }
    // The lexicographically smallest cycle starts at the smallest vertex lying
    // on any cycle.
    let start = cyclic.iter().map(|c| c[0]).min().expect("non-empty");
    let members: BTreeSet<ResourceId> = cyclic
        .iter()
        .find(|c| c.contains(&start))
        .expect("start is in a component")
        .iter()
        .copied()
        .collect();
    DeadlockVerdict::Cyclic {
        cycle: smallest_cycle(&graph, start, &members),
    }
}

/// Greedy walk: at each step take the smallest successor from which `start`
/// is still reachable without revisiting the path.
fn smallest_cycle(
    graph: &ResourceOrderGraph,
    start: ResourceId,
    members: &BTreeSet<ResourceId>,
) -> Vec<ResourceId> {
    let mut path = vec![start];
    let mut used: BTreeSet<ResourceId> = BTreeSet::from([start]);
    let mut cur = start;
    loop {
        if graph.has_edge(cur, start) {
            path.push(start);
            return path;
        }
        let next = graph
            .successors(cur)
            .filter(|w| members.contains(w) && !used.contains(w))
            .find(|&w| reaches(graph, w, start, &used, members))
            .expect("vertex in a non-trivial component lies on a cycle");
        path.push(next);
        used.insert(next);
        cur = next;
    }
}

fn reaches(
    graph: &ResourceOrderGraph,
    from: ResourceId,
    target: ResourceId,
    blocked: &BTreeSet<ResourceId>,
    members: &BTreeSet<ResourceId>,
) -> bool {
    let mut seen = BTreeSet::from([from]);
    let mut todo = vec![from];
    while let Some(v) = todo.pop() {
        for w in graph.successors(v) {
            if w == target {
                return true;
            }
            if members.contains(&w) && !blocked.contains(&w) && seen.insert(w) {
                todo.push(w);
            }
        }
    }
    false
}

/// Topological order of an acyclic graph, inner resources first, ties broken
/// by smallest index.
fn resource_order(graph: &ResourceOrderGraph) -> Vec<ResourceId> {
    let mut pending: BTreeMap<ResourceId, usize> = graph
        .vertices
        .iter()
        .map(|&r| (r, graph.successors(r).count()))
        .collect();
    let mut preds: BTreeMap<ResourceId, Vec<ResourceId>> = BTreeMap::new();
    for (a, b) in graph.edges() {
        preds.entry(b).or_default().push(a);
    }
    let mut ready: BinaryHeap<Reverse<ResourceId>> = pending
        .iter()
        .filter(|&(_, &n)| n == 0)
        .map(|(&r, _)| Reverse(r))
        .collect();
    let mut order = Vec::with_capacity(pending.len());
    while let Some(Reverse(r)) = ready.pop() {
        order.push(r);
        for &p in preds.get(&r).into_iter().flatten() {
            let left = pending.get_mut(&p).expect("vertex");
            *left -= 1;
            if *left == 0 {
                ready.push(Reverse(p));
            }
        }
    }
    order
}
