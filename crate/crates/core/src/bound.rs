//! Upper bound on blocking time as an assignment problem.
//!
//! Each lower-priority job can block `J_i` through at most one resource and
//! each resource through at most one job, so summing the longest section of
//! every (job, resource) pair of a maximum-weight assignment bounds `B_i`.
//! The assignment is solved with the Hungarian method on the cost matrix
//! `D - d`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::deadlock::{check_deadlock_free, DeadlockVerdict};
use crate::error::{Error, Result};
use crate::relevance::{relevant_jobs, relevant_resources};
use crate::taskset::{JobSet, ResourceId, ResourceSet, TaskSet};
use crate::time::Time;

/// `d(J_j, R_k)`: the longest section of each job on each resource.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockingMatrix {
    pub jobs: Vec<usize>,
    pub resources: Vec<ResourceId>,
    pub cells: Vec<Vec<Time>>,
}

impl BlockingMatrix {
    pub fn get(&self, row: usize, col: usize) -> Time {
        self.cells[row][col]
    }

    /// Cell for a job and resource, zero when either is not in the matrix.
    pub fn lookup(&self, job: usize, resource: ResourceId) -> Time {
        let row = self.jobs.iter().position(|&j| j == job);
        let col = self.resources.iter().position(|&r| r == resource);
        match (row, col) {
            (Some(r), Some(c)) => self.cells[r][c],
            _ => Time::ZERO,
        }
    }

    pub fn max(&self) -> Time {
        self.cells.iter().flatten().copied().max().unwrap_or(Time::ZERO)
    }

    pub fn rows(&self) -> usize {
        self.jobs.len()
    }

    pub fn cols(&self) -> usize {
        self.resources.len()
    }
}

pub fn blocking_time_matrix(ts: &TaskSet, jobs: &JobSet, resources: &ResourceSet) -> BlockingMatrix {
    let jobs: Vec<usize> = jobs.iter().copied().collect();
    let resources: Vec<ResourceId> = resources.iter().copied().collect();
    let cells = jobs
        .iter()
        .map(|&j| {
            resources
                .iter()
                .map(|&r| {
                    ts.get_job(j)
                        .into_iter()
                        .flat_map(|job| &job.sections)
                        .filter(|s| s.resource == r)
                        .map(|s| s.duration)
                        .max()
                        .unwrap_or(Time::ZERO)
                })
                .collect()
        })
        .collect();
    BlockingMatrix {
        jobs,
        resources,
        cells,
    }
}

/// Square cost matrix `D - d`, padded with `D` where a row or column has no
/// counterpart in the blocking matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostMatrix {
    cells: Vec<Vec<Time>>,
    real_rows: usize,
    real_cols: usize,
}

impl CostMatrix {
    pub fn from_blocking(d: &BlockingMatrix) -> Self {
        Self::from_weights(&d.cells, d.cols())
    }

    /// Cost matrix for a `rows × cols` weight grid.
    pub fn from_weights(weights: &[Vec<Time>], cols: usize) -> Self {
        let rows = weights.len();
        let n = rows.max(cols);
        let top = weights.iter().flatten().copied().max().unwrap_or(Time::ZERO);
        let cells = (0..n)
            .map(|r| {
                (0..n)
                    .map(|c| {
                        if r < rows && c < cols {
                            top - weights[r][c]
                        } else {
                            top
                        }
                    })
                    .collect()
            })
            .collect();
        CostMatrix {
            cells,
            real_rows: rows,
            real_cols: cols,
        }
    }

    pub fn size(&self) -> usize {
        self.cells.len()
    }

    pub fn get(&self, row: usize, col: usize) -> Time {
        self.cells[row][col]
    }

    pub fn is_phantom(&self, row: usize, col: usize) -> bool {
        row >= self.real_rows || col >= self.real_cols
    }

    /// Step 1: subtract each row's minimum from the row.
    pub fn reduce_rows(&mut self) {
        for row in &mut self.cells {
            if let Some(&min) = row.iter().min() {
                row.iter_mut().for_each(|c| *c -= min);
            }
        }
    }

    /// Step 2: subtract each column's minimum from the column.
    pub fn reduce_columns(&mut self) {
        for col in 0..self.size() {
            let min = self.cells.iter().map(|r| r[col]).min().unwrap_or(Time::ZERO);
            for row in &mut self.cells {
                row[col] -= min;
            }
        }
    }

    fn is_zero(&self, row: usize, col: usize) -> bool {
        self.cells[row][col].is_zero()
    }

    /// Step 3: a maximum matching restricted to zero cells, as `col_of_row`.
    fn zero_matching(&self) -> Vec<Option<usize>> {
        let n = self.size();
        let mut row_of_col: Vec<Option<usize>> = vec![None; n];
        for row in 0..n {
            let mut seen = vec![false; n];
            self.augment(row, &mut seen, &mut row_of_col, &[]);
        }
        let mut col_of_row = vec![None; n];
        for (c, r) in row_of_col.iter().enumerate() {
            if let Some(r) = r {
                col_of_row[*r] = Some(c);
            }
        }
        col_of_row
    }

    /// Kuhn augmenting path from `row`; columns in `banned` are unusable.
    fn augment(
        &self,
        row: usize,
        seen: &mut [bool],
        row_of_col: &mut [Option<usize>],
        banned: &[bool],
    ) -> bool {
        for col in 0..self.size() {
            if seen[col] || !self.is_zero(row, col) || banned.get(col).copied().unwrap_or(false) {
                continue;
            }
            seen[col] = true;
            let free = match row_of_col[col] {
                None => true,
                Some(other) => self.augment(other, seen, row_of_col, banned),
            };
            if free {
                row_of_col[col] = Some(row);
                return true;
            }
        }
        false
    }

    /// Step 4: minimum line cover of the zeros (König), then shift by the
    /// smallest uncovered value.
    fn shift(&mut self, col_of_row: &[Option<usize>]) {
        let n = self.size();
        let mut row_of_col = vec![None; n];
        for (r, c) in col_of_row.iter().enumerate() {
            if let Some(c) = c {
                row_of_col[*c] = Some(r);
            }
        }
        // Alternating reachability from unmatched rows.
        let mut row_marked = vec![false; n];
        let mut col_marked = vec![false; n];
        let mut todo: Vec<usize> = (0..n).filter(|&r| col_of_row[r].is_none()).collect();
        for &r in &todo {
            row_marked[r] = true;
        }
        while let Some(r) = todo.pop() {
            for c in 0..n {
                if self.is_zero(r, c) && !col_marked[c] {
                    col_marked[c] = true;
                    if let Some(next) = row_of_col[c] {
                        if !row_marked[next] {
                            row_marked[next] = true;
                            todo.push(next);
                        }
                    }
                }
            }
        }
        // Covered rows are the unmarked ones, covered columns the marked ones.
        let theta = (0..n)
            .filter(|&r| row_marked[r])
            .flat_map(|r| (0..n).filter(|&c| !col_marked[c]).map(move |c| (r, c)))
            .map(|(r, c)| self.cells[r][c])
            .min()
            .expect("an incomplete matching leaves uncovered cells");
        for (row, &marked) in self.cells.iter_mut().zip(&row_marked) {
            for (cell, &col_covered) in row.iter_mut().zip(&col_marked) {
                let row_covered = !marked;
                if !row_covered && !col_covered {
                    *cell -= theta;
                } else if row_covered && col_covered {
                    *cell += theta;
                }
            }
        }
    }

    /// Runs the Hungarian method to completion and returns the
    /// lexicographically smallest optimal assignment as `col_of_row`.
    fn solve(mut self) -> Vec<usize> {
        let n = self.size();
        loop {
            self.reduce_rows();
            self.reduce_columns();
            let matching = self.zero_matching();
            if matching.iter().all(Option::is_some) {
                break;
            }
            self.shift(&matching);
        }
        // Every perfect matching on the final zeros is optimal; pick the
        // smallest one row by row.
        let mut banned = vec![false; n];
        let mut out = Vec::with_capacity(n);
        for row in 0..n {
            let col = (0..n)
                .find(|&c| {
                    if banned[c] || !self.is_zero(row, c) {
                        return false;
                    }
                    banned[c] = true;
                    let ok = self.completes(row + 1, &banned);
                    banned[c] = false;
                    ok
                })
                .expect("a perfect zero matching exists");
            banned[col] = true;
            out.push(col);
        }
        out
    }

    /// Whether rows `from..` can be perfectly matched avoiding `banned`.
    fn completes(&self, from: usize, banned: &[bool]) -> bool {
        let n = self.size();
        let mut row_of_col = vec![None; n];
        (from..n).all(|row| {
            let mut seen = vec![false; n];
            self.augment(row, &mut seen, &mut row_of_col, banned)
        })
    }
}

/// `𝓗` and its value `h`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct AssignmentSet {
    pub value: Time,
    /// (job, resource) pairs by ascending job. Pairs with zero duration are
    /// left out.
    pub pairs: Vec<(usize, ResourceId)>,
}

impl AssignmentSet {
    pub fn resource_of(&self, job: usize) -> Option<ResourceId> {
        self.pairs.iter().find(|(j, _)| *j == job).map(|(_, r)| *r)
    }
}

/// Maximum-weight assignment of rows to distinct columns, as
/// `(row, col)` pairs over real cells with non-zero weight.
pub fn max_weight_assignment(weights: &[Vec<Time>], cols: usize) -> (Time, Vec<(usize, usize)>) {
    if weights.is_empty() || cols == 0 {
        return (Time::ZERO, Vec::new());
    }
    let cost = CostMatrix::from_weights(weights, cols);
    let mut pairs = Vec::new();
    let mut total = Time::ZERO;
    for (r, c) in cost.clone().solve().into_iter().enumerate() {
        if cost.is_phantom(r, c) || weights[r][c].is_zero() {
            continue;
        }
        total += weights[r][c];
        pairs.push((r, c));
    }
    (total, pairs)
}

pub fn assignment_of(d: &BlockingMatrix) -> AssignmentSet {
    let (value, pairs) = max_weight_assignment(&d.cells, d.cols());
    AssignmentSet {
        value,
        pairs: pairs
            .into_iter()
            .map(|(r, c)| (d.jobs[r], d.resources[c]))
            .collect(),
    }
}

/// `H(Γ_H, 𝓡_H)`.
pub fn hungarian_bound(ts: &TaskSet, jobs: &JobSet, resources: &ResourceSet) -> AssignmentSet {
    assignment_of(&blocking_time_matrix(ts, jobs, resources))
}

/// The bound for one job with everything needed to report or check it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct JobBound {
    pub job: usize,
    pub matrix: BlockingMatrix,
    pub assignment: AssignmentSet,
}

impl JobBound {
    pub fn value(&self) -> Time {
        self.assignment.value
    }
}

/// Bound on `B_i` over `Γ_N^i` and `𝓡_N^i`. Does not check for deadlock.
pub fn job_bound(ts: &TaskSet, i: usize) -> JobBound {
    let matrix = blocking_time_matrix(ts, &relevant_jobs(ts, i), &relevant_resources(ts, i));
    let assignment = assignment_of(&matrix);
    JobBound {
        job: i,
        matrix,
        assignment,
    }
}

pub fn per_job_bounds(ts: &TaskSet) -> Result<BTreeMap<usize, Time>> {
    if let DeadlockVerdict::Cyclic { cycle } = check_deadlock_free(ts) {
        return Err(Error::Cyclic(cycle));
    }
    Ok((1..=ts.len()).map(|i| (i, job_bound(ts, i).value())).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn t(v: u32) -> Time {
        Time::from_units(v)
    }

    fn grid(rows: &[&[u32]]) -> Vec<Vec<Time>> {
        rows.iter().map(|r| r.iter().map(|&v| t(v)).collect()).collect()
    }

    fn rs(ks: &[u32]) -> ResourceSet {
        ks.iter().map(|&k| ResourceId(k)).collect()
    }

    fn js(ks: &[usize]) -> JobSet {
        ks.iter().copied().collect()
    }

    #[test]
    fn matrices_from_fixtures() {
        let b = fixtures::ts_b();
        let d = blocking_time_matrix(&b, &js(&[3, 4, 5]), &rs(&[2, 3, 4]));
        assert_eq!(d.cells, grid(&[&[0, 2, 3], &[1, 0, 0], &[1, 2, 0]]));
        let c = fixtures::ts_c();
        let d = blocking_time_matrix(&c, &js(&[2, 3, 4]), &rs(&[1, 2]));
        assert_eq!(d.cells, grid(&[&[3, 4], &[1, 3], &[0, 1]]));
    }

    #[test]
    fn empty_matrix() {
        let d = blocking_time_matrix(&fixtures::ts_b(), &JobSet::new(), &rs(&[1, 2]));
        assert_eq!(d.rows(), 0);
        assert_eq!(d.cols(), 2);
        assert_eq!(assignment_of(&d), AssignmentSet::default());
    }

    #[test]
    fn cost_matrix_is_padded() {
        let c = fixtures::ts_c();
        let d = blocking_time_matrix(&c, &js(&[2, 3, 4]), &rs(&[1, 2]));
        let m = CostMatrix::from_blocking(&d);
        assert_eq!(m.size(), 3);
        assert_eq!(m.get(0, 0), t(1));
        assert_eq!(m.get(0, 1), t(0));
        assert_eq!(m.get(2, 0), t(4));
        assert_eq!(m.get(1, 2), t(4));
        assert!(m.is_phantom(1, 2));
    }

    #[test]
    fn reductions_leave_a_zero_everywhere() {
        let mut m = CostMatrix::from_weights(&grid(&[&[3, 4, 1], &[1, 3, 9], &[0, 1, 2]]), 3);
        m.reduce_rows();
        m.reduce_columns();
        for k in 0..3 {
            assert!((0..3).any(|c| m.get(k, c).is_zero()));
            assert!((0..3).any(|r| m.get(r, k).is_zero()));
        }
    }

    #[test]
    fn direct_bound_with_three_jobs() {
        let b = fixtures::ts_b();
        let a = hungarian_bound(&b, &js(&[3, 4, 5]), &rs(&[2, 3, 4]));
        assert_eq!(a.value, t(6));
        assert_eq!(
            a.pairs,
            vec![(3, ResourceId(4)), (4, ResourceId(2)), (5, ResourceId(3))]
        );
    }

    #[test]
    fn rectangular_bound() {
        let c = fixtures::ts_c();
        let a = hungarian_bound(&c, &js(&[2, 3, 4]), &rs(&[1, 2]));
        assert_eq!(a.value, t(6));
        assert_eq!(a.pairs, vec![(2, ResourceId(1)), (3, ResourceId(2))]);
    }

    #[test]
    fn nested_bounds() {
        assert_eq!(job_bound(&fixtures::ts_d(), 2).value(), t(12));
        let f = job_bound(&fixtures::ts_f(), 1);
        assert_eq!(f.value(), t(33));
        assert_eq!(
            f.assignment.pairs,
            vec![
                (2, ResourceId(3)),
                (3, ResourceId(1)),
                (4, ResourceId(4)),
                (5, ResourceId(2))
            ]
        );
        let e = job_bound(&fixtures::ts_e(), 1);
        assert_eq!(e.value(), t(4));
        assert_eq!(e.assignment.pairs, vec![(2, ResourceId(2)), (3, ResourceId(1))]);
    }

    #[test]
    fn all_bounds_without_nesting() {
        let bounds = per_job_bounds(&fixtures::ts_b()).unwrap();
        let want: BTreeMap<usize, Time> =
            [(1, 1), (2, 6), (3, 3), (4, 4), (5, 2), (6, 0)].map(|(i, v)| (i, t(v))).into();
        assert_eq!(bounds, want);
    }

    #[test]
    fn cyclic_sets_are_refused() {
        assert!(matches!(per_job_bounds(&fixtures::cross()), Err(Error::Cyclic(_))));
    }

    #[test]
    fn single_cell() {
        let (h, pairs) = max_weight_assignment(&grid(&[&[2]]), 1);
        assert_eq!(h, t(2));
        assert_eq!(pairs, vec![(0, 0)]);
    }

    #[test]
    fn greedy_zero_selection_trap() {
        // Row-by-row greedy selection on the reduced matrix gets stuck here;
        // the optimum needs an augmenting path.
        let w = grid(&[&[5, 5, 0], &[5, 0, 0], &[0, 5, 0]]);
        let (h, _) = max_weight_assignment(&w, 3);
        assert_eq!(h, t(10));
    }

    #[test]
    fn ties_prefer_smallest_pairs() {
        let (h, pairs) = max_weight_assignment(&grid(&[&[1, 1], &[1, 1]]), 2);
        assert_eq!(h, t(2));
        assert_eq!(pairs, vec![(0, 0), (1, 1)]);
    }

    #[test]
    fn fractional_durations() {
        let w = vec![
            vec![Time::from_ratio(1, 2), Time::from_ratio(1, 3)],
            vec![Time::from_ratio(1, 3), Time::from_ratio(1, 7)],
        ];
        let (h, pairs) = max_weight_assignment(&w, 2);
        assert_eq!(h, Time::from_ratio(2, 3));
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
    }
}
