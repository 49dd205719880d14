//! Branch and bound for 0/1 maximization under linear `<=` rows.
//!
//! The objective must have 0/1 coefficients so that `floor(lp + eps)` is a
//! valid integer bound at every node. Node selection is best-bound with ties
//! to the oldest node; children fix the most fractional variable, the
//! "set to 1" child created first. The incumbent starts from a greedy
//! rounding of the root relaxation. Every accepted incumbent is re-audited
//! against the raw (unscaled) rows.

use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use super::simplex::{self, LinearProgram, LpOutcome};

const INT_TOL: f64 = 1e-6;
const BOUND_EPS: f64 = 1e-6;
/// Relative feasibility slack used by the audit, per row:
/// `1e-9 * max(1, max|a_j|) * max(1, #selected)`.
const AUDIT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    GapFeasible,
    TimeLimit,
    EmptyOnly,
}

#[derive(Debug, Clone)]
pub struct ZeroOneProblem {
    /// Maximized; every entry must be 0 or 1.
    pub objective: Vec<f64>,
    /// `coeffs . x <= rhs` rows over the full variable set.
    pub rows: Vec<(Vec<f64>, f64)>,
    pub time_limit: Duration,
    /// Allowed shortfall from the proven bound, in objective units.
    pub gap_tolerance: u64,
}

#[derive(Debug, Clone)]
pub struct MipResult {
    pub selected: Vec<bool>,
    pub objective: u64,
    pub upper_bound: u64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
}

/// Exact feasibility audit of a 0/1 point against the raw rows.
pub fn audit(rows: &[(Vec<f64>, f64)], selected: &[bool]) -> bool {
    let count = selected.iter().filter(|s| **s).count();
    for (coeffs, rhs) in rows {
        let mut acc = 0.0;
        let mut max_abs = 1.0f64;
        for (c, &s) in coeffs.iter().zip(selected) {
            max_abs = max_abs.max(c.abs());
            if s {
                acc += c;
            }
        }
        if acc > rhs + AUDIT_TOL * max_abs * count.max(1) as f64 {
            return false;
        }
    }
    true
}

struct Node {
    /// -1 free, 0 fixed off, 1 fixed on.
    fixed: Vec<i8>,
    bound: u64,
    /// Fractional relaxation at this node, when the LP solved cleanly.
    relaxation: Option<Vec<f64>>,
    id: u64,
}

struct QueueEntry {
    bound: u64,
    id: u64,
}

impl PartialEq for QueueEntry {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for QueueEntry {}
impl Ord for QueueEntry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // Highest bound first; oldest node on ties.
        self.bound
            .cmp(&other.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}
impl PartialOrd for QueueEntry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// LP relaxation honoring a partial assignment. Returns the optimum value
/// and the full-length solution, or `None` when the node is infeasible.
/// A numerical failure falls back to the trivial bound.
fn node_relaxation(
    problem: &ZeroOneProblem,
    fixed: &[i8],
) -> Option<(f64, Option<Vec<f64>>)> {
    let lower: Vec<f64> = fixed.iter().map(|&f| if f == 1 { 1.0 } else { 0.0 }).collect();
    let upper: Vec<f64> = fixed.iter().map(|&f| if f == 0 { 0.0 } else { 1.0 }).collect();
    let lp = LinearProgram {
        objective: problem.objective.clone(),
        rows: problem.rows.clone(),
        lower,
        upper,
    };
    match simplex::solve(&lp) {
        Ok(LpOutcome::Optimal(sol)) => Some((sol.objective, Some(sol.x))),
        Ok(LpOutcome::Infeasible) => None,
        Err(_) => {
            // Trivial bound: everything not fixed off could be selected.
            let bound = fixed
                .iter()
                .zip(&problem.objective)
                .filter(|(&f, _)| f != 0)
                .map(|(_, c)| c)
                .sum::<f64>();
            Some((bound, None))
        }
    }
}

fn objective_of(problem: &ZeroOneProblem, selected: &[bool]) -> u64 {
    selected
        .iter()
        .zip(&problem.objective)
        .filter(|(&s, _)| s)
        .map(|(_, c)| *c as u64)
        .sum()
}

/// Greedy rounding: scan units by descending fractional value (ties by
/// index), keeping each addition that stays audit-feasible. Fixed variables
/// are honored.
fn greedy_incumbent(
    problem: &ZeroOneProblem,
    relaxation: &[f64],
    fixed: &[i8],
) -> Option<Vec<bool>> {
    let n = relaxation.len();
    let mut order: Vec<usize> = (0..n).filter(|&j| fixed[j] == -1).collect();
    order.sort_by(|&a, &b| relaxation[b].total_cmp(&relaxation[a]).then(a.cmp(&b)));

    let mut selected: Vec<bool> = fixed.iter().map(|&f| f == 1).collect();
    if !audit(&problem.rows, &selected) {
        return None;
    }
    let mut sums: Vec<f64> = problem
        .rows
        .iter()
        .map(|(coeffs, _)| {
            coeffs
                .iter()
                .zip(&selected)
                .filter(|(_, &s)| s)
                .map(|(c, _)| c)
                .sum()
        })
        .collect();
    let scales: Vec<f64> = problem
        .rows
        .iter()
        .map(|(coeffs, _)| coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs())))
        .collect();
    let mut count = selected.iter().filter(|s| **s).count();

    for j in order {
        let feasible = problem.rows.iter().enumerate().all(|(i, (coeffs, rhs))| {
            sums[i] + coeffs[j] <= rhs + AUDIT_TOL * scales[i] * (count + 1).max(1) as f64
        });
        if feasible {
            selected[j] = true;
            count += 1;
            for (i, (coeffs, _)) in problem.rows.iter().enumerate() {
                sums[i] += coeffs[j];
            }
        }
    }
    audit(&problem.rows, &selected).then_some(selected)
}

pub fn solve(problem: &ZeroOneProblem) -> MipResult {
    let n = problem.objective.len();
    debug_assert!(problem
        .objective
        .iter()
        .all(|&c| c == 0.0 || c == 1.0));
    let started = Instant::now();
    let deadline = problem.time_limit;

    let empty = MipResult {
        selected: vec![false; n],
        objective: 0,
        upper_bound: 0,
        status: SolveStatus::EmptyOnly,
        nodes_explored: 0,
    };

    // Root relaxation. The empty selection is always available as a start.
    let root_fixed = vec![-1i8; n];
    let Some((root_lp, root_frac)) = node_relaxation(problem, &root_fixed) else {
        return empty;
    };
    let root_bound = (root_lp + BOUND_EPS).floor().max(0.0) as u64;

    let mut incumbent: Vec<bool> = vec![false; n];
    let mut incumbent_obj = 0u64;
    if let Some(frac) = &root_frac {
        if let Some(greedy) = greedy_incumbent(problem, frac, &root_fixed) {
            let obj = objective_of(problem, &greedy);
            if obj > incumbent_obj {
                incumbent_obj = obj;
                incumbent = greedy;
            }
        }
    }

    let mut nodes: Vec<Node> = vec![Node {
        fixed: root_fixed,
        bound: root_bound,
        relaxation: root_frac,
        id: 0,
    }];
    let mut queue = BinaryHeap::new();
    queue.push(QueueEntry { bound: root_bound, id: 0 });
    let mut next_id = 1u64;
    let mut explored = 0u64;

    while let Some(entry) = queue.pop() {
        let node = std::mem::replace(
            &mut nodes[entry.id as usize],
            Node { fixed: Vec::new(), bound: 0, relaxation: None, id: entry.id },
        );
        // Global bound is the largest bound still open (this entry's, since
        // the queue is bound-ordered).
        let global_bound = entry.bound.max(incumbent_obj);
        if global_bound <= incumbent_obj + problem.gap_tolerance {
            let status = if global_bound == incumbent_obj {
                SolveStatus::Optimal
            } else {
                SolveStatus::GapFeasible
            };
            return finish(problem, incumbent, incumbent_obj, global_bound, status, explored);
        }
        if started.elapsed() >= deadline {
            return finish(
                problem,
                incumbent,
                incumbent_obj,
                global_bound,
                SolveStatus::TimeLimit,
                explored,
            );
        }
        explored += 1;

        // Choose the branching variable from the node relaxation.
        let branch_var = match &node.relaxation {
            Some(frac) => {
                let mut integral = true;
                let mut best: Option<(usize, f64)> = None;
                for j in 0..n {
                    if node.fixed[j] != -1 {
                        continue;
                    }
                    let v = frac[j];
                    let dist = (v - v.round()).abs();
                    if dist > INT_TOL {
                        integral = false;
                        let from_half = (v - 0.5).abs();
                        match best {
                            Some((_, b)) if from_half >= b => {}
                            _ => best = Some((j, from_half)),
                        }
                    }
                }
                if integral {
                    // Integral relaxation: candidate incumbent, no children.
                    let candidate: Vec<bool> = (0..n)
                        .map(|j| match node.fixed[j] {
                            1 => true,
                            0 => false,
                            _ => frac[j] > 0.5,
                        })
                        .collect();
                    if audit(&problem.rows, &candidate) {
                        let obj = objective_of(problem, &candidate);
                        if obj > incumbent_obj {
                            incumbent_obj = obj;
                            incumbent = candidate;
                        }
                        continue;
                    }
                    // Audit rejected a nominally integral point: branch on
                    // the first free variable to keep progress.
                    (0..n).find(|&j| node.fixed[j] == -1)
                } else {
                    best.map(|(j, _)| j)
                }
            }
            // LP fell back to the trivial bound; branch lowest-index free.
            None => (0..n).find(|&j| node.fixed[j] == -1),
        };

        let Some(branch_var) = branch_var else {
            // Fully fixed: audit decides.
            let candidate: Vec<bool> = node.fixed.iter().map(|&f| f == 1).collect();
            if audit(&problem.rows, &candidate) {
                let obj = objective_of(problem, &candidate);
                if obj > incumbent_obj {
                    incumbent_obj = obj;
                    incumbent = candidate;
                }
            }
            continue;
        };

        // "Set to 1" child first, then "set to 0".
        for value in [1i8, 0i8] {
            let mut fixed = node.fixed.clone();
            fixed[branch_var] = value;
            if let Some((lp, frac)) = node_relaxation(problem, &fixed) {
                let bound = (lp + BOUND_EPS).floor().max(0.0) as u64;
                if bound > incumbent_obj + problem.gap_tolerance {
                    let id = next_id;
                    next_id += 1;
                    nodes.push(Node { fixed, bound, relaxation: frac, id });
                    queue.push(QueueEntry { bound, id });
                }
            }
        }
    }

    finish(
        problem,
        incumbent,
        incumbent_obj,
        incumbent_obj,
        SolveStatus::Optimal,
        explored,
    )
}

fn finish(
    problem: &ZeroOneProblem,
    selected: Vec<bool>,
    objective: u64,
    upper_bound: u64,
    status: SolveStatus,
    nodes_explored: u64,
) -> MipResult {
    debug_assert!(audit(&problem.rows, &selected));
    let status = if objective == 0 && status == SolveStatus::Optimal {
        SolveStatus::EmptyOnly
    } else {
        status
    };
    MipResult {
        selected,
        objective,
        upper_bound: upper_bound.max(objective),
        status,
        nodes_explored,
    }
}
