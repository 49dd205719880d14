//! Maximal balanced subset selection.
//!
//! Finds the largest 0/1 selector vector `m` satisfying the two-sided balance
//! constraints `|sum_t m_t d_tk| <= delta_k sum_t m_t` for every feature `k`,
//! where `d_tk` is unit `t`'s deviation from the profile target on feature
//! `k`. The constraints are homogeneous, so the empty selection is always
//! feasible. Solved exactly by branch and bound over a bounded-variable
//! simplex relaxation; a brute-force enumerator serves as the test oracle.

mod mip;
mod simplex;

use std::time::Duration;

use thiserror::Error;

pub use mip::{MipResult, SolveStatus, ZeroOneProblem};
pub use simplex::{LinearProgram, LpError, LpOutcome, LpSolution};

/// Largest instance the exhaustive reference will accept.
pub const BRUTE_FORCE_MAX_UNITS: usize = 25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("brute force reference is limited to {BRUTE_FORCE_MAX_UNITS} units, got {0}")]
    Size(usize),
    #[error("inconsistent problem shape: {0}")]
    Shape(String),
}

/// Two-sided balance problem in deviation form.
#[derive(Debug, Clone)]
pub struct BalanceProblem {
    /// One column per feature, each of length `n_units`:
    /// `deviations[k][t] = B_k(X_t) - x*_k`.
    pub deviations: Vec<Vec<f64>>,
    /// Per-feature tolerance `delta_k >= 0`.
    pub tolerances: Vec<f64>,
    pub time_limit: Duration,
    /// Allowed integer shortfall from the proven bound.
    pub gap_tolerance: u64,
}

impl BalanceProblem {
    pub fn new(deviations: Vec<Vec<f64>>, tolerances: Vec<f64>) -> Self {
        BalanceProblem {
            deviations,
            tolerances,
            time_limit: Duration::from_secs(60),
            gap_tolerance: 0,
        }
    }

    pub fn n_units(&self) -> usize {
        self.deviations.first().map_or(0, Vec::len)
    }

    pub fn n_features(&self) -> usize {
        self.deviations.len()
    }

    fn check(&self) -> Result<(), SolverError> {
        if self.tolerances.len() != self.n_features() {
            return Err(SolverError::Shape(format!(
                "{} deviation columns but {} tolerances",
                self.n_features(),
                self.tolerances.len()
            )));
        }
        let n = self.n_units();
        for (k, col) in self.deviations.iter().enumerate() {
            if col.len() != n {
                return Err(SolverError::Shape(format!(
                    "deviation column {k} has length {}, expected {n}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(SolverError::Shape(format!(
                    "deviation column {k} contains non-finite values"
                )));
            }
        }
        if self.tolerances.iter().any(|t| !(*t >= 0.0)) {
            return Err(SolverError::Shape("negative tolerance".into()));
        }
        Ok(())
    }

    /// Two rows per feature: `sum m (d - delta) <= 0`, `sum m (-d - delta) <= 0`.
    fn rows(&self) -> Vec<(Vec<f64>, f64)> {
        let mut rows = Vec::with_capacity(2 * self.n_features());
        for (col, &delta) in self.deviations.iter().zip(&self.tolerances) {
            rows.push((col.iter().map(|d| d - delta).collect(), 0.0));
            rows.push((col.iter().map(|d| -d - delta).collect(), 0.0));
        }
        rows
    }
}

/// Outcome of a balanced-subset solve.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub selected: Vec<bool>,
    /// Number of selected units.
    pub objective: u64,
    /// Proven upper bound on the optimum; equals `objective` when optimal.
    pub upper_bound: u64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
}

impl SelectionResult {
    pub fn indices(&self) -> Vec<usize> {
        self.selected
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Exact feasibility audit of a selection against the raw deviations,
/// with relative slack `1e-9` per constraint.
pub fn audit_selection(problem: &BalanceProblem, selected: &[bool]) -> bool {
    mip::audit(&problem.rows(), selected)
}

/// LP relaxation value and fractional solution, honoring a partial
/// assignment (`Some(true)` fixes a unit in, `Some(false)` out).
pub fn solve_lp_relaxation(
    problem: &BalanceProblem,
    fixed: &[Option<bool>],
) -> Result<Option<LpSolution>, SolverError> {
    problem.check()?;
    let n = problem.n_units();
    if fixed.len() != n {
        return Err(SolverError::Shape(format!(
            "fixed assignment has length {}, expected {n}",
            fixed.len()
        )));
    }
    let lp = LinearProgram {
        objective: vec![1.0; n],
        rows: problem.rows(),
        lower: fixed
            .iter()
            .map(|f| if *f == Some(true) { 1.0 } else { 0.0 })
            .collect(),
        upper: fixed
            .iter()
            .map(|f| if *f == Some(false) { 0.0 } else { 1.0 })
            .collect(),
    };
    match simplex::solve(&lp) {
        Ok(LpOutcome::Optimal(sol)) => Ok(Some(sol)),
        Ok(LpOutcome::Infeasible) => Ok(None),
        Err(e) => Err(SolverError::Shape(format!("lp failure: {e}"))),
    }
}

/// Exact (or gap/time-limited) maximum balanced subset.
pub fn solve_max_balanced_subset(problem: &BalanceProblem) -> Result<SelectionResult, SolverError> {
    problem.check()?;
    let zo = ZeroOneProblem {
        objective: vec![1.0; problem.n_units()],
        rows: problem.rows(),
        time_limit: problem.time_limit,
        gap_tolerance: problem.gap_tolerance,
    };
    let r = mip::solve(&zo);
    debug_assert!(audit_selection(problem, &r.selected));
    Ok(SelectionResult {
        selected: r.selected,
        objective: r.objective,
        upper_bound: r.upper_bound,
        status: r.status,
        nodes_explored: r.nodes_explored,
    })
}

/// Exhaustive reference: maximum-cardinality feasible subset, ties broken
/// by the lexicographically smallest selector vector. Depth-first over
/// units with the "exclude" branch visited before "include", so the first
/// strict improvement found is the lexicographic minimum of its size.
pub fn brute_force_reference(problem: &BalanceProblem) -> Result<SelectionResult, SolverError> {
    problem.check()?;
    let n = problem.n_units();
    if n > BRUTE_FORCE_MAX_UNITS {
        return Err(SolverError::Size(n));
    }
    let rows = problem.rows();
    let scales: Vec<f64> = rows
        .iter()
        .map(|(coeffs, _)| coeffs.iter().fold(1.0f64, |m, c| m.max(c.abs())))
        .collect();

    let mut best: Vec<bool> = vec![false; n];
    let mut best_count = 0usize;
    let mut current = vec![false; n];
    let mut sums = vec![0.0; rows.len()];

    fn feasible(rows: &[(Vec<f64>, f64)], scales: &[f64], sums: &[f64], count: usize) -> bool {
        rows.iter().zip(scales).zip(sums).all(|(((_, rhs), scale), sum)| {
            *sum <= rhs + 1e-9 * scale * count.max(1) as f64
        })
    }

    fn walk(
        unit: usize,
        count: usize,
        n: usize,
        rows: &[(Vec<f64>, f64)],
        scales: &[f64],
        current: &mut Vec<bool>,
        sums: &mut Vec<f64>,
        best: &mut Vec<bool>,
        best_count: &mut usize,
    ) {
        // Cardinality bound: nothing below can strictly beat the incumbent.
        if count + (n - unit) <= *best_count {
            return;
        }
        if unit == n {
            if count > *best_count && feasible(rows, scales, sums, count) {
                *best_count = count;
                best.copy_from_slice(current);
            }
            return;
        }
        walk(unit + 1, count, n, rows, scales, current, sums, best, best_count);
        current[unit] = true;
        for (i, (coeffs, _)) in rows.iter().enumerate() {
            sums[i] += coeffs[unit];
        }
        walk(unit + 1, count + 1, n, rows, scales, current, sums, best, best_count);
        current[unit] = false;
        for (i, (coeffs, _)) in rows.iter().enumerate() {
            sums[i] -= coeffs[unit];
        }
    }

    walk(
        0,
        0,
        n,
        &rows,
        &scales,
        &mut current,
        &mut sums,
        &mut best,
        &mut best_count,
    );

    let status = if best_count == 0 {
        SolveStatus::EmptyOnly
    } else {
        SolveStatus::Optimal
    };
    Ok(SelectionResult {
        selected: best,
        objective: best_count as u64,
        upper_bound: best_count as u64,
        status,
        nodes_explored: 1 << n,
    })
}
