//! Bounded-variable primal simplex with a two-phase start.
//!
//! Solves `maximize c.x` subject to `A x <= b` and `l <= x <= u` over dense
//! rows. Each constraint row is normalized by `max(1, max |a_ij|)` before
//! pivoting; rows that start infeasible under the all-at-lower-bound point
//! get a phase-1 artificial. Dantzig pricing with a permanent switch to
//! Bland's rule once the iteration count suggests cycling. Constraint data
//! is stored column-major: every pricing pass walks one structural column
//! at a time.

const TOL_RC: f64 = 1e-9;
const TOL_PIV: f64 = 1e-10;
const TOL_FEAS: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Objective coefficients, one per variable; maximized.
    pub objective: Vec<f64>,
    /// Dense `a.x <= rhs` rows.
    pub rows: Vec<(Vec<f64>, f64)>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub objective: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("simplex failure: {0}")]
pub struct LpError(pub String);

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum VarState {
    Basic(usize),
    AtLower,
    AtUpper,
}

/// Variable layout: structural columns first, then one slack per row, then
/// any phase-1 artificials.
struct Tableau {
    n_struct: usize,
    m: usize,
    /// Scaled structural coefficients, column-major (`cols[j][i]`), with the
    /// row sign already folded in.
    cols: Vec<Vec<f64>>,
    /// Slack coefficient per row (+1 or -1 after sign flips).
    slack_sign: Vec<f64>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Artificial variable index per row, when one was created.
    artificial: Vec<Option<usize>>,
    n_total: usize,
    state: Vec<VarState>,
    basis: Vec<usize>,
    binv: Vec<Vec<f64>>,
    xb: Vec<f64>,
}

impl Tableau {
    fn column(&self, var: usize, out: &mut [f64]) {
        out.fill(0.0);
        if var < self.n_struct {
            out.copy_from_slice(&self.cols[var]);
        } else if var < self.n_struct + self.m {
            let row = var - self.n_struct;
            out[row] = self.slack_sign[row];
        } else {
            let row = (0..self.m)
                .find(|&i| self.artificial[i] == Some(var))
                .expect("artificial row");
            out[row] = 1.0;
        }
    }

    fn value_of(&self, var: usize) -> f64 {
        match self.state[var] {
            VarState::AtLower => self.lower[var],
            VarState::AtUpper => self.upper[var],
            VarState::Basic(r) => self.xb[r],
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactorize(&mut self) -> Result<(), LpError> {
        let m = self.m;
        let mut b = vec![vec![0.0; m]; m];
        let mut col = vec![0.0; m];
        for (k, &var) in self.basis.iter().enumerate() {
            self.column(var, &mut col);
            for i in 0..m {
                b[i][k] = col[i];
            }
        }
        let mut inv = vec![vec![0.0; m]; m];
        for (i, row) in inv.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        for k in 0..m {
            let (mut pivot_row, mut pivot_val) = (k, b[k][k].abs());
            for r in k + 1..m {
                if b[r][k].abs() > pivot_val {
                    pivot_row = r;
                    pivot_val = b[r][k].abs();
                }
            }
            if pivot_val <= TOL_PIV {
                return Err(LpError("singular basis during refactorization".into()));
            }
            b.swap(k, pivot_row);
            inv.swap(k, pivot_row);
            let d = b[k][k];
            for v in b[k].iter_mut() {
                *v /= d;
            }
            for v in inv[k].iter_mut() {
                *v /= d;
            }
            for r in 0..m {
                if r != k {
                    let f = b[r][k];
                    if f != 0.0 {
                        for c in 0..m {
                            b[r][c] -= f * b[k][c];
                            inv[r][c] -= f * inv[k][c];
                        }
                    }
                }
            }
        }
        self.binv = inv;
        self.recompute_basics();
        Ok(())
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let mut resid = self.rhs.clone();
        for var in 0..self.n_total {
            if matches!(self.state[var], VarState::Basic(_)) {
                continue;
            }
            let v = self.value_of(var);
            if v == 0.0 {
                continue;
            }
            if var < self.n_struct {
                let col = &self.cols[var];
                for i in 0..m {
                    resid[i] -= col[i] * v;
                }
            } else if var < self.n_struct + m {
                let row = var - self.n_struct;
                resid[row] -= self.slack_sign[row] * v;
            }
            // Artificials are never nonbasic at a nonzero value.
        }
        for r in 0..m {
            self.xb[r] = (0..m).map(|k| self.binv[r][k] * resid[k]).sum();
        }
    }
}

/// Runs primal simplex iterations with the given costs until optimality.
fn optimize(t: &mut Tableau, costs: &[f64]) -> Result<(), LpError> {
    let m = t.m;
    let max_iters = 50 * (t.n_total + m) + 2000;
    let bland_after = 5 * (t.n_total + m) + 500;
    let mut col = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mut y = vec![0.0; m];
    let mut since_refactor = 0usize;

    for iter in 0..max_iters {
        let bland = iter >= bland_after;

        // Simplex multipliers y = c_B B^{-1}.
        y.fill(0.0);
        for r in 0..m {
            let cb = costs[t.basis[r]];
            if cb != 0.0 {
                let brow = &t.binv[r];
                for k in 0..m {
                    y[k] += cb * brow[k];
                }
            }
        }

        // Price nonbasic variables.
        let mut entering: Option<(usize, f64, bool)> = None; // (var, |rc|, increasing)
        'pricing: for var in 0..t.n_total {
            let at_lower = match t.state[var] {
                VarState::AtLower => true,
                VarState::AtUpper => false,
                VarState::Basic(_) => continue,
            };
            if t.lower[var] == t.upper[var] {
                continue; // fixed
            }
            let mut rc = costs[var];
            if var < t.n_struct {
                let c = &t.cols[var];
                for i in 0..m {
                    rc -= y[i] * c[i];
                }
            } else if var < t.n_struct + m {
                let row = var - t.n_struct;
                rc -= y[row] * t.slack_sign[row];
            } else {
                let row = (0..m)
                    .find(|&i| t.artificial[i] == Some(var))
                    .expect("artificial row");
                rc -= y[row];
            }
            let eligible = if at_lower { rc > TOL_RC } else { rc < -TOL_RC };
            if eligible {
                if bland {
                    entering = Some((var, rc.abs(), at_lower));
                    break 'pricing;
                }
                match entering {
                    Some((_, best, _)) if rc.abs() <= best => {}
                    _ => entering = Some((var, rc.abs(), at_lower)),
                }
            }
        }

        let Some((e, _, increasing)) = entering else {
            return Ok(()); // optimal for these costs
        };
        let dir = if increasing { 1.0 } else { -1.0 };

        t.column(e, &mut col);
        for r in 0..m {
            let brow = &t.binv[r];
            w[r] = (0..m).map(|k| brow[k] * col[k]).sum();
        }

        // Ratio test: entering moves by step >= 0, basic r moves by -dir*w[r].
        let own_span = t.upper[e] - t.lower[e];
        let mut best_step = own_span; // may be infinite for slacks
        let mut leaving: Option<(usize, bool)> = None; // (row, leaves_at_upper)
        for r in 0..m {
            let g = dir * w[r];
            let var = t.basis[r];
            if g > TOL_PIV {
                let room = (t.xb[r] - t.lower[var]).max(0.0);
                let step = room / g;
                if step < best_step - 1e-12
                    || (step < best_step + 1e-12
                        && leaving.is_some_and(|(lr, _)| t.basis[lr] > var))
                {
                    best_step = step;
                    leaving = Some((r, false));
                }
            } else if g < -TOL_PIV && t.upper[var].is_finite() {
                let room = (t.upper[var] - t.xb[r]).max(0.0);
                let step = room / -g;
                if step < best_step - 1e-12
                    || (step < best_step + 1e-12
                        && leaving.is_some_and(|(lr, _)| t.basis[lr] > var))
                {
                    best_step = step;
                    leaving = Some((r, true));
                }
            }
        }

        if best_step.is_infinite() {
            return Err(LpError("unbounded direction".into()));
        }

        match leaving {
            None => {
                // Bound flip: entering runs to its opposite bound.
                for r in 0..m {
                    t.xb[r] -= dir * best_step * w[r];
                }
                t.state[e] = if increasing {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
            }
            Some((row, leaves_at_upper)) => {
                let entering_value = t.value_of(e) + dir * best_step;
                for r in 0..m {
                    if r != row {
                        t.xb[r] -= dir * best_step * w[r];
                    }
                }
                let out_var = t.basis[row];
                t.state[out_var] = if leaves_at_upper {
                    VarState::AtUpper
                } else {
                    VarState::AtLower
                };
                t.basis[row] = e;
                t.state[e] = VarState::Basic(row);
                t.xb[row] = entering_value;
                // Elementary update of B^{-1}.
                let pivot = w[row];
                if pivot.abs() <= TOL_PIV {
                    return Err(LpError("vanishing pivot".into()));
                }
                for k in 0..m {
                    t.binv[row][k] /= pivot;
                }
                for r in 0..m {
                    if r != row && w[r] != 0.0 {
                        let f = w[r];
                        for k in 0..m {
                            t.binv[r][k] -= f * t.binv[row][k];
                        }
                    }
                }
                since_refactor += 1;
                if since_refactor >= 64 {
                    since_refactor = 0;
                    t.refactorize()?;
                }
            }
        }
    }
    Err(LpError("iteration limit reached".into()))
}

/// Two-phase solve. Returns the optimum or proves infeasibility.
pub fn solve(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_parts(&lp.objective, &lp.rows, &lp.lower, &lp.upper)
}

/// Borrow-based entry point used by the branch and bound, which re-solves
/// the same rows under many different bounds.
pub fn solve_parts(
    objective: &[f64],
    rows: &[(Vec<f64>, f64)],
    lp_lower: &[f64],
    lp_upper: &[f64],
) -> Result<LpOutcome, LpError> {
    let lp = BorrowedLp {
        objective,
        rows,
        lower: lp_lower,
        upper: lp_upper,
    };
    let n = lp.objective.len();
    let m = lp.rows.len();
    debug_assert!(lp.lower.len() == n && lp.upper.len() == n);
    debug_assert!(lp
        .lower
        .iter()
        .zip(lp.upper)
        .all(|(l, u)| l.is_finite() && l <= u));

    if m == 0 {
        let x: Vec<f64> = (0..n)
            .map(|j| {
                if lp.objective[j] > 0.0 && lp.upper[j].is_finite() {
                    lp.upper[j]
                } else {
                    lp.lower[j]
                }
            })
            .collect();
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        return Ok(LpOutcome::Optimal(LpSolution { objective, x }));
    }

    // Row scaling keeps pivot magnitudes comparable across constraints; the
    // residual at the all-at-lower-bound point decides row signs and
    // phase-1 artificials.
    let mut scaled_rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    let mut sign = vec![1.0; m];
    let mut artificial: Vec<Option<usize>> = vec![None; m];
    let mut n_total = n + m;
    for (i, (coeffs, b)) in lp.rows.iter().enumerate() {
        debug_assert_eq!(coeffs.len(), n);
        let scale = coeffs.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let row: Vec<f64> = coeffs.iter().map(|c| c / scale).collect();
        let b = b / scale;
        let resid = b - row.iter().zip(&lp.lower).map(|(c, l)| c * l).sum::<f64>();
        if resid < -TOL_FEAS {
            sign[i] = -1.0;
            artificial[i] = Some(n_total);
            n_total += 1;
        }
        rhs.push(sign[i] * b);
        scaled_rows.push(row);
    }

    let mut cols = vec![vec![0.0; m]; n];
    for (i, row) in scaled_rows.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            cols[j][i] = sign[i] * v;
        }
    }

    let mut lower = lp.lower.clone();
    let mut upper = lp.upper.clone();
    lower.extend(std::iter::repeat_n(0.0, n_total - n));
    upper.extend(std::iter::repeat_n(f64::INFINITY, n_total - n));

    let mut state = vec![VarState::AtLower; n_total];
    let mut basis = Vec::with_capacity(m);
    for i in 0..m {
        let basic = artificial[i].unwrap_or(n + i);
        basis.push(basic);
        state[basic] = VarState::Basic(i);
    }

    let mut t = Tableau {
        n_struct: n,
        m,
        cols,
        slack_sign: sign,
        rhs,
        lower,
        upper,
        artificial,
        n_total,
        state,
        basis,
        binv: {
            let mut id = vec![vec![0.0; m]; m];
            for (i, row) in id.iter_mut().enumerate() {
                row[i] = 1.0;
            }
            id
        },
        xb: vec![0.0; m],
    };
    t.recompute_basics();

    let has_artificials = n_total > n + m;
    if has_artificials {
        let mut phase1 = vec![0.0; n_total];
        for c in phase1.iter_mut().skip(n + m) {
            *c = -1.0;
        }
        optimize(&mut t, &phase1)?;
        let infeasibility: f64 = (n + m..n_total).map(|v| t.value_of(v).max(0.0)).sum();
        if infeasibility > TOL_FEAS {
            return Ok(LpOutcome::Infeasible);
        }
        // Pin artificials at zero for phase 2; basic ones may stay at 0.
        for v in n + m..n_total {
            t.upper[v] = 0.0;
        }
    }

    let mut costs = vec![0.0; n_total];
    costs[..n].copy_from_slice(&lp.objective);
    optimize(&mut t, &costs)?;

    let mut x = vec![0.0; n];
    for (j, slot) in x.iter_mut().enumerate() {
        *slot = t.value_of(j).clamp(lp.lower[j], lp.upper[j]);
    }
    let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
    Ok(LpOutcome::Optimal(LpSolution { objective, x }))
}
