//! Dense bounded-variable primal simplex with Bland's rule.
//!
//! Two-phase method: phase one minimizes the sum of artificial variables from
//! an all-artificial starting basis; phase two optimizes the real objective
//! with the artificials pinned to zero. Nonbasic variables rest at one of
//! their finite bounds, so box-constrained variables never need explicit
//! rows. The tableau is kept dense and updated by direct pivoting; model
//! sizes here are desk scale, so determinism and simplicity win over sparse
//! factorization.

/// Relational sense of a constraint row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

/// A linear program in the solver's native form: minimize `costs . x`
/// subject to `rows (sense) rhs` and `lower <= x <= upper`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub ncols: usize,
    pub costs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Sparse rows: `(column, coefficient)` pairs.
    pub rows: Vec<Vec<(usize, f64)>>,
    pub senses: Vec<Sense>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub enum LpOutcome {
    Optimal { values: Vec<f64>, objective: f64 },
    Infeasible,
    Unbounded,
    /// The pivot count hit the safety cap; treated as a numerical failure.
    Stalled,
}

const REDUCED_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq)]
enum ColState {
    AtLower,
    AtUpper,
    Basic(usize),
}

struct Tableau {
    n_rows: usize,
    /// Total column count: structural + slacks + artificials.
    ncols: usize,
    /// Row-major dense tableau, `n_rows x ncols`.
    tab: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    state: Vec<ColState>,
    /// Column occupying each basis row.
    basis: Vec<usize>,
    /// Current value of the basic variable in each row.
    x_basic: Vec<f64>,
}

impl Tableau {
    fn at(&self, row: usize, col: usize) -> f64 {
        self.tab[row * self.ncols + col]
    }

    fn nonbasic_value(&self, col: usize) -> f64 {
        match self.state[col] {
            ColState::AtLower => self.lower[col],
            ColState::AtUpper => self.upper[col],
            ColState::Basic(row) => self.x_basic[row],
        }
    }

    fn value(&self, col: usize) -> f64 {
        self.nonbasic_value(col)
    }

    fn is_fixed(&self, col: usize) -> bool {
        self.upper[col] - self.lower[col] < 1e-15
    }

    /// One phase of bounded simplex: minimize `costs` from the current basis.
    /// Returns `Ok(())` at optimality.
    ///
    /// Pricing is Dantzig (largest reduced-cost violation); after a run of
    /// degenerate pivots it falls back to Bland's rule, whose finite
    /// termination guarantee breaks any cycle.
    /// Reduced costs of every column under `costs`: `d_j = c_j - cb . T_j`.
    fn compute_reduced(&self, costs: &[f64]) -> Vec<f64> {
        let cb: Vec<f64> = self.basis.iter().map(|&c| costs[c]).collect();
        let mut reduced = costs.to_vec();
        for row in 0..self.n_rows {
            let weight = cb[row];
            if weight == 0.0 {
                continue;
            }
            let start = row * self.ncols;
            for (d, t) in reduced.iter_mut().zip(&self.tab[start..start + self.ncols]) {
                *d -= weight * t;
            }
        }
        reduced
    }

    fn optimize(&mut self, costs: &[f64], allow_entering: impl Fn(usize) -> bool) -> Result<(), LpOutcome> {
        let max_iters = 400 * (self.n_rows + self.ncols) + 2000;
        let mut degenerate_streak = 0usize;
        // The reduced-cost row is maintained across pivots and refreshed
        // periodically to shed accumulated rounding.
        let mut reduced = self.compute_reduced(costs);
        let mut pivots_since_refresh = 0usize;
        for _ in 0..max_iters {
            if pivots_since_refresh >= 100 {
                reduced = self.compute_reduced(costs);
                pivots_since_refresh = 0;
            }
            let use_bland = degenerate_streak >= 12;
            let mut entering: Option<(usize, f64, f64)> = None; // (col, |reduced|, dir)
            for col in 0..self.ncols {
                if matches!(self.state[col], ColState::Basic(_))
                    || self.is_fixed(col)
                    || !allow_entering(col)
                {
                    continue;
                }
                let dir = match self.state[col] {
                    ColState::AtLower if reduced[col] < -REDUCED_TOL => 1.0,
                    ColState::AtUpper if reduced[col] > REDUCED_TOL => -1.0,
                    _ => continue,
                };
                if use_bland {
                    entering = Some((col, reduced[col].abs(), dir));
                    break;
                }
                if entering
                    .as_ref()
                    .is_none_or(|&(_, best, _)| reduced[col].abs() > best)
                {
                    entering = Some((col, reduced[col].abs(), dir));
                }
            }
            let Some((col, _, dir)) = entering else {
                return Ok(());
            };

            // Ratio test. The entering variable moves by t in direction dir;
            // basic variable i changes at rate -dir * w_i.
            let mut t_limit = self.upper[col] - self.lower[col]; // may be +inf
            let mut leaving: Option<usize> = None;
            let mut leaving_col = usize::MAX;
            for row in 0..self.n_rows {
                let w = self.at(row, col);
                if w.abs() < PIVOT_TOL {
                    continue;
                }
                let rate = -dir * w;
                let bcol = self.basis[row];
                let lim = if rate < 0.0 {
                    if self.lower[bcol] == f64::NEG_INFINITY {
                        continue;
                    }
                    (self.x_basic[row] - self.lower[bcol]) / -rate
                } else {
                    if self.upper[bcol] == f64::INFINITY {
                        continue;
                    }
                    (self.upper[bcol] - self.x_basic[row]) / rate
                };
                let lim = lim.max(0.0);
                let tie = t_limit.is_finite()
                    && (lim - t_limit).abs() <= 1e-10 * (1.0 + t_limit.abs());
                if lim < t_limit && !tie {
                    t_limit = lim;
                    leaving = Some(row);
                    leaving_col = bcol;
                } else if tie && leaving.is_some() && bcol < leaving_col {
                    // Bland tie-break on the leaving variable index.
                    leaving = Some(row);
                    leaving_col = bcol;
                }
            }

            if t_limit == f64::INFINITY {
                return Err(LpOutcome::Unbounded);
            }
            if t_limit <= 1e-12 {
                degenerate_streak += 1;
            } else {
                degenerate_streak = 0;
            }

            // Move the basics.
            for row in 0..self.n_rows {
                let w = self.at(row, col);
                if w != 0.0 {
                    self.x_basic[row] -= dir * t_limit * w;
                }
            }

            match leaving {
                None => {
                    // Bound flip: the entering variable crosses to its other
                    // bound without a basis change.
                    self.state[col] = match self.state[col] {
                        ColState::AtLower => ColState::AtUpper,
                        ColState::AtUpper => ColState::AtLower,
                        ColState::Basic(_) => unreachable!(),
                    };
                }
                Some(row) => {
                    let entering_value = self.nonbasic_value(col) + dir * t_limit;
                    let out_col = self.basis[row];
                    // Pin the leaving variable exactly onto the bound it hit.
                    let rate = -dir * self.at(row, col);
                    self.state[out_col] = if rate < 0.0 {
                        ColState::AtLower
                    } else {
                        ColState::AtUpper
                    };
                    self.pivot(row, col);
                    self.state[col] = ColState::Basic(row);
                    self.basis[row] = col;
                    self.x_basic[row] = entering_value;
                    // Rank-one update of the reduced-cost row against the
                    // normalized pivot row.
                    let d_col = reduced[col];
                    if d_col != 0.0 {
                        let start = row * self.ncols;
                        for (d, t) in reduced
                            .iter_mut()
                            .zip(&self.tab[start..start + self.ncols])
                        {
                            *d -= d_col * t;
                        }
                    }
                    reduced[col] = 0.0;
                    pivots_since_refresh += 1;
                }
            }
        }
        Err(LpOutcome::Stalled)
    }

    /// Gaussian pivot on `(row, col)`.
    fn pivot(&mut self, row: usize, col: usize) {
        let ncols = self.ncols;
        let piv = self.at(row, col);
        debug_assert!(piv.abs() > PIVOT_TOL / 10.0, "pivot too small: {piv}");
        let inv = 1.0 / piv;
        let row_start = row * ncols;
        for k in 0..ncols {
            self.tab[row_start + k] *= inv;
        }
        self.tab[row_start + col] = 1.0;
        for r in 0..self.n_rows {
            if r == row {
                continue;
            }
            let factor = self.at(r, col);
            if factor == 0.0 {
                continue;
            }
            let r_start = r * ncols;
            for k in 0..ncols {
                self.tab[r_start + k] -= factor * self.tab[row_start + k];
            }
            self.tab[r_start + col] = 0.0;
        }
    }
}

/// Solve a bounded-variable LP with the two-phase primal simplex.
pub fn solve_lp(problem: &LpProblem) -> LpOutcome {
    let n = problem.ncols;
    let m = problem.rows.len();
    let ncols = n + 2 * m; // structural, slacks, artificials
    let slack = |i: usize| n + i;
    let artificial = |i: usize| n + m + i;

    let mut lower = Vec::with_capacity(ncols);
    let mut upper = Vec::with_capacity(ncols);
    lower.extend_from_slice(&problem.lower);
    upper.extend_from_slice(&problem.upper);
    for sense in &problem.senses {
        match sense {
            Sense::Le => {
                lower.push(0.0);
                upper.push(f64::INFINITY);
            }
            Sense::Ge => {
                lower.push(f64::NEG_INFINITY);
                upper.push(0.0);
            }
            Sense::Eq => {
                lower.push(0.0);
                upper.push(0.0);
            }
        }
    }
    for _ in 0..m {
        lower.push(0.0);
        upper.push(f64::INFINITY);
    }

    // Nonbasic variables rest at a finite bound.
    let mut state: Vec<ColState> = (0..ncols)
        .map(|c| {
            if lower[c] > f64::NEG_INFINITY {
                ColState::AtLower
            } else {
                ColState::AtUpper
            }
        })
        .collect();

    // Residuals at the initial nonbasic point decide artificial signs.
    let mut tab = vec![0.0; m * ncols];
    let mut basis = Vec::with_capacity(m);
    let mut x_basic = Vec::with_capacity(m);
    for i in 0..m {
        let mut residual = problem.rhs[i];
        for &(col, coeff) in &problem.rows[i] {
            let v = match state[col] {
                ColState::AtLower => lower[col],
                ColState::AtUpper => upper[col],
                ColState::Basic(_) => unreachable!(),
            };
            residual -= coeff * v;
        }
        // Slack starts at its finite bound, which is 0 for every sense.
        let sgn = if residual >= 0.0 { 1.0 } else { -1.0 };
        for &(col, coeff) in &problem.rows[i] {
            tab[i * ncols + col] += sgn * coeff;
        }
        tab[i * ncols + slack(i)] = sgn;
        tab[i * ncols + artificial(i)] = 1.0;
        basis.push(artificial(i));
        x_basic.push(residual.abs());
        state[artificial(i)] = ColState::Basic(i);
    }

    let mut tableau = Tableau {
        n_rows: m,
        ncols,
        tab,
        lower,
        upper,
        state,
        basis,
        x_basic,
    };

    // Phase one: minimize the artificial sum.
    let mut phase1 = vec![0.0; ncols];
    for i in 0..m {
        phase1[artificial(i)] = 1.0;
    }
    match tableau.optimize(&phase1, |_| true) {
        Ok(()) => {}
        // Phase 1 is bounded below by 0, so an unbounded verdict here means
        // the pivoting went numerically astray.
        Err(LpOutcome::Unbounded) => return LpOutcome::Stalled,
        Err(out) => return out,
    }
    let infeasibility: f64 = (0..m)
        .filter(|&i| tableau.basis[i] >= artificial(0))
        .map(|i| tableau.x_basic[i].abs())
        .sum();
    if infeasibility > FEAS_TOL {
        return LpOutcome::Infeasible;
    }

    // Drive remaining artificials out of the basis where possible; rows with
    // no eligible pivot are redundant and keep their artificial fixed at 0.
    for row in 0..m {
        if tableau.basis[row] < artificial(0) {
            continue;
        }
        let mut best: Option<(usize, f64)> = None;
        for col in 0..n + m {
            if matches!(tableau.state[col], ColState::Basic(_)) {
                continue;
            }
            let coeff = tableau.at(row, col).abs();
            if coeff > 1e-7 && best.is_none_or(|(_, b)| coeff > b) {
                best = Some((col, coeff));
            }
        }
        if let Some((col, _)) = best {
            let out_col = tableau.basis[row];
            let entering_value = tableau.nonbasic_value(col);
            tableau.state[out_col] = ColState::AtLower;
            tableau.pivot(row, col);
            tableau.state[col] = ColState::Basic(row);
            tableau.basis[row] = col;
            tableau.x_basic[row] = entering_value;
        }
    }
    // Pin every artificial to zero for phase two.
    for i in 0..m {
        tableau.lower[artificial(i)] = 0.0;
        tableau.upper[artificial(i)] = 0.0;
        if !matches!(tableau.state[artificial(i)], ColState::Basic(_)) {
            tableau.state[artificial(i)] = ColState::AtLower;
        }
    }

    // Phase two: the real objective.
    let mut costs = vec![0.0; ncols];
    costs[..n].copy_from_slice(&problem.costs);
    let art_start = artificial(0);
    match tableau.optimize(&costs, |col| col < art_start) {
        Ok(()) => {}
        Err(out) => return out,
    }

    let values: Vec<f64> = (0..n).map(|c| tableau.value(c)).collect();
    let objective: f64 = values
        .iter()
        .zip(&problem.costs)
        .map(|(v, c)| v * c)
        .sum();
    LpOutcome::Optimal { values, objective }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(
        costs: Vec<f64>,
        bounds: Vec<(f64, f64)>,
        rows: Vec<(Vec<(usize, f64)>, Sense, f64)>,
    ) -> LpProblem {
        let ncols = costs.len();
        let (lower, upper): (Vec<f64>, Vec<f64>) = bounds.into_iter().unzip();
        let mut r = Vec::new();
        let mut s = Vec::new();
        let mut b = Vec::new();
        for (terms, sense, rhs) in rows {
            r.push(terms);
            s.push(sense);
            b.push(rhs);
        }
        LpProblem {
            ncols,
            costs,
            lower,
            upper,
            rows: r,
            senses: s,
            rhs: b,
        }
    }

    fn expect_optimal(outcome: LpOutcome) -> (Vec<f64>, f64) {
        match outcome {
            LpOutcome::Optimal { values, objective } => (values, objective),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn box_only_minimum_is_at_bounds() {
        let p = lp(vec![1.0, -1.0], vec![(0.0, 2.0), (0.0, 3.0)], vec![]);
        let (x, obj) = expect_optimal(solve_lp(&p));
        assert_eq!(x, vec![0.0, 3.0]);
        assert_eq!(obj, -3.0);
    }

    #[test]
    fn simple_cover_relaxation() {
        // minimize x1 + 2 x2 s.t. x1 + x2 >= 1, x in [0,1]^2.
        let p = lp(
            vec![1.0, 2.0],
            vec![(0.0, 1.0), (0.0, 1.0)],
            vec![(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 1.0)],
        );
        let (x, obj) = expect_optimal(solve_lp(&p));
        assert!((obj - 1.0).abs() < 1e-9);
        assert!((x[0] - 1.0).abs() < 1e-9 && x[1].abs() < 1e-9);
    }

    #[test]
    fn infeasible_row_is_detected() {
        let p = lp(
            vec![0.0, 0.0],
            vec![(0.0, 1.0), (0.0, 1.0)],
            vec![(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 3.0)],
        );
        assert!(matches!(solve_lp(&p), LpOutcome::Infeasible));
    }

    #[test]
    fn equality_constraints_hold() {
        // minimize x + y s.t. x - y = 2, x in [0,5], y in [0,5].
        let p = lp(
            vec![1.0, 1.0],
            vec![(0.0, 5.0), (0.0, 5.0)],
            vec![(vec![(0, 1.0), (1, -1.0)], Sense::Eq, 2.0)],
        );
        let (x, obj) = expect_optimal(solve_lp(&p));
        assert!((x[0] - x[1] - 2.0).abs() < 1e-9);
        assert!((obj - 2.0).abs() < 1e-9);
    }

    #[test]
    fn mixed_bounds_and_le_row() {
        // minimize -x - y, x in [0,5] continuous, y in [0,1], x + 2y <= 4.
        let p = lp(
            vec![-1.0, -1.0],
            vec![(0.0, 5.0), (0.0, 1.0)],
            vec![(vec![(0, 1.0), (1, 2.0)], Sense::Le, 4.0)],
        );
        let (x, obj) = expect_optimal(solve_lp(&p));
        assert!((obj + 4.0).abs() < 1e-9, "objective {obj}, x {x:?}");
    }

    #[test]
    fn degenerate_redundant_rows() {
        // Duplicate equality rows exercise the redundant-row path.
        let p = lp(
            vec![1.0],
            vec![(0.0, 10.0)],
            vec![
                (vec![(0, 1.0)], Sense::Eq, 4.0),
                (vec![(0, 1.0)], Sense::Eq, 4.0),
            ],
        );
        let (x, obj) = expect_optimal(solve_lp(&p));
        assert!((x[0] - 4.0).abs() < 1e-9);
        assert!((obj - 4.0).abs() < 1e-9);
    }

    #[test]
    fn negative_lower_bounds() {
        // minimize x subject to x >= -3 via bounds only.
        let p = lp(vec![1.0], vec![(-3.0, 3.0)], vec![]);
        let (x, obj) = expect_optimal(solve_lp(&p));
        assert_eq!(x[0], -3.0);
        assert_eq!(obj, -3.0);
    }

    #[test]
    fn fractional_vertex_is_found() {
        // minimize -x1 - x2 s.t. 2x1 + x2 <= 2, x1 + 2x2 <= 2 in [0,1]^2;
        // optimum at (2/3, 2/3).
        let p = lp(
            vec![-1.0, -1.0],
            vec![(0.0, 1.0), (0.0, 1.0)],
            vec![
                (vec![(0, 2.0), (1, 1.0)], Sense::Le, 2.0),
                (vec![(0, 1.0), (1, 2.0)], Sense::Le, 2.0),
            ],
        );
        let (x, obj) = expect_optimal(solve_lp(&p));
        assert!((x[0] - 2.0 / 3.0).abs() < 1e-9);
        assert!((x[1] - 2.0 / 3.0).abs() < 1e-9);
        assert!((obj + 4.0 / 3.0).abs() < 1e-9);
    }
}

#[cfg(test)]
mod fixed_bound_nodes {
    use super::*;

    #[test]
    fn fixed_binary_node_lp() {
        // min x1 + x2, x1 in [0,1], x2 fixed at 1, 2x1 + 2x2 >= 3.
        let p = LpProblem {
            ncols: 2,
            costs: vec![1.0, 1.0],
            lower: vec![0.0, 1.0],
            upper: vec![1.0, 1.0],
            rows: vec![vec![(0, 2.0), (1, 2.0)]],
            senses: vec![Sense::Ge],
            rhs: vec![3.0],
        };
        match solve_lp(&p) {
            LpOutcome::Optimal { values, objective } => {
                assert!((objective - 1.5).abs() < 1e-9, "obj {objective} vals {values:?}");
                assert!((values[0] - 0.5).abs() < 1e-9, "vals {values:?}");
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn both_fixed_node_lp() {
        let p = LpProblem {
            ncols: 2,
            costs: vec![1.0, 1.0],
            lower: vec![1.0, 1.0],
            upper: vec![1.0, 1.0],
            rows: vec![vec![(0, 2.0), (1, 2.0)]],
            senses: vec![Sense::Ge],
            rhs: vec![3.0],
        };
        match solve_lp(&p) {
            LpOutcome::Optimal { values, objective } => {
                assert!((objective - 2.0).abs() < 1e-9, "obj {objective} vals {values:?}");
            }
            other => panic!("expected optimal, got {other:?}"),
        }
    }
}
