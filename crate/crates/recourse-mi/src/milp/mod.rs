//! Solver-agnostic MILP representation and two exact solvers.
//!
//! [`solve`] runs branch-and-bound over LP relaxations solved by the bundled
//! bounded-variable simplex. [`solve_exhaustive`] enumerates every
//! exactly-one assignment of the annotated selection groups and serves as an
//! independent correctness oracle for small selection-structured instances.
//! Both are deterministic under fixed parameters.

mod branch_bound;
mod simplex;

pub use branch_bound::lp_relax;
pub use simplex::Sense;

use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

pub(crate) use simplex::LpProblem;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("variable {0:?} referenced but not declared")]
    UnknownVariable(usize),
    #[error("continuous variable {0:?} must have finite bounds")]
    UnboundedVariable(String),
    #[error("selection groups must be disjoint (variable {0:?} repeats)")]
    OverlappingGroups(usize),
    #[error("LP relaxation is unbounded; the model is malformed")]
    UnboundedRelaxation,
    #[error("model has no selection annotation; exhaustive enumeration needs one")]
    NotAnnotated,
    #[error("enumeration budget exceeded: {0} assignments")]
    EnumerationBudget(u128),
    #[error("exhaustive enumeration unsupported: {0}")]
    ExhaustiveUnsupported(String),
}

/// Handle to a declared variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// Structure annotation for selection-type models: exactly-one binary groups
/// (one value chosen per feature) plus scenario indicator binaries.
#[derive(Debug, Clone, Default)]
pub struct SelectionStructure {
    pub groups: Vec<Vec<VarId>>,
    pub indicators: Vec<VarId>,
}

/// A mixed-integer linear program, objective sense minimize.
#[derive(Debug, Clone, Default)]
pub struct MilpModel {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    pub objective: Vec<(VarId, f64)>,
    pub selection: Option<SelectionStructure>,
}

impl MilpModel {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_binary(&mut self, name: impl Into<String>) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarKind::Binary,
            lower: 0.0,
            upper: 1.0,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_continuous(&mut self, name: impl Into<String>, lower: f64, upper: f64) -> VarId {
        self.variables.push(Variable {
            name: name.into(),
            kind: VarKind::Continuous,
            lower,
            upper,
        });
        VarId(self.variables.len() - 1)
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        sense: Sense,
        rhs: f64,
    ) {
        self.constraints.push(Constraint {
            name: name.into(),
            terms,
            sense,
            rhs,
        });
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms;
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn validate(&self) -> Result<(), MilpError> {
        let n = self.variables.len();
        for var in &self.variables {
            if var.kind == VarKind::Continuous
                && !(var.lower.is_finite() && var.upper.is_finite())
            {
                return Err(MilpError::UnboundedVariable(var.name.clone()));
            }
        }
        let check = |id: VarId| {
            if id.0 >= n {
                Err(MilpError::UnknownVariable(id.0))
            } else {
                Ok(())
            }
        };
        for c in &self.constraints {
            for &(id, _) in &c.terms {
                check(id)?;
            }
        }
        for &(id, _) in &self.objective {
            check(id)?;
        }
        if let Some(sel) = &self.selection {
            let mut seen = vec![false; n];
            for group in &sel.groups {
                for &id in group {
                    check(id)?;
                    if seen[id.0] {
                        return Err(MilpError::OverlappingGroups(id.0));
                    }
                    seen[id.0] = true;
                }
            }
            for &id in &sel.indicators {
                check(id)?;
            }
        }
        Ok(())
    }

    /// Objective value of an assignment.
    pub fn objective_value(&self, assignment: &[f64]) -> f64 {
        self.objective
            .iter()
            .map(|&(id, c)| c * assignment[id.0])
            .sum()
    }

    /// Largest constraint violation of an assignment (0 when feasible).
    pub fn max_violation(&self, assignment: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(id, v)| v * assignment[id.0]).sum();
            let violation = match c.sense {
                Sense::Le => lhs - c.rhs,
                Sense::Ge => c.rhs - lhs,
                Sense::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(violation);
        }
        for (var, &v) in self.variables.iter().zip(assignment) {
            worst = worst.max(var.lower - v).max(v - var.upper);
            if var.kind == VarKind::Binary {
                worst = worst.max((v - v.round()).abs());
            }
        }
        worst
    }

    /// Plain-text dump in an LP-format-like grammar (debugging aid).
    pub fn dump_lp(&self) -> String {
        let mut out = String::from("minimize\n  obj:");
        for &(id, c) in &self.objective {
            let _ = write!(out, " {:+} {}", c, self.variables[id.0].name);
        }
        out.push_str("\nsubject to\n");
        for con in &self.constraints {
            let _ = write!(out, "  {}:", con.name);
            for &(id, c) in &con.terms {
                let _ = write!(out, " {:+} {}", c, self.variables[id.0].name);
            }
            let op = match con.sense {
                Sense::Le => "<=",
                Sense::Ge => ">=",
                Sense::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", con.rhs);
        }
        out.push_str("bounds\n");
        for var in &self.variables {
            let _ = writeln!(out, "  {} <= {} <= {}", var.lower, var.name, var.upper);
        }
        out.push_str("binary\n ");
        for var in &self.variables {
            if var.kind == VarKind::Binary {
                let _ = write!(out, " {}", var.name);
            }
        }
        out.push_str("\nend\n");
        out
    }

    pub(crate) fn to_lp(&self, relax_overrides: &[(usize, f64, f64)]) -> LpProblem {
        let ncols = self.variables.len();
        let mut costs = vec![0.0; ncols];
        for &(id, c) in &self.objective {
            costs[id.0] += c;
        }
        let mut lower: Vec<f64> = self.variables.iter().map(|v| v.lower).collect();
        let mut upper: Vec<f64> = self.variables.iter().map(|v| v.upper).collect();
        for &(col, lo, hi) in relax_overrides {
            lower[col] = lo;
            upper[col] = hi;
        }
        let mut rows = Vec::with_capacity(self.constraints.len());
        let mut senses = Vec::with_capacity(self.constraints.len());
        let mut rhs = Vec::with_capacity(self.constraints.len());
        for c in &self.constraints {
            rows.push(c.terms.iter().map(|&(id, v)| (id.0, v)).collect());
            senses.push(c.sense);
            rhs.push(c.rhs);
        }
        LpProblem {
            ncols,
            costs,
            lower,
            upper,
            rows,
            senses,
            rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    TimeLimitFeasible,
    TimeLimitNoSolution,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    /// Variable values by id; empty unless a solution was found.
    pub assignment: Vec<f64>,
    pub objective: f64,
    pub bound_gap: f64,
    /// Branch-and-bound nodes processed (0 for the enumerator).
    pub nodes: usize,
}

impl SolveResult {
    pub fn value(&self, id: VarId) -> f64 {
        self.assignment[id.0]
    }

    pub fn has_solution(&self) -> bool {
        matches!(
            self.status,
            SolveStatus::Optimal | SolveStatus::TimeLimitFeasible
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchRule {
    MostFractional,
    /// Branch on the first incomplete selection group, choosing the variable
    /// with the largest LP weight. Falls back to most-fractional when every
    /// group is integral.
    GroupOrder,
}

#[derive(Debug, Clone)]
pub struct SolverParams {
    pub time_limit: Duration,
    /// Absolute optimality gap at which a solution is declared optimal.
    pub gap_tol: f64,
    pub branching: BranchRule,
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            time_limit: Duration::from_secs(60),
            gap_tol: 1e-6,
            // Most-fractional reaches the scenario indicators immediately,
            // which shrinks chance-constrained trees by an order of
            // magnitude compared to group-first branching.
            branching: BranchRule::MostFractional,
            seed: 0,
        }
    }
}

/// Feasibility and integrality tolerance used across the solver.
pub const FEAS_TOL: f64 = 1e-6;

/// Solve by branch-and-bound. See [`branch_bound`].
pub fn solve(model: &MilpModel, params: &SolverParams) -> Result<SolveResult, MilpError> {
    model.validate()?;
    branch_bound::solve(model, params)
}

/// Exhaustively enumerate a selection-structured model.
///
/// Requires the selection annotation. Every exactly-one assignment of the
/// groups is visited; each indicator is then set to its best feasible value
/// given the remaining constraints (an indicator appearing in a constraint
/// together with group variables only). Constraints mixing several
/// indicators must involve indicators alone (the chance constraint shape).
pub fn solve_exhaustive(model: &MilpModel) -> Result<SolveResult, MilpError> {
    model.validate()?;
    let sel = model.selection.as_ref().ok_or(MilpError::NotAnnotated)?;

    if sel.groups.iter().any(Vec::is_empty) {
        return Err(MilpError::ExhaustiveUnsupported("empty selection group".into()));
    }
    let budget: u128 = sel.groups.iter().map(|g| g.len() as u128).product();
    if budget > 1_000_000 {
        return Err(MilpError::EnumerationBudget(budget));
    }

    let n = model.variables.len();
    let mut role = vec![0u8; n]; // 0 = other, 1 = group, 2 = indicator
    for group in &sel.groups {
        for &id in group {
            role[id.0] = 1;
        }
    }
    for &id in &sel.indicators {
        role[id.0] = 2;
    }

    // Classify constraints: by the indicator they touch (if exactly one) or
    // as indicator-free / indicator-only rows.
    enum RowClass {
        Fixed,               // group variables only
        Single(usize),       // exactly one indicator (slot in `indicators`)
        IndicatorsOnly,      // several indicators, no group variables
    }
    let indicator_slot: std::collections::HashMap<usize, usize> = sel
        .indicators
        .iter()
        .enumerate()
        .map(|(slot, id)| (id.0, slot))
        .collect();
    let mut classes = Vec::with_capacity(model.constraints.len());
    for c in &model.constraints {
        let mut inds = Vec::new();
        let mut has_group = false;
        for &(id, coeff) in &c.terms {
            match role[id.0] {
                1 => has_group = true,
                2 => {
                    if coeff != 0.0 {
                        inds.push(id.0);
                    }
                }
                _ => {
                    return Err(MilpError::ExhaustiveUnsupported(format!(
                        "constraint {:?} touches variable {:?} outside the annotation",
                        c.name, model.variables[id.0].name
                    )))
                }
            }
        }
        inds.sort_unstable();
        inds.dedup();
        classes.push(match inds.len() {
            0 => RowClass::Fixed,
            1 => RowClass::Single(indicator_slot[&inds[0]]),
            _ if !has_group => {
                // Setting every individually-feasible indicator to 1 is only
                // optimal when these rows are monotone increasing in each
                // indicator, i.e. >= rows with nonnegative coefficients (the
                // chance-constraint shape).
                let monotone = c.sense == Sense::Ge
                    && c.terms.iter().all(|&(_, coeff)| coeff >= 0.0);
                if !monotone {
                    return Err(MilpError::ExhaustiveUnsupported(format!(
                        "indicator-only constraint {:?} is not a >= row with nonnegative coefficients",
                        c.name
                    )));
                }
                RowClass::IndicatorsOnly
            }
            _ => {
                return Err(MilpError::ExhaustiveUnsupported(format!(
                    "constraint {:?} mixes several indicators with group variables",
                    c.name
                )))
            }
        });
    }
    if model
        .objective
        .iter()
        .any(|&(id, c)| role[id.0] == 2 && c != 0.0)
    {
        return Err(MilpError::ExhaustiveUnsupported(
            "objective puts weight on indicator variables".into(),
        ));
    }

    let eval_row = |c: &Constraint, assignment: &[f64]| -> f64 {
        c.terms.iter().map(|&(id, v)| v * assignment[id.0]).sum()
    };
    let row_ok = |c: &Constraint, lhs: f64| -> bool {
        match c.sense {
            Sense::Le => lhs <= c.rhs + FEAS_TOL,
            Sense::Ge => lhs >= c.rhs - FEAS_TOL,
            Sense::Eq => (lhs - c.rhs).abs() <= FEAS_TOL,
        }
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut odometer = vec![0usize; sel.groups.len()];
    let mut assignment = vec![0.0; n];
    'combos: loop {
        for v in assignment.iter_mut() {
            *v = 0.0;
        }
        for (g, group) in sel.groups.iter().enumerate() {
            assignment[group[odometer[g]].0] = 1.0;
        }

        // Decide each indicator: feasible at 1 across all its rows wins
        // (objective never touches indicators, and indicator-only rows in
        // this model family are monotone in each indicator).
        let mut feasible = true;
        for (c, class) in model.constraints.iter().zip(&classes) {
            if let RowClass::Fixed = class {
                if !row_ok(c, eval_row(c, &assignment)) {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            for (slot, &ind) in sel.indicators.iter().enumerate() {
                let mut one_ok = true;
                let mut zero_ok = true;
                for (c, class) in model.constraints.iter().zip(&classes) {
                    if let RowClass::Single(s) = class {
                        if *s != slot {
                            continue;
                        }
                        assignment[ind.0] = 1.0;
                        one_ok &= row_ok(c, eval_row(c, &assignment));
                        assignment[ind.0] = 0.0;
                        zero_ok &= row_ok(c, eval_row(c, &assignment));
                    }
                }
                if one_ok {
                    assignment[ind.0] = 1.0;
                } else if zero_ok {
                    assignment[ind.0] = 0.0;
                } else {
                    feasible = false;
                    break;
                }
            }
        }
        if feasible {
            for (c, class) in model.constraints.iter().zip(&classes) {
                if let RowClass::IndicatorsOnly = class {
                    if !row_ok(c, eval_row(c, &assignment)) {
                        feasible = false;
                        break;
                    }
                }
            }
        }
        if feasible {
            let obj = model.objective_value(&assignment);
            if best.as_ref().is_none_or(|(b, _)| obj < *b - 1e-12) {
                best = Some((obj, assignment.clone()));
            }
        }

        // Advance the odometer.
        for g in 0..sel.groups.len() {
            odometer[g] += 1;
            if odometer[g] < sel.groups[g].len() {
                continue 'combos;
            }
            odometer[g] = 0;
        }
        break;
    }

    Ok(match best {
        Some((objective, assignment)) => SolveResult {
            status: SolveStatus::Optimal,
            assignment,
            objective,
            bound_gap: 0.0,
            nodes: 0,
        },
        None => SolveResult {
            status: SolveStatus::Infeasible,
            assignment: Vec::new(),
            objective: f64::INFINITY,
            bound_gap: 0.0,
            nodes: 0,
        },
    })
}
