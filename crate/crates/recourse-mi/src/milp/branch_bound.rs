//! Best-first branch-and-bound over LP relaxations.
//!
//! Nodes are ordered by LP bound (ties by creation order, so the search is
//! deterministic). Binaries are relaxed to `[0, 1]`; branching fixes one
//! binary to 1 or 0 per child. An incumbent is accepted only after its
//! assignment replays cleanly against the raw constraints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{solve_lp, LpOutcome};
use super::{
    BranchRule, MilpError, MilpModel, SolveResult, SolveStatus, SolverParams, VarKind, FEAS_TOL,
};

struct Node {
    id: u64,
    bound: f64,
    /// Binary fixings accumulated along the path from the root.
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.bound == other.bound && self.id == other.id
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert so the smallest bound pops first,
        // oldest node first among ties.
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Solve the LP relaxation of the model (binaries relaxed to `[0, 1]`).
pub fn lp_relax(model: &MilpModel) -> Result<(f64, Vec<f64>), MilpError> {
    model.validate()?;
    let lp = model.to_lp(&[]);
    match solve_lp(&lp) {
        LpOutcome::Optimal { values, objective } => Ok((objective, values)),
        LpOutcome::Infeasible => Err(MilpError::ExhaustiveUnsupported(
            "relaxation infeasible".into(),
        )),
        LpOutcome::Unbounded => Err(MilpError::UnboundedRelaxation),
        LpOutcome::Stalled => Err(MilpError::UnboundedRelaxation),
    }
}

/// Round a fractional LP point into a candidate incumbent for pure
/// selection models (every variable is a group member or an indicator):
/// each group takes its largest LP weight, indicators start at 1 and are
/// repaired against their single-indicator rows. Returns a feasible
/// assignment or nothing; used to seed pruning early.
fn selection_dive(model: &MilpModel, lp_values: &[f64]) -> Option<Vec<f64>> {
    let sel = model.selection.as_ref()?;
    let n = model.variables.len();
    let mut is_member = vec![false; n];
    let mut is_indicator = vec![false; n];
    for group in &sel.groups {
        for &id in group {
            is_member[id.0] = true;
        }
    }
    for &id in &sel.indicators {
        is_member[id.0] = true;
        is_indicator[id.0] = true;
    }
    if !is_member.iter().all(|&m| m) {
        return None; // auxiliary variables present; rounding cannot complete them
    }

    let mut assignment = vec![0.0; n];
    for group in &sel.groups {
        let best = group
            .iter()
            .copied()
            .max_by(|a, b| lp_values[a.0].total_cmp(&lp_values[b.0]).then(b.0.cmp(&a.0)))?;
        assignment[best.0] = 1.0;
    }
    for &id in &sel.indicators {
        assignment[id.0] = 1.0;
    }
    for c in &model.constraints {
        let mut inds = c
            .terms
            .iter()
            .filter(|&&(id, coeff)| coeff != 0.0 && is_indicator[id.0]);
        let (first, second) = (inds.next(), inds.next());
        if let (Some(&(id, _)), None) = (first, second) {
            let lhs: f64 = c.terms.iter().map(|&(v, coeff)| coeff * assignment[v.0]).sum();
            let violated = match c.sense {
                super::Sense::Le => lhs > c.rhs + FEAS_TOL,
                super::Sense::Ge => lhs < c.rhs - FEAS_TOL,
                super::Sense::Eq => (lhs - c.rhs).abs() > FEAS_TOL,
            };
            if violated {
                assignment[id.0] = 0.0;
            }
        }
    }
    (model.max_violation(&assignment) <= FEAS_TOL).then_some(assignment)
}

fn pick_branch_var(model: &MilpModel, rule: BranchRule, values: &[f64]) -> Option<usize> {
    let is_frac = |col: usize| {
        model.variables[col].kind == VarKind::Binary
            && (values[col] - values[col].round()).abs() > FEAS_TOL
    };
    if rule == BranchRule::GroupOrder {
        if let Some(sel) = &model.selection {
            for group in &sel.groups {
                if group.iter().any(|&id| is_frac(id.0)) {
                    // Incomplete group: take its largest LP weight.
                    let chosen = group
                        .iter()
                        .filter(|&&id| is_frac(id.0))
                        .max_by(|a, b| {
                            values[a.0]
                                .total_cmp(&values[b.0])
                                .then(b.0.cmp(&a.0)) // ties: smaller index wins
                        })
                        .copied();
                    if let Some(id) = chosen {
                        return Some(id.0);
                    }
                }
            }
        }
    }
    // Most fractional, ties to the smallest index.
    let mut best: Option<(f64, usize)> = None;
    for col in 0..model.variables.len() {
        if !is_frac(col) {
            continue;
        }
        let frac = values[col] - values[col].floor();
        let score = frac.min(1.0 - frac);
        if best.is_none_or(|(b, _)| score > b + 1e-15) {
            best = Some((score, col));
        }
    }
    best.map(|(_, col)| col)
}

pub fn solve(model: &MilpModel, params: &SolverParams) -> Result<SolveResult, MilpError> {
    let start = Instant::now();
    let mut next_id = 0u64;
    let mut heap: BinaryHeap<Node> = BinaryHeap::new();
    heap.push(Node {
        id: next_id,
        bound: f64::NEG_INFINITY,
        fixes: Vec::new(),
    });
    next_id += 1;

    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let mut nodes_processed = 0usize;
    let mut timed_out = false;
    let mut proven_bound: Option<f64> = None;

    while let Some(node) = heap.pop() {
        // Proven-optimal exit: best-first order makes every remaining node at
        // least as bad as this one.
        if let Some((inc_obj, _)) = &incumbent {
            if node.bound >= inc_obj - params.gap_tol {
                proven_bound = Some(node.bound);
                heap.clear();
                break;
            }
        }
        if start.elapsed() > params.time_limit {
            timed_out = true;
            break;
        }
        nodes_processed += 1;

        let overrides: Vec<(usize, f64, f64)> =
            node.fixes.iter().map(|&(c, v)| (c, v, v)).collect();
        let lp = model.to_lp(&overrides);
        let outcome = solve_lp(&lp);
        let (values, lp_obj) = match outcome {
            LpOutcome::Optimal { values, objective } => (values, objective),
            LpOutcome::Infeasible => continue,
            LpOutcome::Unbounded => return Err(MilpError::UnboundedRelaxation),
            LpOutcome::Stalled => {
                // Numerical stall: stop expanding and report what we have.
                timed_out = true;
                break;
            }
        };
        if let Some((inc_obj, _)) = &incumbent {
            if lp_obj >= inc_obj - params.gap_tol {
                continue;
            }
        }

        if let Some(rounded) = selection_dive(model, &values) {
            let obj = model.objective_value(&rounded);
            if incumbent
                .as_ref()
                .is_none_or(|(inc_obj, _)| obj < *inc_obj)
            {
                incumbent = Some((obj, rounded));
            }
        }

        match pick_branch_var(model, params.branching, &values) {
            None => {
                // Integral solution: round the binaries exactly and replay
                // against the raw constraints before accepting.
                let mut assignment = values;
                for (col, var) in model.variables.iter().enumerate() {
                    if var.kind == VarKind::Binary {
                        assignment[col] = assignment[col].round();
                    }
                }
                if model.max_violation(&assignment) <= FEAS_TOL {
                    let obj = model.objective_value(&assignment);
                    if incumbent
                        .as_ref()
                        .is_none_or(|(inc_obj, _)| obj < *inc_obj)
                    {
                        incumbent = Some((obj, assignment));
                    }
                }
            }
            Some(col) => {
                for value in [1.0, 0.0] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((col, value));
                    heap.push(Node {
                        id: next_id,
                        bound: lp_obj,
                        fixes,
                    });
                    next_id += 1;
                }
            }
        }
    }

    // The proof bound at exit: the node that triggered the optimality exit,
    // else the best still-open node, else (heap exhausted) no slack at all.
    let lower_bound = proven_bound
        .or_else(|| heap.peek().map(|n| n.bound))
        .unwrap_or(f64::INFINITY);

    Ok(match (incumbent, timed_out) {
        (Some((objective, assignment)), timed_out) => {
            let gap = (objective - lower_bound).max(0.0);
            SolveResult {
                status: if timed_out && gap > params.gap_tol {
                    SolveStatus::TimeLimitFeasible
                } else {
                    SolveStatus::Optimal
                },
                assignment,
                objective,
                bound_gap: gap,
                nodes: nodes_processed,
            }
        }
        (None, true) => SolveResult {
            status: SolveStatus::TimeLimitNoSolution,
            assignment: Vec::new(),
            objective: f64::INFINITY,
            bound_gap: f64::INFINITY,
            nodes: nodes_processed,
        },
        (None, false) => SolveResult {
            status: SolveStatus::Infeasible,
            assignment: Vec::new(),
            objective: f64::INFINITY,
            bound_gap: 0.0,
            nodes: nodes_processed,
        },
    })
}
