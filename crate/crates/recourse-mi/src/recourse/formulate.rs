//! MILP formulation builders for the three classifier families.
//!
//! All three share the selection skeleton: one exactly-one binary group per
//! feature choosing a grid displacement, one indicator binary per imputation
//! candidate that is forced to 0 unless the post-action score of that
//! candidate is nonnegative, and a coverage row requiring at least `N * rho`
//! indicators on. Big-M constants are computed exactly from separable
//! minima/maxima over the grid, so no slack tolerance is ever needed to
//! deactivate a constraint.

use crate::actions::{Action, ActionGrid};
use crate::imputation::CandidateSample;
use crate::milp::{
    MilpModel, SelectionStructure, Sense, SolveResult, VarId,
};
use crate::models::{Classifier, LinearModel, ReluNetwork, Tree, TreeEnsemble};

use super::RecourseError;

/// A built MILP plus the variable bookkeeping needed to read solutions back.
#[derive(Debug, Clone)]
pub struct Formulation {
    pub model: MilpModel,
    /// `pi_vars[d][j]` selects displacement `grid.values[d][j]`.
    pub pi_vars: Vec<Vec<VarId>>,
    /// One validity indicator per candidate.
    pub nu_vars: Vec<VarId>,
    /// Exact deactivation constants: one global entry for the linear
    /// formulation, one per candidate otherwise.
    pub big_m: Vec<f64>,
}

impl Formulation {
    /// Read the chosen action out of a solver assignment.
    pub fn extract_action(&self, result: &SolveResult, grid: &ActionGrid) -> Action {
        let mut deltas = Vec::with_capacity(grid.dim());
        for (d, group) in self.pi_vars.iter().enumerate() {
            let j = group
                .iter()
                .position(|&id| result.value(id) > 0.5)
                .unwrap_or_else(|| grid.zero_index(d));
            deltas.push(grid.values[d][j]);
        }
        Action { deltas }
    }

    /// Grid indices of the chosen action (aligned with `grid.values`).
    pub fn extract_indices(&self, result: &SolveResult, grid: &ActionGrid) -> Vec<usize> {
        self.pi_vars
            .iter()
            .enumerate()
            .map(|(d, group)| {
                group
                    .iter()
                    .position(|&id| result.value(id) > 0.5)
                    .unwrap_or_else(|| grid.zero_index(d))
            })
            .collect()
    }
}

fn check_inputs(grid: &ActionGrid, rho: f64) -> Result<(), RecourseError> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(RecourseError::BadRho(rho));
    }
    if grid.dim() == 0 || grid.values.iter().any(Vec::is_empty) {
        return Err(RecourseError::EmptyGrid);
    }
    Ok(())
}

/// Add the selection skeleton shared by all formulations: pi groups with
/// exactly-one rows, nu indicators, the coverage row, and the cost objective.
fn selection_skeleton(
    model: &mut MilpModel,
    grid: &ActionGrid,
    n_candidates: usize,
    rho: f64,
) -> (Vec<Vec<VarId>>, Vec<VarId>) {
    let mut pi_vars = Vec::with_capacity(grid.dim());
    for (d, vals) in grid.values.iter().enumerate() {
        let group: Vec<VarId> = (0..vals.len())
            .map(|j| model.add_binary(format!("pi_{d}_{j}")))
            .collect();
        model.add_constraint(
            format!("one_{d}"),
            group.iter().map(|&id| (id, 1.0)).collect(),
            Sense::Eq,
            1.0,
        );
        pi_vars.push(group);
    }
    let nu_vars: Vec<VarId> = (0..n_candidates)
        .map(|s| model.add_binary(format!("nu_{s}")))
        .collect();
    model.add_constraint(
        "coverage",
        nu_vars.iter().map(|&id| (id, 1.0)).collect(),
        Sense::Ge,
        n_candidates as f64 * rho,
    );
    let mut objective = Vec::new();
    for (d, group) in pi_vars.iter().enumerate() {
        for (j, &id) in group.iter().enumerate() {
            if grid.costs[d][j] != 0.0 {
                objective.push((id, grid.costs[d][j]));
            }
        }
    }
    model.set_objective(objective);
    model.selection = Some(SelectionStructure {
        groups: pi_vars.clone(),
        indicators: nu_vars.clone(),
    });
    (pi_vars, nu_vars)
}

/// Chance-constrained formulation for a linear classifier.
pub fn formulate_linear(
    grid: &ActionGrid,
    sample: &CandidateSample,
    rho: f64,
    model: &LinearModel,
) -> Result<Formulation, RecourseError> {
    check_inputs(grid, rho)?;
    let mut milp = MilpModel::new();
    let (pi_vars, nu_vars) = selection_skeleton(&mut milp, grid, sample.n(), rho);

    // Exact score lower bound over candidates and actions:
    // M = min_n f(x_n) + sum_d min_j beta_d * a_{d,j}.
    let f_min = sample
        .candidates
        .iter()
        .map(|cand| model.decision(cand))
        .fold(f64::INFINITY, f64::min);
    let action_min: f64 = (0..grid.dim())
        .map(|d| {
            grid.values[d]
                .iter()
                .map(|&a| model.weights[d] * a)
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    let big_m = f_min + action_min;

    for (s, cand) in sample.candidates.iter().enumerate() {
        let mut terms: Vec<(VarId, f64)> = Vec::new();
        for (d, group) in pi_vars.iter().enumerate() {
            for (j, &id) in group.iter().enumerate() {
                let coeff = model.weights[d] * grid.values[d][j];
                if coeff != 0.0 {
                    terms.push((id, coeff));
                }
            }
        }
        let mut tight_terms = terms.clone();
        terms.push((nu_vars[s], big_m));
        milp.add_constraint(
            format!("score_{s}"),
            terms,
            Sense::Ge,
            big_m - model.decision(cand),
        );
        // Redundant for integer points but much tighter for the relaxation:
        // the same indicator row with the candidate's own deactivation
        // constant. Keeps branch-and-bound trees small on chance-constrained
        // instances.
        let m_s = model.decision(cand) + action_min;
        if m_s > big_m + 1e-12 {
            tight_terms.push((nu_vars[s], m_s));
            milp.add_constraint(
                format!("score_tight_{s}"),
                tight_terms,
                Sense::Ge,
                m_s - model.decision(cand),
            );
        }
    }
    Ok(Formulation {
        model: milp,
        pi_vars,
        nu_vars,
        big_m: vec![big_m],
    })
}

/// Per-neuron constants for one candidate: the fixed pre-activation `F` and
/// the exact reachable pre-activation interval `[H_lower, H_upper]` over the
/// grid.
pub(crate) fn relu_interval_bounds(
    net: &ReluNetwork,
    grid: &ActionGrid,
    candidate: &[f64],
) -> Vec<(f64, f64, f64)> {
    (0..net.neurons())
        .map(|t| {
            let fixed = net.pre_activation(t, candidate);
            let (mut lo, mut hi) = (0.0f64, 0.0f64);
            for (d, vals) in grid.values.iter().enumerate() {
                let w = net.hidden_weights[t][d];
                let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
                for &a in vals {
                    vmin = vmin.min(w * a);
                    vmax = vmax.max(w * a);
                }
                lo += vmin;
                hi += vmax;
            }
            (fixed, fixed + lo, fixed + hi)
        })
        .collect()
}

/// Chance-constrained formulation for a two-layer ReLU network.
///
/// Each (candidate, neuron) pair carries a split `xi - xibar` of the
/// post-action pre-activation with an indicator choosing the active side, so
/// `xi` equals the ReLU output exactly at any feasible point.
pub fn formulate_mlp(
    grid: &ActionGrid,
    sample: &CandidateSample,
    rho: f64,
    net: &ReluNetwork,
) -> Result<Formulation, RecourseError> {
    check_inputs(grid, rho)?;
    let mut milp = MilpModel::new();
    let (pi_vars, nu_vars) = selection_skeleton(&mut milp, grid, sample.n(), rho);

    let mut big_m = Vec::with_capacity(sample.n());
    for (s, cand) in sample.candidates.iter().enumerate() {
        let bounds = relu_interval_bounds(net, grid, cand);
        // Interval lower bound of the network score over the grid.
        let m_s: f64 = bounds
            .iter()
            .zip(&net.output_weights)
            .map(|(&(_, h_lo, h_hi), &theta)| {
                (theta * h_lo.max(0.0)).min(theta * h_hi.max(0.0))
            })
            .sum::<f64>()
            + net.output_bias;
        big_m.push(m_s);

        let mut score_terms: Vec<(VarId, f64)> = Vec::new();
        for (t, &(fixed, h_lo, h_hi)) in bounds.iter().enumerate() {
            let xi = milp.add_continuous(format!("xi_{s}_{t}"), 0.0, h_hi.max(0.0));
            let xibar = milp.add_continuous(format!("xibar_{s}_{t}"), 0.0, (-h_lo).max(0.0));
            let zeta = milp.add_binary(format!("zeta_{s}_{t}"));
            // xi <= H * zeta
            milp.add_constraint(
                format!("relu_on_{s}_{t}"),
                vec![(xi, 1.0), (zeta, -h_hi)],
                Sense::Le,
                0.0,
            );
            // xibar <= -Hbar * (1 - zeta)
            milp.add_constraint(
                format!("relu_off_{s}_{t}"),
                vec![(xibar, 1.0), (zeta, -h_lo)],
                Sense::Le,
                -h_lo,
            );
            // xi - xibar = pre-activation
            let mut link: Vec<(VarId, f64)> = vec![(xi, 1.0), (xibar, -1.0)];
            for (d, group) in pi_vars.iter().enumerate() {
                let w = net.hidden_weights[t][d];
                for (j, &id) in group.iter().enumerate() {
                    let coeff = w * grid.values[d][j];
                    if coeff != 0.0 {
                        link.push((id, -coeff));
                    }
                }
            }
            milp.add_constraint(format!("pre_{s}_{t}"), link, Sense::Eq, fixed);
            if net.output_weights[t] != 0.0 {
                score_terms.push((xi, net.output_weights[t]));
            }
        }
        score_terms.push((nu_vars[s], m_s));
        milp.add_constraint(
            format!("score_{s}"),
            score_terms,
            Sense::Ge,
            m_s - net.output_bias,
        );
    }
    Ok(Formulation {
        model: milp,
        pi_vars,
        nu_vars,
        big_m,
    })
}

/// Grid indices of feature `d` that keep `x_d + a` inside the leaf's
/// interval for that feature.
pub(crate) fn leaf_admissible_indices(
    interval: (f64, f64),
    x_d: f64,
    values: &[f64],
) -> Vec<usize> {
    values
        .iter()
        .enumerate()
        .filter_map(|(j, &a)| {
            let v = x_d + a;
            (interval.0 <= v && v < interval.1).then_some(j)
        })
        .collect()
}

fn tree_reachable_leaves(
    tree: &Tree,
    grid: &ActionGrid,
    candidate: &[f64],
) -> Vec<(usize, Vec<Vec<usize>>)> {
    let mut reachable = Vec::new();
    'leaves: for (l, leaf) in tree.leaves.iter().enumerate() {
        let mut admissible = Vec::with_capacity(grid.dim());
        for d in 0..grid.dim() {
            let ids = leaf_admissible_indices(leaf.intervals[d], candidate[d], &grid.values[d]);
            if ids.is_empty() {
                continue 'leaves;
            }
            admissible.push(ids);
        }
        reachable.push((l, admissible));
    }
    reachable
}

/// Chance-constrained formulation for a weighted tree ensemble.
///
/// Each (candidate, tree) pair selects exactly one reachable leaf; a leaf can
/// only be selected when the chosen displacement of every feature lands in
/// its box, which pins the selection to the true leaf of the post-action
/// point.
pub fn formulate_tree(
    grid: &ActionGrid,
    sample: &CandidateSample,
    rho: f64,
    ens: &TreeEnsemble,
) -> Result<Formulation, RecourseError> {
    check_inputs(grid, rho)?;
    let dim = grid.dim() as f64;
    let mut milp = MilpModel::new();
    let (pi_vars, nu_vars) = selection_skeleton(&mut milp, grid, sample.n(), rho);

    let mut big_m = Vec::with_capacity(sample.n());
    for (s, cand) in sample.candidates.iter().enumerate() {
        let mut score_terms: Vec<(VarId, f64)> = Vec::new();
        let mut m_s = 0.0;
        for (t, (tree, &theta)) in ens.trees.iter().zip(&ens.weights).enumerate() {
            let reachable = tree_reachable_leaves(tree, grid, cand);
            if reachable.is_empty() {
                return Err(RecourseError::PartitionViolated { candidate: s, tree: t });
            }
            m_s += reachable
                .iter()
                .map(|&(l, _)| theta * tree.leaves[l].value)
                .fold(f64::INFINITY, f64::min);

            let mut one_terms = Vec::with_capacity(reachable.len());
            for (l, admissible) in &reachable {
                let phi = milp.add_binary(format!("phi_{s}_{t}_{l}"));
                one_terms.push((phi, 1.0));
                // D * phi <= sum over features of the admissible pi vars.
                let mut link: Vec<(VarId, f64)> = vec![(phi, dim)];
                for (d, ids) in admissible.iter().enumerate() {
                    for &j in ids {
                        link.push((pi_vars[d][j], -1.0));
                    }
                }
                milp.add_constraint(format!("leaf_{s}_{t}_{l}"), link, Sense::Le, 0.0);
                let weight = theta * tree.leaves[*l].value;
                if weight != 0.0 {
                    score_terms.push((phi, weight));
                }
            }
            milp.add_constraint(format!("pick_{s}_{t}"), one_terms, Sense::Eq, 1.0);
        }
        big_m.push(m_s);
        score_terms.push((nu_vars[s], m_s));
        milp.add_constraint(format!("score_{s}"), score_terms, Sense::Ge, m_s);
    }
    Ok(Formulation {
        model: milp,
        pi_vars,
        nu_vars,
        big_m,
    })
}

/// Build the formulation matching the classifier family.
pub fn formulate(
    grid: &ActionGrid,
    sample: &CandidateSample,
    rho: f64,
    clf: &Classifier,
) -> Result<Formulation, RecourseError> {
    match clf {
        Classifier::Linear(m) => formulate_linear(grid, sample, rho, m),
        Classifier::ReluNet(net) => formulate_mlp(grid, sample, rho, net),
        Classifier::Forest(ens) => formulate_tree(grid, sample, rho, ens),
    }
}
