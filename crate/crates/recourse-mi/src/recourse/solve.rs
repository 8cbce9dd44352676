//! The solve algorithms built on the formulations.

use std::time::Instant;

use rand::seq::index::sample as index_sample;

use crate::actions::{Action, ActionGrid};
use crate::data::IncompleteInstance;
use crate::imputation::{CandidateSample, Imputer, ImputerState};
use crate::milp::{solve as milp_solve, SolveStatus, SolverParams};
use crate::models::Classifier;
use crate::rng::{derive_seed, rng_from_seed};

use super::formulate::formulate;
use super::{empirical_validity, RecourseError, RecourseResult, RecourseStatus};

/// Whether to split a large candidate set into small subproblems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Heuristic {
    /// Solve the full formulation over all candidates.
    Off,
    /// Solve `tries` subproblems over `n_sub` candidates drawn without
    /// replacement, then keep the cheapest solution whose validity on the
    /// full sample meets the target.
    Subsample { n_sub: usize, tries: usize },
}

impl Default for Heuristic {
    fn default() -> Self {
        Heuristic::Subsample { n_sub: 10, tries: 10 }
    }
}

/// One confidence level of the path: the action solved at `rho` and its
/// realized validity.
#[derive(Debug, Clone)]
pub struct PathEntry {
    pub rho: f64,
    pub action: Action,
    pub cost: f64,
    pub empirical_validity: f64,
}

/// Output of the confidence-path sweep.
#[derive(Debug, Clone)]
pub struct PathResult {
    pub entries: Vec<PathEntry>,
    /// Status of the step that terminated the sweep.
    pub status: RecourseStatus,
}

fn map_status(status: SolveStatus) -> RecourseStatus {
    match status {
        SolveStatus::Optimal => RecourseStatus::Optimal,
        SolveStatus::TimeLimitFeasible => RecourseStatus::TimeLimitFeasible,
        SolveStatus::Infeasible => RecourseStatus::Infeasible,
        SolveStatus::TimeLimitNoSolution => RecourseStatus::NoSolution,
    }
}

/// Solve one full formulation and package the outcome.
fn solve_full(
    clf: &Classifier,
    grid: &ActionGrid,
    sample: &CandidateSample,
    rho: f64,
    params: &SolverParams,
    report_sample: &CandidateSample,
) -> Result<RecourseResult, RecourseError> {
    let start = Instant::now();
    let formulation = formulate(grid, sample, rho, clf)?;
    let res = milp_solve(&formulation.model, params)?;
    if !res.has_solution() {
        return Ok(RecourseResult::failed(map_status(res.status), start.elapsed()));
    }
    let indices = formulation.extract_indices(&res, grid);
    let action = grid.action_from_indices(&indices);
    let cost = grid.cost_of_indices(&indices);
    let validity = empirical_validity(&action, report_sample, clf)?;
    Ok(RecourseResult {
        action: Some(action),
        cost,
        empirical_validity: validity,
        status: map_status(res.status),
        wall: start.elapsed(),
        rounds: 0,
    })
}

/// Chance-constrained recourse over a candidate sample.
///
/// With the heuristic on, `tries` subproblems of `n_sub` candidates are
/// solved under the per-solve time limit in `params`; the cheapest action
/// whose recomputed validity on the full sample reaches `rho` wins, ties
/// broken by subproblem order. When no action qualifies, the one with the
/// highest full-sample validity is returned with [`RecourseStatus::BelowTarget`].
pub fn solve_armin(
    clf: &Classifier,
    grid: &ActionGrid,
    sample: &CandidateSample,
    rho: f64,
    heuristic: Heuristic,
    params: &SolverParams,
    seed: u64,
) -> Result<RecourseResult, RecourseError> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(RecourseError::BadRho(rho));
    }
    let (n_sub, tries) = match heuristic {
        Heuristic::Off => return solve_full(clf, grid, sample, rho, params, sample),
        Heuristic::Subsample { n_sub, tries } => (n_sub, tries),
    };
    if n_sub >= sample.n() || tries == 0 {
        return solve_full(clf, grid, sample, rho, params, sample);
    }

    let start = Instant::now();
    let mut best_qualifying: Option<(f64, RecourseResult)> = None;
    let mut best_fallback: Option<(f64, RecourseResult)> = None;
    let mut solved = 0usize;
    for p in 0..tries {
        let mut rng = rng_from_seed(derive_seed(seed, p as u64));
        let chosen = index_sample(&mut rng, sample.n(), n_sub);
        let sub = CandidateSample::fixed(
            chosen.iter().map(|i| sample.candidates[i].clone()).collect(),
            sample.source.clone(),
        );
        let outcome = solve_full(clf, grid, &sub, rho, params, sample)?;
        if outcome.action.is_none() {
            continue;
        }
        solved += 1;
        let validity = outcome.empirical_validity;
        // Validity is a multiple of 1/N; compare with headroom for the
        // float product N * rho.
        if validity + 1e-9 >= rho {
            if best_qualifying
                .as_ref()
                .is_none_or(|(cost, _)| outcome.cost < *cost)
            {
                best_qualifying = Some((outcome.cost, outcome));
            }
        } else if best_fallback
            .as_ref()
            .is_none_or(|(val, _)| validity > *val)
        {
            best_fallback = Some((validity, outcome));
        }
    }

    let wall = start.elapsed();
    Ok(match (best_qualifying, best_fallback) {
        (Some((_, mut result)), _) => {
            result.status = RecourseStatus::Optimal;
            result.wall = wall;
            result.rounds = solved;
            result
        }
        (None, Some((_, mut result))) => {
            result.status = RecourseStatus::BelowTarget;
            result.wall = wall;
            result.rounds = solved;
            result
        }
        (None, None) => RecourseResult::failed(RecourseStatus::Infeasible, wall),
    })
}

/// Ground-truth recourse at a complete instance: the minimum-cost grid action
/// valid for that single point.
pub fn solve_plain_ar(
    x: &[f64],
    clf: &Classifier,
    grid: &ActionGrid,
    params: &SolverParams,
) -> Result<RecourseResult, RecourseError> {
    let sample = CandidateSample::singleton(x.to_vec());
    solve_armin(clf, grid, &sample, 1.0, Heuristic::Off, params, 0)
}

/// Single-imputation baseline: impute, then solve plain recourse at the
/// imputed point. The grid must be the incomplete instance's grid, so missing
/// features stay un-actionable.
pub fn solve_imputation_ar(
    instance: &IncompleteInstance,
    imputer: &Imputer,
    state: &ImputerState,
    clf: &Classifier,
    grid: &ActionGrid,
    params: &SolverParams,
) -> Result<RecourseResult, RecourseError> {
    let imputed = imputer.impute(instance, state)?;
    solve_plain_ar(&imputed, clf, grid, params)
}

/// Robust baseline: require validity on the imputed point and, through a
/// cutting-plane loop, on every sampled candidate.
///
/// Each round solves with the current scenario set, finds the candidate with
/// the largest logistic loss (equivalently the smallest decision value, ties
/// to the lowest index), stops if that candidate is already covered, and
/// otherwise adds it as a new validity constraint. At most N rounds add a
/// constraint, so N + 1 solves suffice.
pub fn solve_robust_ar(
    instance: &IncompleteInstance,
    imputer: &Imputer,
    state: &ImputerState,
    clf: &Classifier,
    grid: &ActionGrid,
    sample: &CandidateSample,
    params: &SolverParams,
) -> Result<RecourseResult, RecourseError> {
    let start = Instant::now();
    let imputed = imputer.impute(instance, state)?;
    let mut scenarios: Vec<Vec<f64>> = vec![imputed];
    let mut active: Vec<usize> = Vec::new();
    let mut rounds = 0usize;

    loop {
        rounds += 1;
        let scenario_sample =
            CandidateSample::fixed(scenarios.clone(), sample.source.clone());
        let outcome = solve_full(clf, grid, &scenario_sample, 1.0, params, sample)?;
        let Some(action) = outcome.action else {
            return Ok(RecourseResult {
                rounds,
                wall: start.elapsed(),
                ..RecourseResult::failed(outcome.status, start.elapsed())
            });
        };

        // Most violated candidate: the logistic loss ln(1 + exp(-f)) is
        // strictly decreasing in f, so the arg-max of the loss is the
        // arg-min of the decision value.
        let mut worst: Option<(f64, usize)> = None;
        for (i, cand) in sample.candidates.iter().enumerate() {
            let f = clf.decision_function(&action.apply(cand))?;
            if worst.is_none_or(|(w, _)| f < w) {
                worst = Some((f, i));
            }
        }
        let (worst_f, worst_idx) = worst.expect("sample is non-empty");

        let covered = worst_f >= 0.0;
        let stuck = active.contains(&worst_idx);
        if covered || stuck || rounds > sample.n() + 1 {
            let validity = empirical_validity(&action, sample, clf)?;
            let status = if covered && outcome.status == RecourseStatus::Optimal {
                RecourseStatus::Optimal
            } else if outcome.status == RecourseStatus::Optimal {
                RecourseStatus::BelowTarget
            } else {
                outcome.status
            };
            return Ok(RecourseResult {
                action: Some(action),
                cost: outcome.cost,
                empirical_validity: validity,
                status,
                wall: start.elapsed(),
                rounds,
            });
        }
        active.push(worst_idx);
        scenarios.push(sample.candidates[worst_idx].clone());
    }
}

/// Sweep the whole validity/cost trade-off curve.
///
/// Starts at `rho = 1/N`; after each solve the next confidence level is the
/// realized validity plus `1/N`, so every iteration strictly tightens the
/// constraint and the sweep ends within N solves (or at the first infeasible
/// or unsolved level).
pub fn path(
    clf: &Classifier,
    grid: &ActionGrid,
    sample: &CandidateSample,
    params: &SolverParams,
) -> Result<PathResult, RecourseError> {
    let n = sample.n();
    let mut entries = Vec::new();
    let mut status = RecourseStatus::Optimal;
    // rho_t tracked as the integer count k, rho = k / N, so the loop guard
    // `rho < 1` stays exact; each solve's realized validity pushes k to at
    // least k + 1, which bounds the sweep by N solves.
    let mut k = 1usize;
    while k < n {
        let rho = k as f64 / n as f64;
        let outcome = solve_armin(clf, grid, sample, rho, Heuristic::Off, params, 0)?;
        let Some(action) = outcome.action else {
            status = outcome.status;
            break;
        };
        let validity = outcome.empirical_validity;
        entries.push(PathEntry {
            rho,
            action,
            cost: outcome.cost,
            empirical_validity: validity,
        });
        let valid_count = (validity * n as f64).round() as usize;
        k = valid_count + 1;
    }
    Ok(PathResult { entries, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::{build_grid_with_costs, CostSpec};
    use crate::data::{Actionability, Dataset, FeatureKind, FeatureMeta};
    use crate::models::LinearModel;
    use rand::Rng;

    fn l1_grid(lists: Vec<Vec<f64>>) -> ActionGrid {
        let costs = lists
            .iter()
            .map(|vals| vals.iter().map(|a| a.abs()).collect())
            .collect();
        ActionGrid { values: lists, costs }
    }

    fn linear(weights: Vec<f64>, bias: f64) -> Classifier {
        Classifier::Linear(LinearModel::new(weights, bias))
    }

    fn brute_force_plain(x: &[f64], clf: &Classifier, grid: &ActionGrid) -> Option<f64> {
        let dims: Vec<usize> = grid.values.iter().map(Vec::len).collect();
        let mut indices = vec![0usize; dims.len()];
        let mut best: Option<f64> = None;
        loop {
            let action = grid.action_from_indices(&indices);
            if clf.predict(&action.apply(x)).unwrap() == 1 {
                let cost = grid.cost_of_indices(&indices);
                if best.is_none_or(|b| cost < b) {
                    best = Some(cost);
                }
            }
            let mut d = 0;
            loop {
                if d == dims.len() {
                    return best;
                }
                indices[d] += 1;
                if indices[d] < dims[d] {
                    break;
                }
                indices[d] = 0;
                d += 1;
            }
        }
    }

    #[test]
    fn plain_ar_zero_action_when_already_desired() {
        let clf = linear(vec![1.0], 0.0);
        let grid = l1_grid(vec![vec![-1.0, 0.0, 1.0]]);
        let res = solve_plain_ar(&[2.0], &clf, &grid, &SolverParams::default()).unwrap();
        assert_eq!(res.status, RecourseStatus::Optimal);
        assert!(res.action.unwrap().is_zero());
        assert_eq!(res.cost, 0.0);
        assert_eq!(res.empirical_validity, 1.0);
    }

    #[test]
    fn plain_ar_picks_smallest_boundary_step() {
        // Decision 0 counts as the desired class, so a = 2 exactly reaches it.
        let clf = linear(vec![1.0], 0.0);
        let grid = l1_grid(vec![vec![0.0, 1.0, 2.0, 3.0]]);
        let res = solve_plain_ar(&[-2.0], &clf, &grid, &SolverParams::default()).unwrap();
        assert_eq!(res.status, RecourseStatus::Optimal);
        assert_eq!(res.action.unwrap().deltas, vec![2.0]);
        assert!((res.cost - 2.0).abs() < 1e-9);
    }

    #[test]
    fn plain_ar_matches_grid_scan_on_random_instances() {
        let mut rng = rng_from_seed(8);
        for trial in 0..40 {
            let clf = linear(
                vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
                rng.random_range(-1.0..1.0),
            );
            let grid = l1_grid(vec![
                vec![-2.0, -1.0, 0.0, 1.0, 2.0],
                vec![-1.0, 0.0, 1.0],
            ]);
            let x = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let res = solve_plain_ar(&x, &clf, &grid, &SolverParams::default()).unwrap();
            match brute_force_plain(&x, &clf, &grid) {
                Some(cost) => {
                    assert_eq!(res.status, RecourseStatus::Optimal, "trial {trial}");
                    assert!((res.cost - cost).abs() < 1e-6, "trial {trial}");
                }
                None => assert_eq!(res.status, RecourseStatus::Infeasible, "trial {trial}"),
            }
        }
    }

    fn two_feature_state() -> (Vec<FeatureMeta>, ImputerState) {
        let metas = vec![
            FeatureMeta::new("a", FeatureKind::Continuous, -10.0, 10.0, Actionability::Free),
            FeatureMeta::new("b", FeatureKind::Continuous, -10.0, 10.0, Actionability::Free),
        ];
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let v = -2.0 + 0.2 * i as f64;
                vec![v, 0.5 * v + 1.0]
            })
            .collect();
        let labels = (0..20).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let data = Dataset::new(metas.clone(), rows, labels).unwrap();
        let state = ImputerState::fit(&data).unwrap();
        (metas, state)
    }

    #[test]
    fn imputation_ar_returns_zero_when_imputed_is_already_desired() {
        let (metas, state) = two_feature_state();
        // Classifier depends only on the missing feature b; training mean of
        // b is positive, original value is very negative.
        let clf = linear(vec![0.0, 1.0], 0.0);
        let original = vec![0.0, -8.0];
        let instance = IncompleteInstance {
            values: vec![Some(0.0), None],
        };
        let grid = build_grid_with_costs(&instance, &metas, 8, &CostSpec::uniform_l1(2)).unwrap();
        let res = solve_imputation_ar(
            &instance,
            &Imputer::Mean,
            &state,
            &clf,
            &grid,
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(res.status, RecourseStatus::Optimal);
        let action = res.action.unwrap();
        assert!(action.is_zero());
        // The null action is not valid for the original instance.
        assert_eq!(clf.predict(&action.apply(&original)).unwrap(), -1);
    }

    #[test]
    fn imputation_ar_equals_plain_ar_without_missing_values() {
        let (metas, state) = two_feature_state();
        let clf = linear(vec![1.0, 1.0], -1.0);
        let x = vec![-1.0, -0.5];
        let instance = IncompleteInstance::complete(x.clone());
        let grid = build_grid_with_costs(&instance, &metas, 6, &CostSpec::uniform_l1(2)).unwrap();
        let params = SolverParams::default();
        let a = solve_imputation_ar(&instance, &Imputer::Mean, &state, &clf, &grid, &params)
            .unwrap();
        let b = solve_plain_ar(&x, &clf, &grid, &params).unwrap();
        assert_eq!(a.status, b.status);
        assert!((a.cost - b.cost).abs() < 1e-9);
    }

    #[test]
    fn armin_zero_action_when_rho_one_over_n_is_covered() {
        let clf = linear(vec![1.0], 0.0);
        let grid = l1_grid(vec![vec![-1.0, 0.0, 1.0, 2.0]]);
        // One candidate already desired: rho = 1/3 is satisfied at cost 0.
        let sample = CandidateSample::fixed(
            vec![vec![0.5], vec![-3.0], vec![-4.0]],
            IncompleteInstance {
                values: vec![None],
            },
        );
        let res = solve_armin(
            &clf,
            &grid,
            &sample,
            1.0 / 3.0,
            Heuristic::Off,
            &SolverParams::default(),
            0,
        )
        .unwrap();
        assert_eq!(res.status, RecourseStatus::Optimal);
        assert!(res.action.unwrap().is_zero());
        assert_eq!(res.cost, 0.0);
    }

    #[test]
    fn heuristic_defaults_match_subsampling_protocol() {
        assert_eq!(Heuristic::default(), Heuristic::Subsample { n_sub: 10, tries: 10 });
    }

    #[test]
    fn heuristic_result_is_deterministic_and_qualifying() {
        let clf = linear(vec![1.0, -0.5], 0.0);
        let mut rng = rng_from_seed(33);
        let candidates: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(-3.0..0.0), rng.random_range(-1.0..1.0)])
            .collect();
        let sample = CandidateSample::fixed(
            candidates,
            IncompleteInstance {
                values: vec![None, None],
            },
        );
        let grid = l1_grid(vec![
            vec![0.0, 1.0, 2.0, 3.0, 4.0],
            vec![-1.0, 0.0, 1.0],
        ]);
        let params = SolverParams::default();
        let heuristic = Heuristic::Subsample { n_sub: 5, tries: 6 };
        let a = solve_armin(&clf, &grid, &sample, 0.75, heuristic, &params, 7).unwrap();
        let b = solve_armin(&clf, &grid, &sample, 0.75, heuristic, &params, 7).unwrap();
        assert_eq!(a.status, b.status);
        assert_eq!(a.action, b.action);
        assert_eq!(a.cost.to_bits(), b.cost.to_bits());
        // Whatever came back must honor the validity target on the full
        // sample (or be flagged).
        if a.status == RecourseStatus::Optimal {
            assert!(a.empirical_validity + 1e-9 >= 0.75);
        }
    }

    #[test]
    fn robust_stops_after_one_round_when_already_covered() {
        let (metas, state) = two_feature_state();
        let clf = linear(vec![1.0, 0.0], 5.0); // everyone is already desired
        let instance = IncompleteInstance {
            values: vec![Some(0.0), None],
        };
        let grid = build_grid_with_costs(&instance, &metas, 4, &CostSpec::uniform_l1(2)).unwrap();
        let sample = CandidateSample::fixed(
            vec![vec![0.0, 1.0], vec![0.0, -1.0]],
            instance.clone(),
        );
        let res = solve_robust_ar(
            &instance,
            &Imputer::Mean,
            &state,
            &clf,
            &grid,
            &sample,
            &SolverParams::default(),
        )
        .unwrap();
        assert_eq!(res.rounds, 1);
        assert_eq!(res.status, RecourseStatus::Optimal);
        assert_eq!(res.empirical_validity, 1.0);
    }

    #[test]
    fn robust_matches_full_rho_one_solve_when_imputed_point_is_sampled() {
        let (metas, state) = two_feature_state();
        let clf = linear(vec![1.0, 1.0], 0.0);
        let instance = IncompleteInstance {
            values: vec![Some(-2.0), None],
        };
        let grid = build_grid_with_costs(&instance, &metas, 8, &CostSpec::uniform_l1(2)).unwrap();
        let imputed = Imputer::Mean.impute(&instance, &state).unwrap();
        let mut candidates = vec![imputed];
        let mut rng = rng_from_seed(4);
        for _ in 0..7 {
            candidates.push(vec![-2.0, rng.random_range(-3.0..3.0)]);
        }
        let sample = CandidateSample::fixed(candidates, instance.clone());
        let params = SolverParams::default();
        let robust = solve_robust_ar(
            &instance,
            &Imputer::Mean,
            &state,
            &clf,
            &grid,
            &sample,
            &params,
        )
        .unwrap();
        let full =
            solve_armin(&clf, &grid, &sample, 1.0, Heuristic::Off, &params, 0).unwrap();
        assert_eq!(robust.status, RecourseStatus::Optimal);
        assert!(robust.rounds <= sample.n() + 1);
        assert!(
            (robust.cost - full.cost).abs() < 1e-6,
            "robust {} vs full {}",
            robust.cost,
            full.cost
        );
        assert_eq!(robust.empirical_validity, 1.0);
    }

    #[test]
    fn path_starts_at_one_over_n_with_monotone_costs() {
        let clf = linear(vec![1.0], 0.0);
        let grid = l1_grid(vec![vec![0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0]]);
        let sample = CandidateSample::fixed(
            vec![vec![-0.4], vec![-1.2], vec![-1.9], vec![-2.6]],
            IncompleteInstance {
                values: vec![None],
            },
        );
        let result = path(&clf, &grid, &sample, &SolverParams::default()).unwrap();
        assert!(!result.entries.is_empty());
        assert_eq!(result.entries[0].rho, 0.25);
        assert!(result.entries.len() <= sample.n());
        for pair in result.entries.windows(2) {
            assert!(pair[1].rho > pair[0].rho, "rho must strictly increase");
            assert!(
                pair[1].cost >= pair[0].cost - 1e-9,
                "costs must be non-decreasing along the path"
            );
        }
        for entry in &result.entries {
            assert!(entry.empirical_validity + 1e-9 >= entry.rho);
        }
    }

    #[test]
    fn path_reports_infeasible_first_solve() {
        // No action can rescue any candidate: the grid tops out at +1 but
        // every candidate sits below -2.
        let clf = linear(vec![1.0], 0.0);
        let grid = l1_grid(vec![vec![-1.0, 0.0, 1.0]]);
        let sample = CandidateSample::fixed(
            vec![vec![-3.0], vec![-4.0]],
            IncompleteInstance {
                values: vec![None],
            },
        );
        let result = path(&clf, &grid, &sample, &SolverParams::default()).unwrap();
        assert!(result.entries.is_empty());
        assert_eq!(result.status, RecourseStatus::Infeasible);
    }

    /// Remark-style properties on generated single-missing-feature cases.
    #[test]
    fn imputation_shift_remarks_hold() {
        let mut rng = rng_from_seed(55);
        let metas = vec![
            FeatureMeta::new("p", FeatureKind::Continuous, -5.0, 5.0, Actionability::Free),
            FeatureMeta::new("q", FeatureKind::Continuous, -5.0, 5.0, Actionability::Free),
        ];
        let rows: Vec<Vec<f64>> = (0..30)
            .map(|_| {
                vec![
                    rng.random_range(-4.0..4.0),
                    rng.random_range(-1.0..4.0),
                ]
            })
            .collect();
        let labels = (0..30).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        let data = Dataset::new(metas.clone(), rows, labels).unwrap();
        let state = ImputerState::fit(&data).unwrap();
        let params = SolverParams::default();

        let mut remark_null_checked = 0;
        let mut remark_cheap_checked = 0;
        for _ in 0..200 {
            let clf = linear(
                vec![rng.random_range(-2.0..2.0), rng.random_range(0.5..2.0)],
                rng.random_range(-1.0..1.0),
            );
            let x = vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)];
            let instance = IncompleteInstance {
                values: vec![Some(x[0]), None], // feature q is missing
            };
            let grid =
                build_grid_with_costs(&instance, &metas, 10, &CostSpec::uniform_l1(2)).unwrap();
            let imputed = Imputer::Mean.impute(&instance, &state).unwrap();
            let h_original = clf.predict(&x).unwrap();
            let h_imputed = clf.predict(&imputed).unwrap();
            let imp = solve_imputation_ar(
                &instance,
                &Imputer::Mean,
                &state,
                &clf,
                &grid,
                &params,
            )
            .unwrap();
            let Some(imp_action) = imp.action else { continue };

            if h_original == -1 && h_imputed == 1 {
                // Prediction flipped by imputation: the baseline returns the
                // null action, which cannot be valid for the original.
                assert!(imp_action.is_zero());
                assert_eq!(clf.predict(&imp_action.apply(&x)).unwrap(), -1);
                remark_null_checked += 1;
            } else if h_original == -1 && h_imputed == -1 {
                // Same action set for the original instance (the grid of the
                // incomplete instance), so cheaper-than-optimal implies
                // invalid for the original.
                let plain = solve_plain_ar(&x, &clf, &grid, &params).unwrap();
                if let Some(_) = &plain.action {
                    if imp.cost < plain.cost - 1e-9 {
                        assert_eq!(
                            clf.predict(&imp_action.apply(&x)).unwrap(),
                            -1,
                            "a cheaper imputed action must be invalid for the original"
                        );
                        remark_cheap_checked += 1;
                    }
                }
            }
        }
        assert!(remark_null_checked >= 5, "too few flipped cases: {remark_null_checked}");
        assert!(remark_cheap_checked >= 5, "too few cheap cases: {remark_cheap_checked}");
    }
}
