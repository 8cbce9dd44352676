//! Recourse algorithms: chance-constrained optimization over imputation
//! candidates, single-imputation and robust baselines, and the confidence
//! path.
//!
//! All solvers share the same contract: the returned action comes from the
//! grid, the reported cost is the grid's precomputed cost of that action, and
//! the reported empirical validity is recomputed from the candidate sample
//! through the classifier — never trusted from solver variables.

mod formulate;
mod solve;

pub use formulate::{formulate, formulate_linear, formulate_mlp, formulate_tree, Formulation};
pub use solve::{
    path, solve_armin, solve_imputation_ar, solve_plain_ar, solve_robust_ar, Heuristic,
    PathEntry, PathResult,
};

use std::time::Duration;

use thiserror::Error;

use crate::actions::{Action, ActionError};
use crate::imputation::{CandidateSample, ImputationError};
use crate::milp::MilpError;
use crate::models::{Classifier, ModelError};

#[derive(Debug, Error)]
pub enum RecourseError {
    #[error("confidence must satisfy 0 < rho <= 1, got {0}")]
    BadRho(f64),
    #[error("action grid is empty")]
    EmptyGrid,
    #[error("candidate {candidate} reaches no leaf of tree {tree}; partition invariant broken")]
    PartitionViolated { candidate: usize, tree: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Imputation(#[from] ImputationError),
    #[error(transparent)]
    Action(#[from] ActionError),
}

/// Outcome class of a recourse solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecourseStatus {
    /// Proven optimal and the validity target is met on the full sample.
    Optimal,
    /// A feasible incumbent returned at the time limit.
    TimeLimitFeasible,
    /// Best effort: no candidate action met the validity target on the full
    /// sample; the highest-validity one is returned instead.
    BelowTarget,
    /// The formulation is infeasible.
    Infeasible,
    /// The time limit expired before any solution was found.
    NoSolution,
}

impl RecourseStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RecourseStatus::Optimal => "optimal",
            RecourseStatus::TimeLimitFeasible => "time_limit_feasible",
            RecourseStatus::BelowTarget => "below_target",
            RecourseStatus::Infeasible => "infeasible",
            RecourseStatus::NoSolution => "no_solution",
        }
    }
}

/// Result of one recourse solve.
#[derive(Debug, Clone)]
pub struct RecourseResult {
    /// The chosen action; `None` when no solution exists.
    pub action: Option<Action>,
    /// Grid cost of the action (`inf` when there is none).
    pub cost: f64,
    /// Validity fraction over the full candidate sample, recomputed through
    /// the classifier.
    pub empirical_validity: f64,
    pub status: RecourseStatus,
    pub wall: Duration,
    /// Cutting-plane rounds (robust solver) or subproblems solved
    /// (heuristic); 0 otherwise.
    pub rounds: usize,
}

impl RecourseResult {
    pub(crate) fn failed(status: RecourseStatus, wall: Duration) -> Self {
        Self {
            action: None,
            cost: f64::INFINITY,
            empirical_validity: 0.0,
            status,
            wall,
            rounds: 0,
        }
    }
}

/// Fraction of candidates whose post-action prediction is the desired class.
pub fn empirical_validity(
    action: &Action,
    sample: &CandidateSample,
    clf: &Classifier,
) -> Result<f64, RecourseError> {
    let mut valid = 0usize;
    for cand in &sample.candidates {
        if clf.predict(&action.apply(cand))? == 1 {
            valid += 1;
        }
    }
    Ok(valid as f64 / sample.n() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imputation::CandidateSample;
    use crate::models::LinearModel;

    #[test]
    fn empirical_validity_counts_flipped_candidates() {
        let clf = Classifier::Linear(LinearModel::new(vec![1.0, 1.0], 0.0));
        let sample = CandidateSample::fixed(
            vec![vec![0.0, -1.0], vec![0.0, -3.0]],
            crate::data::IncompleteInstance::complete(vec![0.0, -1.0]),
        );
        let action = Action {
            deltas: vec![2.0, 0.0],
        };
        // Decision values 1 and -1: half the candidates flip.
        assert_eq!(empirical_validity(&action, &sample, &clf).unwrap(), 0.5);

        let zero = Action::zero(2);
        assert_eq!(empirical_validity(&zero, &sample, &clf).unwrap(), 0.0);
    }

    #[test]
    fn empirical_validity_three_of_four() {
        let clf = Classifier::Linear(LinearModel::new(vec![1.0], 0.0));
        let sample = CandidateSample::fixed(
            vec![vec![-1.0], vec![-2.0], vec![-3.0], vec![-9.0]],
            crate::data::IncompleteInstance::complete(vec![-1.0]),
        );
        let action = Action { deltas: vec![3.0] };
        assert_eq!(empirical_validity(&action, &sample, &clf).unwrap(), 0.75);
    }
}
