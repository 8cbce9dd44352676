//! Metrics, the batch experiment protocol, and Monte-Carlo verification of
//! the method's theoretical guarantees.
//!
//! Validity is always judged against the original, unimputed instance: an
//! action that only works for the imputed point is counted as a failure,
//! which is the whole point of the exercise.

mod experiment;
pub mod synthetic;
mod verify;

pub use experiment::{
    default_rho_grid, run_experiment, write_records_csv, write_sweep_csv, CostKind,
    DatasetSource, ExperimentConfig, ExperimentError, InstanceRecord, MechanismSpec,
    MethodAggregate, MethodSpec, Report, RhoSweepPoint,
};
pub use verify::{
    verify_prop_growth, verify_prop_sample, verify_prop_upper, verify_prop_upper_with,
    GrowthConfig, UpperConfig, UpperImputer, VerifyReport,
};

use crate::actions::Action;
use crate::models::{Classifier, ModelError};

/// Fraction of actions that are valid for their original instances.
pub fn valid_ratio(
    actions: &[Option<Action>],
    originals: &[Vec<f64>],
    clf: &Classifier,
) -> Result<f64, ModelError> {
    assert_eq!(
        actions.len(),
        originals.len(),
        "actions and originals must align"
    );
    if actions.is_empty() {
        return Ok(0.0);
    }
    let mut valid = 0usize;
    for (action, original) in actions.iter().zip(originals) {
        if let Some(a) = action {
            if clf.predict(&a.apply(original))? == 1 {
                valid += 1;
            }
        }
    }
    Ok(valid as f64 / actions.len() as f64)
}

/// Qualitative similarity of two actions: over the union of features either
/// action touches, the fraction whose displacement signs agree. An empty
/// union scores 1.
pub fn sign_agreement(a: &Action, reference: &Action) -> f64 {
    assert_eq!(a.deltas.len(), reference.deltas.len());
    let mut union = 0usize;
    let mut agree = 0usize;
    for (&x, &y) in a.deltas.iter().zip(&reference.deltas) {
        if x == 0.0 && y == 0.0 {
            continue;
        }
        union += 1;
        if x.signum() == y.signum() && x != 0.0 && y != 0.0 {
            agree += 1;
        }
    }
    if union == 0 {
        1.0
    } else {
        agree as f64 / union as f64
    }
}
