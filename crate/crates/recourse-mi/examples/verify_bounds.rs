//! Run the three Monte-Carlo bound verifiers at reduced trial counts.
//!
//! ```bash
//! cargo run --example verify_bounds
//! ```

use recourse_mi::actions::Action;
use recourse_mi::eval::{
    verify_prop_growth, verify_prop_sample, verify_prop_upper_with, GrowthConfig, UpperConfig,
    UpperImputer,
};
use recourse_mi::models::LinearModel;

fn main() {
    // Expected squared shift between the actions at the original and at the
    // imputed instance, against its closed-form upper bound.
    let upper = verify_prop_upper_with(&UpperConfig::new(5_000, 3, 1));
    println!("{upper}\n");

    let upper_knn = verify_prop_upper_with(&UpperConfig {
        imputer: UpperImputer::Knn { k: 5, train_rows: 300 },
        ..UpperConfig::new(5_000, 3, 2)
    });
    println!("{upper_knn}\n");

    // How many uniform candidates guarantee one lands near the hidden
    // original.
    let sample = verify_prop_sample(0.25, 0.05, 2, 1.0, 2_000, 3);
    println!("{sample}\n");

    // Sign patterns along a one-parameter action family, plus the validity
    // concentration bound.
    let growth = verify_prop_growth(&GrowthConfig::new(
        LinearModel::new(vec![1.0, -0.5, 0.25], 0.0),
        Action {
            deltas: vec![2.0, 1.0, -0.5],
        },
        100,
        100,
        4,
    ));
    println!("{growth}");
}
