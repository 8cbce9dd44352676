//! Single imputations versus sampled imputation candidates for one
//! incomplete instance.
//!
//! ```bash
//! cargo run --example imputation_sampling
//! ```

use recourse_mi::data::{inject_missing, split, Mechanism};
use recourse_mi::eval::synthetic::{credit_dataset, INCOME};
use recourse_mi::imputation::{
    impute_chained, impute_knn, impute_mean, sample_candidates, ImputerState, SamplerSpec,
};

fn main() {
    let data = credit_dataset(800, 5);
    let (train, test) = split(&data, 0.25, 2).unwrap();
    let state = ImputerState::fit(&train).expect("fit on training split");

    // Hide the income of a test instance.
    let original = &test.rows[0];
    let instance = inject_missing(
        original,
        &Mechanism::Mnar {
            target: INCOME,
            threshold: 0.0,
        },
        0,
    )
    .unwrap();
    println!("original income: {:.2}", original[INCOME]);
    println!("incomplete instance: {instance}");

    let mean = impute_mean(&instance, &state).unwrap();
    let knn = impute_knn(&instance, &state, 5).unwrap();
    let chained = impute_chained(&instance, &state, 3, false, 0).unwrap();
    println!("mean imputation:    {:.2}", mean[INCOME]);
    println!("k-NN (k=5):         {:.2}", knn[INCOME]);
    println!("chained equations:  {:.2}", chained[INCOME]);

    // Candidate samples realize a whole distribution over the imputation
    // space instead of a single point.
    for (label, spec) in [
        ("chained draws", SamplerSpec::ChainedDraws { sweeps: 3 }),
        ("uniform", SamplerSpec::Uniform),
    ] {
        let sample = sample_candidates(&instance, spec, &state, 500, 11).unwrap();
        let incomes: Vec<f64> = sample.candidates.iter().map(|c| c[INCOME]).collect();
        let mean = incomes.iter().sum::<f64>() / incomes.len() as f64;
        let min = incomes.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = incomes.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{label:>14}: 500 candidates, income mean {mean:.2}, range [{min:.2}, {max:.2}]"
        );
    }
}
