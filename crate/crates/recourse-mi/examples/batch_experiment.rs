//! Run the batch experiment protocol at toy scale and print the aggregate
//! table plus where the report files land.
//!
//! ```bash
//! cargo run --example batch_experiment
//! ```

use recourse_mi::eval::{
    run_experiment, write_records_csv, DatasetSource, ExperimentConfig, MechanismSpec,
};
use recourse_mi::models::{LogisticParams, TrainSpec};

fn main() {
    let mut config = ExperimentConfig::new(
        DatasetSource::SyntheticCredit { rows: 600 },
        TrainSpec::Logistic(LogisticParams::default()),
        MechanismSpec::Mcar { n_missing: 2 },
    );
    config.n_candidates = 60;
    config.max_instances = 20;
    config.seed = 17;

    let report = run_experiment(&config).expect("experiment runs");
    println!(
        "cohort of {} rejected incomplete instances (test accuracy {:.3})",
        report.cohort_size, report.test_accuracy
    );
    println!(
        "{:<22} {:>9} {:>12} {:>11} {:>11}",
        "method", "returned", "valid_ratio", "mean_cost", "sign_agree"
    );
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
    for agg in &report.aggregates {
        println!(
            "{:<22} {:>9} {:>12.3} {:>11} {:>11}",
            agg.method,
            agg.returned,
            agg.valid_ratio,
            fmt(agg.mean_cost_returned),
            fmt(agg.mean_sign_agreement)
        );
    }

    let dir = std::env::temp_dir().join("recourse-mi-experiment");
    std::fs::create_dir_all(&dir).unwrap();
    let json_path = dir.join("report.json");
    serde_json::to_writer_pretty(std::fs::File::create(&json_path).unwrap(), &report).unwrap();
    let csv_path = dir.join("records.csv");
    write_records_csv(&report, &csv_path, false).unwrap();
    println!("\nreport: {}", json_path.display());
    println!("records: {}", csv_path.display());
}
