//! Train the three classifier families on synthetic credit data and round
//! them through the JSON model format.
//!
//! ```bash
//! cargo run --example train_models
//! ```

use recourse_mi::data::split;
use recourse_mi::eval::synthetic::credit_dataset;
use recourse_mi::models::{
    load_model, save_model, train, ForestParams, LogisticParams, ReluParams, TrainSpec,
};

fn main() {
    let data = credit_dataset(900, 42);
    let (train_data, test_data) = split(&data, 0.25, 7).expect("valid split");
    println!(
        "{} training rows, {} test rows",
        train_data.n_rows(),
        test_data.n_rows()
    );

    let specs = [
        ("logistic", TrainSpec::Logistic(LogisticParams::default())),
        (
            "relu-net",
            TrainSpec::ReluNet(ReluParams {
                neurons: 12,
                epochs: 150,
                ..ReluParams::default()
            }),
        ),
        (
            "forest",
            TrainSpec::Forest(ForestParams {
                trees: 25,
                max_depth: 4,
            }),
        ),
    ];

    let dir = std::env::temp_dir().join("recourse-mi-models");
    std::fs::create_dir_all(&dir).expect("create output dir");
    for (name, spec) in specs {
        let clf = train(&spec, &train_data, 3).expect("training succeeds");
        let path = dir.join(format!("{name}.json"));
        save_model(&clf, &path).expect("save model");
        let back = load_model(&path).expect("load model");
        println!(
            "{name:>9}: train acc {:.3}, test acc {:.3}, reloaded test acc {:.3} -> {}",
            clf.accuracy(&train_data),
            clf.accuracy(&test_data),
            back.accuracy(&test_data),
            path.display()
        );
    }
}
