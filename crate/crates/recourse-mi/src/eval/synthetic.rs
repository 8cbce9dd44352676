//! Synthetic credit-scoring data generator used by the desk-scale
//! experiments.
//!
//! Six features with realistic couplings: income tracks age, debt tracks
//! income and utilization, and the label is a noisy linear score dominated by
//! income. Income is the natural target for missingness studies: it is both
//! predictive and predictable from the other features, so imputation is
//! plausible yet consequential.

use rand_distr::{Distribution, Normal};

use crate::data::{Actionability, Dataset, FeatureKind, FeatureMeta};
use crate::rng::rng_from_seed;

/// Feature indices of the generated dataset.
pub const AGE: usize = 0;
pub const INCOME: usize = 1;
pub const DEBT: usize = 2;
pub const OPEN_LOANS: usize = 3;
pub const UTILIZATION: usize = 4;
pub const LATE_PAYMENTS: usize = 5;

pub fn credit_features() -> Vec<FeatureMeta> {
    vec![
        FeatureMeta::new("age", FeatureKind::Integer, 20.0, 80.0, Actionability::Immutable),
        FeatureMeta::new(
            "income",
            FeatureKind::Continuous,
            0.0,
            200.0,
            Actionability::IncreaseOnly,
        ),
        FeatureMeta::new(
            "debt",
            FeatureKind::Continuous,
            0.0,
            150.0,
            Actionability::DecreaseOnly,
        ),
        FeatureMeta::new("open_loans", FeatureKind::Integer, 0.0, 12.0, Actionability::Free),
        FeatureMeta::new(
            "utilization",
            FeatureKind::Continuous,
            0.0,
            1.0,
            Actionability::Free,
        ),
        FeatureMeta::new(
            "late_payments",
            FeatureKind::Integer,
            0.0,
            10.0,
            Actionability::DecreaseOnly,
        ),
    ]
}

/// Generate `rows` labeled instances. Deterministic under `seed`.
pub fn credit_dataset(rows: usize, seed: u64) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let unit = Normal::new(0.0, 1.0).unwrap();
    let mut draw = |scale: f64| scale * unit.sample(&mut rng);

    let mut data_rows = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let age = (45.0 + draw(12.0)).round().clamp(20.0, 80.0);
        let income = (35.0 + 0.9 * (age - 45.0) + draw(22.0)).clamp(0.0, 200.0);
        let utilization = (0.55 + draw(0.22)).clamp(0.0, 1.0);
        let debt = (0.4 * income * (0.4 + utilization) + draw(12.0)).clamp(0.0, 150.0);
        let open_loans = (2.0 + 0.04 * debt - 0.01 * income + draw(1.4))
            .round()
            .clamp(0.0, 12.0);
        let late_payments = (0.8 + 4.0 * utilization - 0.015 * income + draw(1.2))
            .round()
            .clamp(0.0, 10.0);
        let score = 0.05 * (income - 60.0) - 0.04 * (debt - 35.0)
            + 2.0 * (0.55 - utilization)
            - 0.35 * (open_loans - 2.5)
            - 0.6 * (late_payments - 2.0)
            + 0.015 * (age - 45.0)
            + draw(0.8);
        data_rows.push(vec![age, income, debt, open_loans, utilization, late_payments]);
        labels.push(if score >= 0.0 { 1 } else { -1 });
    }
    Dataset::new(credit_features(), data_rows, labels).expect("generated rows are in bounds")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_and_balanced() {
        let a = credit_dataset(800, 7);
        let b = credit_dataset(800, 7);
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.labels, b.labels);
        let pos = a.labels.iter().filter(|&&l| l == 1).count() as f64 / 800.0;
        assert!(
            (0.25..=0.75).contains(&pos),
            "label balance drifted: {pos}"
        );
        // Income correlates with age (imputation has signal to work with).
        let n = a.n_rows() as f64;
        let mean = |col: usize| a.column(col).iter().sum::<f64>() / n;
        let (ma, mi) = (mean(AGE), mean(INCOME));
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vi = 0.0;
        for row in &a.rows {
            cov += (row[AGE] - ma) * (row[INCOME] - mi);
            va += (row[AGE] - ma).powi(2);
            vi += (row[INCOME] - mi).powi(2);
        }
        let corr = cov / (va.sqrt() * vi.sqrt());
        assert!(corr > 0.2, "age/income correlation too weak: {corr}");
    }
}
