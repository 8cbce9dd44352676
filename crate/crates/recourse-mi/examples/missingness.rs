//! Inject missing values under the three classical mechanisms.
//!
//! ```bash
//! cargo run --example missingness
//! ```

use recourse_mi::data::{inject_missing, Mechanism};
use recourse_mi::eval::synthetic::{credit_dataset, AGE, INCOME};

fn main() {
    let data = credit_dataset(300, 1);
    let median_age = data.median(AGE);
    let median_income = data.median(INCOME);
    println!("median age {median_age}, median income {median_income:.1}");

    let row = &data.rows[0];
    println!("complete row: {row:?}");

    // Completely at random: two uniformly chosen features vanish.
    let mcar = inject_missing(row, &Mechanism::Mcar { n_missing: 2 }, 9).unwrap();
    println!("MCAR(2)        -> {mcar}");

    // At random: income vanishes for people older than the median.
    let mar = inject_missing(
        row,
        &Mechanism::Mar {
            target: INCOME,
            cond: AGE,
            threshold: median_age,
        },
        9,
    )
    .unwrap();
    println!("MAR(age)       -> {mar}");

    // Not at random: high incomes hide themselves.
    let mnar = inject_missing(
        row,
        &Mechanism::Mnar {
            target: INCOME,
            threshold: median_income,
        },
        9,
    )
    .unwrap();
    println!("MNAR(income)   -> {mnar}");

    // MCAR really is uniform: count which features go missing over many draws.
    let mut counts = vec![0usize; data.dim()];
    for seed in 0..6000u64 {
        let inst = inject_missing(row, &Mechanism::Mcar { n_missing: 2 }, seed).unwrap();
        for d in inst.missing_set() {
            counts[d] += 1;
        }
    }
    println!("MCAR feature hit counts over 6000 draws: {counts:?}");
}
