//! Build a small MILP by hand, inspect its LP-format dump, and compare the
//! branch-and-bound solver with the LP relaxation and the enumeration
//! oracle.
//!
//! ```bash
//! cargo run --example solver_playground
//! ```

use recourse_mi::milp::{
    lp_relax, solve, solve_exhaustive, MilpModel, SelectionStructure, Sense, SolverParams,
};

fn main() {
    // One feature with displacements {0, +1, +2} (costs 0/1/2) and two
    // scenarios at scores -0.5 and -1.5; at least one scenario must be
    // validated.
    let mut model = MilpModel::new();
    let pi0 = model.add_binary("pi_keep");
    let pi1 = model.add_binary("pi_plus1");
    let pi2 = model.add_binary("pi_plus2");
    let nu0 = model.add_binary("nu_0");
    let nu1 = model.add_binary("nu_1");
    model.add_constraint(
        "choose_one",
        vec![(pi0, 1.0), (pi1, 1.0), (pi2, 1.0)],
        Sense::Eq,
        1.0,
    );
    // score_s: action value + M * nu_s >= M - f_s with M = min score = -1.5.
    let m = -1.5;
    model.add_constraint(
        "score_0",
        vec![(pi1, 1.0), (pi2, 2.0), (nu0, m)],
        Sense::Ge,
        m + 0.5,
    );
    model.add_constraint(
        "score_1",
        vec![(pi1, 1.0), (pi2, 2.0), (nu1, m)],
        Sense::Ge,
        m + 1.5,
    );
    model.add_constraint("coverage", vec![(nu0, 1.0), (nu1, 1.0)], Sense::Ge, 1.0);
    model.set_objective(vec![(pi1, 1.0), (pi2, 2.0)]);
    model.selection = Some(SelectionStructure {
        groups: vec![vec![pi0, pi1, pi2]],
        indicators: vec![nu0, nu1],
    });

    println!("{}", model.dump_lp());

    let (bound, fractional) = lp_relax(&model).unwrap();
    println!("LP relaxation bound: {bound:.4} at {fractional:?}");

    let exact = solve(&model, &SolverParams::default()).unwrap();
    println!(
        "branch-and-bound: {:?}, objective {:.4}, {} nodes, gap {:.2e}",
        exact.status, exact.objective, exact.nodes, exact.bound_gap
    );

    let enumerated = solve_exhaustive(&model).unwrap();
    println!(
        "enumeration oracle: {:?}, objective {:.4}",
        enumerated.status, enumerated.objective
    );
    assert!((exact.objective - enumerated.objective).abs() < 1e-9);
}
