//! Recourse actions for tabular classifiers when the input has missing values.
//!
//! Given a classifier, an instance with some feature values withheld, and a
//! budget of plausible imputations, this crate finds a minimum-cost action
//! whose post-action prediction is the desired class with at least a chosen
//! confidence over the imputation candidates. The chance constraint is
//! discretized over a sampled candidate set and solved exactly as a
//! mixed-integer linear program by the bundled branch-and-bound solver.
//!
//! The crate is organized around the pipeline:
//!
//! - [`data`] — datasets, CSV/schema ingestion, quantile tables, and
//!   MCAR/MAR/MNAR missingness injection.
//! - [`models`] — linear models, two-layer ReLU networks, and weighted tree
//!   ensembles, with desk-scale trainers and JSON round-tripping.
//! - [`imputation`] — mean / k-NN / chained-equations imputers and the
//!   candidate sampler over the imputation space.
//! - [`actions`] — discretized feasible action grids and cost functions
//!   (weighted L1, total log percentile shift).
//! - [`milp`] — solver-agnostic MILP representation, bounded-variable
//!   simplex, branch-and-bound, and an exhaustive enumeration oracle.
//! - [`recourse`] — the MILP formulation builders and the solve algorithms
//!   (chance-constrained, single-imputation, cutting-plane robust, and the
//!   confidence path).
//! - [`eval`] — experiment protocol, metrics, and Monte-Carlo verifiers for
//!   the accompanying theoretical bounds.
//! - [`cli`] — the command-line surface used by the `recourse-mi` binary.
//!
//! See the `examples/` directory for one runnable example per capability.

pub mod actions;
pub mod cli;
pub mod data;
pub mod eval;
pub mod imputation;
pub mod milp;
pub mod models;
pub mod recourse;

mod rng;

pub use rng::derive_seed;
