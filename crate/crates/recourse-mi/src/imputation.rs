//! Single-imputation methods and the imputation-candidate sampler.
//!
//! [`ImputerState`] is fitted once on the (complete) training split and then
//! shared read-only: it carries per-feature means and standard deviations,
//! the standardized training matrix for neighbor search, and one ridge
//! regressor per feature for chained-equations imputation.
//!
//! The candidate sampler realizes a distribution over the imputation space of
//! an incomplete instance: either uniform over each missing feature's domain,
//! or independent chained-equations draws with residual-scaled Gaussian noise
//! (a posterior-style draw; the noise model is isolated behind
//! [`SamplerSpec`] so it can be swapped).

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Dataset, FeatureKind, FeatureMeta, IncompleteInstance};
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Error)]
pub enum ImputationError {
    #[error("instance has {got} features but the imputer was fitted on {expected}")]
    SchemaMismatch { expected: usize, got: usize },
    #[error("k must satisfy 1 <= k <= {n_train}, got {k}")]
    BadK { k: usize, n_train: usize },
    #[error("sweeps must be at least 1")]
    BadSweeps,
    #[error("candidate count must be at least 1")]
    BadSampleSize,
    #[error("cannot fit an imputer on an empty training set")]
    EmptyTraining,
    #[error("the fixed sampler spec wraps existing candidates; it cannot be drawn from")]
    FixedSpecNotSamplable,
}

/// Ridge regressor predicting one feature from all the others (predictors are
/// standardized internally; `coef[own_feature] = 0`).
#[derive(Debug, Clone)]
struct RidgeModel {
    target: usize,
    coef: Vec<f64>,
    intercept: f64,
    residual_std: f64,
}

impl RidgeModel {
    fn predict(&self, x: &[f64], means: &[f64], stds: &[f64]) -> f64 {
        let mut acc = self.intercept;
        for (d, &c) in self.coef.iter().enumerate() {
            if d != self.target && c != 0.0 {
                acc += c * (x[d] - means[d]) / stds[d];
            }
        }
        acc
    }
}

/// Frozen training-split statistics backing all imputers.
#[derive(Debug, Clone)]
pub struct ImputerState {
    metas: Vec<FeatureMeta>,
    means: Vec<f64>,
    stds: Vec<f64>,
    train_rows: Vec<Vec<f64>>,
    std_rows: Vec<Vec<f64>>,
    ridge: Vec<RidgeModel>,
}

/// Solve a small symmetric positive-definite system by Gaussian elimination
/// with partial pivoting. Desk-scale dimensions only.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        b.swap(col, pivot);
        let diag = a[col][col];
        if diag.abs() < 1e-12 {
            continue; // degenerate direction; leave coefficient at zero
        }
        for row in col + 1..n {
            let factor = a[row][col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        if a[col][col].abs() < 1e-12 {
            continue;
        }
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    x
}

impl ImputerState {
    /// Fit with the default ridge regularization.
    pub fn fit(train: &Dataset) -> Result<Self, ImputationError> {
        Self::fit_with_lambda(train, 1e-3)
    }

    /// Fit with explicit ridge regularization strength `lambda`.
    pub fn fit_with_lambda(train: &Dataset, lambda: f64) -> Result<Self, ImputationError> {
        let n = train.n_rows();
        if n == 0 {
            return Err(ImputationError::EmptyTraining);
        }
        let dim = train.dim();
        let mut means = vec![0.0; dim];
        for row in &train.rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n as f64;
        }
        let mut stds = vec![0.0; dim];
        for row in &train.rows {
            for d in 0..dim {
                let diff = row[d] - means[d];
                stds[d] += diff * diff;
            }
        }
        for s in &mut stds {
            *s = (*s / n as f64).sqrt();
            if *s < 1e-12 {
                *s = 1.0; // constant column: standardized values become 0
            }
        }
        let std_rows: Vec<Vec<f64>> = train
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(d, v)| (v - means[d]) / stds[d])
                    .collect()
            })
            .collect();

        let mut ridge = Vec::with_capacity(dim);
        for target in 0..dim {
            let predictors: Vec<usize> = (0..dim).filter(|&d| d != target).collect();
            let p = predictors.len();
            let y_mean = means[target];
            // Normal equations on standardized predictors, centered target.
            let mut gram = vec![vec![0.0; p]; p];
            let mut rhs = vec![0.0; p];
            for (row, std_row) in train.rows.iter().zip(&std_rows) {
                let yc = row[target] - y_mean;
                for (i, &di) in predictors.iter().enumerate() {
                    rhs[i] += std_row[di] * yc;
                    for (j, &dj) in predictors.iter().enumerate().skip(i) {
                        gram[i][j] += std_row[di] * std_row[dj];
                    }
                }
            }
            for i in 0..p {
                for j in 0..i {
                    gram[i][j] = gram[j][i];
                }
                gram[i][i] += lambda;
            }
            let beta = solve_dense(gram, rhs);
            let mut coef = vec![0.0; dim];
            for (i, &d) in predictors.iter().enumerate() {
                coef[d] = beta[i];
            }
            let model = RidgeModel {
                target,
                coef,
                intercept: y_mean,
                residual_std: 0.0,
            };
            let ssr: f64 = train
                .rows
                .iter()
                .map(|row| {
                    let diff = row[target] - model.predict(row, &means, &stds);
                    diff * diff
                })
                .sum();
            let residual_std = (ssr / n as f64).sqrt();
            ridge.push(RidgeModel {
                residual_std,
                ..model
            });
        }

        Ok(Self {
            metas: train.features.clone(),
            means,
            stds,
            train_rows: train.rows.clone(),
            std_rows,
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.metas.len()
    }

    pub fn n_train(&self) -> usize {
        self.train_rows.len()
    }

    pub fn mean(&self, feature: usize) -> f64 {
        self.means[feature]
    }

    fn check_schema(&self, instance: &IncompleteInstance) -> Result<(), ImputationError> {
        if instance.dim() != self.dim() {
            return Err(ImputationError::SchemaMismatch {
                expected: self.dim(),
                got: instance.dim(),
            });
        }
        Ok(())
    }

    fn finalize(&self, mut values: Vec<f64>, missing: &std::collections::BTreeSet<usize>) -> Vec<f64> {
        for &d in missing {
            let meta = &self.metas[d];
            let clamped = values[d].clamp(meta.lower, meta.upper);
            values[d] = match meta.kind {
                FeatureKind::Continuous => clamped,
                // Half-even keeps integer imputations unbiased.
                FeatureKind::Integer | FeatureKind::Binary => {
                    clamped.round_ties_even().clamp(meta.lower, meta.upper)
                }
            };
        }
        values
    }
}

/// Replace each missing coordinate with the training mean.
pub fn impute_mean(
    instance: &IncompleteInstance,
    state: &ImputerState,
) -> Result<Vec<f64>, ImputationError> {
    state.check_schema(instance)?;
    let missing = instance.missing_set();
    let values: Vec<f64> = instance
        .values
        .iter()
        .enumerate()
        .map(|(d, v)| v.unwrap_or(state.means[d]))
        .collect();
    Ok(state.finalize(values, &missing))
}

/// k-nearest-neighbor imputation.
///
/// Distances are Euclidean over the observed, standardized coordinates; ties
/// break toward the lower training-row index. Each missing coordinate becomes
/// the mean of the k selected rows' values for that coordinate.
pub fn impute_knn(
    instance: &IncompleteInstance,
    state: &ImputerState,
    k: usize,
) -> Result<Vec<f64>, ImputationError> {
    state.check_schema(instance)?;
    if k == 0 || k > state.n_train() {
        return Err(ImputationError::BadK {
            k,
            n_train: state.n_train(),
        });
    }
    let missing = instance.missing_set();
    if missing.is_empty() {
        return Ok(instance.expect_complete());
    }
    let observed: Vec<(usize, f64)> = instance
        .values
        .iter()
        .enumerate()
        .filter_map(|(d, v)| v.map(|x| (d, (x - state.means[d]) / state.stds[d])))
        .collect();
    let mut order: Vec<(f64, usize)> = state
        .std_rows
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let dist: f64 = observed
                .iter()
                .map(|&(d, z)| {
                    let diff = z - row[d];
                    diff * diff
                })
                .sum();
            (dist, i)
        })
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut chosen: Vec<usize> = order[..k].iter().map(|&(_, i)| i).collect();
    // Ascending index so the k = n case sums in the same order as the fitted
    // means (exact agreement with mean imputation).
    chosen.sort_unstable();

    let mut values: Vec<f64> = instance
        .values
        .iter()
        .map(|v| v.unwrap_or(0.0))
        .collect();
    for &d in &missing {
        let sum: f64 = chosen.iter().map(|&i| state.train_rows[i][d]).sum();
        values[d] = sum / k as f64;
    }
    Ok(state.finalize(values, &missing))
}

/// Chained-equations imputation: initialize missing coordinates with means,
/// then sweep in ascending feature order predicting each from all the others
/// with the pre-fitted ridge regressors. With `noise` set, a Gaussian draw
/// scaled by the regressor's residual standard deviation is added (a
/// posterior-style draw). Values are clipped to bounds each update; integer
/// features are rounded half-even at the end.
pub fn impute_chained(
    instance: &IncompleteInstance,
    state: &ImputerState,
    sweeps: usize,
    noise: bool,
    seed: u64,
) -> Result<Vec<f64>, ImputationError> {
    state.check_schema(instance)?;
    if sweeps == 0 {
        return Err(ImputationError::BadSweeps);
    }
    let missing = instance.missing_set();
    if missing.is_empty() {
        return Ok(instance.expect_complete());
    }
    let mut rng = rng_from_seed(seed);
    let mut values: Vec<f64> = instance
        .values
        .iter()
        .enumerate()
        .map(|(d, v)| v.unwrap_or(state.means[d]))
        .collect();
    for _ in 0..sweeps {
        for &d in &missing {
            let mut pred = state.ridge[d].predict(&values, &state.means, &state.stds);
            if noise && state.ridge[d].residual_std > 0.0 {
                let normal = Normal::new(0.0, state.ridge[d].residual_std).unwrap();
                pred += normal.sample(&mut rng);
            }
            values[d] = pred.clamp(state.metas[d].lower, state.metas[d].upper);
        }
    }
    Ok(state.finalize(values, &missing))
}

/// Which single-imputation method to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Imputer {
    Mean,
    Knn { k: usize },
    Chained { sweeps: usize },
}

impl Imputer {
    /// Apply the method deterministically (chained equations run noise-free).
    pub fn impute(
        &self,
        instance: &IncompleteInstance,
        state: &ImputerState,
    ) -> Result<Vec<f64>, ImputationError> {
        match *self {
            Imputer::Mean => impute_mean(instance, state),
            Imputer::Knn { k } => impute_knn(instance, state, k),
            Imputer::Chained { sweeps } => impute_chained(instance, state, sweeps, false, 0),
        }
    }
}

impl std::fmt::Display for Imputer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Imputer::Mean => write!(f, "mean"),
            Imputer::Knn { k } => write!(f, "knn(k={k})"),
            Imputer::Chained { sweeps } => write!(f, "chained(sweeps={sweeps})"),
        }
    }
}

/// Distribution over the imputation space used by [`sample_candidates`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerSpec {
    /// Each missing coordinate uniform over its domain (integer-uniform for
    /// integer features).
    Uniform,
    /// Independent chained-equations draws with noise, distinct sub-seeds.
    ChainedDraws { sweeps: usize },
    /// Externally supplied candidates (scenario sets built by the solvers);
    /// not drawable through [`sample_candidates`].
    Fixed,
}

impl Default for SamplerSpec {
    fn default() -> Self {
        SamplerSpec::ChainedDraws { sweeps: 3 }
    }
}

/// A sampled set of complete imputation candidates for one incomplete
/// instance. Observed coordinates are copied exactly into every candidate.
#[derive(Debug, Clone)]
pub struct CandidateSample {
    pub candidates: Vec<Vec<f64>>,
    pub source: IncompleteInstance,
    pub spec: SamplerSpec,
    pub seed: u64,
}

impl CandidateSample {
    pub fn n(&self) -> usize {
        self.candidates.len()
    }

    /// Wrap externally assembled candidates without re-validating bounds
    /// (used for scenario sets whose members were validated at sampling
    /// time).
    pub fn fixed(candidates: Vec<Vec<f64>>, source: IncompleteInstance) -> Self {
        assert!(!candidates.is_empty(), "candidate sample must be non-empty");
        Self {
            candidates,
            source,
            spec: SamplerSpec::Fixed,
            seed: 0,
        }
    }

    /// The degenerate sample holding a single complete instance.
    pub fn singleton(values: Vec<f64>) -> Self {
        let source = IncompleteInstance::complete(values.clone());
        Self::fixed(vec![values], source)
    }

    /// Wrap a pre-built candidate list, checking the sample invariants:
    /// observed coordinates preserved exactly and all values in bounds.
    pub fn from_candidates(
        candidates: Vec<Vec<f64>>,
        source: IncompleteInstance,
        metas: &[FeatureMeta],
        spec: SamplerSpec,
        seed: u64,
    ) -> Self {
        assert!(!candidates.is_empty(), "candidate sample must be non-empty");
        for cand in &candidates {
            assert_eq!(cand.len(), source.dim(), "candidate dimension mismatch");
            for (d, (&v, meta)) in cand.iter().zip(metas).enumerate() {
                if let Some(obs) = source.values[d] {
                    assert!(
                        v == obs,
                        "candidate changed observed coordinate {d}: {v} != {obs}"
                    );
                }
                assert!(
                    v >= meta.lower && v <= meta.upper,
                    "candidate value {v} outside bounds of feature {d}"
                );
            }
        }
        Self {
            candidates,
            source,
            spec,
            seed,
        }
    }
}

/// Draw `n` i.i.d. imputation candidates for `instance`.
pub fn sample_candidates(
    instance: &IncompleteInstance,
    spec: SamplerSpec,
    state: &ImputerState,
    n: usize,
    seed: u64,
) -> Result<CandidateSample, ImputationError> {
    state.check_schema(instance)?;
    if n == 0 {
        return Err(ImputationError::BadSampleSize);
    }
    let missing = instance.missing_set();
    let mut candidates = Vec::with_capacity(n);
    match spec {
        SamplerSpec::Fixed => return Err(ImputationError::FixedSpecNotSamplable),
        SamplerSpec::Uniform => {
            let mut rng = rng_from_seed(seed);
            for _ in 0..n {
                let mut values: Vec<f64> = instance
                    .values
                    .iter()
                    .map(|v| v.unwrap_or(0.0))
                    .collect();
                for &d in &missing {
                    let meta = &state.metas[d];
                    values[d] = match meta.kind {
                        FeatureKind::Continuous => {
                            meta.lower + rng.random::<f64>() * (meta.upper - meta.lower)
                        }
                        FeatureKind::Integer | FeatureKind::Binary => {
                            rng.random_range(meta.lower as i64..=meta.upper as i64) as f64
                        }
                    };
                }
                candidates.push(values);
            }
        }
        SamplerSpec::ChainedDraws { sweeps } => {
            for i in 0..n {
                let sub_seed = derive_seed(seed, i as u64);
                candidates.push(impute_chained(instance, state, sweeps, true, sub_seed)?);
            }
        }
    }
    Ok(CandidateSample::from_candidates(
        candidates,
        instance.clone(),
        &state.metas,
        spec,
        seed,
    ))
}
