//! Monte-Carlo verifiers for the framework's theoretical guarantees: the
//! imputation-shift upper bound, the candidate-sampling size bound, and the
//! growth-function concentration bound.
//!
//! Every verdict carries a Monte-Carlo standard error; a check never passes
//! or fails on a bare point estimate.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::actions::{closed_form_linear, Action};
use crate::data::{Actionability, Dataset, FeatureKind, FeatureMeta, IncompleteInstance};
use crate::imputation::{impute_knn, ImputerState};
use crate::models::LinearModel;
use crate::rng::{derive_seed, rng_from_seed};

/// Outcome of one Monte-Carlo verification.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub name: String,
    /// The estimated quantity the bound must dominate.
    pub estimate: f64,
    pub bound: f64,
    /// Combined Monte-Carlo standard error of the comparison.
    pub standard_error: f64,
    /// Whether the bound holds within three standard errors. A report with
    /// `low_confidence` set passes vacuously: too few relevant events were
    /// observed to assert anything.
    pub pass: bool,
    pub low_confidence: bool,
    pub details: Vec<(String, f64)>,
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.low_confidence {
            "PASS (low confidence)"
        } else if self.pass {
            "PASS"
        } else {
            "FAIL"
        };
        write!(
            f,
            "{verdict} {}: estimate {:.6} <= bound {:.6} (3SE = {:.6})",
            self.name,
            self.estimate,
            self.bound,
            3.0 * self.standard_error
        )?;
        for (key, value) in &self.details {
            write!(f, "\n  {key} = {value:.6}")?;
        }
        Ok(())
    }
}

/// Which imputation function the upper-bound verifier exercises.
#[derive(Debug, Clone, Copy)]
pub enum UpperImputer {
    /// The exact population mean of the missing coordinate.
    PopulationMean,
    /// k-nearest-neighbor imputation fitted on a fresh training sample of
    /// the same distribution (checked against the squared-loss form of the
    /// bound).
    Knn { k: usize, train_rows: usize },
}

#[derive(Debug, Clone)]
pub struct UpperConfig {
    pub trials: usize,
    pub dim: usize,
    pub seed: u64,
    pub imputer: UpperImputer,
    /// Degenerate case: the missing feature has zero coefficient.
    pub zero_coefficient: bool,
    /// Degenerate case: the missing feature is constant.
    pub zero_variance: bool,
}

impl UpperConfig {
    pub fn new(trials: usize, dim: usize, seed: u64) -> Self {
        Self {
            trials,
            dim,
            seed,
            imputer: UpperImputer::PopulationMean,
            zero_coefficient: false,
            zero_variance: false,
        }
    }
}

/// Verify the expected-squared-difference bound between the recourse action
/// at the original instance and at the imputed instance, for a random linear
/// model over Gaussian features with one missing coordinate.
pub fn verify_prop_upper(trials: usize, dim: usize, seed: u64) -> VerifyReport {
    verify_prop_upper_with(&UpperConfig::new(trials, dim, seed))
}

pub fn verify_prop_upper_with(config: &UpperConfig) -> VerifyReport {
    assert!(config.trials >= 1_000, "need at least 10^3 trials");
    assert!(config.dim >= 2, "need at least two features");
    let missing = 0usize;
    let mut rng = rng_from_seed(derive_seed(config.seed, 1));
    let unit = Normal::new(0.0, 1.0).unwrap();

    let means: Vec<f64> = (0..config.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut stds: Vec<f64> = (0..config.dim).map(|_| rng.random_range(0.5..2.0)).collect();
    if config.zero_variance {
        stds[missing] = 0.0;
    }
    let mut weights: Vec<f64> = (0..config.dim).map(|_| unit.sample(&mut rng)).collect();
    if config.zero_coefficient {
        weights[missing] = 0.0;
    }
    if weights.iter().all(|&w| w == 0.0) {
        weights[1] = 1.0;
    }
    let model = LinearModel::new(weights.clone(), 0.0);
    let sq_norm: f64 = weights.iter().map(|w| w * w).sum();

    // Fit the k-NN imputer on its own training draw from the same law.
    let knn_state: Option<(ImputerState, usize)> = match config.imputer {
        UpperImputer::PopulationMean => None,
        UpperImputer::Knn { k, train_rows } => {
            let metas: Vec<FeatureMeta> = (0..config.dim)
                .map(|d| {
                    FeatureMeta::new(
                        format!("f{d}"),
                        FeatureKind::Continuous,
                        -60.0,
                        60.0,
                        Actionability::Free,
                    )
                })
                .collect();
            let mut train_rng = rng_from_seed(derive_seed(config.seed, 2));
            let rows: Vec<Vec<f64>> = (0..train_rows)
                .map(|_| {
                    (0..config.dim)
                        .map(|d| (means[d] + stds[d] * unit.sample(&mut train_rng)).clamp(-60.0, 60.0))
                        .collect()
                })
                .collect();
            let labels = (0..train_rows).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
            let data = Dataset::new(metas, rows, labels).expect("training rows in bounds");
            Some((ImputerState::fit(&data).expect("non-empty training"), k))
        }
    };

    let mut sum_diff = 0.0;
    let mut sumsq_diff = 0.0;
    let mut gamma_terms = 0.0; // f(x)^2 accumulated on confusion events
    let mut gamma_sq = 0.0;
    let mut confusion = 0usize;
    let mut loss_sum = 0.0; // (x_miss - imputed)^2 for the squared-loss bound
    let mut loss_sq = 0.0;
    let mut trial_rng = rng_from_seed(derive_seed(config.seed, 3));
    for _ in 0..config.trials {
        let x: Vec<f64> = (0..config.dim)
            .map(|d| (means[d] + stds[d] * unit.sample(&mut trial_rng)).clamp(-60.0, 60.0))
            .collect();
        let imputed_value = match &knn_state {
            None => means[missing],
            Some((state, k)) => {
                let mut values: Vec<Option<f64>> = x.iter().copied().map(Some).collect();
                values[missing] = None;
                let inst = IncompleteInstance { values };
                impute_knn(&inst, state, *k).expect("imputer fitted on same schema")[missing]
            }
        };
        let mut x_hat = x.clone();
        x_hat[missing] = imputed_value;

        let a_star = closed_form_linear(&model, &x).expect("nonzero weights");
        let a_hat = closed_form_linear(&model, &x_hat).expect("nonzero weights");
        let diff: f64 = a_star
            .deltas
            .iter()
            .zip(&a_hat.deltas)
            .map(|(s, h)| (s - h) * (s - h))
            .sum();
        sum_diff += diff;
        sumsq_diff += diff * diff;

        let f_orig = model.decision(&x);
        let f_hat = model.decision(&x_hat);
        if (f_orig >= 0.0) != (f_hat >= 0.0) {
            confusion += 1;
            gamma_terms += f_orig * f_orig;
            gamma_sq += (f_orig * f_orig) * (f_orig * f_orig);
        }
        let l = (x[missing] - imputed_value) * (x[missing] - imputed_value);
        loss_sum += l;
        loss_sq += l * l;
    }

    let t = config.trials as f64;
    let estimate = sum_diff / t;
    let se_estimate = ((sumsq_diff / t - estimate * estimate).max(0.0) / t).sqrt();

    // gamma * p_conf estimated jointly as the mean of f(x)^2 * 1[confusion];
    // when no confusion occurs the term is exactly zero.
    let gamma_p = gamma_terms / t;
    let se_gamma = ((gamma_sq / t - gamma_p * gamma_p).max(0.0) / t).sqrt();
    let (variance_term, se_variance) = match config.imputer {
        UpperImputer::PopulationMean => (stds[missing] * stds[missing], 0.0),
        UpperImputer::Knn { .. } => {
            let mean_loss = loss_sum / t;
            let se = ((loss_sq / t - mean_loss * mean_loss).max(0.0) / t).sqrt();
            (mean_loss, se)
        }
    };
    let beta_m = model.weights[missing];
    let bound = (beta_m * beta_m * variance_term + gamma_p) / sq_norm;
    let se_bound =
        ((beta_m * beta_m * se_variance).powi(2) + se_gamma.powi(2)).sqrt() / sq_norm;
    let standard_error = (se_estimate.powi(2) + se_bound.powi(2)).sqrt();

    let low_confidence = confusion > 0 && confusion < 30;
    let pass = estimate <= bound + 3.0 * standard_error || low_confidence;
    VerifyReport {
        name: match config.imputer {
            UpperImputer::PopulationMean => "imputation-shift bound (population mean)".into(),
            UpperImputer::Knn { k, .. } => {
                format!("imputation-shift bound (k-NN, k={k}, squared-loss form)")
            }
        },
        estimate,
        bound,
        standard_error,
        pass,
        low_confidence,
        details: vec![
            ("variance_term".into(), variance_term),
            ("gamma_p_conf".into(), gamma_p),
            ("p_conf".into(), confusion as f64 / t),
            ("confusion_trials".into(), confusion as f64),
        ],
    }
}

/// Number of uniform candidates the sampling bound requires.
pub fn required_sample_size(epsilon: f64, delta: f64, d_star: usize, width: f64) -> usize {
    ((1.0 / delta).ln() * (width / (2.0 * epsilon)).powi(d_star as i32)).ceil() as usize
}

/// Verify the candidate-sampling size bound: with `N` uniform candidates,
/// some candidate lands within `epsilon` (sup-norm) of the hidden original
/// with probability at least `1 - delta`.
///
/// Hidden originals are drawn so their epsilon-window lies inside the domain
/// (the bound's per-coordinate probability `2 eps / w` presumes untruncated
/// windows); candidates are uniform over the full domain.
pub fn verify_prop_sample(
    epsilon: f64,
    delta: f64,
    d_star: usize,
    width: f64,
    trials: usize,
    seed: u64,
) -> VerifyReport {
    assert!(epsilon > 0.0 && delta > 0.0 && delta < 1.0 && width > 0.0 && d_star >= 1);
    let n = required_sample_size(epsilon, delta, d_star, width);
    let lo = epsilon.min(width / 2.0);
    let hi = (width - epsilon).max(width / 2.0);
    let mut rng = rng_from_seed(seed);
    let mut successes = 0usize;
    for _ in 0..trials {
        let hidden: Vec<f64> = (0..d_star)
            .map(|_| if lo >= hi { width / 2.0 } else { rng.random_range(lo..hi) })
            .collect();
        let mut found = false;
        'candidates: for _ in 0..n {
            for &h in &hidden {
                let draw = rng.random::<f64>() * width;
                if (draw - h).abs() > epsilon {
                    // Remaining coordinates of a missed candidate are
                    // irrelevant to the success indicator.
                    continue 'candidates;
                }
            }
            found = true;
            break;
        }
        if found {
            successes += 1;
        }
    }
    let coverage = successes as f64 / trials as f64;
    let standard_error = (coverage * (1.0 - coverage) / trials as f64).sqrt();
    let target = 1.0 - delta;
    VerifyReport {
        name: format!("sampling size bound (eps={epsilon}, delta={delta}, d*={d_star})"),
        // Oriented as "failure rate <= delta" so the pass direction matches
        // the other verifiers.
        estimate: 1.0 - coverage,
        bound: delta,
        standard_error,
        pass: coverage >= target - 3.0 * standard_error,
        low_confidence: false,
        details: vec![
            ("required_n".into(), n as f64),
            ("coverage".into(), coverage),
        ],
    }
}

#[derive(Debug, Clone)]
pub struct GrowthConfig {
    pub model: LinearModel,
    pub base_action: Action,
    pub n: usize,
    pub trials: usize,
    pub delta: f64,
    pub seed: u64,
    /// Density of the sampled segment `{alpha * a : alpha in [0, 1]}`.
    pub alpha_samples: usize,
    /// Held-out candidates used to estimate the expected validity.
    pub holdout: usize,
}

impl GrowthConfig {
    pub fn new(model: LinearModel, base_action: Action, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            model,
            base_action,
            n,
            trials,
            delta: 0.05,
            seed,
            alpha_samples: 801,
            holdout: 20_000,
        }
    }
}

/// Verify the linear-classifier growth bound along a one-parameter convex
/// action family: (1) candidate sets of size N admit at most N + 1 distinct
/// sign patterns over the segment, and (2) the empirical validity never
/// overshoots the expected validity by more than the concentration bound in
/// at least a `1 - delta` fraction of trials.
pub fn verify_prop_growth(config: &GrowthConfig) -> VerifyReport {
    let n = config.n;
    let direction: f64 = config
        .model
        .weights
        .iter()
        .zip(&config.base_action.deltas)
        .map(|(w, a)| w * a)
        .sum();
    let mut rng = rng_from_seed(derive_seed(config.seed, 9));
    let unit = Normal::new(0.0, 2.0).unwrap();
    let dim = config.model.weights.len();
    let draw_scores = |count: usize, rng: &mut rand_chacha::ChaCha8Rng| -> Vec<f64> {
        (0..count)
            .map(|_| {
                let x: Vec<f64> = (0..dim).map(|_| unit.sample(rng)).collect();
                config.model.decision(&x)
            })
            .collect()
    };

    // Expected validity via one large held-out draw.
    let mut holdout = draw_scores(config.holdout, &mut rng);
    holdout.sort_by(f64::total_cmp);
    let validity = |scores_sorted: &[f64], alpha: f64| -> f64 {
        // fraction of f >= -alpha * direction
        let threshold = -alpha * direction;
        let below = scores_sorted.partition_point(|&f| f < threshold);
        (scores_sorted.len() - below) as f64 / scores_sorted.len() as f64
    };

    let concentration_bound = (2.0 * ((n as f64) + 1.0).ln() / n as f64).sqrt()
        + ((1.0 / config.delta).ln() / (2.0 * n as f64)).sqrt();

    let mut max_patterns = 0usize;
    let mut concentration_failures = 0usize;
    for _ in 0..config.trials {
        let mut scores = draw_scores(n, &mut rng);
        scores.sort_by(f64::total_cmp);
        let mut patterns = std::collections::BTreeSet::new();
        let mut sup_gap = f64::NEG_INFINITY;
        for step in 0..config.alpha_samples {
            let alpha = step as f64 / (config.alpha_samples - 1) as f64;
            let v_hat = validity(&scores, alpha);
            let v = validity(&holdout, alpha);
            sup_gap = sup_gap.max(v_hat - v);
            // The sign pattern is fully described by how many of the sorted
            // scores clear the threshold.
            let threshold = -alpha * direction;
            patterns.insert(scores.partition_point(|&f| f < threshold));
        }
        max_patterns = max_patterns.max(patterns.len());
        if sup_gap > concentration_bound {
            concentration_failures += 1;
        }
    }

    let failure_rate = concentration_failures as f64 / config.trials as f64;
    let standard_error = (failure_rate * (1.0 - failure_rate) / config.trials as f64)
        .sqrt()
        .max(1.0 / config.trials as f64);
    let patterns_ok = max_patterns <= n + 1;
    VerifyReport {
        name: format!("growth-function bound (N={n})"),
        estimate: failure_rate,
        bound: config.delta,
        standard_error,
        pass: patterns_ok && failure_rate <= config.delta,
        low_confidence: false,
        details: vec![
            ("max_pattern_count".into(), max_patterns as f64),
            ("pattern_bound".into(), (n + 1) as f64),
            ("concentration_bound".into(), concentration_bound),
        ],
    }
}
