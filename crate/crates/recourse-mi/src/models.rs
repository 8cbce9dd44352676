//! Classifier families the optimizer understands: linear models, two-layer
//! ReLU networks, and weighted tree ensembles.
//!
//! The sign convention is `sgn(0) = +1` everywhere: a decision value of
//! exactly zero is the desired class. This makes the boundary action of the
//! closed-form linear solution valid and matches the `>=` direction of the
//! MILP validity constraints.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::rng::{derive_seed, rng_from_seed};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: model expects {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("model (de)serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

/// `f(x) = w . x + b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Self {
        Self { weights, bias }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.weights.iter().any(|w| !w.is_finite()) || !self.bias.is_finite() {
            return Err(ModelError::Invalid("non-finite linear coefficients".into()));
        }
        if self.weights.iter().all(|&w| w == 0.0) {
            return Err(ModelError::Invalid("all-zero coefficient vector".into()));
        }
        Ok(())
    }
}

/// Two-layer network `f(x) = sum_t out_w[t] * relu(hid_w[t] . x + hid_b[t]) + out_b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReluNetwork {
    pub hidden_weights: Vec<Vec<f64>>,
    pub hidden_bias: Vec<f64>,
    pub output_weights: Vec<f64>,
    pub output_bias: f64,
}

impl ReluNetwork {
    pub fn neurons(&self) -> usize {
        self.hidden_weights.len()
    }

    /// Pre-activation of neuron `t` at `x`.
    pub fn pre_activation(&self, t: usize, x: &[f64]) -> f64 {
        self.hidden_weights[t]
            .iter()
            .zip(x)
            .map(|(w, v)| w * v)
            .sum::<f64>()
            + self.hidden_bias[t]
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        let mut acc = self.output_bias;
        for t in 0..self.neurons() {
            acc += self.output_weights[t] * self.pre_activation(t, x).max(0.0);
        }
        acc
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let t = self.neurons();
        if t == 0 {
            return Err(ModelError::Invalid("network needs at least one neuron".into()));
        }
        if self.hidden_bias.len() != t || self.output_weights.len() != t {
            return Err(ModelError::Invalid("layer shapes disagree".into()));
        }
        let finite = self
            .hidden_weights
            .iter()
            .flatten()
            .chain(&self.hidden_bias)
            .chain(&self.output_weights)
            .chain(std::iter::once(&self.output_bias))
            .all(|v| v.is_finite());
        if !finite {
            return Err(ModelError::Invalid("non-finite network weights".into()));
        }
        Ok(())
    }
}

/// One leaf of a decision tree: an axis-aligned box (half-open on the right)
/// and the value predicted inside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Leaf {
    /// `(lower, upper)` per feature; membership is `lower <= x < upper`.
    /// Unconstrained sides are `-inf` / `+inf` (stored as `null` in JSON,
    /// which has no infinity literal).
    #[serde(with = "interval_serde")]
    pub intervals: Vec<(f64, f64)>,
    pub value: f64,
}

mod interval_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[allow(clippy::ptr_arg)]
    pub fn serialize<S: Serializer>(
        intervals: &Vec<(f64, f64)>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        let repr: Vec<(Option<f64>, Option<f64>)> = intervals
            .iter()
            .map(|&(lo, hi)| {
                (
                    (lo != f64::NEG_INFINITY).then_some(lo),
                    (hi != f64::INFINITY).then_some(hi),
                )
            })
            .collect();
        repr.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<(f64, f64)>, D::Error> {
        let repr: Vec<(Option<f64>, Option<f64>)> = Vec::deserialize(d)?;
        Ok(repr
            .into_iter()
            .map(|(lo, hi)| {
                (
                    lo.unwrap_or(f64::NEG_INFINITY),
                    hi.unwrap_or(f64::INFINITY),
                )
            })
            .collect())
    }
}

impl Leaf {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.intervals
            .iter()
            .zip(x)
            .all(|(&(lo, hi), &v)| lo <= v && v < hi)
    }
}

/// A decision tree stored as its leaf partition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tree {
    pub leaves: Vec<Leaf>,
}

impl Tree {
    /// Index of the leaf containing `x`. Panics if the partition invariant is
    /// broken (a model bug, not a data error).
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        self.leaves
            .iter()
            .position(|leaf| leaf.contains(x))
            .expect("point reaches no leaf: tree partition invariant broken")
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.leaves[self.leaf_index(x)].value
    }
}

/// Weighted sum of decision trees.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<Tree>,
    pub weights: Vec<f64>,
}

impl TreeEnsemble {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .zip(&self.weights)
            .map(|(tree, w)| w * tree.value_at(x))
            .sum()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.trees.is_empty() || self.trees.len() != self.weights.len() {
            return Err(ModelError::Invalid("ensemble shape mismatch".into()));
        }
        for tree in &self.trees {
            if tree.leaves.is_empty() {
                return Err(ModelError::Invalid("tree has no leaves".into()));
            }
        }
        Ok(())
    }
}

/// A classifier of any supported family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Linear(LinearModel),
    ReluNet(ReluNetwork),
    Forest(TreeEnsemble),
}

impl Classifier {
    pub fn dim(&self) -> usize {
        match self {
            Classifier::Linear(m) => m.weights.len(),
            Classifier::ReluNet(m) => m.hidden_weights.first().map_or(0, |w| w.len()),
            Classifier::Forest(m) => m
                .trees
                .first()
                .and_then(|t| t.leaves.first())
                .map_or(0, |l| l.intervals.len()),
        }
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Real-valued decision function; the prediction is its sign.
    pub fn decision_function(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        Ok(match self {
            Classifier::Linear(m) => m.decision(x),
            Classifier::ReluNet(m) => m.decision(x),
            Classifier::Forest(m) => m.decision(x),
        })
    }

    /// Predicted class in `{-1, +1}` with `sgn(0) = +1`.
    pub fn predict(&self, x: &[f64]) -> Result<i8, ModelError> {
        Ok(if self.decision_function(x)? >= 0.0 { 1 } else { -1 })
    }

    /// Fraction of rows predicted correctly.
    pub fn accuracy(&self, data: &Dataset) -> f64 {
        let hits = data
            .rows
            .iter()
            .zip(&data.labels)
            .filter(|(row, &y)| self.predict(row).map(|p| p == y).unwrap_or(false))
            .count();
        hits as f64 / data.n_rows().max(1) as f64
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        match self {
            Classifier::Linear(m) => m.validate(),
            Classifier::ReluNet(m) => m.validate(),
            Classifier::Forest(m) => m.validate(),
        }
    }
}

/// Save a classifier as tagged JSON.
pub fn save_model(clf: &Classifier, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    serde_json::to_writer_pretty(file, clf)?;
    Ok(())
}

/// Load a classifier saved by [`save_model`]. The round trip reproduces
/// identical predictions: JSON numbers are emitted with the shortest decimal
/// form that parses back to the same float.
pub fn load_model(path: impl AsRef<Path>) -> Result<Classifier, ModelError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| ModelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let clf: Classifier = serde_json::from_reader(file)?;
    clf.validate()?;
    Ok(clf)
}

/// What to train. Each variant carries its own hyperparameters.
#[derive(Debug, Clone)]
pub enum TrainSpec {
    Logistic(LogisticParams),
    ReluNet(ReluParams),
    Forest(ForestParams),
}

#[derive(Debug, Clone)]
pub struct LogisticParams {
    pub l2: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            l2: 1e-4,
            max_iters: 20_000,
            grad_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReluParams {
    pub neurons: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub restarts: usize,
}

impl Default for ReluParams {
    fn default() -> Self {
        Self {
            neurons: 30,
            epochs: 300,
            batch_size: 32,
            learning_rate: 0.05,
            restarts: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 50,
            max_depth: 4,
        }
    }
}

/// Column means and standard deviations used to standardize inputs during
/// training; the fitted weights are mapped back to raw feature space.
struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    fn fit(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(0, Vec::len);
        let n = rows.len() as f64;
        let mut means = vec![0.0; dim];
        for row in rows {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut stds = vec![0.0; dim];
        for row in rows {
            for d in 0..dim {
                let diff = row[d] - means[d];
                stds[d] += diff * diff;
            }
        }
        for s in &mut stds {
            *s = (*s / n).sqrt();
            if *s < 1e-12 {
                *s = 1.0; // constant column: leave it untouched
            }
        }
        Self { means, stds }
    }

    fn apply(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .map(|(d, v)| (v - self.means[d]) / self.stds[d])
                    .collect()
            })
            .collect()
    }

    /// Map weights fitted on standardized inputs back to raw inputs.
    fn unscale(&self, weights: &[f64], bias: f64) -> (Vec<f64>, f64) {
        let raw_w: Vec<f64> = weights
            .iter()
            .zip(&self.stds)
            .map(|(w, s)| w / s)
            .collect();
        let raw_b = bias
            - raw_w
                .iter()
                .zip(&self.means)
                .map(|(w, m)| w * m)
                .sum::<f64>();
        (raw_w, raw_b)
    }
}

fn check_two_classes(data: &Dataset) -> Result<(), ModelError> {
    let has_pos = data.labels.iter().any(|&l| l == 1);
    let has_neg = data.labels.iter().any(|&l| l == -1);
    if !(has_pos && has_neg) {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}

/// Train a classifier. Deterministic under `seed`.
pub fn train(spec: &TrainSpec, data: &Dataset, seed: u64) -> Result<Classifier, ModelError> {
    if data.n_rows() == 0 {
        return Err(ModelError::Invalid("empty training set".into()));
    }
    check_two_classes(data)?;
    match spec {
        TrainSpec::Logistic(p) => train_logistic(data, p),
        TrainSpec::ReluNet(p) => train_relu(data, p, seed),
        TrainSpec::Forest(p) => train_forest(data, p, seed),
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn train_logistic(data: &Dataset, params: &LogisticParams) -> Result<Classifier, ModelError> {
    let std = Standardizer::fit(&data.rows);
    let rows = std.apply(&data.rows);
    let n = rows.len();
    let dim = data.dim();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;

    // Fixed step 1/L with L a Lipschitz bound for the regularized gradient.
    let max_sq_norm = rows
        .iter()
        .map(|r| r.iter().map(|v| v * v).sum::<f64>() + 1.0)
        .fold(0.0, f64::max);
    let lr = 1.0 / (max_sq_norm / 4.0 + params.l2);

    let mut converged = false;
    for _ in 0..params.max_iters {
        let mut gw = vec![0.0; dim];
        let mut gb = 0.0;
        for (row, &y) in rows.iter().zip(&data.labels) {
            let y = y as f64;
            let f: f64 = w.iter().zip(row).map(|(wi, xi)| wi * xi).sum::<f64>() + b;
            let coeff = -y * sigmoid(-y * f) / n as f64;
            for (g, x) in gw.iter_mut().zip(row) {
                *g += coeff * x;
            }
            gb += coeff;
        }
        for (g, wi) in gw.iter_mut().zip(&w) {
            *g += params.l2 * wi;
        }
        let grad_norm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
        if grad_norm < params.grad_tol {
            converged = true;
            break;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * g;
        }
        b -= lr * gb;
    }
    if !converged {
        log::warn!("logistic training hit the iteration cap; returning best iterate");
    }
    let (weights, bias) = std.unscale(&w, b);
    let model = LinearModel::new(weights, bias);
    model.validate()?;
    Ok(Classifier::Linear(model))
}

fn train_relu(data: &Dataset, params: &ReluParams, seed: u64) -> Result<Classifier, ModelError> {
    let std = Standardizer::fit(&data.rows);
    let rows = std.apply(&data.rows);
    let n = rows.len();
    let dim = data.dim();
    let t_count = params.neurons.max(1);

    let mut best: Option<(f64, ReluNetwork)> = None;
    for restart in 0..params.restarts.max(1) {
        let mut rng = rng_from_seed(derive_seed(seed, restart as u64));
        let w_init = Normal::new(0.0, (2.0 / dim as f64).sqrt()).unwrap();
        let o_init = Normal::new(0.0, (1.0 / t_count as f64).sqrt()).unwrap();
        let mut hidden_w: Vec<Vec<f64>> = (0..t_count)
            .map(|_| (0..dim).map(|_| w_init.sample(&mut rng)).collect())
            .collect();
        let mut hidden_b: Vec<f64> = (0..t_count).map(|_| 0.1 * o_init.sample(&mut rng)).collect();
        let mut out_w: Vec<f64> = (0..t_count).map(|_| o_init.sample(&mut rng)).collect();
        let mut out_b = 0.0;

        let mut order: Vec<usize> = (0..n).collect();
        for epoch in 0..params.epochs {
            use rand::seq::SliceRandom;
            order.shuffle(&mut rng);
            let lr = params.learning_rate / (1.0 + 0.01 * epoch as f64);
            for chunk in order.chunks(params.batch_size.max(1)) {
                let scale = 1.0 / chunk.len() as f64;
                let mut g_hw = vec![vec![0.0; dim]; t_count];
                let mut g_hb = vec![0.0; t_count];
                let mut g_ow = vec![0.0; t_count];
                let mut g_ob = 0.0;
                for &i in chunk {
                    let x = &rows[i];
                    let y = data.labels[i] as f64;
                    let mut acts = vec![0.0; t_count];
                    let mut f = out_b;
                    for t in 0..t_count {
                        let pre: f64 = hidden_w[t]
                            .iter()
                            .zip(x)
                            .map(|(w, v)| w * v)
                            .sum::<f64>()
                            + hidden_b[t];
                        acts[t] = pre.max(0.0);
                        f += out_w[t] * acts[t];
                    }
                    let dl_df = -y * sigmoid(-y * f) * scale;
                    g_ob += dl_df;
                    for t in 0..t_count {
                        g_ow[t] += dl_df * acts[t];
                        if acts[t] > 0.0 {
                            let back = dl_df * out_w[t];
                            g_hb[t] += back;
                            for (g, v) in g_hw[t].iter_mut().zip(x) {
                                *g += back * v;
                            }
                        }
                    }
                }
                for t in 0..t_count {
                    out_w[t] -= lr * g_ow[t];
                    hidden_b[t] -= lr * g_hb[t];
                    for (w, g) in hidden_w[t].iter_mut().zip(&g_hw[t]) {
                        *w -= lr * g;
                    }
                }
                out_b -= lr * g_ob;
            }
        }

        let net_std = ReluNetwork {
            hidden_weights: hidden_w,
            hidden_bias: hidden_b,
            output_weights: out_w,
            output_bias: out_b,
        };
        let loss: f64 = rows
            .iter()
            .zip(&data.labels)
            .map(|(x, &y)| {
                let f = net_std.decision(x);
                let m = -(y as f64) * f;
                if m > 30.0 { m } else { (1.0 + m.exp()).ln() }
            })
            .sum::<f64>()
            / n as f64;
        if best.as_ref().is_none_or(|(b_loss, _)| loss < *b_loss) {
            best = Some((loss, net_std));
        }
    }

    let (_, net_std) = best.unwrap();
    // Map standardized-input weights back to raw feature space.
    let hidden: Vec<(Vec<f64>, f64)> = net_std
        .hidden_weights
        .iter()
        .zip(&net_std.hidden_bias)
        .map(|(w, &b)| std.unscale(w, b))
        .collect();
    let net = ReluNetwork {
        hidden_weights: hidden.iter().map(|(w, _)| w.clone()).collect(),
        hidden_bias: hidden.iter().map(|&(_, b)| b).collect(),
        output_weights: net_std.output_weights,
        output_bias: net_std.output_bias,
    };
    net.validate()?;
    Ok(Classifier::ReluNet(net))
}

struct CartNode {
    indices: Vec<usize>,
    intervals: Vec<(f64, f64)>,
    depth: usize,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    2.0 * p * (1.0 - p)
}

fn train_forest(data: &Dataset, params: &ForestParams, seed: u64) -> Result<Classifier, ModelError> {
    let t_count = params.trees.max(1);
    let n = data.n_rows();
    let mut trees = Vec::with_capacity(t_count);
    for t in 0..t_count {
        let mut rng = rng_from_seed(derive_seed(seed, t as u64));
        let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        trees.push(grow_tree(data, &sample, params.max_depth));
    }
    let weight = 1.0 / t_count as f64;
    let ens = TreeEnsemble {
        trees,
        weights: vec![weight; t_count],
    };
    ens.validate()?;
    Ok(Classifier::Forest(ens))
}

fn grow_tree(data: &Dataset, sample: &[usize], max_depth: usize) -> Tree {
    let dim = data.dim();
    let mut leaves = Vec::new();
    let mut stack = vec![CartNode {
        indices: sample.to_vec(),
        intervals: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        depth: 0,
    }];
    while let Some(node) = stack.pop() {
        let pos = node
            .indices
            .iter()
            .filter(|&&i| data.labels[i] == 1)
            .count();
        let total = node.indices.len();
        let make_leaf = |leaves: &mut Vec<Leaf>| {
            // Majority-vote margin; ties go to +1 (sign convention).
            let value = if 2 * pos >= total { 1.0 } else { -1.0 };
            leaves.push(Leaf {
                intervals: node.intervals.clone(),
                value,
            });
        };
        if node.depth >= max_depth || pos == 0 || pos == total {
            make_leaf(&mut leaves);
            continue;
        }
        match best_split(data, &node.indices) {
            None => make_leaf(&mut leaves),
            Some((feature, threshold)) => {
                let (mut left_idx, mut right_idx) = (Vec::new(), Vec::new());
                for &i in &node.indices {
                    if data.rows[i][feature] < threshold {
                        left_idx.push(i);
                    } else {
                        right_idx.push(i);
                    }
                }
                let mut left_iv = node.intervals.clone();
                left_iv[feature].1 = left_iv[feature].1.min(threshold);
                let mut right_iv = node.intervals.clone();
                right_iv[feature].0 = right_iv[feature].0.max(threshold);
                // Push right first so the left child is processed first
                // (stable leaf ordering).
                stack.push(CartNode {
                    indices: right_idx,
                    intervals: right_iv,
                    depth: node.depth + 1,
                });
                stack.push(CartNode {
                    indices: left_idx,
                    intervals: left_iv,
                    depth: node.depth + 1,
                });
            }
        }
    }
    Tree { leaves }
}

/// Best Gini split over all features; thresholds are midpoints between
/// consecutive distinct values. Ties break to the lower feature index, then
/// the lower threshold.
fn best_split(data: &Dataset, indices: &[usize]) -> Option<(usize, f64)> {
    let total = indices.len();
    let total_pos = indices.iter().filter(|&&i| data.labels[i] == 1).count();
    let parent = gini(total_pos, total);
    let mut best: Option<(f64, usize, f64)> = None;
    for d in 0..data.dim() {
        let mut vals: Vec<(f64, i8)> = indices
            .iter()
            .map(|&i| (data.rows[i][d], data.labels[i]))
            .collect();
        vals.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut left_pos = 0usize;
        let mut left_n = 0usize;
        for k in 0..total - 1 {
            left_n += 1;
            if vals[k].1 == 1 {
                left_pos += 1;
            }
            if vals[k].0 == vals[k + 1].0 {
                continue;
            }
            let threshold = vals[k].0 + (vals[k + 1].0 - vals[k].0) / 2.0;
            let right_n = total - left_n;
            let right_pos = total_pos - left_pos;
            let weighted = (left_n as f64 * gini(left_pos, left_n)
                + right_n as f64 * gini(right_pos, right_n))
                / total as f64;
            let improvement = parent - weighted;
            if improvement <= 1e-12 {
                continue;
            }
            let better = match best {
                None => true,
                Some((b_imp, b_d, b_thr)) => {
                    improvement > b_imp + 1e-12
                        || ((improvement - b_imp).abs() <= 1e-12
                            && (d, threshold) < (b_d, b_thr))
                }
            };
            if better {
                best = Some((improvement, d, threshold));
            }
        }
    }
    best.map(|(_, d, thr)| (d, thr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Actionability, FeatureKind, FeatureMeta};

    fn brute_force_best_linear_accuracy(data: &Dataset) -> f64 {
        // Independent oracle: scan directions on a 1-degree grid and pick the
        // best threshold along each by sorting projections.
        let mut best = 0.0f64;
        for deg in 0..360 {
            let theta = (deg as f64).to_radians();
            let dir = [theta.cos(), theta.sin()];
            let mut proj: Vec<(f64, i8)> = data
                .rows
                .iter()
                .zip(&data.labels)
                .map(|(r, &y)| (dir[0] * r[0] + dir[1] * r[1], y))
                .collect();
            proj.sort_by(|a, b| a.0.total_cmp(&b.0));
            let total_pos = proj.iter().filter(|(_, y)| *y == 1).count();
            // Threshold before index k classifies [k..] as +1.
            let mut pos_below = 0usize;
            for k in 0..=proj.len() {
                let neg_below = k - pos_below;
                let correct = neg_below + (total_pos - pos_below);
                best = best.max(correct as f64 / proj.len() as f64);
                if k < proj.len() && proj[k].1 == 1 {
                    pos_below += 1;
                }
            }
        }
        best
    }

    fn blob_dataset(seed: u64) -> Dataset {
        let mut rng = rng_from_seed(seed);
        let normal = Normal::new(0.0, 0.8).unwrap();
        let features = vec![
            FeatureMeta::new("x1", FeatureKind::Continuous, -20.0, 20.0, Actionability::Free),
            FeatureMeta::new("x2", FeatureKind::Continuous, -20.0, 20.0, Actionability::Free),
        ];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let y: i8 = if i % 2 == 0 { 1 } else { -1 };
            let center: (f64, f64) = if y == 1 { (3.0, 3.0) } else { (-3.0, -3.0) };
            rows.push(vec![
                (center.0 + normal.sample(&mut rng)).clamp(-20.0, 20.0),
                (center.1 + normal.sample(&mut rng)).clamp(-20.0, 20.0),
            ]);
            labels.push(y);
        }
        Dataset::new(features, rows, labels).unwrap()
    }

    #[test]
    fn linear_decision_examples() {
        let clf = Classifier::Linear(LinearModel::new(vec![1.0, -1.0], 0.0));
        assert_eq!(clf.decision_function(&[2.0, 3.0]).unwrap(), -1.0);
        let clf2 = Classifier::Linear(LinearModel::new(vec![3.0, 4.0], 0.0));
        assert_eq!(clf2.predict(&[-3.0, -4.0]).unwrap(), -1);
    }

    #[test]
    fn relu_clips_negative_preactivation() {
        let net = ReluNetwork {
            hidden_weights: vec![vec![1.0]],
            hidden_bias: vec![0.0],
            output_weights: vec![2.0],
            output_bias: 0.0,
        };
        let clf = Classifier::ReluNet(net);
        assert_eq!(clf.decision_function(&[-3.0]).unwrap(), 0.0);
    }

    fn stump(feature: usize, threshold: f64, left: f64, right: f64, dim: usize) -> Tree {
        let mut left_iv = vec![(f64::NEG_INFINITY, f64::INFINITY); dim];
        left_iv[feature].1 = threshold;
        let mut right_iv = vec![(f64::NEG_INFINITY, f64::INFINITY); dim];
        right_iv[feature].0 = threshold;
        Tree {
            leaves: vec![
                Leaf { intervals: left_iv, value: left },
                Leaf { intervals: right_iv, value: right },
            ],
        }
    }

    #[test]
    fn ensemble_leaf_lookup() {
        let ens = TreeEnsemble {
            trees: vec![stump(0, 0.5, -1.0, 1.0, 1)],
            weights: vec![1.0],
        };
        let clf = Classifier::Forest(ens);
        assert_eq!(clf.decision_function(&[0.7]).unwrap(), 1.0);
        assert_eq!(clf.predict(&[0.2]).unwrap(), -1);
    }

    #[test]
    fn sign_convention_at_zero() {
        let clf = Classifier::Linear(LinearModel::new(vec![0.0, 2.0], 0.0));
        assert_eq!(clf.predict(&[5.0, 0.0]).unwrap(), 1); // decision exactly 0
        let tiny = Classifier::Linear(LinearModel::new(vec![1.0], -1e-12));
        assert_eq!(tiny.predict(&[0.0]).unwrap(), -1);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let clf = Classifier::Linear(LinearModel::new(vec![1.0, 2.0], 0.0));
        assert!(matches!(
            clf.decision_function(&[1.0]),
            Err(ModelError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn logistic_separates_blobs() {
        let data = blob_dataset(11);
        let oracle = brute_force_best_linear_accuracy(&data);
        assert!(oracle >= 0.99, "blobs should be separable, oracle {oracle}");
        let clf = train(&TrainSpec::Logistic(LogisticParams::default()), &data, 0).unwrap();
        let acc = clf.accuracy(&data);
        assert!(acc >= 0.95, "training accuracy {acc}");
    }

    #[test]
    fn single_stump_recovers_perfect_threshold() {
        // Feature takes only values 0 and 1, so the only admissible split is
        // at 0.5 and any bootstrap containing both classes is split perfectly.
        let features = vec![FeatureMeta::new(
            "x",
            FeatureKind::Continuous,
            -1.0,
            2.0,
            Actionability::Free,
        )];
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|i| vec![if i % 2 == 0 { 0.0 } else { 1.0 }])
            .collect();
        let labels: Vec<i8> = (0..24).map(|i| if i % 2 == 0 { -1 } else { 1 }).collect();
        let data = Dataset::new(features, rows, labels).unwrap();

        // Oracle: exhaustive threshold scan.
        let mut best_acc = 0.0f64;
        for thr in [-0.5, 0.25, 0.5, 0.75, 1.5] {
            let acc = data
                .rows
                .iter()
                .zip(&data.labels)
                .filter(|(r, &y)| (if r[0] < thr { -1 } else { 1 }) == y)
                .count() as f64
                / data.n_rows() as f64;
            best_acc = best_acc.max(acc);
        }
        assert_eq!(best_acc, 1.0);

        let clf = train(
            &TrainSpec::Forest(ForestParams { trees: 1, max_depth: 1 }),
            &data,
            42,
        )
        .unwrap();
        assert_eq!(clf.accuracy(&data), 1.0);
    }

    #[test]
    fn relu_learns_xor_pattern() {
        let features = vec![
            FeatureMeta::new("x1", FeatureKind::Continuous, -2.0, 2.0, Actionability::Free),
            FeatureMeta::new("x2", FeatureKind::Continuous, -2.0, 2.0, Actionability::Free),
        ];
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        let mut rng = rng_from_seed(5);
        let jitter = Normal::new(0.0, 0.15).unwrap();
        for i in 0..160 {
            let corner: (f64, f64) = match i % 4 {
                0 => (1.0, 1.0),
                1 => (-1.0, -1.0),
                2 => (1.0, -1.0),
                _ => (-1.0, 1.0),
            };
            let y: i8 = if corner.0 * corner.1 > 0.0 { 1 } else { -1 };
            rows.push(vec![
                (corner.0 + jitter.sample(&mut rng)).clamp(-2.0, 2.0),
                (corner.1 + jitter.sample(&mut rng)).clamp(-2.0, 2.0),
            ]);
            labels.push(y);
        }
        let data = Dataset::new(features, rows, labels).unwrap();
        let clf = train(
            &TrainSpec::ReluNet(ReluParams {
                neurons: 4,
                epochs: 400,
                restarts: 5,
                ..ReluParams::default()
            }),
            &data,
            3,
        )
        .unwrap();
        let acc = clf.accuracy(&data);
        assert!(acc >= 0.9, "XOR training accuracy {acc}");
    }

    #[test]
    fn training_rejects_single_class() {
        let data = Dataset::new(
            vec![FeatureMeta::new(
                "x",
                FeatureKind::Continuous,
                0.0,
                1.0,
                Actionability::Free,
            )],
            vec![vec![0.1], vec![0.9]],
            vec![1, 1],
        )
        .unwrap();
        assert!(matches!(
            train(&TrainSpec::Logistic(LogisticParams::default()), &data, 0),
            Err(ModelError::SingleClass)
        ));
    }

    #[test]
    fn save_load_round_trip_preserves_decisions() {
        let data = blob_dataset(23);
        for spec in [
            TrainSpec::Logistic(LogisticParams::default()),
            TrainSpec::ReluNet(ReluParams {
                neurons: 3,
                epochs: 30,
                restarts: 1,
                ..ReluParams::default()
            }),
            TrainSpec::Forest(ForestParams { trees: 5, max_depth: 3 }),
        ] {
            let clf = train(&spec, &data, 9).unwrap();
            let file = tempfile::NamedTempFile::new().unwrap();
            save_model(&clf, file.path()).unwrap();
            let back = load_model(file.path()).unwrap();
            let mut rng = rng_from_seed(77);
            for _ in 0..1000 {
                let x = vec![rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
                let a = clf.decision_function(&x).unwrap();
                let b = back.decision_function(&x).unwrap();
                assert!(a.to_bits() == b.to_bits(), "round trip changed {a} -> {b}");
            }
        }
    }

    #[test]
    fn load_rejects_unknown_kind_and_truncated_files() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        use std::io::Write;
        f.write_all(br#"{"kind":"svm","weights":[1.0]}"#).unwrap();
        assert!(matches!(load_model(f.path()), Err(ModelError::Json(_))));

        let mut g = tempfile::NamedTempFile::new().unwrap();
        g.write_all(br#"{"kind":"linear","weights":[1.0,"#).unwrap();
        assert!(matches!(load_model(g.path()), Err(ModelError::Json(_))));
    }

    #[test]
    fn tree_partition_covers_every_point_once() {
        let data = blob_dataset(31);
        let Classifier::Forest(ens) = train(
            &TrainSpec::Forest(ForestParams { trees: 7, max_depth: 4 }),
            &data,
            13,
        )
        .unwrap() else {
            panic!("expected forest");
        };
        let mut rng = rng_from_seed(99);
        for _ in 0..10_000 {
            let x = [rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            for tree in &ens.trees {
                let hits = tree.leaves.iter().filter(|l| l.contains(&x)).count();
                assert_eq!(hits, 1, "point {x:?} hit {hits} leaves");
            }
        }
    }

    #[test]
    fn relu_decision_matches_independent_evaluation() {
        let data = blob_dataset(41);
        let Classifier::ReluNet(net) = train(
            &TrainSpec::ReluNet(ReluParams {
                neurons: 6,
                epochs: 40,
                restarts: 1,
                ..ReluParams::default()
            }),
            &data,
            21,
        )
        .unwrap() else {
            panic!("expected network");
        };
        // Re-implementation with a different accumulation order.
        let eval2 = |x: &[f64]| -> f64 {
            let per_neuron: Vec<f64> = (0..net.neurons())
                .map(|t| {
                    let mut pre = net.hidden_bias[t];
                    for d in (0..x.len()).rev() {
                        pre += net.hidden_weights[t][d] * x[d];
                    }
                    net.output_weights[t] * pre.max(0.0)
                })
                .collect();
            per_neuron.iter().rev().sum::<f64>() + net.output_bias
        };
        let mut rng = rng_from_seed(55);
        for _ in 0..1000 {
            let x = vec![rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0)];
            let a = net.decision(&x);
            let b = eval2(&x);
            let scale = a.abs().max(b.abs()).max(1.0);
            assert!((a - b).abs() / scale < 1e-12, "{a} vs {b}");
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn predict_positive_iff_decision_nonnegative(
                w in proptest::collection::vec(-5.0f64..5.0, 3),
                b in -5.0f64..5.0,
                x in proptest::collection::vec(-5.0f64..5.0, 3)
            ) {
                prop_assume!(w.iter().any(|&wi| wi != 0.0));
                let clf = Classifier::Linear(LinearModel::new(w, b));
                let f = clf.decision_function(&x).unwrap();
                let p = clf.predict(&x).unwrap();
                prop_assert_eq!(p == 1, f >= 0.0);
            }
        }
    }
}
