//! Datasets, feature schemas, quantile tables, and missingness injection.
//!
//! CSV ingestion is strict: a header row is mandatory, values outside the
//! declared feature bounds are errors (silent clipping would corrupt both the
//! quantile tables and the big-M constants computed downstream), and the
//! label column must carry exactly two distinct values.

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::rng_from_seed;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("unknown column {0:?}")]
    UnknownColumn(String),
    #[error("malformed row {row}: {reason}")]
    MalformedRow { row: usize, reason: String },
    #[error("feature {feature:?} value {value} outside declared bounds [{lower}, {upper}]")]
    OutOfBounds {
        feature: String,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("label column {column:?} must take exactly two distinct values, found {found}")]
    LabelCardinality { column: String, found: usize },
    #[error("invalid feature metadata for {feature:?}: {reason}")]
    InvalidMeta { feature: String, reason: String },
    #[error("invalid schema line {line}: {reason}")]
    SchemaParse { line: usize, reason: String },
    #[error("quantile resolution must be at least 2, got {0}")]
    BadResolution(usize),
    #[error("feature {0:?} is constant; its empirical CDF is degenerate")]
    ConstantColumn(String),
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadTestFraction(f64),
    #[error("split produced an empty partition ({0} rows, test fraction {1})")]
    EmptyPartition(usize, f64),
    #[error("missingness mechanism invalid: {0}")]
    BadMechanism(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Value domain of a feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Continuous,
    Integer,
    Binary,
}

/// How a feature may be perturbed by a recourse action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Actionability {
    Free,
    Immutable,
    IncreaseOnly,
    DecreaseOnly,
}

/// Per-feature metadata: name, kind, box bounds, and actionability.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub name: String,
    pub kind: FeatureKind,
    pub lower: f64,
    pub upper: f64,
    pub actionable: Actionability,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantiles: Option<QuantileTable>,
}

impl FeatureMeta {
    pub fn new(
        name: impl Into<String>,
        kind: FeatureKind,
        lower: f64,
        upper: f64,
        actionable: Actionability,
    ) -> Self {
        Self {
            name: name.into(),
            kind,
            lower,
            upper,
            actionable,
            quantiles: None,
        }
    }

    /// Check the declared bounds against the feature kind.
    pub fn validate(&self) -> Result<(), DataError> {
        let fail = |reason: &str| {
            Err(DataError::InvalidMeta {
                feature: self.name.clone(),
                reason: reason.to_string(),
            })
        };
        if !(self.lower.is_finite() && self.upper.is_finite()) {
            return fail("bounds must be finite");
        }
        if self.lower >= self.upper {
            return fail("lower bound must be strictly below upper bound");
        }
        match self.kind {
            FeatureKind::Integer => {
                if self.lower.fract() != 0.0 || self.upper.fract() != 0.0 {
                    return fail("integer features need integral bounds");
                }
            }
            FeatureKind::Binary => {
                if self.lower != 0.0 || self.upper != 1.0 {
                    return fail("binary features need bounds {0, 1}");
                }
            }
            FeatureKind::Continuous => {}
        }
        Ok(())
    }

    /// Whether `value` is a legal value for this feature.
    pub fn contains(&self, value: f64) -> bool {
        if !(value >= self.lower && value <= self.upper) {
            return false;
        }
        match self.kind {
            FeatureKind::Continuous => true,
            FeatureKind::Integer | FeatureKind::Binary => value.fract() == 0.0,
        }
    }
}

/// Empirical CDF of one feature with rank smoothing.
///
/// `Q(v) = (#{samples <= v} + 0.5) / (n + 1)`, which keeps `0 < Q < 1` on the
/// whole domain so log-percentile costs stay finite everywhere.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QuantileTable {
    sorted: Vec<f64>,
}

impl QuantileTable {
    /// Build from raw samples. Sorts internally.
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        samples.sort_by(f64::total_cmp);
        Self { sorted: samples }
    }

    /// Smoothed empirical CDF value at `v`.
    pub fn cdf(&self, v: f64) -> f64 {
        let count = self.sorted.partition_point(|&s| s <= v);
        (count as f64 + 0.5) / (self.sorted.len() as f64 + 1.0)
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

/// Label column specification: which column, and which raw value maps to +1.
///
/// When `positive` is `None`, the two distinct label values must be numeric
/// and from one of the conventional encodings `{+1, -1}` or `{1, 0}`.
#[derive(Debug, Clone)]
pub struct LabelSpec {
    pub column: String,
    pub positive: Option<String>,
}

/// A feature schema plus label specification, parsed from a schema file.
#[derive(Debug, Clone)]
pub struct Schema {
    pub features: Vec<FeatureMeta>,
    pub label: LabelSpec,
}

impl Schema {
    /// Parse the flat key-value schema format.
    ///
    /// One declaration per line; `#` starts a comment. Grammar:
    ///
    /// ```text
    /// feature <name> kind=<continuous|integer|binary> lower=<real> upper=<real> actionable=<free|immutable|increase-only|decrease-only>
    /// label <name> [positive=<text>]
    /// ```
    pub fn parse(text: &str) -> Result<Self, DataError> {
        let mut features = Vec::new();
        let mut label: Option<LabelSpec> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |reason: String| DataError::SchemaParse {
                line: lineno + 1,
                reason,
            };
            let mut parts = line.split_whitespace();
            let head = parts.next().unwrap();
            let name = parts
                .next()
                .ok_or_else(|| parse_err("missing name".into()))?
                .to_string();
            let mut kv = std::collections::HashMap::new();
            for part in parts {
                let (k, v) = part
                    .split_once('=')
                    .ok_or_else(|| parse_err(format!("expected key=value, got {part:?}")))?;
                kv.insert(k, v);
            }
            match head {
                "feature" => {
                    let kind = match kv.get("kind").copied() {
                        Some("continuous") => FeatureKind::Continuous,
                        Some("integer") => FeatureKind::Integer,
                        Some("binary") => FeatureKind::Binary,
                        other => return Err(parse_err(format!("bad kind {other:?}"))),
                    };
                    let bound = |key: &str| -> Result<f64, DataError> {
                        kv.get(key)
                            .ok_or_else(|| parse_err(format!("missing {key}=")))?
                            .parse::<f64>()
                            .map_err(|e| parse_err(format!("bad {key}: {e}")))
                    };
                    let (lower, upper) = if kind == FeatureKind::Binary {
                        (0.0, 1.0)
                    } else {
                        (bound("lower")?, bound("upper")?)
                    };
                    let actionable = match kv.get("actionable").copied() {
                        None | Some("free") => Actionability::Free,
                        Some("immutable") => Actionability::Immutable,
                        Some("increase-only") => Actionability::IncreaseOnly,
                        Some("decrease-only") => Actionability::DecreaseOnly,
                        Some(other) => {
                            return Err(parse_err(format!("bad actionable {other:?}")))
                        }
                    };
                    let meta = FeatureMeta::new(name, kind, lower, upper, actionable);
                    meta.validate()?;
                    features.push(meta);
                }
                "label" => {
                    label = Some(LabelSpec {
                        column: name,
                        positive: kv.get("positive").map(|s| s.to_string()),
                    });
                }
                other => return Err(parse_err(format!("unknown directive {other:?}"))),
            }
        }
        let label = label.ok_or(DataError::SchemaParse {
            line: 0,
            reason: "schema declares no label column".into(),
        })?;
        if features.is_empty() {
            return Err(DataError::SchemaParse {
                line: 0,
                reason: "schema declares no features".into(),
            });
        }
        Ok(Self { features, label })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DataError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }
}

/// A complete labeled dataset. Rows are instances; labels are in `{-1, +1}`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<FeatureMeta>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<i8>,
}

impl Dataset {
    pub fn new(
        features: Vec<FeatureMeta>,
        rows: Vec<Vec<f64>>,
        labels: Vec<i8>,
    ) -> Result<Self, DataError> {
        for meta in &features {
            meta.validate()?;
        }
        assert_eq!(rows.len(), labels.len(), "rows and labels must align");
        for (i, row) in rows.iter().enumerate() {
            if row.len() != features.len() {
                return Err(DataError::MalformedRow {
                    row: i,
                    reason: format!("expected {} values, got {}", features.len(), row.len()),
                });
            }
            for (meta, &v) in features.iter().zip(row) {
                if !meta.contains(v) {
                    return Err(DataError::OutOfBounds {
                        feature: meta.name.clone(),
                        value: v,
                        lower: meta.lower,
                        upper: meta.upper,
                    });
                }
            }
        }
        for &l in &labels {
            assert!(l == -1 || l == 1, "labels must be -1 or +1");
        }
        Ok(Self {
            features,
            rows,
            labels,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }

    /// Values of one feature column across all rows.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[feature]).collect()
    }

    /// Median of one feature column (lower of the two middles for even n).
    pub fn median(&self, feature: usize) -> f64 {
        let mut col = self.column(feature);
        col.sort_by(f64::total_cmp);
        col[(col.len().saturating_sub(1)) / 2]
    }

    /// Fit quantile tables for every feature and store them in the metadata.
    pub fn fit_all_quantiles(&mut self, resolution: usize) -> Result<(), DataError> {
        for d in 0..self.dim() {
            let table = fit_quantiles(self, d, resolution)?;
            self.features[d].quantiles = Some(table);
        }
        Ok(())
    }
}

/// An instance whose features may be missing. `values[d]` is `None` exactly
/// when feature `d` is missing.
#[derive(Debug, Clone, PartialEq)]
pub struct IncompleteInstance {
    pub values: Vec<Option<f64>>,
}

impl IncompleteInstance {
    pub fn complete(values: Vec<f64>) -> Self {
        Self {
            values: values.into_iter().map(Some).collect(),
        }
    }

    pub fn with_missing(values: &[f64], missing: &BTreeSet<usize>) -> Self {
        Self {
            values: values
                .iter()
                .enumerate()
                .map(|(d, &v)| if missing.contains(&d) { None } else { Some(v) })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn missing_set(&self) -> BTreeSet<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(d, v)| v.is_none().then_some(d))
            .collect()
    }

    pub fn observed_set(&self) -> BTreeSet<usize> {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(d, v)| v.is_some().then_some(d))
            .collect()
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// The underlying complete vector; panics if any feature is missing.
    pub fn expect_complete(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|v| v.expect("instance has missing values"))
            .collect()
    }
}

impl fmt::Display for IncompleteInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .values
            .iter()
            .map(|v| match v {
                Some(x) => format!("{x}"),
                None => "*".to_string(),
            })
            .collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// How missing values are injected into a complete instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Mechanism {
    /// Drop exactly `n_missing` uniformly chosen features.
    Mcar { n_missing: usize },
    /// Drop `target` iff the value at `cond` exceeds `threshold`.
    Mar {
        target: usize,
        cond: usize,
        threshold: f64,
    },
    /// Drop `target` iff its own value exceeds `threshold`.
    Mnar { target: usize, threshold: f64 },
}

/// Inject missing values into a complete row under the given mechanism.
pub fn inject_missing(
    row: &[f64],
    mechanism: &Mechanism,
    seed: u64,
) -> Result<IncompleteInstance, DataError> {
    let dim = row.len();
    let mut missing = BTreeSet::new();
    match *mechanism {
        Mechanism::Mcar { n_missing } => {
            if n_missing == 0 || n_missing >= dim {
                return Err(DataError::BadMechanism(format!(
                    "MCAR needs 1 <= n_missing < {dim}, got {n_missing}"
                )));
            }
            let mut rng = rng_from_seed(seed);
            let mut indices: Vec<usize> = (0..dim).collect();
            indices.shuffle(&mut rng);
            missing.extend(indices.into_iter().take(n_missing));
        }
        Mechanism::Mar {
            target,
            cond,
            threshold,
        } => {
            if target == cond {
                return Err(DataError::BadMechanism(
                    "MAR target must differ from conditioning feature".into(),
                ));
            }
            if target >= dim || cond >= dim {
                return Err(DataError::BadMechanism("feature index out of range".into()));
            }
            if row[cond] > threshold {
                missing.insert(target);
            }
        }
        Mechanism::Mnar { target, threshold } => {
            if target >= dim {
                return Err(DataError::BadMechanism("feature index out of range".into()));
            }
            if row[target] > threshold {
                missing.insert(target);
            }
        }
    }
    Ok(IncompleteInstance::with_missing(row, &missing))
}

/// Fit the smoothed empirical CDF of one feature column.
///
/// `resolution` caps the number of stored knots; when the column has more
/// samples than that, evenly spaced order statistics are kept (always
/// including the extremes).
pub fn fit_quantiles(
    dataset: &Dataset,
    feature: usize,
    resolution: usize,
) -> Result<QuantileTable, DataError> {
    if resolution < 2 {
        return Err(DataError::BadResolution(resolution));
    }
    let mut col = dataset.column(feature);
    col.sort_by(f64::total_cmp);
    let n = col.len();
    if n == 0 || col[0] == col[n - 1] {
        return Err(DataError::ConstantColumn(
            dataset.features[feature].name.clone(),
        ));
    }
    let knots = if n <= resolution {
        col
    } else {
        (0..resolution)
            .map(|i| col[(i * (n - 1)) / (resolution - 1)])
            .collect()
    };
    Ok(QuantileTable::from_samples(knots))
}

/// Deterministically split a dataset into (train, test).
pub fn split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset), DataError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(DataError::BadTestFraction(test_fraction));
    }
    let n = dataset.n_rows();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(DataError::EmptyPartition(n, test_fraction));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = rng_from_seed(seed);
    indices.shuffle(&mut rng);
    let take = |idx: &[usize]| -> Dataset {
        Dataset {
            features: dataset.features.clone(),
            rows: idx.iter().map(|&i| dataset.rows[i].clone()).collect(),
            labels: idx.iter().map(|&i| dataset.labels[i]).collect(),
        }
    };
    let (test_idx, train_idx) = indices.split_at(n_test);
    Ok((take(train_idx), take(test_idx)))
}

fn parse_cell(cell: &str, row: usize, column: &str) -> Result<Option<f64>, DataError> {
    let trimmed = cell.trim();
    if trimmed.is_empty() || trimmed == "NA" {
        return Ok(None);
    }
    trimmed
        .parse::<f64>()
        .map(Some)
        .map_err(|e| DataError::MalformedRow {
            row,
            reason: format!("column {column:?}: {e}"),
        })
}

struct CsvLayout {
    /// CSV column index for each schema feature.
    feature_cols: Vec<usize>,
    label_col: usize,
}

fn resolve_layout(
    headers: &csv::StringRecord,
    features: &[FeatureMeta],
    label: &LabelSpec,
) -> Result<CsvLayout, DataError> {
    let find = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    };
    let feature_cols = features
        .iter()
        .map(|m| find(&m.name))
        .collect::<Result<Vec<_>, _>>()?;
    let label_col = find(&label.column)?;
    Ok(CsvLayout {
        feature_cols,
        label_col,
    })
}

/// Load a complete labeled dataset from CSV.
///
/// The header must contain every schema feature plus the label column.
/// Missing cells are not allowed here; use [`read_instance_csv`] for
/// instances with missing values. Out-of-bounds values are hard errors.
pub fn load_csv(
    path: impl AsRef<Path>,
    features: &[FeatureMeta],
    label: &LabelSpec,
) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let layout = resolve_layout(reader.headers()?, features, label)?;

    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(features.len());
        for (meta, &col) in features.iter().zip(&layout.feature_cols) {
            let cell = record.get(col).ok_or_else(|| DataError::MalformedRow {
                row: i,
                reason: "short record".into(),
            })?;
            let value = parse_cell(cell, i, &meta.name)?.ok_or_else(|| {
                DataError::MalformedRow {
                    row: i,
                    reason: format!("missing value in column {:?}; datasets must be complete", meta.name),
                }
            })?;
            row.push(value);
        }
        let label_cell = record
            .get(layout.label_col)
            .ok_or_else(|| DataError::MalformedRow {
                row: i,
                reason: "short record".into(),
            })?;
        raw_labels.push(label_cell.trim().to_string());
        rows.push(row);
    }

    let labels = map_labels(&raw_labels, label)?;
    Dataset::new(features.to_vec(), rows, labels)
}

fn map_labels(raw: &[String], spec: &LabelSpec) -> Result<Vec<i8>, DataError> {
    let distinct: BTreeSet<&String> = raw.iter().collect();
    if distinct.len() != 2 {
        return Err(DataError::LabelCardinality {
            column: spec.column.clone(),
            found: distinct.len(),
        });
    }
    let positive: String = match &spec.positive {
        Some(p) => p.clone(),
        None => {
            // Conventional numeric encodings: {+1, -1} or {1, 0}.
            let nums: Option<Vec<f64>> = distinct.iter().map(|s| s.parse::<f64>().ok()).collect();
            let Some(mut nums) = nums else {
                return Err(DataError::SchemaParse {
                    line: 0,
                    reason: format!(
                        "label values {distinct:?} are not numeric; declare positive=<value> in the schema"
                    ),
                });
            };
            nums.sort_by(f64::total_cmp);
            if nums == [-1.0, 1.0] || nums == [0.0, 1.0] {
                distinct
                    .iter()
                    .find(|s| s.parse::<f64>().unwrap() == 1.0)
                    .unwrap()
                    .to_string()
            } else {
                return Err(DataError::SchemaParse {
                    line: 0,
                    reason: format!(
                        "cannot infer positive label from values {distinct:?}; declare positive=<value>"
                    ),
                });
            }
        }
    };
    if !distinct.iter().any(|s| **s == positive) {
        return Err(DataError::SchemaParse {
            line: 0,
            reason: format!("declared positive label {positive:?} never occurs"),
        });
    }
    Ok(raw
        .iter()
        .map(|s| if *s == positive { 1 } else { -1 })
        .collect())
}

/// Read a single instance (possibly with missing cells) from a one-row CSV.
///
/// Missing cells are encoded as the empty string or the literal `NA`.
pub fn read_instance_csv(
    path: impl AsRef<Path>,
    features: &[FeatureMeta],
) -> Result<IncompleteInstance, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(file);
    let headers = reader.headers()?.clone();
    let find = |name: &str| -> Result<usize, DataError> {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DataError::UnknownColumn(name.to_string()))
    };
    let cols: Vec<usize> = features
        .iter()
        .map(|m| find(&m.name))
        .collect::<Result<_, _>>()?;
    let record = reader
        .records()
        .next()
        .ok_or_else(|| DataError::MalformedRow {
            row: 0,
            reason: "instance file has no data row".into(),
        })??;
    let mut values = Vec::with_capacity(features.len());
    for (meta, &col) in features.iter().zip(&cols) {
        let cell = record.get(col).ok_or_else(|| DataError::MalformedRow {
            row: 0,
            reason: "short record".into(),
        })?;
        let parsed = parse_cell(cell, 0, &meta.name)?;
        if let Some(v) = parsed {
            if !meta.contains(v) {
                return Err(DataError::OutOfBounds {
                    feature: meta.name.clone(),
                    value: v,
                    lower: meta.lower,
                    upper: meta.upper,
                });
            }
        }
        values.push(parsed);
    }
    Ok(IncompleteInstance { values })
}

/// Write a dataset back to CSV (features in schema order, label last).
///
/// Values are printed with the shortest decimal form that round-trips, so
/// `load_csv(write_csv(ds))` reproduces the rows bit-exactly.
pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>, label_column: &str) -> Result<(), DataError> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut writer = csv::Writer::from_writer(file);
    let mut header: Vec<&str> = dataset.features.iter().map(|m| m.name.as_str()).collect();
    header.push(label_column);
    writer.write_record(&header)?;
    for (row, &label) in dataset.rows.iter().zip(&dataset.labels) {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        record.push(format!("{label}"));
        writer.write_record(&record)?;
    }
    writer.flush().map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn demo_features() -> Vec<FeatureMeta> {
        vec![
            FeatureMeta::new("age", FeatureKind::Integer, 18.0, 90.0, Actionability::Free),
            FeatureMeta::new(
                "income",
                FeatureKind::Continuous,
                0.0,
                200.0,
                Actionability::Free,
            ),
        ]
    }

    fn label_spec() -> LabelSpec {
        LabelSpec {
            column: "label".into(),
            positive: None,
        }
    }

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_csv_parses_three_rows() {
        let f = write_temp("age,income,label\n30,50,1\n40,60,-1\n50,70,1\n");
        let ds = load_csv(f.path(), &demo_features(), &label_spec()).unwrap();
        assert_eq!(ds.n_rows(), 3);
        assert_eq!(ds.rows[1], vec![40.0, 60.0]);
        assert_eq!(ds.labels, vec![1, -1, 1]);
    }

    #[test]
    fn load_csv_rejects_out_of_bounds() {
        let f = write_temp("age,income,label\n30,-5,1\n40,60,-1\n");
        let err = load_csv(f.path(), &demo_features(), &label_spec()).unwrap_err();
        assert!(matches!(err, DataError::OutOfBounds { .. }), "{err}");
    }

    #[test]
    fn load_csv_rejects_three_label_values() {
        let f = write_temp("age,income,label\n30,50,1\n40,60,-1\n50,70,2\n");
        let err = load_csv(f.path(), &demo_features(), &label_spec()).unwrap_err();
        assert!(matches!(err, DataError::LabelCardinality { found: 3, .. }), "{err}");
    }

    #[test]
    fn load_csv_rejects_unknown_column() {
        let f = write_temp("age,label\n30,1\n40,-1\n");
        let err = load_csv(f.path(), &demo_features(), &label_spec()).unwrap_err();
        assert!(matches!(err, DataError::UnknownColumn(ref c) if c == "income"), "{err}");
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let features = vec![
            FeatureMeta::new("a", FeatureKind::Continuous, -10.0, 10.0, Actionability::Free),
            FeatureMeta::new("b", FeatureKind::Integer, 0.0, 100.0, Actionability::Free),
        ];
        let rows = vec![
            vec![0.1 + 0.2, 3.0],
            vec![-9.999999999, 97.0],
            vec![1.0 / 3.0, 0.0],
        ];
        let ds = Dataset::new(features.clone(), rows.clone(), vec![1, -1, 1]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_csv(&ds, f.path(), "label").unwrap();
        let back = load_csv(
            f.path(),
            &features,
            &LabelSpec {
                column: "label".into(),
                positive: None,
            },
        )
        .unwrap();
        assert_eq!(back.rows, rows);
        assert_eq!(back.labels, ds.labels);
    }

    #[test]
    fn quantile_table_rank_smoothing() {
        let ds = Dataset::new(
            vec![FeatureMeta::new(
                "x",
                FeatureKind::Continuous,
                0.0,
                10.0,
                Actionability::Free,
            )],
            vec![vec![1.0], vec![2.0], vec![3.0]],
            vec![1, -1, 1],
        )
        .unwrap();
        let q = fit_quantiles(&ds, 0, 16).unwrap();
        // (#{samples <= 2} + 0.5) / (3 + 1) = 2.5 / 4
        assert_eq!(q.cdf(2.0), 0.625);
        assert!(q.cdf(2.0) > 0.33 && q.cdf(2.0) < 0.67);
        // Below all samples: strictly positive floor.
        assert!(q.cdf(0.0) > 0.0);
        assert_eq!(q.cdf(0.0), 0.125);
        // Above all samples: strictly below one.
        assert!(q.cdf(10.0) < 1.0);
        assert_eq!(q.cdf(10.0), 0.875);
    }

    #[test]
    fn quantile_rejects_constant_column_and_bad_resolution() {
        let ds = Dataset::new(
            vec![FeatureMeta::new(
                "x",
                FeatureKind::Continuous,
                0.0,
                10.0,
                Actionability::Free,
            )],
            vec![vec![5.0], vec![5.0]],
            vec![1, -1],
        )
        .unwrap();
        assert!(matches!(
            fit_quantiles(&ds, 0, 8).unwrap_err(),
            DataError::ConstantColumn(_)
        ));
        assert!(matches!(
            fit_quantiles(&ds, 0, 1).unwrap_err(),
            DataError::BadResolution(1)
        ));
    }

    fn hundred_row_dataset() -> Dataset {
        let features = vec![FeatureMeta::new(
            "x",
            FeatureKind::Continuous,
            0.0,
            1000.0,
            Actionability::Free,
        )];
        let rows: Vec<Vec<f64>> = (0..100).map(|i| vec![i as f64]).collect();
        let labels: Vec<i8> = (0..100).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        Dataset::new(features, rows, labels).unwrap()
    }

    #[test]
    fn split_sizes_and_determinism() {
        let ds = hundred_row_dataset();
        let (train, test) = split(&ds, 0.25, 7).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (75, 25));
        let (train2, test2) = split(&ds, 0.25, 7).unwrap();
        assert_eq!(train.rows, train2.rows);
        assert_eq!(test.rows, test2.rows);
        // Disjoint and exhaustive.
        let mut all: Vec<f64> = train.rows.iter().chain(&test.rows).map(|r| r[0]).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..100).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn split_rejects_degenerate_fraction() {
        let ds = hundred_row_dataset();
        assert!(matches!(
            split(&ds, 0.0, 1).unwrap_err(),
            DataError::BadTestFraction(_)
        ));
        assert!(matches!(
            split(&ds, 1.0, 1).unwrap_err(),
            DataError::BadTestFraction(_)
        ));
    }

    #[test]
    fn mcar_drops_exactly_requested_count() {
        let row = vec![0.0; 10];
        let inst = inject_missing(&row, &Mechanism::Mcar { n_missing: 2 }, 13).unwrap();
        assert_eq!(inst.missing_set().len(), 2);
        assert_eq!(inst.observed_set().len(), 8);
    }

    #[test]
    fn mcar_rejects_all_features_missing() {
        let row = vec![0.0; 4];
        assert!(inject_missing(&row, &Mechanism::Mcar { n_missing: 4 }, 1).is_err());
    }

    #[test]
    fn mar_and_mnar_follow_thresholds() {
        // MAR: income (1) dropped only when age (0) exceeds the threshold.
        let below = inject_missing(
            &[30.0, 55.0],
            &Mechanism::Mar {
                target: 1,
                cond: 0,
                threshold: 45.0,
            },
            0,
        )
        .unwrap();
        assert!(below.missing_set().is_empty());
        let above = inject_missing(
            &[60.0, 55.0],
            &Mechanism::Mar {
                target: 1,
                cond: 0,
                threshold: 45.0,
            },
            0,
        )
        .unwrap();
        assert_eq!(above.missing_set(), BTreeSet::from([1]));

        // MNAR: income dropped when income itself exceeds the threshold.
        let rich = inject_missing(
            &[30.0, 80.0],
            &Mechanism::Mnar {
                target: 1,
                threshold: 55.0,
            },
            0,
        )
        .unwrap();
        assert_eq!(rich.missing_set(), BTreeSet::from([1]));
    }

    #[test]
    fn mcar_is_uniform_over_features() {
        // 10^4 draws of MCAR(2) over 10 features; chi-square against the
        // uniform law at alpha = 0.001 (df = 9, critical value 27.877).
        let row = vec![0.0; 10];
        let draws = 10_000usize;
        let mut counts = [0usize; 10];
        for t in 0..draws {
            let inst = inject_missing(&row, &Mechanism::Mcar { n_missing: 2 }, t as u64).unwrap();
            for d in inst.missing_set() {
                counts[d] += 1;
            }
        }
        let expected = (draws * 2) as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let diff = c as f64 - expected;
                diff * diff / expected
            })
            .sum();
        assert!(chi2 < 27.877, "chi-square statistic {chi2} too extreme");
    }

    #[test]
    fn schema_parse_round_trip() {
        let text = "\
# demo schema
feature age kind=integer lower=18 upper=90 actionable=immutable
feature income kind=continuous lower=0 upper=200 actionable=increase-only
feature owns_home kind=binary
label outcome positive=good
";
        let schema = Schema::parse(text).unwrap();
        assert_eq!(schema.features.len(), 3);
        assert_eq!(schema.features[0].actionable, Actionability::Immutable);
        assert_eq!(schema.features[2].kind, FeatureKind::Binary);
        assert_eq!(schema.label.column, "outcome");
        assert_eq!(schema.label.positive.as_deref(), Some("good"));
    }

    #[test]
    fn schema_rejects_bad_lines() {
        assert!(Schema::parse("feature x kind=banana lower=0 upper=1\nlabel y\n").is_err());
        assert!(Schema::parse("feature x kind=integer lower=0.5 upper=2\nlabel y\n").is_err());
        assert!(Schema::parse("feature x kind=continuous lower=0 upper=1\n").is_err());
    }

    #[test]
    fn instance_csv_reads_missing_cells() {
        let f = write_temp("age,income\n44,NA\n");
        let inst = read_instance_csv(f.path(), &demo_features()).unwrap();
        assert_eq!(inst.values[0], Some(44.0));
        assert_eq!(inst.values[1], None);
        assert_eq!(inst.missing_set(), BTreeSet::from([1]));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn quantile_cdf_is_monotone(mut samples in proptest::collection::vec(-1e6f64..1e6, 2..64),
                                        u in -2e6f64..2e6, v in -2e6f64..2e6) {
                samples.dedup();
                let table = QuantileTable::from_samples(samples);
                let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
                prop_assert!(table.cdf(lo) <= table.cdf(hi));
                prop_assert!(table.cdf(lo) > 0.0 && table.cdf(hi) < 1.0);
            }
        }
    }
}
