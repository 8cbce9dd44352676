//! The batch experiment protocol: train a classifier, hide feature values on
//! the rejected test instances, run every configured recourse method, and
//! score the resulting actions against the original (unhidden) instances.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::actions::{build_grid_with_costs, Action, ActionError, CostSpec};
use crate::data::{
    inject_missing, load_csv, split, DataError, Dataset, IncompleteInstance, Mechanism, Schema,
};
use crate::imputation::{
    sample_candidates, CandidateSample, ImputationError, Imputer, ImputerState, SamplerSpec,
};
use crate::milp::SolverParams;
use crate::models::{train, Classifier, ModelError, TrainSpec};
use crate::recourse::{
    empirical_validity, solve_armin, solve_imputation_ar, solve_plain_ar, solve_robust_ar,
    Heuristic, RecourseError, RecourseResult,
};
use crate::rng::derive_seed;

use super::{sign_agreement, synthetic};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Imputation(#[from] ImputationError),
    #[error(transparent)]
    Recourse(#[from] RecourseError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Where the experiment data comes from.
#[derive(Debug, Clone)]
pub enum DatasetSource {
    Csv { data: PathBuf, schema: PathBuf },
    SyntheticCredit { rows: usize },
}

/// Missingness protocol. `threshold: None` means the training-split median
/// of the conditioning feature (MAR) or of the target itself (MNAR).
#[derive(Debug, Clone)]
pub enum MechanismSpec {
    Mcar { n_missing: usize },
    Mar { target: usize, cond: usize, threshold: Option<f64> },
    Mnar { target: usize, threshold: Option<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CostKind {
    UniformL1,
    Tlps,
}

/// A recourse method to benchmark.
#[derive(Debug, Clone)]
pub enum MethodSpec {
    /// Ground truth: solve at the original complete instance.
    PlainAr,
    ImputationAr(Imputer),
    RobustAr(Imputer),
    Armin { rho: f64, heuristic: Heuristic },
}

impl MethodSpec {
    pub fn id(&self) -> String {
        match self {
            MethodSpec::PlainAr => "plain_ar".into(),
            MethodSpec::ImputationAr(Imputer::Mean) => "imputation_ar_mean".into(),
            MethodSpec::ImputationAr(Imputer::Knn { k }) => format!("imputation_ar_knn{k}"),
            MethodSpec::ImputationAr(Imputer::Chained { .. }) => "imputation_ar_chained".into(),
            MethodSpec::RobustAr(_) => "robust_ar".into(),
            MethodSpec::Armin { .. } => "armin".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: DatasetSource,
    pub train: TrainSpec,
    pub mechanism: MechanismSpec,
    pub methods: Vec<MethodSpec>,
    /// Imputation candidates per instance.
    pub n_candidates: usize,
    pub sampler: SamplerSpec,
    /// Grid intervals per feature.
    pub bins: usize,
    pub cost: CostKind,
    pub test_fraction: f64,
    /// Cap on processed (rejected, incomplete) test instances.
    pub max_instances: usize,
    pub seed: u64,
    pub solver: SolverParams,
    /// When set, additionally sweep these confidence levels with exact
    /// (non-heuristic) solves.
    pub rho_sweep: Option<Vec<f64>>,
    /// Worker threads for per-instance parallelism (0 = rayon default).
    pub jobs: usize,
    /// Include wall-clock columns in reports. Off by default so that fixed
    /// seeds give byte-identical output.
    pub record_timing: bool,
}

impl ExperimentConfig {
    pub fn new(source: DatasetSource, train: TrainSpec, mechanism: MechanismSpec) -> Self {
        Self {
            source,
            train,
            mechanism,
            methods: vec![
                MethodSpec::PlainAr,
                MethodSpec::ImputationAr(Imputer::Mean),
                MethodSpec::RobustAr(Imputer::Chained { sweeps: 3 }),
                MethodSpec::Armin { rho: 0.75, heuristic: Heuristic::default() },
            ],
            n_candidates: 100,
            sampler: SamplerSpec::default(),
            bins: 6,
            cost: CostKind::Tlps,
            test_fraction: 0.25,
            max_instances: 100,
            seed: 0,
            solver: SolverParams::default(),
            rho_sweep: None,
            jobs: 0,
            record_timing: false,
        }
    }
}

/// The confidence grid used by the sensitivity analysis: 0.5 to 0.9 in steps
/// of 0.05.
pub fn default_rho_grid() -> Vec<f64> {
    (0..=8).map(|i| (50 + 5 * i) as f64 / 100.0).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct InstanceRecord {
    pub instance: usize,
    pub method: String,
    pub missing: Vec<usize>,
    pub action: Option<Vec<f64>>,
    pub cost: Option<f64>,
    pub valid_for_original: bool,
    pub validity_on_sample: f64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodAggregate {
    pub method: String,
    pub instances: usize,
    pub returned: usize,
    /// Fraction of instances whose action is valid for the original.
    pub valid_ratio: f64,
    /// Mean cost over instances that returned an action.
    pub mean_cost_returned: Option<f64>,
    /// Mean cost restricted to actions valid for the original.
    pub mean_cost_valid: Option<f64>,
    pub mean_sign_agreement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_wall_ms: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RhoSweepPoint {
    pub rho: f64,
    pub valid_ratio: f64,
    /// Mean cost over the common subset of instances feasible at every
    /// sweep level (keeps the curve comparable across levels).
    pub mean_cost: Option<f64>,
    pub instances: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub classifier: String,
    pub mechanism: String,
    pub n_candidates: usize,
    pub seed: u64,
    pub cohort_size: usize,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub aggregates: Vec<MethodAggregate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<RhoSweepPoint>>,
    pub records: Vec<InstanceRecord>,
}

fn describe_train(spec: &TrainSpec) -> String {
    match spec {
        TrainSpec::Logistic(_) => "logistic".into(),
        TrainSpec::ReluNet(p) => format!("relu_net(neurons={})", p.neurons),
        TrainSpec::Forest(p) => format!("forest(trees={},max_depth={})", p.trees, p.max_depth),
    }
}

fn resolve_mechanism(spec: &MechanismSpec, train_data: &Dataset) -> Mechanism {
    match *spec {
        MechanismSpec::Mcar { n_missing } => Mechanism::Mcar { n_missing },
        MechanismSpec::Mar { target, cond, threshold } => Mechanism::Mar {
            target,
            cond,
            threshold: threshold.unwrap_or_else(|| train_data.median(cond)),
        },
        MechanismSpec::Mnar { target, threshold } => Mechanism::Mnar {
            target,
            threshold: threshold.unwrap_or_else(|| train_data.median(target)),
        },
    }
}

fn describe_mechanism(mechanism: &Mechanism, data: &Dataset) -> String {
    let name = |d: usize| data.features[d].name.clone();
    match mechanism {
        Mechanism::Mcar { n_missing } => format!("mcar(n_missing={n_missing})"),
        Mechanism::Mar { target, cond, threshold } => {
            format!("mar(target={},cond={},threshold={threshold})", name(*target), name(*cond))
        }
        Mechanism::Mnar { target, threshold } => {
            format!("mnar(target={},threshold={threshold})", name(*target))
        }
    }
}

struct Cohort {
    /// (test-row index, original row, incomplete instance)
    instances: Vec<(usize, Vec<f64>, IncompleteInstance)>,
}

struct Prepared {
    train_data: Dataset,
    test_data: Dataset,
    clf: Classifier,
    state: ImputerState,
    cost_spec: CostSpec,
    mechanism: Mechanism,
    cohort: Cohort,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared, ExperimentError> {
    if config.methods.is_empty() {
        return Err(ExperimentError::Config("no methods configured".into()));
    }
    if config.n_candidates == 0 {
        return Err(ExperimentError::Config("n_candidates must be positive".into()));
    }
    let dataset = match &config.source {
        DatasetSource::Csv { data, schema } => {
            let schema = Schema::load(schema)?;
            load_csv(data, &schema.features, &schema.label)?
        }
        DatasetSource::SyntheticCredit { rows } => {
            synthetic::credit_dataset(*rows, derive_seed(config.seed, 11))
        }
    };
    let (mut train_data, test_data) = split(&dataset, config.test_fraction, derive_seed(config.seed, 1))?;
    train_data.fit_all_quantiles(512)?;
    let clf = train(&config.train, &train_data, derive_seed(config.seed, 2))?;
    let state = ImputerState::fit(&train_data)?;
    let cost_spec = match config.cost {
        CostKind::UniformL1 => CostSpec::uniform_l1(train_data.dim()),
        CostKind::Tlps => CostSpec::tlps_from_metas(&train_data.features)?,
    };
    let mechanism = resolve_mechanism(&config.mechanism, &train_data);

    let mut instances = Vec::new();
    for (idx, row) in test_data.rows.iter().enumerate() {
        if instances.len() >= config.max_instances {
            break;
        }
        if clf.predict(row)? != -1 {
            continue;
        }
        let incomplete = inject_missing(row, &mechanism, derive_seed(config.seed, 100 + idx as u64))?;
        if incomplete.missing_set().is_empty() {
            continue; // outside the mechanism's cohort
        }
        instances.push((idx, row.clone(), incomplete));
    }
    Ok(Prepared {
        train_data,
        test_data,
        clf,
        state,
        cost_spec,
        mechanism,
        cohort: Cohort { instances },
    })
}

struct InstanceOutput {
    records: Vec<InstanceRecord>,
    /// Per sweep level: (cost, valid_for_original, feasible).
    sweep: Vec<(Option<f64>, bool)>,
}

fn run_method(
    method: &MethodSpec,
    original: &[f64],
    incomplete: &IncompleteInstance,
    sample: &CandidateSample,
    grid_incomplete: &crate::actions::ActionGrid,
    grid_complete: &crate::actions::ActionGrid,
    prepared: &Prepared,
    solver: &SolverParams,
    seed: u64,
) -> Result<RecourseResult, RecourseError> {
    match method {
        MethodSpec::PlainAr => solve_plain_ar(original, &prepared.clf, grid_complete, solver),
        MethodSpec::ImputationAr(imputer) => solve_imputation_ar(
            incomplete,
            imputer,
            &prepared.state,
            &prepared.clf,
            grid_incomplete,
            solver,
        ),
        MethodSpec::RobustAr(imputer) => solve_robust_ar(
            incomplete,
            imputer,
            &prepared.state,
            &prepared.clf,
            grid_incomplete,
            sample,
            solver,
        ),
        MethodSpec::Armin { rho, heuristic } => solve_armin(
            &prepared.clf,
            grid_incomplete,
            sample,
            *rho,
            *heuristic,
            solver,
            seed,
        ),
    }
}

fn process_instance(
    config: &ExperimentConfig,
    prepared: &Prepared,
    position: usize,
    test_idx: usize,
    original: &[f64],
    incomplete: &IncompleteInstance,
) -> Result<InstanceOutput, ExperimentError> {
    let metas = &prepared.train_data.features;
    let missing: Vec<usize> = incomplete.missing_set().into_iter().collect();
    let grid_incomplete =
        build_grid_with_costs(incomplete, metas, config.bins, &prepared.cost_spec)?;
    let complete = IncompleteInstance::complete(original.to_vec());
    let grid_complete = build_grid_with_costs(&complete, metas, config.bins, &prepared.cost_spec)?;
    let sample = sample_candidates(
        incomplete,
        config.sampler,
        &prepared.state,
        config.n_candidates,
        derive_seed(config.seed, 3000 + test_idx as u64),
    )?;

    let mut records = Vec::with_capacity(config.methods.len());
    for (m_idx, method) in config.methods.iter().enumerate() {
        let outcome = run_method(
            method,
            original,
            incomplete,
            &sample,
            &grid_incomplete,
            &grid_complete,
            prepared,
            &config.solver,
            derive_seed(config.seed, 7000 + (test_idx * 31 + m_idx) as u64),
        );
        let record = match outcome {
            Ok(result) => {
                let valid_for_original = match &result.action {
                    Some(a) => prepared.clf.predict(&a.apply(original))? == 1,
                    None => false,
                };
                let validity_on_sample = match &result.action {
                    Some(a) => empirical_validity(a, &sample, &prepared.clf)?,
                    None => 0.0,
                };
                InstanceRecord {
                    instance: position,
                    method: method.id(),
                    missing: missing.clone(),
                    action: result.action.as_ref().map(|a| a.deltas.clone()),
                    cost: result.action.is_some().then_some(result.cost),
                    valid_for_original,
                    validity_on_sample,
                    status: result.status.as_str().into(),
                    wall_ms: config
                        .record_timing
                        .then(|| result.wall.as_secs_f64() * 1e3),
                }
            }
            Err(err) => InstanceRecord {
                instance: position,
                method: method.id(),
                missing: missing.clone(),
                action: None,
                cost: None,
                valid_for_original: false,
                validity_on_sample: 0.0,
                status: format!("error: {err}"),
                wall_ms: None,
            },
        };
        records.push(record);
    }

    // Exact sweep solves on the shared sample.
    let mut sweep = Vec::new();
    if let Some(grid) = &config.rho_sweep {
        for &rho in grid {
            let outcome = solve_armin(
                &prepared.clf,
                &grid_incomplete,
                &sample,
                rho,
                Heuristic::Off,
                &config.solver,
                0,
            )?;
            match outcome.action {
                Some(a) => {
                    let valid = prepared.clf.predict(&a.apply(original))? == 1;
                    sweep.push((Some(outcome.cost), valid));
                }
                None => sweep.push((None, false)),
            }
        }
    }

    Ok(InstanceOutput { records, sweep })
}

/// Run the configured experiment. Deterministic given the config (timing
/// columns excluded unless requested).
pub fn run_experiment(config: &ExperimentConfig) -> Result<Report, ExperimentError> {
    let prepared = prepare(config)?;
    let cohort = &prepared.cohort.instances;

    let work = |(position, (test_idx, original, incomplete)): (usize, &(usize, Vec<f64>, IncompleteInstance))| {
        process_instance(config, &prepared, position, *test_idx, original, incomplete)
    };
    let outputs: Result<Vec<InstanceOutput>, ExperimentError> = if config.jobs == 1 {
        cohort.iter().enumerate().map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| ExperimentError::Config(format!("thread pool: {e}")))?;
        pool.install(|| cohort.par_iter().enumerate().map(work).collect())
    };
    let outputs = outputs?;

    // Reference actions for sign agreement, recomputed here so the aggregate
    // pass stays a single deterministic fold over ordered records.
    let mut references: Vec<Option<Action>> = Vec::with_capacity(cohort.len());
    for (_, original, _) in cohort {
        let complete = IncompleteInstance::complete(original.clone());
        let grid = build_grid_with_costs(
            &complete,
            &prepared.train_data.features,
            config.bins,
            &prepared.cost_spec,
        )?;
        let plain = solve_plain_ar(original, &prepared.clf, &grid, &config.solver)?;
        references.push(plain.action);
    }

    let records: Vec<InstanceRecord> = outputs.iter().flat_map(|o| o.records.clone()).collect();
    let mut aggregates = Vec::new();
    for method in &config.methods {
        let id = method.id();
        let method_records: Vec<&InstanceRecord> =
            records.iter().filter(|r| r.method == id).collect();
        let instances = method_records.len();
        let returned = method_records.iter().filter(|r| r.action.is_some()).count();
        let valid = method_records.iter().filter(|r| r.valid_for_original).count();
        let costs: Vec<f64> = method_records.iter().filter_map(|r| r.cost).collect();
        let valid_costs: Vec<f64> = method_records
            .iter()
            .filter(|r| r.valid_for_original)
            .filter_map(|r| r.cost)
            .collect();
        let mean = |v: &[f64]| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
        let agreements: Vec<f64> = method_records
            .iter()
            .filter_map(|r| {
                let deltas = r.action.as_ref()?;
                let reference = references.get(r.instance)?.as_ref()?;
                Some(sign_agreement(&Action { deltas: deltas.clone() }, reference))
            })
            .collect();
        let walls: Vec<f64> = method_records.iter().filter_map(|r| r.wall_ms).collect();
        aggregates.push(MethodAggregate {
            method: id,
            instances,
            returned,
            valid_ratio: if instances == 0 { 0.0 } else { valid as f64 / instances as f64 },
            mean_cost_returned: mean(&costs),
            mean_cost_valid: mean(&valid_costs),
            mean_sign_agreement: mean(&agreements),
            mean_wall_ms: config.record_timing.then(|| mean(&walls).unwrap_or(0.0)),
        });
    }

    let sweep = config.rho_sweep.as_ref().map(|grid| {
        // Instances feasible at every level form the common cost denominator.
        let common: Vec<usize> = (0..cohort.len())
            .filter(|&i| outputs[i].sweep.iter().all(|(c, _)| c.is_some()))
            .collect();
        grid.iter()
            .enumerate()
            .map(|(level, &rho)| {
                let valid = (0..cohort.len())
                    .filter(|&i| outputs[i].sweep[level].1)
                    .count();
                let costs: Vec<f64> = common
                    .iter()
                    .filter_map(|&i| outputs[i].sweep[level].0)
                    .collect();
                RhoSweepPoint {
                    rho,
                    valid_ratio: if cohort.is_empty() {
                        0.0
                    } else {
                        valid as f64 / cohort.len() as f64
                    },
                    mean_cost: (!costs.is_empty())
                        .then(|| costs.iter().sum::<f64>() / costs.len() as f64),
                    instances: common.len(),
                }
            })
            .collect()
    });

    Ok(Report {
        classifier: describe_train(&config.train),
        mechanism: describe_mechanism(&prepared.mechanism, &prepared.train_data),
        n_candidates: config.n_candidates,
        seed: config.seed,
        cohort_size: cohort.len(),
        train_accuracy: prepared.clf.accuracy(&prepared.train_data),
        test_accuracy: prepared.clf.accuracy(&prepared.test_data),
        aggregates,
        sweep,
        records,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write per-instance records as CSV.
pub fn write_records_csv(report: &Report, path: impl AsRef<Path>, timing: bool) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    let mut header = "instance,method,missing,action,cost,valid_for_original,validity_on_sample,status".to_string();
    if timing {
        header.push_str(",wall_ms");
    }
    writeln!(out, "{header}").map_err(io_err(path))?;
    for r in &report.records {
        let missing = r.missing.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(";");
        let action = r
            .action
            .as_ref()
            .map(|a| a.iter().map(|v| format!("{v}")).collect::<Vec<_>>().join(";"))
            .unwrap_or_default();
        let cost = r.cost.map(|c| format!("{c}")).unwrap_or_default();
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            r.instance, r.method, missing, action, cost, r.valid_for_original, r.validity_on_sample, r.status
        );
        if timing {
            line.push(',');
            if let Some(w) = r.wall_ms {
                line.push_str(&format!("{w}"));
            }
        }
        writeln!(out, "{line}").map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(())
}

/// Write the confidence sweep as plot-ready CSV.
pub fn write_sweep_csv(points: &[RhoSweepPoint], path: impl AsRef<Path>) -> Result<(), ExperimentError> {
    let path = path.as_ref();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?);
    writeln!(out, "rho,valid_ratio,mean_cost,instances").map_err(io_err(path))?;
    for p in points {
        let cost = p.mean_cost.map(|c| format!("{c}")).unwrap_or_default();
        writeln!(out, "{},{},{},{}", p.rho, p.valid_ratio, cost, p.instances).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))?;
    Ok(())
}
