//! Command-line surface: train models, compute recourse for one instance,
//! run batch experiments, sweep the confidence parameter, trace trade-off
//! paths, and run the bound verifiers.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure (a FAIL verdict
//! from `verify` also exits 2). All randomness flows from `--seed`; standard
//! output is byte-identical across runs with the same arguments and inputs.
//! Timestamps and timings only appear with `--verbose` / `--timing`.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::actions::{build_grid_with_costs, Action, CostSpec};
use crate::data::{load_csv, read_instance_csv, IncompleteInstance, Schema};
use crate::eval::{
    self, default_rho_grid, run_experiment, verify_prop_growth, verify_prop_sample,
    verify_prop_upper_with, write_records_csv, write_sweep_csv, CostKind, DatasetSource,
    ExperimentConfig, GrowthConfig, MechanismSpec, MethodSpec, UpperConfig, UpperImputer,
};
use crate::imputation::{sample_candidates, Imputer, ImputerState, SamplerSpec};
use crate::milp::SolverParams;
use crate::models::{
    load_model, save_model, train, Classifier, ForestParams, LinearModel, LogisticParams,
    ReluParams, TrainSpec,
};
use crate::recourse::{
    path, solve_armin, solve_imputation_ar, solve_plain_ar, solve_robust_ar, Heuristic,
    RecourseResult,
};

#[derive(Parser)]
#[command(
    name = "recourse-mi",
    about = "Minimum-cost recourse actions for classifiers with missing inputs",
    version
)]
struct Cli {
    /// Log progress (with timestamps) to standard error.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a classifier on a CSV dataset and save it as JSON.
    Train(TrainArgs),
    /// Compute a recourse action for one (possibly incomplete) instance.
    Recourse(RecourseArgs),
    /// Run the batch experiment protocol and emit report files.
    Experiment(ExperimentArgs),
    /// Trace the validity/cost trade-off path for one instance.
    Path(PathArgs),
    /// Sweep the confidence parameter over a grid and emit the curve.
    SweepRho(ExperimentArgs),
    /// Monte-Carlo verification of the theoretical bounds.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ClassifierKind {
    Logistic,
    ReluNet,
    Forest,
}

#[derive(Args)]
struct TrainArgs {
    /// Training data CSV.
    #[arg(long)]
    data: PathBuf,
    /// Schema file (see README for the format).
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    kind: ClassifierKind,
    /// Hidden neurons (relu-net only).
    #[arg(long, default_value_t = 30)]
    neurons: usize,
    /// Trees in the forest (forest only).
    #[arg(long, default_value_t = 50)]
    trees: usize,
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    /// Fraction held out for the test accuracy report.
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output model path (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Armin,
    Plain,
    ImputationMean,
    ImputationKnn,
    ImputationChained,
    Robust,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CostArg {
    Tlps,
    L1,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SamplerArg {
    ChainedDraws,
    Uniform,
}

#[derive(Args)]
struct SolveOpts {
    /// Imputation candidates to sample.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Validity confidence target.
    #[arg(long, default_value_t = 0.75)]
    rho: f64,
    /// Grid intervals per feature.
    #[arg(long, default_value_t = 6)]
    bins: usize,
    #[arg(long, value_enum, default_value = "tlps")]
    cost: CostArg,
    #[arg(long, value_enum, default_value = "chained-draws")]
    sampler: SamplerArg,
    /// Chained-equation sweeps for sampling and imputation.
    #[arg(long, default_value_t = 3)]
    sweeps: usize,
    /// Neighbors for k-NN imputation.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Candidates per heuristic subproblem.
    #[arg(long, default_value_t = 10)]
    nsub: usize,
    /// Number of heuristic subproblems.
    #[arg(long, default_value_t = 10)]
    tries: usize,
    /// Solve the full formulation instead of the subsampling heuristic.
    #[arg(long)]
    exact: bool,
    /// Per-solve time limit in seconds.
    #[arg(long, default_value_t = 60.0)]
    time_limit: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolveOpts {
    fn solver(&self) -> SolverParams {
        SolverParams {
            time_limit: Duration::from_secs_f64(self.time_limit),
            seed: self.seed,
            ..SolverParams::default()
        }
    }

    fn sampler_spec(&self) -> SamplerSpec {
        match self.sampler {
            SamplerArg::ChainedDraws => SamplerSpec::ChainedDraws { sweeps: self.sweeps },
            SamplerArg::Uniform => SamplerSpec::Uniform,
        }
    }

    fn heuristic(&self) -> Heuristic {
        if self.exact {
            Heuristic::Off
        } else {
            Heuristic::Subsample { n_sub: self.nsub, tries: self.tries }
        }
    }
}

#[derive(Args)]
struct RecourseArgs {
    /// Trained model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Training data CSV (fits quantiles and the imputer).
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    /// One-row CSV with the instance; missing cells empty or `NA`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value = "armin")]
    method: MethodArg,
    #[command(flatten)]
    opts: SolveOpts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MechanismArg {
    Mcar,
    Mar,
    Mnar,
}

#[derive(Args)]
struct ExperimentArgs {
    /// Dataset CSV (omit to use the synthetic credit generator).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, requires = "data")]
    schema: Option<PathBuf>,
    /// Rows for the synthetic generator.
    #[arg(long, default_value_t = 1200, conflicts_with = "data")]
    rows: usize,
    /// Optional flat key=value config file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "logistic")]
    classifier: ClassifierKind,
    #[arg(long, default_value_t = 30)]
    neurons: usize,
    #[arg(long, default_value_t = 20)]
    trees: usize,
    #[arg(long, default_value_t = 4)]
    max_depth: usize,
    #[arg(long, value_enum, default_value = "mcar")]
    mechanism: MechanismArg,
    /// Features dropped per instance (MCAR).
    #[arg(long, default_value_t = 2)]
    dstar: usize,
    /// Target feature name (MAR/MNAR), e.g. income.
    #[arg(long)]
    target: Option<String>,
    /// Conditioning feature name (MAR), e.g. age.
    #[arg(long)]
    cond: Option<String>,
    /// Threshold override; defaults to the training median.
    #[arg(long)]
    threshold: Option<f64>,
    /// Methods to run.
    #[arg(long, value_enum, value_delimiter = ',',
          default_values_t = [MethodArg::Plain, MethodArg::ImputationMean, MethodArg::Robust, MethodArg::Armin])]
    methods: Vec<MethodArg>,
    #[arg(long, default_value_t = 0.25)]
    test_fraction: f64,
    /// Cap on processed test instances.
    #[arg(long, default_value_t = 100)]
    max_instances: usize,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Record wall-clock timings (breaks byte-identical reports).
    #[arg(long)]
    timing: bool,
    /// Output directory for report.json / records.csv / sweep.csv.
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Sweep grid override, e.g. "0.5,0.6,0.7" (sweep-rho only).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[command(flatten)]
    opts: SolveOpts,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    instance: PathBuf,
    /// Optional CSV output for the path points.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    opts: SolveOpts,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PropArg {
    Prop4,
    Prop5,
    Prop6,
}

#[derive(Args)]
struct VerifyArgs {
    /// Which bound to verify.
    #[arg(value_enum)]
    prop: PropArg,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Imputer for the shift bound: mean or knn.
    #[arg(long, default_value = "mean")]
    imputer: String,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 2)]
    dstar: usize,
    #[arg(long, default_value_t = 1.0)]
    width: f64,
    /// Candidate-set size for the growth bound.
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Model(#[from] crate::models::ModelError),
    #[error(transparent)]
    Imputation(#[from] crate::imputation::ImputationError),
    #[error(transparent)]
    Action(#[from] crate::actions::ActionError),
    #[error(transparent)]
    Recourse(#[from] crate::recourse::RecourseError),
    #[error(transparent)]
    Experiment(#[from] eval::ExperimentError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
    /// A verification reported FAIL; the run itself succeeded.
    #[error("verification failed")]
    VerificationFailed,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Entry point used by the binary. Returns the process exit code.
pub fn run(args: impl IntoIterator<Item = OsString>) -> i32 {
    let argv: Vec<OsString> = args.into_iter().collect();
    let argv = match apply_config_file(argv) {
        Ok(v) => v,
        Err(message) => {
            eprintln!("error: {message}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return code;
        }
    };
    init_logging(cli.verbose);
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            let mut source = std::error::Error::source(&err);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            2
        }
    }
}

fn init_logging(verbose: bool) {
    let mut builder = env_logger::Builder::from_env(
        env_logger::Env::default().default_filter_or(if verbose { "info" } else { "warn" }),
    );
    if !verbose {
        builder.format_timestamp(None);
    }
    let _ = builder.try_init();
}

/// Splice `key = value` lines from `--config <file>` in front of the user's
/// flags (so explicit flags win) for subcommands that support config files.
fn apply_config_file(argv: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let pos = argv.iter().position(|a| a == "--config");
    let Some(pos) = pos else { return Ok(argv) };
    let path = argv
        .get(pos + 1)
        .ok_or_else(|| "--config needs a file path".to_string())?
        .clone();
    let text = std::fs::read_to_string(&path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    let mut injected: Vec<OsString> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {} is not key = value: {raw:?}", lineno + 1))?;
        let key = key.trim();
        let value = value.trim();
        match value {
            "true" => injected.push(format!("--{key}").into()),
            "false" => {}
            _ => {
                injected.push(format!("--{key}").into());
                injected.push(value.into());
            }
        }
    }
    // program name, subcommand, injected config values, then user flags.
    let mut out: Vec<OsString> = argv[..2.min(argv.len())].to_vec();
    out.extend(injected);
    out.extend(argv[2.min(argv.len())..].iter().cloned());
    Ok(out)
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Train(args) => cmd_train(args),
        Command::Recourse(args) => cmd_recourse(args),
        Command::Experiment(args) => cmd_experiment(args, false),
        Command::SweepRho(args) => cmd_experiment(args, true),
        Command::Path(args) => cmd_path(args),
        Command::Verify(args) => cmd_verify(args),
    }
}

fn train_spec(kind: ClassifierKind, neurons: usize, trees: usize, max_depth: usize) -> TrainSpec {
    match kind {
        ClassifierKind::Logistic => TrainSpec::Logistic(LogisticParams::default()),
        ClassifierKind::ReluNet => TrainSpec::ReluNet(ReluParams {
            neurons,
            ..ReluParams::default()
        }),
        ClassifierKind::Forest => TrainSpec::Forest(ForestParams { trees, max_depth }),
    }
}

fn cmd_train(args: TrainArgs) -> Result<(), CliError> {
    let schema = Schema::load(&args.schema)?;
    let dataset = load_csv(&args.data, &schema.features, &schema.label)?;
    let (train_data, test_data) = crate::data::split(&dataset, args.test_fraction, args.seed)?;
    let spec = train_spec(args.kind, args.neurons, args.trees, args.max_depth);
    let clf = train(&spec, &train_data, args.seed)?;
    save_model(&clf, &args.out)?;
    println!(
        "trained {} on {} rows: train accuracy {:.4}, test accuracy {:.4}",
        match args.kind {
            ClassifierKind::Logistic => "logistic",
            ClassifierKind::ReluNet => "relu-net",
            ClassifierKind::Forest => "forest",
        },
        train_data.n_rows(),
        clf.accuracy(&train_data),
        clf.accuracy(&test_data),
    );
    println!("model written to {}", args.out.display());
    Ok(())
}

struct RecourseInputs {
    clf: Classifier,
    instance: IncompleteInstance,
    state: ImputerState,
    metas: Vec<crate::data::FeatureMeta>,
    cost_spec: CostSpec,
}

fn load_recourse_inputs(
    model: &Path,
    data: &Path,
    schema: &Path,
    instance: &Path,
    cost: CostArg,
) -> Result<RecourseInputs, CliError> {
    let schema = Schema::load(schema)?;
    let mut dataset = load_csv(data, &schema.features, &schema.label)?;
    dataset.fit_all_quantiles(512)?;
    let clf = load_model(model)?;
    if clf.dim() != dataset.dim() {
        return Err(CliError::Usage(format!(
            "model expects {} features, schema declares {}",
            clf.dim(),
            dataset.dim()
        )));
    }
    let instance = read_instance_csv(instance, &dataset.features)?;
    let state = ImputerState::fit(&dataset)?;
    let cost_spec = match cost {
        CostArg::Tlps => CostSpec::tlps_from_metas(&dataset.features)?,
        CostArg::L1 => CostSpec::uniform_l1(dataset.dim()),
    };
    Ok(RecourseInputs {
        clf,
        instance,
        state,
        metas: dataset.features,
        cost_spec,
    })
}

fn print_action_table(
    result: &RecourseResult,
    metas: &[crate::data::FeatureMeta],
    instance: &IncompleteInstance,
    clf: &Classifier,
) -> Result<(), CliError> {
    let Some(action) = &result.action else {
        println!("no action found (status: {})", result.status.as_str());
        return Ok(());
    };
    if action.is_zero() {
        println!("the zero action suffices (prediction is already the desired class)");
    } else {
        println!("{:<24} {:>12} {:>12}", "Feature", "Change", "New value");
        for (d, delta) in action.nonzero() {
            let new_value = instance.values[d]
                .map(|v| format!("{:.4}", v + delta))
                .unwrap_or_else(|| "?".into());
            println!("{:<24} {:>12} {:>12}", metas[d].name, format!("{delta:+.4}"), new_value);
        }
    }
    let valid_imputed = if instance.is_complete() {
        clf.predict(&action.apply(&instance.expect_complete()))? == 1
    } else {
        // Validity against the (unknown) original cannot be read off here;
        // the sample validity below is the operative estimate.
        result.empirical_validity > 0.0
    };
    println!(
        "Total cost: {:.4}   Valid: {}   Validity on sample: {:.4}   Status: {}",
        result.cost,
        valid_imputed,
        result.empirical_validity,
        result.status.as_str()
    );
    Ok(())
}

fn cmd_recourse(args: RecourseArgs) -> Result<(), CliError> {
    let inputs = load_recourse_inputs(
        &args.model,
        &args.data,
        &args.schema,
        &args.instance,
        args.opts.cost,
    )?;
    let grid = build_grid_with_costs(
        &inputs.instance,
        &inputs.metas,
        args.opts.bins,
        &inputs.cost_spec,
    )?;
    let solver = args.opts.solver();
    let result = match args.method {
        MethodArg::Plain => {
            if !inputs.instance.is_complete() {
                return Err(CliError::Usage(
                    "plain recourse needs a complete instance; use armin/imputation/robust for missing values"
                        .into(),
                ));
            }
            solve_plain_ar(&inputs.instance.expect_complete(), &inputs.clf, &grid, &solver)?
        }
        MethodArg::ImputationMean => solve_imputation_ar(
            &inputs.instance,
            &Imputer::Mean,
            &inputs.state,
            &inputs.clf,
            &grid,
            &solver,
        )?,
        MethodArg::ImputationKnn => solve_imputation_ar(
            &inputs.instance,
            &Imputer::Knn { k: args.opts.k },
            &inputs.state,
            &inputs.clf,
            &grid,
            &solver,
        )?,
        MethodArg::ImputationChained => solve_imputation_ar(
            &inputs.instance,
            &Imputer::Chained { sweeps: args.opts.sweeps },
            &inputs.state,
            &inputs.clf,
            &grid,
            &solver,
        )?,
        MethodArg::Robust => {
            let sample = sample_candidates(
                &inputs.instance,
                args.opts.sampler_spec(),
                &inputs.state,
                args.opts.n,
                args.opts.seed,
            )?;
            solve_robust_ar(
                &inputs.instance,
                &Imputer::Chained { sweeps: args.opts.sweeps },
                &inputs.state,
                &inputs.clf,
                &grid,
                &sample,
                &solver,
            )?
        }
        MethodArg::Armin => {
            let sample = sample_candidates(
                &inputs.instance,
                args.opts.sampler_spec(),
                &inputs.state,
                args.opts.n,
                args.opts.seed,
            )?;
            solve_armin(
                &inputs.clf,
                &grid,
                &sample,
                args.opts.rho,
                args.opts.heuristic(),
                &solver,
                args.opts.seed,
            )?
        }
    };
    print_action_table(&result, &inputs.metas, &inputs.instance, &inputs.clf)
}

fn cmd_path(args: PathArgs) -> Result<(), CliError> {
    let inputs = load_recourse_inputs(
        &args.model,
        &args.data,
        &args.schema,
        &args.instance,
        args.opts.cost,
    )?;
    let grid = build_grid_with_costs(
        &inputs.instance,
        &inputs.metas,
        args.opts.bins,
        &inputs.cost_spec,
    )?;
    let sample = sample_candidates(
        &inputs.instance,
        args.opts.sampler_spec(),
        &inputs.state,
        args.opts.n,
        args.opts.seed,
    )?;
    let result = path(&inputs.clf, &grid, &sample, &args.opts.solver())?;
    println!("{:>8} {:>10} {:>10}  action", "rho", "cost", "validity");
    for entry in &result.entries {
        let summary: Vec<String> = entry
            .action
            .nonzero()
            .map(|(d, delta)| format!("{}{:+.3}", inputs.metas[d].name, delta))
            .collect();
        println!(
            "{:>8.4} {:>10.4} {:>10.4}  {}",
            entry.rho,
            entry.cost,
            entry.empirical_validity,
            if summary.is_empty() { "(none)".into() } else { summary.join(" ") }
        );
    }
    if result.entries.is_empty() {
        println!("path is empty (status: {})", result.status.as_str());
    }
    if let Some(out) = &args.out {
        let mut text = String::from("rho,cost,validity,action\n");
        for entry in &result.entries {
            let action = entry
                .action
                .deltas
                .iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(";");
            text.push_str(&format!(
                "{},{},{},{}\n",
                entry.rho, entry.cost, entry.empirical_validity, action
            ));
        }
        std::fs::write(out, text).map_err(io_err(out))?;
        println!("path written to {}", out.display());
    }
    Ok(())
}

fn resolve_feature(schema_features: &[crate::data::FeatureMeta], name: &str) -> Result<usize, CliError> {
    schema_features
        .iter()
        .position(|m| m.name == name)
        .ok_or_else(|| CliError::Usage(format!("unknown feature {name:?}")))
}

fn cmd_experiment(args: ExperimentArgs, sweep: bool) -> Result<(), CliError> {
    let source = match (&args.data, &args.schema) {
        (Some(data), Some(schema)) => DatasetSource::Csv {
            data: data.clone(),
            schema: schema.clone(),
        },
        (Some(_), None) => {
            return Err(CliError::Usage("--data needs --schema".into()));
        }
        _ => DatasetSource::SyntheticCredit { rows: args.rows },
    };
    // Feature names in the mechanism flags are resolved against the schema.
    let features = match &source {
        DatasetSource::Csv { schema, .. } => Schema::load(schema)?.features,
        DatasetSource::SyntheticCredit { .. } => eval::synthetic::credit_features(),
    };
    let mechanism = match args.mechanism {
        MechanismArg::Mcar => MechanismSpec::Mcar { n_missing: args.dstar },
        MechanismArg::Mar => {
            let target = args
                .target
                .as_deref()
                .ok_or_else(|| CliError::Usage("mar needs --target".into()))?;
            let cond = args
                .cond
                .as_deref()
                .ok_or_else(|| CliError::Usage("mar needs --cond".into()))?;
            MechanismSpec::Mar {
                target: resolve_feature(&features, target)?,
                cond: resolve_feature(&features, cond)?,
                threshold: args.threshold,
            }
        }
        MechanismArg::Mnar => {
            let target = args
                .target
                .as_deref()
                .ok_or_else(|| CliError::Usage("mnar needs --target".into()))?;
            MechanismSpec::Mnar {
                target: resolve_feature(&features, target)?,
                threshold: args.threshold,
            }
        }
    };
    let methods: Vec<MethodSpec> = args
        .methods
        .iter()
        .map(|m| match m {
            MethodArg::Plain => MethodSpec::PlainAr,
            MethodArg::ImputationMean => MethodSpec::ImputationAr(Imputer::Mean),
            MethodArg::ImputationKnn => MethodSpec::ImputationAr(Imputer::Knn { k: args.opts.k }),
            MethodArg::ImputationChained => {
                MethodSpec::ImputationAr(Imputer::Chained { sweeps: args.opts.sweeps })
            }
            MethodArg::Robust => MethodSpec::RobustAr(Imputer::Chained { sweeps: args.opts.sweeps }),
            MethodArg::Armin => MethodSpec::Armin {
                rho: args.opts.rho,
                heuristic: args.opts.heuristic(),
            },
        })
        .collect();

    let mut config = ExperimentConfig::new(
        source,
        train_spec(args.classifier, args.neurons, args.trees, args.max_depth),
        mechanism,
    );
    config.methods = methods;
    config.n_candidates = args.opts.n;
    config.sampler = args.opts.sampler_spec();
    config.bins = args.opts.bins;
    config.cost = match args.opts.cost {
        CostArg::Tlps => CostKind::Tlps,
        CostArg::L1 => CostKind::UniformL1,
    };
    config.test_fraction = args.test_fraction;
    config.max_instances = args.max_instances;
    config.seed = args.opts.seed;
    config.solver = args.opts.solver();
    config.jobs = args.jobs;
    config.record_timing = args.timing;
    if sweep {
        config.rho_sweep = Some(args.grid.clone().unwrap_or_else(default_rho_grid));
    }

    let report = run_experiment(&config)?;

    std::fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    let report_path = args.out_dir.join("report.json");
    let file = std::fs::File::create(&report_path).map_err(io_err(&report_path))?;
    serde_json::to_writer_pretty(file, &report)
        .map_err(|e| CliError::Usage(format!("cannot serialize report: {e}")))?;
    let records_path = args.out_dir.join("records.csv");
    write_records_csv(&report, &records_path, args.timing)?;

    println!(
        "classifier {} | mechanism {} | cohort {} instances | train acc {:.4} | test acc {:.4}",
        report.classifier,
        report.mechanism,
        report.cohort_size,
        report.train_accuracy,
        report.test_accuracy
    );
    println!(
        "{:<22} {:>9} {:>9} {:>12} {:>11} {:>11} {:>11}",
        "method", "instances", "returned", "valid_ratio", "mean_cost", "cost|valid", "sign_agree"
    );
    let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "-".into());
    for agg in &report.aggregates {
        println!(
            "{:<22} {:>9} {:>9} {:>12.4} {:>11} {:>11} {:>11}",
            agg.method,
            agg.instances,
            agg.returned,
            agg.valid_ratio,
            fmt_opt(agg.mean_cost_returned),
            fmt_opt(agg.mean_cost_valid),
            fmt_opt(agg.mean_sign_agreement),
        );
    }
    if let Some(points) = &report.sweep {
        let sweep_path = args.out_dir.join("sweep.csv");
        write_sweep_csv(points, &sweep_path)?;
        println!("{:>8} {:>12} {:>11} {:>10}", "rho", "valid_ratio", "mean_cost", "instances");
        for p in points {
            println!(
                "{:>8.4} {:>12.4} {:>11} {:>10}",
                p.rho,
                p.valid_ratio,
                fmt_opt(p.mean_cost),
                p.instances
            );
        }
    }
    println!("reports written to {}", args.out_dir.display());
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<(), CliError> {
    let report = match args.prop {
        PropArg::Prop4 => {
            let imputer = match args.imputer.as_str() {
                "mean" => UpperImputer::PopulationMean,
                "knn" => UpperImputer::Knn { k: 5, train_rows: 400 },
                other => {
                    return Err(CliError::Usage(format!(
                        "unknown imputer {other:?} (expected mean or knn)"
                    )))
                }
            };
            verify_prop_upper_with(&UpperConfig {
                imputer,
                ..UpperConfig::new(args.trials, args.dim, args.seed)
            })
        }
        PropArg::Prop5 => verify_prop_sample(
            args.eps,
            args.delta,
            args.dstar,
            args.width,
            args.trials.min(100_000),
            args.seed,
        ),
        PropArg::Prop6 => {
            // A fixed, documented toy model; the bound is distribution- and
            // model-independent for linear classifiers.
            let model = LinearModel::new(vec![1.0, -0.5, 0.25], 0.0);
            let action = Action {
                deltas: vec![2.0, 1.0, -0.5],
            };
            verify_prop_growth(&GrowthConfig {
                delta: args.delta,
                ..GrowthConfig::new(model, action, args.n, args.trials.min(1_000), args.seed)
            })
        }
    };
    println!("{report}");
    if report.pass {
        Ok(())
    } else {
        Err(CliError::VerificationFailed)
    }
}
