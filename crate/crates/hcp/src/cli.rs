//! Command-line front end. Every command builds its whole output in memory
//! and writes it only on success, so a failed run leaves no partial file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hcp_core::conformal::{assemble_generic_set, wrap_sets, ConformalError};
use hcp_core::homotopy::{build_path, HomotopyError};
use hcp_core::optim::OptimError;
use hcp_core::{
    ConformityMeasure, CoverageMode, Dataset, HomotopyPath, IntervalUnion, LossKind, Model, PathConfig, RegKind,
    SolverConfig, StepRule,
};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use crate::bench::{self, BenchConfig, LambdaChoice, Method};
use crate::data::{self, DataError, LabelColumn, SyntheticConfig};
use crate::validate::{run_validation, Fault};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVARIANT: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<OptimError> for CliError {
    fn from(e: OptimError) -> Self {
        match e {
            OptimError::InvalidInput(_) | OptimError::Loss(_) => CliError::Config(e.to_string()),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<HomotopyError> for CliError {
    fn from(e: HomotopyError) -> Self {
        match e {
            HomotopyError::InvalidBudget { .. }
            | HomotopyError::UnsupportedLoss
            | HomotopyError::InvalidRange { .. }
            | HomotopyError::OutOfRange { .. }
            | HomotopyError::TooManyPoints { .. } => CliError::Config(e.to_string()),
            HomotopyError::Optim(inner) => inner.into(),
            _ => CliError::Solver(e.to_string()),
        }
    }
}

impl From<ConformalError> for CliError {
    fn from(e: ConformalError) -> Self {
        match e {
            ConformalError::Homotopy(inner) => inner.into(),
            ConformalError::Optim(inner) => inner.into(),
            ConformalError::Linalg(_) => CliError::Solver(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<bench::BenchError> for CliError {
    fn from(e: bench::BenchError) -> Self {
        match e {
            bench::BenchError::CrossValidation(_) => CliError::Solver(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hcp", version, about = "Full conformal prediction sets via approximate homotopy")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Worker threads for commands that parallelize (benchmark repetitions).
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the conformal set for one test point.
    Conformal(ConformalArgs),
    /// Emit the homotopy grid with per-point certificates.
    Trace(TraceArgs),
    /// Compare methods over repeated hold-out splits.
    Benchmark(BenchmarkArgs),
    /// Run the invariant suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Generator {
    Linear,
    Friedman1,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// CSV file with a header row.
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// Name of the label column in the CSV file.
    #[arg(long, default_value = "y")]
    pub label: String,
    /// Synthetic generator, used when no CSV file is given.
    #[arg(long, value_enum)]
    pub synthetic: Option<Generator>,
    /// Rows to generate.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Features to generate (friedman1 needs at least 5).
    #[arg(long, default_value_t = 10)]
    pub p: usize,
    /// Noise standard deviation (default 1 for linear, 0.5 for friedman1).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Nonzero coefficients of the linear generator (default min(p, 10)).
    #[arg(long)]
    pub informative: Option<usize>,
    /// Seed for the generator, the hold-out draws and cross-validation.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Append a constant feature column.
    #[arg(long)]
    pub intercept: bool,
}

impl DataArgs {
    pub fn load(&self) -> Result<Dataset, CliError> {
        let data = match (&self.data, self.synthetic) {
            (Some(path), _) => data::load_csv(path, &LabelColumn::Name(self.label.clone()))?.data,
            (None, gen) => {
                let source = match gen.unwrap_or(Generator::Linear) {
                    Generator::Linear => SyntheticConfig::Linear {
                        n: self.n,
                        p: self.p,
                        noise: self.noise.unwrap_or(1.0),
                        informative: self.informative.unwrap_or(self.p.min(10)),
                        coef_scale: 1.0,
                        seed: self.seed,
                    },
                    Generator::Friedman1 => SyntheticConfig::Friedman1 {
                        n: self.n,
                        p: self.p,
                        noise: self.noise.unwrap_or(0.5),
                        seed: self.seed,
                    },
                };
                source.generate()?
            }
        };
        Ok(if self.intercept { data.with_intercept() } else { data })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Quadratic,
    Power,
    Logcosh,
    Linex,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RegArg {
    Ridge,
    L1,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = LossArg::Quadratic)]
    pub loss: LossArg,
    /// Exponent q for power (default 1.5), scale γ for logcosh and
    /// asymmetry γ for linex (default 1).
    #[arg(long)]
    pub loss_param: Option<f64>,
    #[arg(long = "reg", value_enum, default_value_t = RegArg::Ridge)]
    pub reg: RegArg,
    /// Regularization strength; cross-validated when omitted.
    #[arg(long, conflicts_with = "cv")]
    pub lambda: Option<f64>,
    /// Choose λ by 5-fold cross-validation (the default without --lambda).
    #[arg(long)]
    pub cv: bool,
}

impl ModelArgs {
    pub fn loss(&self) -> Result<LossKind, CliError> {
        let r = match self.loss {
            LossArg::Quadratic => {
                if self.loss_param.is_some() {
                    return Err(CliError::Config("quadratic loss takes no parameter".into()));
                }
                Ok(LossKind::Quadratic)
            }
            LossArg::Power => LossKind::power(self.loss_param.unwrap_or(1.5)),
            LossArg::Logcosh => LossKind::logcosh(self.loss_param.unwrap_or(1.0)),
            LossArg::Linex => LossKind::linex(self.loss_param.unwrap_or(1.0)),
        };
        r.map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn reg(&self) -> RegKind {
        match self.reg {
            RegArg::Ridge => RegKind::Ridge,
            RegArg::L1 => RegKind::L1,
        }
    }

    pub fn lambda_choice(&self) -> Result<LambdaChoice, CliError> {
        match self.lambda {
            Some(l) if l > 0.0 && l.is_finite() => Ok(LambdaChoice::Fixed(l)),
            Some(l) => Err(CliError::Config(format!("lambda must be positive, got {l}"))),
            None => Ok(LambdaChoice::CrossValidate),
        }
    }

    fn model(&self, train: &Dataset, seed: u64) -> Result<Model, CliError> {
        let (loss, reg) = (self.loss()?, self.reg());
        let lambda = match self.lambda_choice()? {
            LambdaChoice::Fixed(l) => l,
            LambdaChoice::CrossValidate => {
                bench::cross_validate_lambda(train, loss, reg, 5, seed, &SolverConfig::with_tolerance(1e-8))?
            }
        };
        Ok(Model::new(loss, reg, lambda)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Halving,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    Absolute,
    Gradient,
}

#[derive(Debug, Clone, Args)]
pub struct PathArgs {
    /// Row used as the test point and removed from the training data
    /// (default: the last row).
    #[arg(long)]
    pub test_row: Option<usize>,
    /// Duality-gap budget guaranteed at every label in the range.
    #[arg(long, default_value_t = 1e-3)]
    pub epsilon: f64,
    /// Solver tolerance (default ε/10).
    #[arg(long)]
    pub epsilon0: Option<f64>,
    /// Lower end of the candidate-label range (default: smallest training label).
    #[arg(long, allow_hyphen_values = true)]
    pub range_min: Option<f64>,
    /// Upper end of the candidate-label range (default: largest training label).
    #[arg(long, allow_hyphen_values = true)]
    pub range_max: Option<f64>,
    /// Grid layout: points 2s apart each covering ±s, or s apart covering one side.
    #[arg(long, value_enum, default_value_t = ModeArg::Halving)]
    pub mode: ModeArg,
    /// Iteration cap per grid point.
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ConformalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub path: PathArgs,
    /// Miscoverage level; the set targets coverage 1 − α.
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Conformity score: absolute residual or loss-gradient magnitude.
    #[arg(long, value_enum, default_value_t = MeasureArg::Absolute)]
    pub measure: MeasureArg,
    /// Also emit the inner and outer wrapping sets (ridge with a smooth
    /// loss only).
    #[arg(long)]
    pub wrap: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TraceArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub path: PathArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Oracle,
    Split,
    Homotopy,
    RidgeExact,
}

#[derive(Debug, Clone, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated methods to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [MethodArg::Oracle, MethodArg::Split, MethodArg::Homotopy])]
    pub methods: Vec<MethodArg>,
    /// Tolerances for the homotopy method, one row each.
    #[arg(long, value_delimiter = ',', default_values_t = [1e-2, 1e-4])]
    pub epsilons: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub alpha: f64,
    /// Random hold-out splits; each holds out one row as the test point.
    #[arg(long, default_value_t = 100)]
    pub repetitions: usize,
    /// Share of the training rows used to fit the split-conformal model.
    #[arg(long, default_value_t = 0.5)]
    pub split_fraction: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FaultArg {
    None,
    StepInflate,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Deliberately break an invariant.
    #[arg(long, value_enum, default_value_t = FaultArg::None)]
    pub fault: FaultArg,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub body: String,
    pub exit_code: i32,
    /// Diagnostics for standard error.
    pub notes: Vec<String>,
}

fn split_test_row(data: &Dataset, test_row: Option<usize>) -> Result<(Dataset, Vec<f64>, f64, usize), CliError> {
    let row = test_row.unwrap_or(data.n() - 1);
    if row >= data.n() {
        return Err(CliError::Config(format!("test row {row} out of range (n = {})", data.n())));
    }
    let (train, x_new, y) = data.hold_out(row)?;
    Ok((train, x_new, y, row))
}

fn path_config(args: &PathArgs) -> Result<PathConfig, CliError> {
    if !(args.epsilon > 0.0 && args.epsilon.is_finite()) {
        return Err(CliError::Config(format!("epsilon must be positive, got {}", args.epsilon)));
    }
    let mut config = PathConfig::new(args.epsilon);
    config.solver_tolerance = args.epsilon0;
    config.mode = match args.mode {
        ModeArg::Halving => CoverageMode::Halving,
        ModeArg::OneSided => CoverageMode::OneSided,
    };
    if let Some(m) = args.max_iterations {
        config.max_iterations = m;
    }
    Ok(config)
}

fn resolve_range(args: &PathArgs, train: &Dataset) -> Option<(f64, f64)> {
    if args.range_min.is_none() && args.range_max.is_none() {
        return None;
    }
    let y = train.sorted_labels();
    Some((args.range_min.unwrap_or(y[0]), args.range_max.unwrap_or(y[y.len() - 1])))
}

fn build(
    data_args: &DataArgs,
    model_args: &ModelArgs,
    path_args: &PathArgs,
) -> Result<(Dataset, HomotopyPath, usize), CliError> {
    let mut config = path_config(path_args)?;
    model_args.loss()?;
    model_args.lambda_choice()?;
    let data = data_args.load()?;
    let (train, x_new, _, row) = split_test_row(&data, path_args.test_row)?;
    config.range = resolve_range(path_args, &train);
    let model = model_args.model(&train, data_args.seed)?;
    let path = build_path(&train, &x_new, model, &config)?;
    Ok((train, path, row))
}

fn intervals(set: &IntervalUnion) -> Vec<[f64; 2]> {
    set.intervals().iter().map(|iv| [iv.lo, iv.hi]).collect()
}

fn loss_name(loss: LossKind) -> String {
    match loss {
        LossKind::Quadratic => "quadratic".into(),
        LossKind::Power { q } => format!("power(q={q})"),
        LossKind::LogCosh { gamma } => format!("logcosh(gamma={gamma})"),
        LossKind::Linex { gamma } => format!("linex(gamma={gamma})"),
    }
}

fn reg_name(reg: RegKind) -> &'static str {
    match reg {
        RegKind::Ridge => "ridge",
        RegKind::L1 => "l1",
    }
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Config(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Config(e.to_string());
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Config(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Config(e.to_string()))
}

pub fn cmd_conformal(args: &ConformalArgs) -> Result<Outcome, CliError> {
    if !(args.alpha > 0.0 && args.alpha < 1.0) {
        return Err(CliError::Config(format!("alpha must lie in (0, 1), got {}", args.alpha)));
    }
    if args.wrap && args.model.reg() != RegKind::Ridge {
        return Err(CliError::Config("--wrap needs the ridge regularizer".into()));
    }
    if args.wrap && args.model.loss()?.regularity().smoothness().is_none() {
        return Err(CliError::Config("--wrap needs a globally smooth loss".into()));
    }
    let (train, path, row) = build(&args.data, &args.model, &args.path)?;
    let measure = match args.measure {
        MeasureArg::Absolute => ConformityMeasure::AbsoluteResidual,
        MeasureArg::Gradient => ConformityMeasure::GradientBased,
    };
    let set = assemble_generic_set(&path, &train, args.alpha, measure)?;
    let wrapped = if args.wrap {
        Some(wrap_sets(&path, &train, args.alpha)?)
    } else {
        None
    };
    let model = path.model();
    let (lo, hi) = path.range();
    let body = match args.output.format {
        Format::Json => {
            let mut doc = json!({
                "intervals": intervals(&set),
                "total_length": set.total_length(),
                "grid_points": path.len(),
                "epsilon": path.epsilon(),
                "epsilon0": path.epsilon0(),
                "alpha": args.alpha,
                "range": [lo, hi],
                "lambda": model.lambda,
                "loss": loss_name(model.loss),
                "regularizer": reg_name(model.reg),
                "measure": match measure {
                    ConformityMeasure::AbsoluteResidual => "absolute",
                    ConformityMeasure::GradientBased => "gradient",
                },
                "test_row": row,
                "prediction": path.initial_prediction(),
            });
            if let Some(w) = &wrapped {
                doc["lower"] = json!(intervals(&w.lower));
                doc["upper"] = json!(intervals(&w.upper));
            }
            to_json(&doc)?
        }
        Format::Csv => {
            let mut rows = Vec::new();
            let mut push = |name: &str, s: &IntervalUnion| {
                for iv in s.intervals() {
                    rows.push(vec![name.to_string(), iv.lo.to_string(), iv.hi.to_string()]);
                }
            };
            push("conformal", &set);
            if let Some(w) = &wrapped {
                push("lower", &w.lower);
                push("upper", &w.upper);
            }
            csv_text(&["set", "lo", "hi"], rows)?
        }
    };
    Ok(Outcome {
        body,
        exit_code: EXIT_OK,
        notes: vec![format!(
            "{} interval(s), total length {}, {} grid points over [{lo}, {hi}]",
            set.len(),
            set.total_length(),
            path.len()
        )],
    })
}

#[derive(Debug, Serialize)]
struct TraceRow {
    z: f64,
    lo: f64,
    hi: f64,
    gap: f64,
    prediction: f64,
    iterations: usize,
}

pub fn cmd_trace(args: &TraceArgs) -> Result<Outcome, CliError> {
    let (_, path, row) = build(&args.data, &args.model, &args.path)?;
    let rows: Vec<TraceRow> = path
        .points()
        .iter()
        .zip(path.records())
        .map(|(p, r)| TraceRow {
            z: r.z,
            lo: p.lo,
            hi: p.hi,
            gap: r.gap,
            prediction: r.prediction,
            iterations: p.iterations,
        })
        .collect();
    let step = match path.rule() {
        StepRule::Constant { step } => Some(step),
        StepRule::Adaptive { .. } => None,
    };
    let (lo, hi) = path.range();
    let summary = format!(
        "grid_points={} step={} complexity_bound={} range=[{lo}, {hi}]",
        path.len(),
        step.map_or_else(|| "adaptive".to_string(), |s| s.to_string()),
        path.complexity_bound()
    );
    let body = match args.output.format {
        Format::Json => to_json(&json!({
            "records": rows,
            "grid_points": path.len(),
            "step": step,
            "complexity_bound": path.complexity_bound(),
            "epsilon": path.epsilon(),
            "epsilon0": path.epsilon0(),
            "range": [lo, hi],
            "lambda": path.model().lambda,
            "test_row": row,
        }))?,
        Format::Csv => csv_text(
            &["z", "lo", "hi", "gap", "prediction", "iterations"],
            rows.iter().map(|r| {
                vec![
                    r.z.to_string(),
                    r.lo.to_string(),
                    r.hi.to_string(),
                    r.gap.to_string(),
                    r.prediction.to_string(),
                    r.iterations.to_string(),
                ]
            }),
        )?,
    };
    Ok(Outcome {
        body,
        exit_code: EXIT_OK,
        notes: vec![summary],
    })
}

pub fn cmd_benchmark(args: &BenchmarkArgs, jobs: usize) -> Result<Outcome, CliError> {
    let data = args.data.load()?;
    let (loss, reg) = (args.model.loss()?, args.model.reg());
    let mut methods = Vec::new();
    for m in &args.methods {
        match m {
            MethodArg::Oracle => methods.push(Method::Oracle),
            MethodArg::Split => methods.push(Method::Split),
            MethodArg::RidgeExact => methods.push(Method::RidgeExact),
            MethodArg::Homotopy => {
                if args.epsilons.is_empty() {
                    return Err(CliError::Config("homotopy needs at least one epsilon".into()));
                }
                methods.extend(args.epsilons.iter().map(|&epsilon| Method::Homotopy { epsilon }));
            }
        }
    }
    let mut config = BenchConfig::new(loss, reg, methods);
    config.lambda = args.model.lambda_choice()?;
    config.alpha = args.alpha;
    config.repetitions = args.repetitions;
    config.seed = args.data.seed;
    config.split_fraction = args.split_fraction;
    config.jobs = jobs;
    let report = bench::run_benchmark(&data, &config)?;
    let body = match args.output.format {
        Format::Csv => bench::results_to_csv(&report.results)?,
        Format::Json => to_json(&report)?,
    };
    let failures: usize = report.results.iter().map(|r| r.failures).sum();
    let mut notes = vec![format!("λ = {}", report.lambda)];
    if failures > 0 {
        notes.push(format!("{failures} method run(s) failed and were excluded"));
    }
    Ok(Outcome {
        body,
        exit_code: EXIT_OK,
        notes,
    })
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<Outcome, CliError> {
    let fault = match args.fault {
        FaultArg::None => Fault::None,
        FaultArg::StepInflate => Fault::StepInflate,
    };
    let report = run_validation(args.seed, fault);
    let body = match args.output.format {
        Format::Json => to_json(&report)?,
        Format::Csv => csv_text(
            &["invariant", "status", "detail"],
            report.invariants.iter().map(|r| {
                vec![
                    r.name.to_string(),
                    if r.passed { "pass" } else { "fail" }.to_string(),
                    r.detail.clone(),
                ]
            }),
        )?,
    };
    let mut notes: Vec<String> = report
        .invariants
        .iter()
        .map(|r| format!("{:<30} {}", r.name, if r.passed { "PASS" } else { "FAIL" }))
        .collect();
    let exit_code = match report.first_failure() {
        Some(f) => {
            notes.push(format!("invariant {} failed: {}", f.name, f.detail));
            EXIT_INVARIANT
        }
        None => EXIT_OK,
    };
    Ok(Outcome { body, exit_code, notes })
}

fn output_args(cli: &Cli) -> &OutputArgs {
    match &cli.command {
        Command::Conformal(a) => &a.output,
        Command::Trace(a) => &a.output,
        Command::Benchmark(a) => &a.output,
        Command::Validate(a) => &a.output,
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    if cli.jobs == 0 {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    match &cli.command {
        Command::Conformal(a) => cmd_conformal(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Benchmark(a) => cmd_benchmark(a, cli.jobs),
        Command::Validate(a) => cmd_validate(a),
    }
}

/// Runs a parsed command line and writes its output; returns the exit code.
pub fn run(cli: &Cli) -> i32 {
    let outcome = match execute(cli) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    match &output_args(cli).output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &outcome.body) {
                eprintln!("error: cannot write {}: {e}", path.display());
                return EXIT_CONFIG;
            }
        }
        None => print!("{}", outcome.body),
    }
    outcome.exit_code
}
