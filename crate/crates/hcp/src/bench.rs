//! Experiment harness: repeated hold-out evaluation of conformal methods.

use std::time::Instant;

use hcp_core::conformal::{
    assemble_absolute_residual_set, exact_ridge_set, oracle_set, split_conformal, SplitSet,
};
use hcp_core::homotopy::build_path;
use hcp_core::optim::fit;
use hcp_core::{Dataset, LossKind, Model, PathConfig, Problem, RegKind, SolverConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),
    #[error("cross-validation failed: {0}")]
    CrossValidation(String),
    #[error("cannot write results: {0}")]
    Output(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Fit with the true held-out label; evaluation only.
    Oracle,
    Split,
    Homotopy { epsilon: f64 },
    /// Exact full conformal set, quadratic loss with ridge only.
    RidgeExact,
}

impl Method {
    pub fn label(&self) -> &'static str {
        match self {
            Method::Oracle => "oracle",
            Method::Split => "split",
            Method::Homotopy { .. } => "homotopy",
            Method::RidgeExact => "ridge-exact",
        }
    }

    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Method::Homotopy { epsilon } => Some(*epsilon),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaChoice {
    Fixed(f64),
    CrossValidate,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub loss: LossKind,
    pub reg: RegKind,
    pub lambda: LambdaChoice,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// Fraction of the training rows used for fitting in split conformal.
    pub split_fraction: f64,
    /// Worker threads for the repetitions.
    pub jobs: usize,
    /// Solver settings for the baselines and for cross-validation.
    pub solver: SolverConfig,
}

impl BenchConfig {
    pub fn new(loss: LossKind, reg: RegKind, methods: Vec<Method>) -> Self {
        Self {
            loss,
            reg,
            lambda: LambdaChoice::CrossValidate,
            methods,
            alpha: 0.1,
            repetitions: 100,
            seed: 0,
            split_fraction: 0.5,
            jobs: 1,
            solver: SolverConfig::with_tolerance(1e-8),
        }
    }

    fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: &str| Err(BenchError::InvalidConfig(m.to_string()));
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if self.methods.is_empty() {
            return bad("no methods selected");
        }
        if self.jobs == 0 {
            return bad("jobs must be at least 1");
        }
        if let LambdaChoice::Fixed(l) = self.lambda {
            if !(l > 0.0 && l.is_finite()) {
                return bad("lambda must be positive");
            }
        }
        for m in &self.methods {
            match m {
                Method::RidgeExact if !(self.loss == LossKind::Quadratic && self.reg == RegKind::Ridge) => {
                    return bad("ridge-exact needs quadratic loss with ridge");
                }
                Method::Homotopy { epsilon } if !(*epsilon > 0.0 && epsilon.is_finite()) => {
                    return bad("homotopy epsilon must be positive");
                }
                _ => {}
            }
        }
        self.solver.validate().map_err(|e| BenchError::InvalidConfig(e.to_string()))
    }
}

/// Outcome of one method on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub repetition: usize,
    pub method: String,
    pub epsilon: Option<f64>,
    pub held_out: usize,
    pub covered: bool,
    /// `None` for an unbounded set.
    pub length: Option<f64>,
    pub time_s: f64,
    pub error: Option<String>,
}

/// Aggregate over the repetitions of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub method: String,
    pub alpha: f64,
    pub epsilon: Option<f64>,
    /// Covered runs over successful runs; `None` when every run failed.
    pub coverage: Option<f64>,
    /// Mean over the bounded sets; `None` when there were none.
    pub mean_length: Option<f64>,
    pub unbounded_count: usize,
    pub mean_time_s: f64,
    pub repetitions: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub lambda: f64,
    pub results: Vec<ExperimentResult>,
    pub runs: Vec<RunRecord>,
}

/// Geometric grid of `count` values from `lambda_max` down to
/// `lambda_max / ratio`.
pub fn lambda_grid(lambda_max: f64, ratio: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lambda_max];
    }
    (0..count)
        .map(|k| lambda_max * ratio.powf(-(k as f64) / (count - 1) as f64))
        .collect()
}

/// Picks `λ` by `folds`-fold cross-validation on a seeded third of the data,
/// minimizing the mean validation loss over a 20-point geometric grid that
/// starts at the zero-solution threshold. Ties go to the larger `λ`.
pub fn cross_validate_lambda(
    data: &Dataset,
    loss: LossKind,
    reg: RegKind,
    folds: usize,
    seed: u64,
    solver: &SolverConfig,
) -> Result<f64, BenchError> {
    let n = data.n();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let m = n.div_ceil(3).max(2 * folds).min(n);
    idx.truncate(m);
    let cv = data
        .subset(&idx)
        .map_err(|e| BenchError::CrossValidation(e.to_string()))?;

    let lambda_max = Model::lambda_max(loss, &cv);
    if !(lambda_max > 0.0 && lambda_max.is_finite()) {
        return Err(BenchError::CrossValidation(format!(
            "degenerate zero-solution threshold {lambda_max}"
        )));
    }
    let mut best = (f64::INFINITY, lambda_max);
    for lambda in lambda_grid(lambda_max, 1e4, 20) {
        let model = Model::new(loss, reg, lambda).map_err(|e| BenchError::CrossValidation(e.to_string()))?;
        let mut total = 0.0;
        for f in 0..folds {
            let (train, valid): (Vec<usize>, Vec<usize>) = (0..m).partition(|i| i % folds != f);
            let fit_data = cv.subset(&train).map_err(|e| BenchError::CrossValidation(e.to_string()))?;
            let beta = fit(&Problem::new(&fit_data, model), solver)
                .map_err(|e| BenchError::CrossValidation(format!("λ = {lambda}: {e}")))?;
            for &i in &valid {
                let u: f64 = cv.x().row(i).iter().zip(&beta).map(|(a, b)| a * b).sum();
                total += loss.value(cv.y()[i], u);
            }
        }
        if total < best.0 {
            best = (total, lambda);
        }
    }
    Ok(best.1)
}

fn label_range(data: &Dataset) -> (f64, f64) {
    let y = data.sorted_labels();
    (y[0], y[y.len() - 1])
}

fn run_method(
    method: Method,
    config: &BenchConfig,
    model: Model,
    train: &Dataset,
    shuffled: &Dataset,
    x_new: &[f64],
    y_true: f64,
) -> Result<(bool, Option<f64>), String> {
    let alpha = config.alpha;
    match method {
        Method::Oracle => {
            let iv = oracle_set(train, x_new, y_true, alpha, model, &config.solver).map_err(|e| e.to_string())?;
            Ok((iv.contains(y_true), Some(iv.length())))
        }
        Method::Split => {
            let set = split_conformal(shuffled, x_new, alpha, config.split_fraction, model, &config.solver)
                .map_err(|e| e.to_string())?;
            Ok(match set {
                SplitSet::Bounded(iv) => (iv.contains(y_true), Some(iv.length())),
                SplitSet::Unbounded => (true, None),
            })
        }
        Method::Homotopy { epsilon } => {
            let path = build_path(train, x_new, model, &PathConfig::new(epsilon)).map_err(|e| e.to_string())?;
            let set = assemble_absolute_residual_set(&path, train, alpha).map_err(|e| e.to_string())?;
            Ok((set.contains(y_true), Some(set.total_length())))
        }
        Method::RidgeExact => {
            let set = exact_ridge_set(train, x_new, model.lambda, alpha, label_range(train)).map_err(|e| e.to_string())?;
            Ok((set.contains(y_true), Some(set.total_length())))
        }
    }
}

fn run_repetition(data: &Dataset, config: &BenchConfig, model: Model, rep: usize) -> Vec<RunRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(rep as u64 + 1);
    let held_out = rng.random_range(0..data.n());
    let fail = |method: &Method, msg: String| RunRecord {
        repetition: rep,
        method: method.label().into(),
        epsilon: method.epsilon(),
        held_out,
        covered: false,
        length: None,
        time_s: 0.0,
        error: Some(msg),
    };
    let (train, x_new, y_true) = match data.hold_out(held_out) {
        Ok(t) => t,
        Err(e) => return config.methods.iter().map(|m| fail(m, e.to_string())).collect(),
    };
    // Split conformal depends on row order, so it gets a fresh shuffle.
    let mut order: Vec<usize> = (0..train.n()).collect();
    order.shuffle(&mut rng);
    let shuffled = match train.subset(&order) {
        Ok(d) => d,
        Err(e) => return config.methods.iter().map(|m| fail(m, e.to_string())).collect(),
    };

    config
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let outcome = run_method(method, config, model, &train, &shuffled, &x_new, y_true);
            let time_s = start.elapsed().as_secs_f64();
            match outcome {
                Ok((covered, length)) => RunRecord {
                    repetition: rep,
                    method: method.label().into(),
                    epsilon: method.epsilon(),
                    held_out,
                    covered,
                    length,
                    time_s,
                    error: None,
                },
                Err(msg) => fail(&method, msg),
            }
        })
        .collect()
}

/// Aggregates raw runs per method, in the order the methods were given.
pub fn aggregate(methods: &[Method], alpha: f64, repetitions: usize, runs: &[RunRecord]) -> Vec<ExperimentResult> {
    methods
        .iter()
        .map(|m| {
            let mine: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.method == m.label() && r.epsilon == m.epsilon())
                .collect();
            let ok: Vec<&&RunRecord> = mine.iter().filter(|r| r.error.is_none()).collect();
            let covered = ok.iter().filter(|r| r.covered).count();
            let bounded: Vec<f64> = ok.iter().filter_map(|r| r.length).collect();
            ExperimentResult {
                method: m.label().into(),
                alpha,
                epsilon: m.epsilon(),
                coverage: (!ok.is_empty()).then(|| covered as f64 / ok.len() as f64),
                mean_length: (!bounded.is_empty()).then(|| bounded.iter().sum::<f64>() / bounded.len() as f64),
                unbounded_count: ok.len() - bounded.len(),
                mean_time_s: if ok.is_empty() {
                    0.0
                } else {
                    ok.iter().map(|r| r.time_s).sum::<f64>() / ok.len() as f64
                },
                repetitions,
                failures: mine.len() - ok.len(),
            }
        })
        .collect()
}

/// Runs every method on `repetitions` random hold-out splits. All methods
/// of a repetition see the same held-out point, and results come back in
/// repetition order whatever the number of jobs.
pub fn run_benchmark(data: &Dataset, config: &BenchConfig) -> Result<BenchReport, BenchError> {
    config.validate()?;
    let lambda = match config.lambda {
        LambdaChoice::Fixed(l) => l,
        LambdaChoice::CrossValidate => {
            cross_validate_lambda(data, config.loss, config.reg, 5, config.seed, &config.solver)?
        }
    };
    let model = Model::new(config.loss, config.reg, lambda).map_err(|e| BenchError::InvalidConfig(e.to_string()))?;

    let jobs = config.jobs.min(config.repetitions);
    let mut per_rep: Vec<(usize, Vec<RunRecord>)> = if jobs == 1 {
        (0..config.repetitions)
            .map(|r| (r, run_repetition(data, config, model, r)))
            .collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..jobs)
                .map(|j| {
                    scope.spawn(move || {
                        (j..config.repetitions)
                            .step_by(jobs)
                            .map(|r| (r, run_repetition(data, config, model, r)))
                            .collect::<Vec<_>>()
                    })
                })
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("benchmark worker panicked"))
                .collect()
        })
    };
    per_rep.sort_by_key(|(r, _)| *r);
    let runs: Vec<RunRecord> = per_rep.into_iter().flat_map(|(_, v)| v).collect();
    Ok(BenchReport {
        lambda,
        results: aggregate(&config.methods, config.alpha, config.repetitions, &runs),
        runs,
    })
}

pub fn results_to_csv(results: &[ExperimentResult]) -> Result<String, BenchError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in results {
        w.serialize(r).map_err(|e| BenchError::Output(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| BenchError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| BenchError::Output(e.to_string()))
}

pub fn results_from_csv(text: &str) -> Result<Vec<ExperimentResult>, BenchError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<Result<_, _>>()
        .map_err(|e| BenchError::Output(e.to_string()))
}
