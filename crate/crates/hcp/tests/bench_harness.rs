use hcp::bench::{
    aggregate, lambda_grid, results_from_csv, results_to_csv, run_benchmark, BenchConfig, BenchError, ExperimentResult,
    LambdaChoice, Method,
};
use hcp::core::{LossKind, RegKind};
use hcp::data::gen_linear;

fn strip_time(mut r: Vec<ExperimentResult>) -> Vec<ExperimentResult> {
    r.iter_mut().for_each(|x| x.mean_time_s = 0.0);
    r
}

fn ridge_config(methods: Vec<Method>, reps: usize) -> BenchConfig {
    let mut c = BenchConfig::new(LossKind::Quadratic, RegKind::Ridge, methods);
    c.repetitions = reps;
    c.lambda = LambdaChoice::Fixed(1.0);
    c.seed = 5;
    c
}

#[test]
fn oracle_on_noiseless_data_covers_with_vanishing_length() {
    let data = gen_linear(60, 5, 0.0, 5, 1.0, 1).unwrap();
    let mut config = ridge_config(vec![Method::Oracle], 5);
    config.lambda = LambdaChoice::Fixed(1e-9);
    let report = run_benchmark(&data, &config).unwrap();
    let r = &report.results[0];
    assert_eq!(r.coverage, Some(1.0));
    assert!(r.mean_length.unwrap() < 1e-6, "{r:?}");
    assert_eq!((r.repetitions, r.failures, r.unbounded_count), (5, 0, 0));
}

#[test]
fn single_repetition_aggregate_equals_the_raw_run() {
    let data = gen_linear(40, 4, 0.5, 4, 1.0, 2).unwrap();
    let config = ridge_config(vec![Method::Split, Method::Homotopy { epsilon: 1e-3 }], 1);
    let report = run_benchmark(&data, &config).unwrap();
    for (agg, run) in report.results.iter().zip(&report.runs) {
        assert_eq!(agg.method, run.method);
        assert_eq!(agg.coverage, Some(if run.covered { 1.0 } else { 0.0 }));
        assert_eq!(agg.mean_length, run.length);
        assert_eq!(agg.mean_time_s, run.time_s);
        assert_eq!(agg.repetitions, 1);
    }
}

#[test]
fn epsilon_sweep_lengths_do_not_grow() {
    let data = gen_linear(50, 5, 1.0, 5, 1.0, 3).unwrap();
    let eps = [1e-1, 1e-2, 1e-3, 1e-4];
    let config = ridge_config(eps.iter().map(|&epsilon| Method::Homotopy { epsilon }).collect(), 10);
    let report = run_benchmark(&data, &config).unwrap();
    let lengths: Vec<f64> = report.results.iter().map(|r| r.mean_length.unwrap()).collect();
    for w in lengths.windows(2) {
        assert!(w[1] <= w[0] * 1.02, "{lengths:?}");
    }
}

#[test]
fn identical_configs_give_identical_tables() {
    let data = gen_linear(40, 4, 0.5, 4, 1.0, 4).unwrap();
    let methods = vec![Method::Oracle, Method::Split, Method::Homotopy { epsilon: 1e-2 }, Method::RidgeExact];
    let mut config = ridge_config(methods, 12);
    config.lambda = LambdaChoice::CrossValidate;
    let a = run_benchmark(&data, &config).unwrap();
    let b = run_benchmark(&data, &config).unwrap();
    assert_eq!(a.lambda, b.lambda);
    assert_eq!(strip_time(a.results.clone()), strip_time(b.results));

    // Worker count does not change anything but timings.
    config.jobs = 3;
    let c = run_benchmark(&data, &config).unwrap();
    assert_eq!(strip_time(a.results), strip_time(c.results));
    let held: Vec<(usize, usize)> = a.runs.iter().map(|r| (r.repetition, r.held_out)).collect();
    let held_c: Vec<(usize, usize)> = c.runs.iter().map(|r| (r.repetition, r.held_out)).collect();
    assert_eq!(held, held_c);
}

#[test]
fn every_method_sees_the_same_held_out_point() {
    let data = gen_linear(30, 3, 0.5, 3, 1.0, 6).unwrap();
    let methods = vec![Method::Oracle, Method::Split, Method::RidgeExact];
    let report = run_benchmark(&data, &ridge_config(methods, 8)).unwrap();
    for rep in report.runs.chunks(3) {
        assert!(rep.iter().all(|r| r.held_out == rep[0].held_out && r.repetition == rep[0].repetition));
    }
}

#[test]
fn coverage_is_successes_over_repetitions() {
    let data = gen_linear(30, 3, 1.0, 3, 1.0, 7).unwrap();
    let report = run_benchmark(&data, &ridge_config(vec![Method::Split, Method::RidgeExact], 17)).unwrap();
    for r in &report.results {
        let hits = report
            .runs
            .iter()
            .filter(|x| x.method == r.method && x.covered)
            .count();
        assert_eq!(r.coverage, Some(hits as f64 / 17.0));
    }
}

#[test]
fn failures_are_counted_and_excluded() {
    use hcp::bench::RunRecord;
    let run = |rep: usize, covered: bool, length: Option<f64>, error: Option<&str>| RunRecord {
        repetition: rep,
        method: "split".into(),
        epsilon: None,
        held_out: 0,
        covered,
        length,
        time_s: 1.0,
        error: error.map(String::from),
    };
    let runs = vec![
        run(0, true, Some(2.0), None),
        run(1, false, None, Some("boom")),
        run(2, true, None, None),
        run(3, false, Some(4.0), None),
    ];
    let r = &aggregate(&[Method::Split], 0.1, 4, &runs)[0];
    assert_eq!(r.failures, 1);
    assert_eq!(r.coverage, Some(2.0 / 3.0));
    assert_eq!(r.mean_length, Some(3.0));
    assert_eq!(r.unbounded_count, 1);
}

#[test]
fn csv_output_round_trips() {
    let data = gen_linear(30, 3, 0.5, 3, 1.0, 8).unwrap();
    let methods = vec![Method::Oracle, Method::Split, Method::Homotopy { epsilon: 1e-3 }];
    let report = run_benchmark(&data, &ridge_config(methods, 4)).unwrap();
    let text = results_to_csv(&report.results).unwrap();
    assert!(text.starts_with(
        "method,alpha,epsilon,coverage,mean_length,unbounded_count,mean_time_s,repetitions,failures\n"
    ));
    assert_eq!(results_from_csv(&text).unwrap(), report.results);
}

#[test]
fn invalid_configurations_are_rejected() {
    let data = gen_linear(30, 3, 0.5, 3, 1.0, 9).unwrap();
    let mut c = BenchConfig::new(LossKind::Quadratic, RegKind::L1, vec![Method::RidgeExact]);
    c.repetitions = 2;
    assert!(matches!(run_benchmark(&data, &c), Err(BenchError::InvalidConfig(_))));
    let mut c = ridge_config(vec![Method::Oracle], 0);
    assert!(matches!(run_benchmark(&data, &c), Err(BenchError::InvalidConfig(_))));
    c.repetitions = 1;
    c.alpha = 1.0;
    assert!(matches!(run_benchmark(&data, &c), Err(BenchError::InvalidConfig(_))));
}

#[test]
fn lambda_grid_spans_four_decades() {
    let g = lambda_grid(3.0, 1e4, 20);
    assert_eq!(g.len(), 20);
    assert_eq!(g[0], 3.0);
    assert!((g[19] - 3e-4).abs() < 1e-15);
    assert!(g.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn cross_validation_picks_a_finite_lambda() {
    let data = gen_linear(60, 5, 1.0, 5, 1.0, 10).unwrap();
    for reg in [RegKind::Ridge, RegKind::L1] {
        let solver = hcp::core::SolverConfig::with_tolerance(1e-8);
        let lambda = hcp::bench::cross_validate_lambda(&data, LossKind::Quadratic, reg, 5, 0, &solver).unwrap();
        assert!(lambda > 0.0 && lambda.is_finite());
    }
}
