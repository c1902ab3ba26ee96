use super::*;
use crate::linalg::norm2;
use alloc::vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn instance(seed: u64, n: usize, p: usize) -> (Dataset, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..p).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    let y: Vec<f64> = (0..n).map(|_| 2.0 * rng.sample::<f64, _>(StandardNormal)).collect();
    let x_new: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    (Dataset::new(Matrix::from_rows(&rows).unwrap(), y).unwrap(), x_new)
}

fn ridge_quad(lambda: f64) -> Model {
    Model::new(LossKind::Quadratic, RegKind::Ridge, lambda).unwrap()
}

#[test]
fn dataset_rejects_bad_shapes() {
    let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
    assert!(Dataset::new(x.clone(), vec![1.0]).is_err());
    assert!(Dataset::new(Matrix::from_rows(&[vec![1.0]]).unwrap(), vec![1.0]).is_err());
    assert!(Dataset::new(x, vec![1.0, f64::NAN]).is_err());
}

#[test]
fn primal_at_zero_is_sum_of_squares() {
    let (data, _) = instance(1, 8, 3);
    let problem = Problem::new(&data, ridge_quad(0.7));
    let expected: f64 = data.y().iter().map(|y| y * y).sum();
    assert!((problem.primal(&[0.0; 3]) - expected).abs() < 1e-12);
}

#[test]
fn augmenting_with_own_prediction_keeps_primal() {
    let (data, x_new) = instance(2, 10, 4);
    let beta = [0.3, -0.2, 0.5, 1.0];
    for model in [ridge_quad(1.0), Model::new(LossKind::logcosh(0.5).unwrap(), RegKind::L1, 0.3).unwrap()] {
        let z0 = dot(&x_new, &beta);
        let base = Problem::new(&data, model).primal(&beta);
        let aug = Problem::augmented(&data, &x_new, z0, model).primal(&beta);
        assert_eq!(base, aug);
    }
}

#[test]
fn primal_matches_term_by_term_resummation() {
    let (data, x_new) = instance(3, 12, 5);
    let model = Model::new(LossKind::power(1.5).unwrap(), RegKind::L1, 0.8).unwrap();
    let beta = [0.1, -0.4, 0.0, 0.9, 0.2];
    let problem = Problem::augmented(&data, &x_new, 0.7, model);
    let mut manual = 0.0;
    for i in 0..12 {
        let u: f64 = (0..5).map(|j| data.x().get(i, j) * beta[j]).sum();
        manual += (data.y()[i] - u).abs().powf(1.5);
    }
    let u_new: f64 = (0..5).map(|j| x_new[j] * beta[j]).sum();
    manual += (0.7f64 - u_new).abs().powf(1.5);
    manual += 0.8 * beta.iter().map(|b: &f64| b.abs()).sum::<f64>();
    assert!((problem.primal(&beta) - manual).abs() <= 1e-12 * manual.max(1.0));
}

#[test]
fn dual_at_zero_vanishes() {
    let (data, _) = instance(4, 6, 2);
    let problem = Problem::new(&data, ridge_quad(1.0));
    assert_eq!(problem.dual(&[0.0; 6]), ExtendedReal::ZERO);
}

#[test]
fn l1_dual_outside_ball_is_minus_infinity() {
    let (data, _) = instance(5, 6, 2);
    let problem = Problem::new(&data, Model::new(LossKind::Quadratic, RegKind::L1, 1.0).unwrap());
    let theta: Vec<f64> = (0..6).map(|i| 10.0 * data.x().get(i, 0)).collect();
    assert_eq!(problem.dual(&theta), ExtendedReal::NegInfinity);
}

#[test]
fn dual_matches_term_by_term_resummation() {
    let (data, x_new) = instance(6, 9, 3);
    let lambda = 1.3;
    let model = ridge_quad(lambda);
    let problem = Problem::augmented(&data, &x_new, -0.4, model);
    let theta: Vec<f64> = (0..10).map(|i| 0.1 * (i as f64) - 0.45).collect();
    let mut conj = 0.0;
    for (i, &t) in theta.iter().enumerate() {
        let y = if i < 9 { data.y()[i] } else { -0.4 };
        let v = -lambda * t;
        conj += y * v + v * v / 4.0;
    }
    let mut xt = [0.0; 3];
    for (i, &t) in theta.iter().enumerate() {
        for (j, xj) in xt.iter_mut().enumerate() {
            *xj += t * if i < 9 { data.x().get(i, j) } else { x_new[j] };
        }
    }
    let manual = -conj - lambda * 0.5 * xt.iter().map(|v| v * v).sum::<f64>();
    let d = problem.dual(&theta).finite().unwrap();
    assert!((d - manual).abs() <= 1e-12 * manual.abs().max(1.0));
}

#[test]
fn dual_feasible_from_zero_gradient_is_zero() {
    let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
    let beta = [2.0, -1.0];
    let y = x.mul_vec(&beta);
    let data = Dataset::new(x, y).unwrap();
    for reg in [RegKind::Ridge, RegKind::L1] {
        let problem = Problem::new(&data, Model::new(LossKind::Quadratic, reg, 0.5).unwrap());
        assert!(problem.dual_feasible(&beta).iter().all(|&t| t == 0.0));
    }
}

#[test]
fn ridge_dual_is_scaled_negative_gradient() {
    let (data, x_new) = instance(7, 10, 3);
    let model = Model::new(LossKind::logcosh(2.0).unwrap(), RegKind::Ridge, 0.9).unwrap();
    let problem = Problem::augmented(&data, &x_new, 1.1, model);
    let beta = [0.5, 0.1, -0.3];
    let grad = problem.loss_gradient(&problem.predictions(&beta));
    let theta = problem.dual_feasible(&beta);
    for (t, g) in theta.iter().zip(&grad) {
        assert_eq!(*t, -g / 0.9);
    }
}

#[test]
fn l1_dual_is_inside_the_ball() {
    for seed in 0..20 {
        let (data, x_new) = instance(100 + seed, 15, 6);
        let model = Model::new(LossKind::Quadratic, RegKind::L1, 0.05).unwrap();
        let problem = Problem::augmented(&data, &x_new, 3.0, model);
        let beta = [1.0, -2.0, 0.5, 0.0, 0.3, 0.7];
        let theta = problem.dual_feasible(&beta);
        assert!(crate::linalg::norm_inf(&problem.tr_mul(&theta)) <= 1.0);
        assert!(problem.dual(&theta).is_finite());
    }
}

#[test]
fn closed_form_ridge_has_zero_gap() {
    let (data, x_new) = instance(8, 20, 5);
    let problem = Problem::augmented(&data, &x_new, 0.3, ridge_quad(2.0));
    let beta = ridge_closed_form(&problem).unwrap();
    let pair = problem.certify(&beta).unwrap();
    assert!(pair.gap <= 1e-9, "gap {}", pair.gap);
}

#[test]
fn gap_at_zero_matches_recomputation() {
    let (data, _) = instance(9, 10, 4);
    let lambda = 0.6;
    let problem = Problem::new(&data, ridge_quad(lambda));
    let theta = problem.dual_feasible(&[0.0; 4]);
    let gap = problem.duality_gap(&[0.0; 4], &theta).unwrap();
    // θ = 2y/λ, so −λθ = −2y and ℓ*(y, −2y) = −2y² + y² = −y².
    let p: f64 = data.y().iter().map(|y| y * y).sum();
    let xty = data.x().tr_mul_vec(data.y());
    let d = p - 0.5 * lambda * (2.0 / lambda) * (2.0 / lambda) * xty.iter().map(|v| v * v).sum::<f64>();
    assert!((gap - (p - d)).abs() <= 1e-12 * gap.max(1.0));
}

#[test]
fn infeasible_dual_is_an_error_not_a_gap() {
    let (data, _) = instance(10, 6, 2);
    let problem = Problem::new(&data, Model::new(LossKind::logcosh(1.0).unwrap(), RegKind::Ridge, 1.0).unwrap());
    let theta = vec![5.0; 6];
    assert_eq!(problem.duality_gap(&[0.0; 2], &theta), Err(OptimError::InfeasibleDual));
}

#[test]
fn gap_variation_vanishes_at_same_label() {
    assert_eq!(gap_variation(LossKind::Quadratic, 1.0, 0.3, -0.2, 1.5, 1.5).unwrap(), 0.0);
}

#[test]
fn quadratic_gap_variation_is_squared_step() {
    let (data, x_new) = instance(11, 12, 3);
    let model = ridge_quad(0.8);
    let beta = [0.2, -0.5, 0.9];
    let z0 = dot(&x_new, &beta);
    let at_z0 = Problem::augmented(&data, &x_new, z0, model);
    let theta = at_z0.dual_feasible(&beta);
    for t in [-1.0, -0.1, 0.05, 0.7] {
        let dg = gap_variation(LossKind::Quadratic, 0.8, z0, theta[12], z0 + t, z0).unwrap();
        assert!((dg - t * t).abs() < 1e-12);
        let direct = at_z0.with_label(z0 + t).duality_gap(&beta, &theta).unwrap()
            - at_z0.duality_gap(&beta, &theta).unwrap();
        assert!((dg - direct).abs() < 1e-9 * (1.0 + direct.abs()));
    }
}

#[test]
fn extended_dual_shifts_gap_by_loss() {
    let (data, x_new) = instance(12, 10, 3);
    let model = Model::new(LossKind::logcosh(0.7).unwrap(), RegKind::Ridge, 1.5).unwrap();
    let beta = [0.4, 0.4, -0.1];
    let base = Problem::new(&data, model);
    let theta = base.dual_feasible(&beta);
    let ext = extend_dual(&theta);
    assert_eq!(ext.len(), 11);
    assert_eq!(ext[10], 0.0);
    let g = base.duality_gap(&beta, &theta).unwrap();
    let mu = dot(&x_new, &beta);
    for z in [mu, mu - 2.0, mu + 0.3] {
        let gz = Problem::augmented(&data, &x_new, z, model).duality_gap(&beta, &ext).unwrap();
        let expected = model.loss.value(z, mu);
        assert!((gz - g - expected).abs() <= 1e-10 * (1.0 + gz.abs()));
    }
}

#[test]
fn solver_matches_ridge_closed_form() {
    let (data, x_new) = instance(13, 30, 6);
    let problem = Problem::augmented(&data, &x_new, 1.0, ridge_quad(1.5));
    let exact = ridge_closed_form(&problem).unwrap();
    let sol = solve_to_tol(&problem, &SolverConfig::with_tolerance(1e-12)).unwrap();
    let diff: Vec<f64> = exact.iter().zip(&sol.pair.beta).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) < 1e-6);
}

#[test]
fn lasso_zero_solution_above_threshold() {
    let (data, _) = instance(14, 20, 5);
    let lmax = 2.0 * crate::linalg::norm_inf(&data.x().tr_mul_vec(data.y()));
    assert!((Model::lambda_max(LossKind::Quadratic, &data) - lmax).abs() < 1e-12 * lmax);
    let model = Model::new(LossKind::Quadratic, RegKind::L1, lmax * 1.0001).unwrap();
    let sol = solve_to_tol(&Problem::new(&data, model), &SolverConfig::with_tolerance(1e-10)).unwrap();
    assert_eq!(sol.iterations, 0);
    assert!(sol.pair.beta.iter().all(|&b| b == 0.0));
}

#[test]
fn returned_certificates_hold_for_every_combination() {
    let (data, x_new) = instance(15, 25, 4);
    let losses = [
        LossKind::Quadratic,
        LossKind::power(1.5).unwrap(),
        LossKind::logcosh(0.5).unwrap(),
        LossKind::linex(0.5).unwrap(),
    ];
    for loss in losses {
        for reg in [RegKind::Ridge, RegKind::L1] {
            let model = Model::new(loss, reg, 2.0).unwrap();
            let problem = Problem::augmented(&data, &x_new, 0.5, model);
            let tol = 1e-6;
            let sol = solve_to_tol(&problem, &SolverConfig::with_tolerance(tol))
                .unwrap_or_else(|e| panic!("{loss:?}/{reg:?}: {e}"));
            let theta = problem.dual_feasible(&sol.pair.beta);
            assert_eq!(theta, sol.pair.theta);
            let gap = problem.duality_gap(&sol.pair.beta, &theta).unwrap();
            assert!(gap <= tol, "{loss:?}/{reg:?}: {gap}");
        }
    }
}

#[test]
fn exhausted_iterations_report_best_gap() {
    let (data, _) = instance(16, 30, 8);
    let config = SolverConfig {
        tolerance: 1e-14,
        max_iterations: 3,
        gap_check_period: 1,
        warm_start: None,
    };
    let problem = Problem::new(&data, Model::new(LossKind::logcosh(1.0).unwrap(), RegKind::Ridge, 0.1).unwrap());
    match solve_to_tol(&problem, &config) {
        Err(OptimError::NotConverged { best_gap, .. }) => assert!(best_gap > 1e-14 && best_gap.is_finite()),
        other => panic!("expected non-convergence, got {other:?}"),
    }
}

#[test]
fn distance_bound_examples() {
    assert_eq!(dual_distance_bound(0.0, 2.0, 1.0), 0.0);
    assert!((dual_distance_bound(0.02, 2.0, 1.0) - 0.08f64.sqrt()).abs() < 1e-15);
}

#[test]
fn l1_coordinate_newton_reaches_tight_gaps() {
    let (data, x_new) = instance(21, 30, 6);
    for loss in [
        LossKind::power(1.5).unwrap(),
        LossKind::power(1.2).unwrap(),
        LossKind::logcosh(1.0).unwrap(),
        LossKind::linex(0.5).unwrap(),
    ] {
        let model = Model::new(loss, RegKind::L1, 2.0).unwrap();
        let problem = Problem::augmented(&data, &x_new, 0.4, model);
        let sol = solve_to_tol(&problem, &SolverConfig::with_tolerance(1e-10)).unwrap();
        assert!(sol.pair.gap <= 1e-10, "{loss:?}");
        // Optimality: |Xᵀ∇ℓ|_j ≤ λ everywhere, with equality on the support.
        let g = problem.tr_mul(&problem.loss_gradient(&problem.predictions(&sol.pair.beta)));
        for (gj, bj) in g.iter().zip(&sol.pair.beta) {
            assert!(gj.abs() <= 2.0 + 1e-6, "{loss:?}: {gj}");
            if *bj != 0.0 {
                assert!((gj + 2.0 * bj.signum()).abs() < 1e-6, "{loss:?}: {gj} at {bj}");
            }
        }
    }
}
