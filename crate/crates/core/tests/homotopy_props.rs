mod common;

use hcp_core::homotopy::{build_path, step_size, HomotopyError};
use hcp_core::{CoverageMode, LossKind, Model, PathConfig, RegKind};
use rand::Rng;

fn all_models(lambda: f64) -> Vec<Model> {
    let losses = [
        LossKind::Quadratic,
        LossKind::power(1.5).unwrap(),
        LossKind::logcosh(0.5).unwrap(),
        LossKind::linex(0.5).unwrap(),
    ];
    let mut out = Vec::new();
    for loss in losses {
        for reg in [RegKind::Ridge, RegKind::L1] {
            out.push(Model::new(loss, reg, lambda).unwrap());
        }
    }
    out
}

#[test]
fn degenerate_range_gives_one_point() {
    let (data, x_new, _) = common::linear(1, 20, 3, 1.0, 0.3);
    let mut config = PathConfig::new(0.01);
    config.range = Some((0.4, 0.4));
    let m = Model::new(LossKind::Quadratic, RegKind::Ridge, 1.0).unwrap();
    let path = build_path(&data, &x_new, m, &config).unwrap();
    assert_eq!(path.len(), 1);
    assert_eq!(path.covering_point(0.4).unwrap(), 0);
}

#[test]
fn unit_range_grid_size() {
    let (data, x_new, _) = common::linear(2, 30, 4, 1.0, 0.3);
    let mut config = PathConfig::new(0.02);
    config.solver_tolerance = Some(0.002);
    config.range = Some((-0.5, 0.5));
    let m = Model::new(LossKind::Quadratic, RegKind::Ridge, 1.0).unwrap();
    let path = build_path(&data, &x_new, m, &config).unwrap();
    let s = (2.0f64 * 0.018 / 2.0).sqrt();
    assert!((path.step() - s).abs() < 1e-15);
    assert!(path.len() <= (1.0 / 0.134f64).ceil() as usize + 2);
    assert!(path.len() <= path.complexity_bound());
}

#[test]
fn dense_probes_stay_within_budget() {
    let (data, x_new, _) = common::linear(3, 25, 5, 1.0, 0.5);
    for model in all_models(2.0) {
        for mode in [CoverageMode::Halving, CoverageMode::OneSided] {
            let mut config = PathConfig::new(0.01);
            config.mode = mode;
            let path = build_path(&data, &x_new, model, &config).unwrap_or_else(|e| panic!("{model:?}: {e}"));
            let (lo, hi) = path.range();
            for k in 0..=1000 {
                let z = lo + (hi - lo) * k as f64 / 1000.0;
                let gap = path.certified_gap(&data, z).unwrap();
                assert!(gap <= path.epsilon(), "{model:?} {mode:?} z={z}: gap {gap}");
            }
            for pt in path.points() {
                assert!(pt.pair.gap <= path.epsilon0());
            }
            for w in path.points().windows(2) {
                assert!(w[1].z > w[0].z);
                assert_eq!(w[0].hi, w[1].lo);
            }
            if matches!(path.rule(), hcp_core::StepRule::Constant { .. }) {
                assert!(path.len() <= path.complexity_bound(), "{model:?}: {} points", path.len());
                let limit = match mode {
                    CoverageMode::Halving => 2.0 * path.step(),
                    CoverageMode::OneSided => path.step(),
                };
                for w in path.points().windows(2) {
                    assert!(w[1].z - w[0].z <= limit * (1.0 + 1e-12));
                }
            }
        }
    }
}

#[test]
fn covering_point_rules() {
    let (data, x_new, _) = common::linear(4, 20, 3, 1.0, 0.3);
    let m = Model::new(LossKind::Quadratic, RegKind::Ridge, 1.0).unwrap();
    let path = build_path(&data, &x_new, m, &PathConfig::new(0.01)).unwrap();
    let (lo, hi) = path.range();
    let pts = path.points();
    for (k, p) in pts.iter().enumerate() {
        if p.z >= lo && p.z <= hi {
            assert_eq!(path.covering_point(p.z).unwrap(), k);
        }
    }
    for k in 0..pts.len() - 1 {
        let mid = pts[k].hi;
        assert_eq!(path.covering_point(mid).unwrap(), k);
    }
    assert!(matches!(path.covering_point(hi + 1.0), Err(HomotopyError::OutOfRange { .. })));
    assert!(matches!(path.covering_point(f64::NAN), Err(HomotopyError::OutOfRange { .. })));
    let mut r = common::rng(9);
    for _ in 0..200 {
        let z = r.random_range(lo..=hi);
        assert!(path.certified_gap(&data, z).unwrap() <= path.epsilon());
    }
}

#[test]
fn quadratic_steps_cannot_be_longer() {
    // From a stored pair the gap grows exactly like t², so moving 1% past
    // the strong-convexity step exhausts the budget.
    for seed in 0..10u64 {
        let (data, x_new, _) = common::linear(seed, 20, 4, 1.0, 0.5);
        let m = Model::new(LossKind::Quadratic, RegKind::Ridge, 1.0).unwrap();
        let config = PathConfig::new(0.01);
        let path = build_path(&data, &x_new, m, &config).unwrap();
        let mu = m.loss.regularity().strong_convexity.unwrap();
        let budget = path.epsilon() - path.epsilon0();
        let s_lower = (2.0 * budget / mu).sqrt();
        for pt in path.points() {
            for sign in [-1.0, 1.0] {
                let z = pt.z + sign * 1.01 * s_lower;
                let problem = hcp_core::Problem::augmented(&data, &x_new, z, m);
                let gap = problem.duality_gap(&pt.pair.beta, &pt.pair.theta).unwrap();
                assert!(gap - pt.pair.gap > budget, "seed {seed}: {gap}");
            }
        }
    }
}

#[test]
fn grid_does_not_depend_on_solver_path() {
    let (data, x_new, _) = common::linear(5, 30, 5, 1.0, 0.5);
    for loss in [LossKind::Quadratic, LossKind::logcosh(1.0).unwrap()] {
        let m = Model::new(loss, RegKind::Ridge, 1.5).unwrap();
        let a = build_path(&data, &x_new, m, &PathConfig::new(0.01)).unwrap();
        let mut other = PathConfig::new(0.01);
        other.warm_start = false;
        let b = build_path(&data, &x_new, m, &other).unwrap();
        let za: Vec<f64> = a.points().iter().map(|p| p.z).collect();
        let zb: Vec<f64> = b.points().iter().map(|p| p.z).collect();
        assert_eq!(za, zb);
    }
}

#[test]
fn warm_starts_save_iterations() {
    let (data, x_new, _) = common::linear(6, 40, 10, 1.0, 0.5);
    for reg in [RegKind::L1, RegKind::Ridge] {
        let m = Model::new(LossKind::Quadratic, reg, 1.0).unwrap();
        let warm = build_path(&data, &x_new, m, &PathConfig::new(1e-3)).unwrap();
        let mut config = PathConfig::new(1e-3);
        config.warm_start = false;
        let cold = build_path(&data, &x_new, m, &config).unwrap();
        assert!(warm.total_iterations() <= cold.total_iterations(), "{reg:?}");
    }
}

#[test]
fn inflated_steps_break_validity() {
    let (data, x_new, _) = common::linear(7, 25, 4, 1.0, 0.5);
    let m = Model::new(LossKind::Quadratic, RegKind::Ridge, 1.0).unwrap();
    let mut config = PathConfig::new(0.01);
    config.step_scale = 2.0;
    config.certify = false;
    let path = build_path(&data, &x_new, m, &config).unwrap();
    let (lo, hi) = path.range();
    let failures = (0..=1000)
        .map(|k| lo + (hi - lo) * k as f64 / 1000.0)
        .filter(|&z| path.certified_gap(&data, z).unwrap() > path.epsilon())
        .count();
    assert!(failures > 0);
}

#[test]
fn budget_errors() {
    let (data, x_new, _) = common::linear(8, 20, 3, 1.0, 0.5);
    let m = Model::new(LossKind::Quadratic, RegKind::Ridge, 1.0).unwrap();
    let mut config = PathConfig::new(0.01);
    config.solver_tolerance = Some(0.02);
    assert!(matches!(build_path(&data, &x_new, m, &config), Err(HomotopyError::InvalidBudget { .. })));
    let reg = LossKind::Quadratic.regularity();
    assert!(step_size(&reg, 0.01, 0.01).is_err());
}
