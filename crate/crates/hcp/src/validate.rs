//! Self-contained invariant checks over the whole pipeline, with an
//! optional deliberate fault to prove the checks can fail.

use hcp_core::conformal::{
    assemble_absolute_residual_set, assemble_generic_set, exact_ridge_set, typicalness, wrap_sets,
};
use hcp_core::homotopy::{build_path, step_size};
use hcp_core::linalg::{norm2, norm_inf};
use hcp_core::optim::{gap_variation, solve_to_tol};
use hcp_core::{
    ConformityMeasure, Dataset, LossKind, Model, PathConfig, Problem, RegKind, SolverConfig, StepRule,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::data::gen_linear;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Fault {
    #[default]
    None,
    /// Doubles the homotopy step and skips segment certification.
    StepInflate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub invariants: Vec<InvariantResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.invariants.iter().all(|r| r.passed)
    }

    pub fn first_failure(&self) -> Option<&InvariantResult> {
        self.invariants.iter().find(|r| !r.passed)
    }
}

type Check = Result<String, String>;

pub fn all_losses() -> Vec<LossKind> {
    vec![
        LossKind::Quadratic,
        LossKind::power(1.2).unwrap(),
        LossKind::power(1.7).unwrap(),
        LossKind::logcosh(1.0).unwrap(),
        LossKind::linex(0.7).unwrap(),
        LossKind::linex(-0.7).unwrap(),
    ]
}

/// `sup_u (uv − ℓ(y, u))` by a fine grid over `y ± 60` refined with golden
/// section search.
pub fn brute_force_loss_conjugate(loss: LossKind, y: f64, v: f64) -> f64 {
    let f = |u: f64| u * v - loss.value(y, u);
    let (mut best_u, mut best) = (y, f(y));
    let steps = 120_000;
    for k in 0..=steps {
        let u = y - 60.0 + 120.0 * k as f64 / steps as f64;
        let val = f(u);
        if val > best {
            best = val;
            best_u = u;
        }
    }
    let (mut a, mut b) = (best_u - 2e-3, best_u + 2e-3);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    best.max(f(0.5 * (a + b)))
}

/// Dual points to test for each loss, including the edges of the conjugate
/// domain where they exist.
pub fn conjugate_probe_points(loss: LossKind) -> Vec<f64> {
    match loss {
        LossKind::Quadratic => vec![-3.0, -0.5, 0.0, 0.7, 4.0],
        LossKind::Power { q } => vec![-q * 2.0, -0.3, 0.0, 0.4, q * 1.5],
        LossKind::LogCosh { .. } => vec![-1.0, -0.6, 0.0, 0.3, 0.99, 1.0],
        // The domain is `v/γ ≤ 1`, closed at `v = γ`.
        LossKind::Linex { gamma } => vec![gamma, 0.5 * gamma, 0.0, -gamma, -1.5 * gamma],
    }
}

/// Closed-form loss conjugates against a brute-force supremum, including the
/// closed edge of each bounded domain.
pub fn loss_conjugate_oracle() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for loss in all_losses() {
        for y in [-1.3, 0.4] {
            for v in conjugate_probe_points(loss) {
                let closed = loss
                    .conjugate(y, v)
                    .finite()
                    .ok_or_else(|| format!("{loss:?}: conjugate infinite inside its domain at v = {v}"))?;
                let brute = brute_force_loss_conjugate(loss, y, v);
                let err = (closed - brute).abs();
                if err > 1e-4 {
                    return Err(format!("{loss:?} y={y} v={v}: closed form {closed} vs search {brute}"));
                }
                worst = worst.max(err);
                count += 1;
            }
        }
        let outside = match loss {
            LossKind::LogCosh { .. } => Some(1.01),
            LossKind::Linex { gamma } => Some(1.01 * gamma),
            _ => None,
        };
        if let Some(v) = outside {
            if loss.conjugate(0.0, v).is_finite() {
                return Err(format!("{loss:?}: conjugate finite outside its domain at v = {v}"));
            }
        }
    }
    Ok(format!("{count} points, worst error {worst:e}"))
}

pub fn regularizer_conjugate_oracle() -> Result<String, String> {
    // Both regularizers separate across coordinates; check one coordinate
    // at a time against a grid search over β ∈ [−50, 50].
    let search = |reg: RegKind, v: f64| {
        (0..=200_000)
            .map(|k| -50.0 + 100.0 * k as f64 / 200_000.0)
            .map(|b| b * v - reg.eval(&[b]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut worst: f64 = 0.0;
    for v in [-2.5, -1.0, -0.3, 0.0, 0.8, 1.0, 3.0] {
        let ridge = RegKind::Ridge.conjugate(&[v]).finite().ok_or("ridge conjugate infinite")?;
        let err = (ridge - search(RegKind::Ridge, v)).abs();
        if err > 1e-4 {
            return Err(format!("ridge v={v}: {ridge} vs search {}", search(RegKind::Ridge, v)));
        }
        worst = worst.max(err);
        let l1 = RegKind::L1.conjugate(&[v]);
        let brute = search(RegKind::L1, v);
        if v.abs() <= 1.0 {
            let closed = l1.finite().ok_or(format!("l1 conjugate infinite at v={v}"))?;
            if (closed - brute).abs() > 1e-4 {
                return Err(format!("l1 v={v}: {closed} vs search {brute}"));
            }
        } else if l1.is_finite() || brute < 10.0 {
            return Err(format!("l1 v={v}: expected an unbounded supremum, search gave {brute}"));
        }
    }
    let v = [0.3, -1.2, 2.0];
    let sum = RegKind::Ridge.conjugate(&v).finite().unwrap();
    let expected: f64 = v.iter().map(|x| 0.5 * x * x).sum();
    if (sum - expected).abs() > 1e-12 {
        return Err("ridge conjugate does not separate over coordinates".into());
    }
    Ok(format!("worst error {worst:e}"))
}

fn fenchel_young(rng: &mut ChaCha8Rng) -> Check {
    for loss in all_losses() {
        let points = conjugate_probe_points(loss);
        for _ in 0..200 {
            let (y, u) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let v = points[rng.random_range(0..points.len())];
            let c = loss.conjugate(y, v).finite().unwrap();
            if u * v > loss.value(y, u) + c + 1e-9 {
                return Err(format!("{loss:?} y={y} u={u} v={v}"));
            }
        }
    }
    Ok("1200 triples".into())
}

fn small_instance(seed: u64) -> (Dataset, Vec<f64>) {
    let data = gen_linear(20, 4, 0.5, 4, 1.0, seed).expect("valid generator parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let x_new = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
    (data, x_new)
}

fn models(lambda: f64) -> Vec<Model> {
    let mut out = Vec::new();
    for loss in [
        LossKind::Quadratic,
        LossKind::power(1.5).unwrap(),
        LossKind::logcosh(1.0).unwrap(),
        LossKind::linex(0.5).unwrap(),
    ] {
        for reg in [RegKind::Ridge, RegKind::L1] {
            out.push(Model::new(loss, reg, lambda).unwrap());
        }
    }
    out
}

fn weak_duality(rng: &mut ChaCha8Rng) -> Check {
    let mut count = 0;
    for k in 0..5 {
        let (data, x_new) = small_instance(rng.random());
        for model in models(0.5 + k as f64) {
            let z = rng.random_range(-2.0..2.0);
            let problem = Problem::augmented(&data, &x_new, z, model);
            let beta: Vec<f64> = (0..data.p()).map(|_| rng.random_range(-0.5..0.5)).collect();
            let theta = problem.dual_feasible(&beta);
            let primal = problem.primal(&beta);
            let dual = problem
                .dual(&theta)
                .finite()
                .ok_or_else(|| format!("{model:?}: dual vector infeasible"))?;
            if dual > primal + 1e-9 * (1.0 + primal.abs()) {
                return Err(format!("{model:?}: dual {dual} above primal {primal}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} instances"))
}

/// Maximum relative error of the gap-variation identity over `trials`
/// random `(instance, β, θ, z, z₀)` tuples.
pub fn gap_variation_identity(seed: u64, trials: usize) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let (data, x_new) = small_instance(rng.random());
        let all = models(rng.random_range(0.2..5.0));
        let model = all[t % all.len()];
        let z0 = rng.random_range(-3.0..3.0);
        let z = z0 + rng.random_range(-2.0..2.0);
        let at_z0 = Problem::augmented(&data, &x_new, z0, model);
        let beta: Vec<f64> = (0..data.p()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let theta = at_z0.dual_feasible(&beta);
        let at_z = at_z0.with_label(z);
        let raw_gap = |p: &Problem<'_>| -> Result<f64, String> {
            let d = p.dual(&theta).finite().ok_or("dual infeasible")?;
            Ok(p.primal(&beta) - d)
        };
        let (g0, g1) = (raw_gap(&at_z0)?, raw_gap(&at_z)?);
        let mu: f64 = x_new.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let delta = gap_variation(model.loss, model.lambda, mu, theta[theta.len() - 1], z, z0)
            .map_err(|e| e.to_string())?;
        let err = ((g1 - g0) - delta).abs() / g0.abs().max(g1.abs()).max(1.0);
        if err > 1e-10 {
            return Err(format!(
                "{model:?} z0={z0} z={z}: direct {} vs identity {delta}",
                g1 - g0
            ));
        }
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Checks `‖θ − θ̂‖ ≤ √(2ν·gap)/λ + slack` for ridge with each globally
/// smooth loss. Returns the number of checked instances.
pub fn dual_distance_bound_check(seed: u64, instances: usize) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let losses = [LossKind::Quadratic, LossKind::logcosh(1.0).unwrap(), LossKind::logcosh(0.5).unwrap()];
    for k in 0..instances {
        let (data, x_new) = small_instance(rng.random());
        let loss = losses[k % losses.len()];
        let lambda = rng.random_range(0.5..5.0);
        let model = Model::new(loss, RegKind::Ridge, lambda).unwrap();
        let problem = Problem::augmented(&data, &x_new, rng.random_range(-2.0..2.0), model);
        let best = solve_to_tol(&problem, &SolverConfig::with_tolerance(1e-12)).map_err(|e| e.to_string())?;
        let beta: Vec<f64> = best
            .pair
            .beta
            .iter()
            .map(|b| b + rng.random_range(-0.3..0.3))
            .collect();
        let pair = problem.certify(&beta).map_err(|e| e.to_string())?;
        let nu = loss.regularity().smoothness().unwrap();
        let diff: Vec<f64> = pair.theta.iter().zip(&best.pair.theta).map(|(a, b)| a - b).collect();
        let bound = (2.0 * nu * pair.gap).sqrt() / lambda;
        if norm2(&diff) > bound + 1e-5 {
            return Err(format!("{loss:?} λ={lambda}: distance {} exceeds bound {bound}", norm2(&diff)));
        }
    }
    Ok(instances)
}

fn path_config(epsilon: f64, fault: Fault) -> PathConfig {
    let mut config = PathConfig::new(epsilon);
    if fault == Fault::StepInflate {
        config.step_scale = 2.0;
        config.certify = false;
    }
    config
}

fn path_validity(rng: &mut ChaCha8Rng, fault: Fault) -> Check {
    let (data, x_new) = small_instance(rng.random());
    let epsilon = 1e-2;
    let mut probes = 0;
    for model in models(1.0) {
        let path = build_path(&data, &x_new, model, &path_config(epsilon, fault)).map_err(|e| e.to_string())?;
        let (lo, hi) = path.range();
        for _ in 0..1000 {
            let z = rng.random_range(lo..=hi);
            let gap = path.certified_gap(&data, z).map_err(|e| e.to_string())?;
            if gap > epsilon {
                return Err(format!("{model:?}: gap {gap:e} > ε = {epsilon:e} at z = {z}"));
            }
            probes += 1;
        }
    }
    Ok(format!("{probes} probes"))
}

fn grid_size_bound(rng: &mut ChaCha8Rng, fault: Fault) -> Check {
    let (data, x_new) = small_instance(rng.random());
    let mut checked = 0;
    for model in models(1.0) {
        let path = build_path(&data, &x_new, model, &path_config(1e-2, fault)).map_err(|e| e.to_string())?;
        if let StepRule::Constant { step } = path.rule() {
            let (lo, hi) = path.range();
            let bound = ((hi - lo) / step).ceil() as usize + 2;
            if path.len() > bound {
                return Err(format!("{model:?}: {} points, bound {bound}", path.len()));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} constant-step paths"))
}

/// For quadratic loss, the gap variation along `t` is exactly `t²`, and
/// moving 1% past the step overshoots the budget. Returns the worst
/// deviation from `t²`.
pub fn quadratic_tightness(seed: u64, trials: usize) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let reg = LossKind::Quadratic.regularity();
    for _ in 0..trials {
        let (data, x_new) = small_instance(rng.random());
        // With ridge the dual vector is exactly the scaled negative gradient.
        let model = Model::new(LossKind::Quadratic, RegKind::Ridge, rng.random_range(0.5..3.0)).unwrap();
        let z0 = rng.random_range(-2.0..2.0);
        let problem = Problem::augmented(&data, &x_new, z0, model);
        let beta = solve_to_tol(&problem, &SolverConfig::with_tolerance(1e-9))
            .map_err(|e| e.to_string())?
            .pair
            .beta;
        let theta = problem.dual_feasible(&beta);
        let mu: f64 = x_new.iter().zip(&beta).map(|(a, b)| a * b).sum();
        let last = theta[theta.len() - 1];
        let t = rng.random_range(-2.0..2.0);
        let delta = gap_variation(model.loss, model.lambda, mu, last, z0 + t, z0).map_err(|e| e.to_string())?;
        let err = (delta - t * t).abs() / (1.0 + t * t);
        if err > 1e-10 {
            return Err(format!("ΔG({t}) = {delta}, expected {}", t * t));
        }
        worst = worst.max(err);

        let (epsilon, epsilon0) = (1e-2, 1e-3);
        let s = step_size(&reg, epsilon, epsilon0).map_err(|e| e.to_string())?;
        let over = gap_variation(model.loss, model.lambda, mu, last, z0 + 1.01 * s, z0).map_err(|e| e.to_string())?;
        if epsilon0 + over <= epsilon {
            return Err(format!("budget not exceeded at 1.01 × step: {}", epsilon0 + over));
        }
    }
    Ok(worst)
}

/// Checks `lower ⊆ exact ⊆ upper` for the gradient-based measure with
/// quadratic loss and ridge. Returns the number of violations.
pub fn wrap_nesting(seed: u64, epsilon: f64, n: usize, p: usize) -> Result<usize, String> {
    let data = gen_linear(n, p, 0.5, p.min(10), 1.0, seed).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let x_new: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let lambda = 1.0;
    let model = Model::new(LossKind::Quadratic, RegKind::Ridge, lambda).unwrap();
    let path = build_path(&data, &x_new, model, &PathConfig::new(epsilon)).map_err(|e| e.to_string())?;
    let w = wrap_sets(&path, &data, 0.1).map_err(|e| e.to_string())?;
    // The gradient score is twice the absolute residual, an increasing
    // transform, so both measures give the same exact set.
    let exact = exact_ridge_set(&data, &x_new, lambda, 0.1, path.range()).map_err(|e| e.to_string())?;
    Ok(usize::from(!w.lower.is_subset_of(&exact)) + usize::from(!exact.is_subset_of(&w.upper)))
}

fn wrap_nesting_check(rng: &mut ChaCha8Rng) -> Check {
    let mut checked = 0;
    for _ in 0..3 {
        let seed = rng.random();
        for epsilon in [1e-2, 1e-4] {
            let v = wrap_nesting(seed, epsilon, 30, 5)?;
            if v > 0 {
                return Err(format!("seed {seed} ε={epsilon}: {v} violations"));
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} paths"))
}

fn assembly_consistency(rng: &mut ChaCha8Rng) -> Check {
    let (data, x_new) = small_instance(rng.random());
    for model in models(1.0) {
        let path = build_path(&data, &x_new, model, &PathConfig::new(1e-2)).map_err(|e| e.to_string())?;
        for alpha in [0.1, 0.3] {
            let a = assemble_absolute_residual_set(&path, &data, alpha).map_err(|e| e.to_string())?;
            let g = assemble_generic_set(&path, &data, alpha, ConformityMeasure::AbsoluteResidual)
                .map_err(|e| e.to_string())?;
            if a != g {
                return Err(format!("{model:?} α={alpha}: {a} vs {g}"));
            }
        }
    }
    Ok("8 models".into())
}

fn rank_permutation(rng: &mut ChaCha8Rng) -> Check {
    for _ in 0..200 {
        let mut scores: Vec<f64> = (0..12).map(|_| (rng.random::<f64>() * 5.0).floor()).collect();
        let before = typicalness(0.0, &scores);
        let last = scores.pop().unwrap();
        scores.shuffle(rng);
        scores.push(last);
        let after = typicalness(0.0, &scores);
        if before.rank != after.rank || before.p_value != after.p_value {
            return Err(format!("rank {} became {}", before.rank, after.rank));
        }
    }
    Ok("200 permutations".into())
}

fn dual_feasibility(rng: &mut ChaCha8Rng) -> Check {
    let (data, x_new) = small_instance(rng.random());
    for model in models(0.3) {
        let problem = Problem::augmented(&data, &x_new, 0.7, model);
        let beta: Vec<f64> = (0..data.p()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let theta = problem.dual_feasible(&beta);
        if model.reg == RegKind::L1 && norm_inf(&problem.tr_mul(&theta)) > 1.0 {
            return Err(format!("{model:?}: ‖Xᵀθ‖∞ > 1"));
        }
        if !problem.dual(&theta).is_finite() {
            return Err(format!("{model:?}: dual objective infinite"));
        }
    }
    Ok("8 models".into())
}

/// Runs every invariant, continuing past failures so the report is
/// complete.
pub fn run_validation(seed: u64, fault: Fault) -> ValidationReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut invariants = Vec::new();
    let mut record = |name: &'static str, outcome: Check| {
        let (passed, detail) = match outcome {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        invariants.push(InvariantResult { name, passed, detail });
    };
    record("loss-conjugate-oracle", loss_conjugate_oracle());
    record("regularizer-conjugate-oracle", regularizer_conjugate_oracle());
    record("fenchel-young", fenchel_young(&mut rng));
    record("weak-duality", weak_duality(&mut rng));
    record("dual-feasibility", dual_feasibility(&mut rng));
    let s = rng.random();
    record(
        "gap-variation-identity",
        gap_variation_identity(s, 200).map(|w| format!("200 tuples, worst relative error {w:e}")),
    );
    let s = rng.random();
    record(
        "dual-distance-bound",
        dual_distance_bound_check(s, 30).map(|k| format!("{k} instances")),
    );
    let s = rng.random();
    record(
        "quadratic-tightness",
        quadratic_tightness(s, 50).map(|w| format!("50 pairs, worst error {w:e}")),
    );
    record("path-validity", path_validity(&mut rng, fault));
    record("grid-size-bound", grid_size_bound(&mut rng, fault));
    record("assembly-consistency", assembly_consistency(&mut rng));
    record("wrap-nesting", wrap_nesting_check(&mut rng));
    record("rank-permutation-invariance", rank_permutation(&mut rng));
    ValidationReport { seed, invariants }
}
