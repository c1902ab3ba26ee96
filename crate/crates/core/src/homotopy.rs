//! Candidate-label grid with an ε-certified solution attached to every
//! point.
//!
//! Starting from an `ε₀`-solution on the training data, the test point's
//! prediction `z₀ = x_{n+1}ᵀβ` seeds a grid of candidate labels. Each grid
//! point `z_k` gets a warm-started `ε₀`-solution of the augmented problem,
//! and the gap-variation identity bounds the duality gap of that solution
//! for every label within the step `s` of `z_k`. The step comes from the
//! loss regularity and the budget `ε − ε₀`.

use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::dot;
use crate::losses::{linex_curvature, LossKind, Regularity, RegularityClass};
use crate::optim::{
    gap_variation, Dataset, Model, OptimError, PrimalDualPair, Problem, Solver, SolverConfig,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HomotopyError {
    #[error("invalid budget: need 0 < ε₀ < ε (got ε = {epsilon}, ε₀ = {epsilon0})")]
    InvalidBudget { epsilon: f64, epsilon0: f64 },
    #[error("loss has no usable regularity for step sizing")]
    UnsupportedLoss,
    #[error("invalid range [{lo}, {hi}]")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("label {z} is outside the path range [{lo}, {hi}]")]
    OutOfRange { z: f64, lo: f64, hi: f64 },
    #[error("grid would need more than {limit} points")]
    TooManyPoints { limit: usize },
    #[error("step size underflowed at z = {z}")]
    StepUnderflow { z: f64 },
    #[error("solver failed at z = {z}: {source}")]
    Solver { z: f64, source: OptimError },
    #[error("could not certify the segment around z = {z}: worst gap {gap:e} exceeds ε = {epsilon:e}")]
    Uncertified { z: f64, gap: f64, epsilon: f64 },
    #[error(transparent)]
    Optim(#[from] OptimError),
}

/// How far each grid point's certificate reaches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CoverageMode {
    /// Points spaced `2s` apart, each covering `[z_k − s, z_k + s]`.
    #[default]
    Halving,
    /// Points spaced `s` apart, each covering `[z_k, z_k + s]`.
    OneSided,
}

/// The step rule a path was built with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// The same step everywhere (globally smooth, Lipschitz or uniformly
    /// smooth losses).
    Constant { step: f64 },
    /// Per-point steps from the curvature of the linex loss over the
    /// segment actually covered.
    Adaptive { gamma: f64, budget: f64 },
}

impl StepRule {
    pub fn for_regularity(reg: &Regularity, epsilon: f64, epsilon0: f64) -> Result<Self, HomotopyError> {
        match reg.class {
            RegularityClass::LocallySmooth { gamma } => {
                check_budget(epsilon, epsilon0)?;
                Ok(StepRule::Adaptive {
                    gamma,
                    budget: epsilon - epsilon0,
                })
            }
            _ => Ok(StepRule::Constant {
                step: step_size(reg, epsilon, epsilon0)?,
            }),
        }
    }
}

fn check_budget(epsilon: f64, epsilon0: f64) -> Result<(), HomotopyError> {
    if !(epsilon0 >= 0.0 && epsilon0 < epsilon && epsilon.is_finite()) {
        return Err(HomotopyError::InvalidBudget { epsilon, epsilon0 });
    }
    Ok(())
}

/// Largest step `s` such that a solution with gap `ε₀` at `z_k` keeps gap
/// at most `ε` for every label in `[z_k − s, z_k + s]`.
pub fn step_size(reg: &Regularity, epsilon: f64, epsilon0: f64) -> Result<f64, HomotopyError> {
    check_budget(epsilon, epsilon0)?;
    let budget = epsilon - epsilon0;
    match reg.class {
        RegularityClass::Smooth { nu } => Ok(libm::sqrt(2.0 * budget / nu)),
        RegularityClass::Lipschitz { nu } => Ok(budget / nu),
        RegularityClass::UniformlySmooth(modulus) => Ok(modulus.inverse(budget)),
        RegularityClass::LocallySmooth { .. } | RegularityClass::None => Err(HomotopyError::UnsupportedLoss),
    }
}

/// Step for the linex loss at a point whose label and prediction differ by
/// `offset`, valid for a segment of half-width up to the returned step.
/// Starts from the previous step and recomputes once if the step grew, so
/// the curvature bound always covers the returned step.
pub fn linex_local_step(gamma: f64, budget: f64, offset: f64, previous: f64) -> f64 {
    let step_for = |reach: f64| libm::sqrt(2.0 * budget / linex_curvature(gamma, offset.abs() + reach));
    let first = step_for(previous);
    if first > previous {
        step_for(first)
    } else {
        first
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub epsilon: f64,
    /// Solver tolerance `ε₀`; defaults to `ε/10`.
    pub solver_tolerance: Option<f64>,
    /// Label range to cover; defaults to the smallest and largest training
    /// labels.
    pub range: Option<(f64, f64)>,
    pub mode: CoverageMode,
    /// Warm-start each grid point from its neighbour's solution.
    pub warm_start: bool,
    /// Multiplies the step. Values above 1 void the guarantee and only
    /// exist for fault-injection checks (together with `certify = false`).
    pub step_scale: f64,
    /// Check both ends of every segment with the gap-variation identity and
    /// tighten the solver when a check fails.
    pub certify: bool,
    pub max_iterations: usize,
    pub gap_check_period: usize,
    pub max_points: usize,
}

impl PathConfig {
    pub fn new(epsilon: f64) -> Self {
        let solver = SolverConfig::default();
        Self {
            epsilon,
            solver_tolerance: None,
            range: None,
            mode: CoverageMode::Halving,
            warm_start: true,
            step_scale: 1.0,
            certify: true,
            max_iterations: solver.max_iterations,
            gap_check_period: solver.gap_check_period,
            max_points: 5_000_000,
        }
    }

    pub fn epsilon0(&self) -> f64 {
        self.solver_tolerance.unwrap_or(self.epsilon / 10.0)
    }
}

/// One grid point: its label, the labels it certifies, and its solution.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPoint {
    pub z: f64,
    /// Certified segment `[lo, hi]` (clipped to the path range). Adjacent
    /// points share their boundary exactly.
    pub lo: f64,
    pub hi: f64,
    /// `x_{n+1}ᵀβ` for this point's solution.
    pub prediction: f64,
    pub pair: PrimalDualPair,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub z: f64,
    pub gap: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomotopyPath {
    points: Vec<GridPoint>,
    range: (f64, f64),
    epsilon: f64,
    epsilon0: f64,
    step: f64,
    rule: StepRule,
    mode: CoverageMode,
    model: Model,
    x_new: Vec<f64>,
    initial_prediction: f64,
}

impl HomotopyPath {
    pub fn points(&self) -> &[GridPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    /// The constant step, or the smallest step used by an adaptive rule.
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn rule(&self) -> StepRule {
        self.rule
    }

    pub fn mode(&self) -> CoverageMode {
        self.mode
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn test_point(&self) -> &[f64] {
        &self.x_new
    }

    /// Prediction at the test point from the solution on the training data
    /// alone, where the grid is anchored.
    pub fn initial_prediction(&self) -> f64 {
        self.initial_prediction
    }

    pub fn total_iterations(&self) -> usize {
        self.points.iter().map(|p| p.iterations).sum()
    }

    /// Upper bound on the grid size for a constant step:
    /// `⌈(y_max − y_min)/s⌉ + 2`.
    pub fn complexity_bound(&self) -> usize {
        let (lo, hi) = self.range;
        libm::ceil((hi - lo) / self.step) as usize + 2
    }

    /// Index of the grid point whose certified segment contains `z`. A label
    /// on the boundary shared by two points goes to the lower index.
    pub fn covering_point(&self, z: f64) -> Result<usize, HomotopyError> {
        let (lo, hi) = self.range;
        if !(z >= lo && z <= hi) {
            return Err(HomotopyError::OutOfRange { z, lo, hi });
        }
        let k = self.points.partition_point(|p| p.hi < z);
        Ok(k.min(self.points.len() - 1))
    }

    /// Duality gap at label `z` of the stored pair that covers `z`,
    /// recomputed from scratch on the augmented problem.
    pub fn certified_gap(&self, data: &Dataset, z: f64) -> Result<f64, HomotopyError> {
        let k = self.covering_point(z)?;
        let pair = &self.points[k].pair;
        let problem = Problem::augmented(data, &self.x_new, z, self.model);
        Ok(problem.duality_gap(&pair.beta, &pair.theta)?)
    }

    pub fn records(&self) -> impl Iterator<Item = TraceRecord> + '_ {
        self.points.iter().map(|p| TraceRecord {
            z: p.z,
            gap: p.pair.gap,
            prediction: p.prediction,
        })
    }
}

// Planned point before solving: label and certified segment.
#[derive(Debug, Clone, Copy)]
struct Slot {
    z: f64,
    lo: f64,
    hi: f64,
}

struct Builder<'a> {
    data: &'a Dataset,
    x_new: &'a [f64],
    model: Model,
    config: &'a PathConfig,
    epsilon0: f64,
    solver: Solver,
}

impl Builder<'_> {
    fn solve_at(&mut self, slot: Slot, warm: Option<&[f64]>) -> Result<GridPoint, HomotopyError> {
        let problem = Problem::augmented(self.data, self.x_new, slot.z, self.model);
        let warm = if self.config.warm_start { warm } else { None };
        let wrap = |source| HomotopyError::Solver { z: slot.z, source };
        let mut sol = self.solver.solve(&problem, warm).map_err(wrap)?;
        let mut iterations = sol.iterations;
        if self.config.certify {
            let mut tol = self.epsilon0;
            let mut attempt = 0;
            loop {
                let worst = self.worst_endpoint_gap(&sol.pair, slot)?;
                if worst <= self.config.epsilon {
                    break;
                }
                if attempt == 3 {
                    self.solver.set_tolerance(self.epsilon0).map_err(wrap)?;
                    return Err(HomotopyError::Uncertified {
                        z: slot.z,
                        gap: worst,
                        epsilon: self.config.epsilon,
                    });
                }
                attempt += 1;
                tol *= 0.1;
                self.solver.set_tolerance(tol).map_err(wrap)?;
                sol = self.solver.solve(&problem, Some(&sol.pair.beta)).map_err(wrap)?;
                iterations += sol.iterations;
            }
            self.solver.set_tolerance(self.epsilon0).map_err(wrap)?;
        }
        let prediction = dot(self.x_new, &sol.pair.beta);
        Ok(GridPoint {
            z: slot.z,
            lo: slot.lo,
            hi: slot.hi,
            prediction,
            pair: sol.pair,
            iterations,
        })
    }

    /// Gap of the pair solved at `slot.z` at both segment ends, via the
    /// gap-variation identity. The gap is convex in the label because every
    /// supported loss depends on `y − u` only, so the ends bound the segment.
    fn worst_endpoint_gap(&self, pair: &PrimalDualPair, slot: Slot) -> Result<f64, HomotopyError> {
        let mu = dot(self.x_new, &pair.beta);
        let theta_last = *pair.theta.last().expect("augmented dual is nonempty");
        let mut worst = pair.gap;
        for end in [slot.lo, slot.hi] {
            let delta = gap_variation(self.model.loss, self.model.lambda, mu, theta_last, end, slot.z)?;
            worst = worst.max(pair.gap + delta);
        }
        Ok(worst)
    }
}

/// Builds the homotopy path for test features `x_new`.
pub fn build_path(
    data: &Dataset,
    x_new: &[f64],
    model: Model,
    config: &PathConfig,
) -> Result<HomotopyPath, HomotopyError> {
    if x_new.len() != data.p() {
        return Err(OptimError::InvalidInput("test point has wrong dimension").into());
    }
    if x_new.iter().any(|v| !v.is_finite()) {
        return Err(OptimError::InvalidInput("non-finite test point").into());
    }
    let epsilon = config.epsilon;
    let epsilon0 = config.epsilon0();
    if !(epsilon0 > 0.0) {
        return Err(HomotopyError::InvalidBudget { epsilon, epsilon0 });
    }
    check_budget(epsilon, epsilon0)?;
    if !(config.step_scale > 0.0 && config.step_scale.is_finite()) {
        return Err(OptimError::InvalidInput("step scale must be positive").into());
    }
    let (ymin, ymax) = match config.range {
        Some(r) => r,
        None => {
            let y = data.sorted_labels();
            (y[0], y[y.len() - 1])
        }
    };
    if !(ymin <= ymax && ymin.is_finite() && ymax.is_finite()) {
        return Err(HomotopyError::InvalidRange { lo: ymin, hi: ymax });
    }

    let rule = StepRule::for_regularity(&model.loss.regularity(), epsilon, epsilon0)?;
    let solver = Solver::new(SolverConfig {
        tolerance: epsilon0,
        max_iterations: config.max_iterations,
        gap_check_period: config.gap_check_period,
        warm_start: None,
    })?;
    let mut builder = Builder {
        data,
        x_new,
        model,
        config,
        epsilon0,
        solver,
    };

    let base = Problem::new(data, model);
    let init = builder
        .solver
        .solve(&base, None)
        .map_err(HomotopyError::Optim)?;
    let z0 = dot(x_new, &init.pair.beta);

    let (points, step) = match rule {
        StepRule::Constant { step } => {
            let s = step * config.step_scale;
            if !(s > 0.0) {
                return Err(HomotopyError::StepUnderflow { z: z0 });
            }
            let slots = constant_layout(z0, s, ymin, ymax, config.mode, config.max_points)?;
            (march(&mut builder, &slots, z0, &init.pair.beta)?, s)
        }
        StepRule::Adaptive { gamma, budget } => {
            let LossKind::Linex { .. } = model.loss else {
                return Err(HomotopyError::UnsupportedLoss);
            };
            adaptive_march(&mut builder, gamma, budget, z0, ymin, ymax, &init.pair.beta)?
        }
    };

    Ok(HomotopyPath {
        points,
        range: (ymin, ymax),
        epsilon,
        epsilon0,
        step,
        rule,
        mode: config.mode,
        model,
        x_new: x_new.to_vec(),
        initial_prediction: z0,
    })
}

/// Grid for a constant step, anchored at `z0`. Points outside the range are
/// kept when their segment reaches into it.
fn constant_layout(
    z0: f64,
    s: f64,
    ymin: f64,
    ymax: f64,
    mode: CoverageMode,
    max_points: usize,
) -> Result<Vec<Slot>, HomotopyError> {
    // Point j sits at z0 + spacing·j; its segment ends `above` past it.
    let (spacing, above) = match mode {
        CoverageMode::Halving => (2.0 * s, s),
        CoverageMode::OneSided => (s, s),
    };
    let j_lo = libm::ceil((ymin - z0 - above) / spacing);
    let j_hi = libm::ceil((ymax - z0 - above) / spacing).max(j_lo);
    let count = j_hi - j_lo + 1.0;
    if !(count <= max_points as f64) {
        return Err(HomotopyError::TooManyPoints { limit: max_points });
    }
    let (j_lo, j_hi) = (j_lo as i64, j_hi as i64);
    // Upper boundary of point j; the lower boundary of j + 1 is the same
    // float.
    let upper = |j: i64| z0 + (spacing * j as f64 + above);
    let mut slots = Vec::with_capacity(count as usize);
    for j in j_lo..=j_hi {
        let z = z0 + spacing * j as f64;
        let lo = if j == j_lo { ymin } else { upper(j - 1).max(ymin) };
        let hi = if j == j_hi { ymax } else { upper(j).min(ymax) };
        slots.push(Slot { z, lo, hi });
    }
    Ok(slots)
}

/// Solves the slots outward from the one nearest `z0`: first downward, then
/// upward. Each solve is warm-started from the secant extrapolation of the
/// two previous solutions in the marching direction, since the solution
/// moves almost linearly in the label between close grid points.
fn march(builder: &mut Builder<'_>, slots: &[Slot], z0: f64, beta0: &[f64]) -> Result<Vec<GridPoint>, HomotopyError> {
    let start = slots
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1.z - z0).abs().total_cmp(&(b.1.z - z0).abs()))
        .map(|(i, _)| i)
        .expect("layout is nonempty");
    let mut points: Vec<Option<GridPoint>> = alloc::vec![None; slots.len()];
    points[start] = Some(builder.solve_at(slots[start], Some(beta0))?);
    let down: Vec<usize> = (0..start).rev().collect();
    let up: Vec<usize> = (start + 1..slots.len()).collect();
    let mut warm = Vec::new();
    for order in [down, up] {
        let mut prev: Option<usize> = None;
        let mut last = start;
        for k in order {
            let b1 = &points[last].as_ref().expect("solved").pair.beta;
            warm.clone_from(b1);
            if let Some(p) = prev {
                let b0 = &points[p].as_ref().expect("solved").pair.beta;
                let ratio = (slots[k].z - slots[last].z) / (slots[last].z - slots[p].z);
                for ((w, a), b) in warm.iter_mut().zip(b1).zip(b0) {
                    *w = a + ratio * (a - b);
                }
            }
            points[k] = Some(builder.solve_at(slots[k], Some(&warm))?);
            prev = Some(last);
            last = k;
        }
    }
    Ok(points.into_iter().map(|p| p.expect("every slot solved")).collect())
}

/// Sequential grid for the linex loss. The first point sits at `z0`
/// (clamped into the range) and covers both sides; later points sit on the
/// boundary reached so far and cover one step in the marching direction.
fn adaptive_march(
    builder: &mut Builder<'_>,
    gamma: f64,
    budget: f64,
    z0: f64,
    ymin: f64,
    ymax: f64,
    beta0: &[f64],
) -> Result<(Vec<GridPoint>, f64), HomotopyError> {
    let scale = builder.config.step_scale;
    let max_points = builder.config.max_points;
    let s_max = libm::sqrt(2.0 * budget) / gamma.abs();
    let mut min_step = f64::INFINITY;

    // The step depends on the prediction at the solution, so solve first and
    // then fix the segment; certification reruns against the real segment.
    let mut place = |builder: &mut Builder<'_>,
                     z: f64,
                     warm: &[f64],
                     previous: f64,
                     segment: &dyn Fn(f64) -> (f64, f64)|
     -> Result<(GridPoint, f64), HomotopyError> {
        let provisional = builder.solve_at(Slot { z, lo: z, hi: z }, Some(warm))?;
        let s = linex_local_step(gamma, budget, z - provisional.prediction, previous) * scale;
        if !(s > 0.0) || !s.is_finite() {
            return Err(HomotopyError::StepUnderflow { z });
        }
        min_step = min_step.min(s);
        let (lo, hi) = segment(s);
        let mut pt = builder.solve_at(Slot { z, lo, hi }, Some(&provisional.pair.beta))?;
        pt.iterations += provisional.iterations;
        Ok((pt, s))
    };

    let zc = z0.clamp(ymin, ymax);
    let (center, s0) = place(builder, zc, beta0, s_max, &|s| ((zc - s).max(ymin), (zc + s).min(ymax)))?;
    let mut below = Vec::new();
    let mut above = Vec::new();

    let mut boundary = center.lo;
    let mut prev = s0;
    let mut warm = center.pair.beta.clone();
    while boundary > ymin {
        if below.len() + above.len() + 1 >= max_points {
            return Err(HomotopyError::TooManyPoints { limit: max_points });
        }
        let b = boundary;
        let (pt, s) = place(builder, b, &warm, prev, &|s| ((b - s).max(ymin), b))?;
        boundary = pt.lo;
        prev = s;
        warm.clone_from(&pt.pair.beta);
        below.push(pt);
    }

    let mut boundary = center.hi;
    let mut prev = s0;
    let mut warm = center.pair.beta.clone();
    while boundary < ymax {
        if below.len() + above.len() + 1 >= max_points {
            return Err(HomotopyError::TooManyPoints { limit: max_points });
        }
        let b = boundary;
        let (pt, s) = place(builder, b, &warm, prev, &|s| (b, (b + s).min(ymax)))?;
        boundary = pt.hi;
        prev = s;
        warm.clone_from(&pt.pair.beta);
        above.push(pt);
    }

    below.reverse();
    below.push(center);
    below.extend(above);
    Ok((below, min_step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::losses::PowerModulus;

    fn smooth(nu: f64) -> Regularity {
        Regularity {
            class: RegularityClass::Smooth { nu },
            strong_convexity: None,
        }
    }

    #[test]
    fn smooth_step_matches_formula() {
        let s = step_size(&smooth(2.0), 0.02, 0.0).unwrap();
        assert!((s - 0.02f64.sqrt()).abs() < 1e-15);
        assert!((s - 0.141421).abs() < 1e-6);
    }

    #[test]
    fn step_vanishes_with_budget() {
        let s = step_size(&smooth(2.0), 0.02, 0.02 - 1e-14).unwrap();
        assert!(s < 1e-6);
        assert!(matches!(
            step_size(&smooth(2.0), 0.02, 0.02),
            Err(HomotopyError::InvalidBudget { .. })
        ));
    }

    #[test]
    fn lipschitz_step_uses_reduced_budget() {
        let reg = Regularity {
            class: RegularityClass::Lipschitz { nu: 1.0 },
            strong_convexity: None,
        };
        let s = step_size(&reg, 0.1, 0.02).unwrap();
        assert!((s - 0.08).abs() < 1e-15);
    }

    #[test]
    fn uniformly_smooth_step_inverts_modulus() {
        let m = PowerModulus { coef: 2f64.powf(0.5), exponent: 1.5 };
        let reg = Regularity {
            class: RegularityClass::UniformlySmooth(m),
            strong_convexity: None,
        };
        let s = step_size(&reg, 0.1, 0.01).unwrap();
        assert!((m.value(s) - 0.09).abs() < 1e-12);
    }

    #[test]
    fn unsupported_class_is_refused() {
        let reg = Regularity {
            class: RegularityClass::None,
            strong_convexity: None,
        };
        assert_eq!(step_size(&reg, 0.1, 0.0), Err(HomotopyError::UnsupportedLoss));
    }

    #[test]
    fn linex_local_step_covers_its_own_reach() {
        for &(gamma, offset) in &[(1.0, 0.0), (0.5, 2.0), (-2.0, 0.3), (3.0, 1.0)] {
            let budget = 0.009;
            for &prev in &[1e-4, 0.05, 1.0, 10.0] {
                let s = linex_local_step(gamma, budget, offset, prev);
                let nu = linex_curvature(gamma, offset + s);
                assert!(nu * s * s <= 2.0 * budget * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn halving_layout_shares_boundaries_and_covers_range() {
        let slots = constant_layout(0.3, 0.1, -1.0, 1.0, CoverageMode::Halving, 1000).unwrap();
        assert_eq!(slots[0].lo, -1.0);
        assert_eq!(slots.last().unwrap().hi, 1.0);
        for w in slots.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
            assert!(w[1].z > w[0].z);
            assert!(w[1].z - w[0].z <= 0.2 + 1e-12);
        }
        for s in &slots {
            assert!(s.lo >= s.z - 0.1 - 1e-12 && s.hi <= s.z + 0.1 + 1e-12);
        }
        assert!(slots.len() <= (2.0f64 / 0.1).ceil() as usize + 2);
    }

    #[test]
    fn one_sided_layout_covers_range() {
        let slots = constant_layout(0.05, 0.1, -1.0, 1.0, CoverageMode::OneSided, 1000).unwrap();
        assert_eq!(slots[0].lo, -1.0);
        assert_eq!(slots.last().unwrap().hi, 1.0);
        for s in &slots {
            assert!(s.lo >= s.z - 1e-12 && s.hi <= s.z + 0.1 + 1e-12);
        }
        for w in slots.windows(2) {
            assert_eq!(w[0].hi, w[1].lo);
            assert!(w[1].z - w[0].z <= 0.1 + 1e-12);
        }
    }

    #[test]
    fn degenerate_range_has_one_slot() {
        for mode in [CoverageMode::Halving, CoverageMode::OneSided] {
            let slots = constant_layout(0.37, 0.05, 2.0, 2.0, mode, 10).unwrap();
            assert_eq!(slots.len(), 1);
            assert_eq!((slots[0].lo, slots[0].hi), (2.0, 2.0));
        }
    }

    #[test]
    fn oversized_grid_is_refused() {
        assert!(matches!(
            constant_layout(0.0, 1e-9, 0.0, 1.0, CoverageMode::Halving, 1000),
            Err(HomotopyError::TooManyPoints { .. })
        ));
    }
}
