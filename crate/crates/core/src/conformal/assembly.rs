//! Interval-union assembly of conformal sets along a homotopy path.
//!
//! On the segment certified by grid point `k`, the solution `β_k` is held
//! fixed, so the training scores are constants and only the augmented score
//! `R_{n+1}(z) = ψ(z, x_{n+1}ᵀβ_k)` moves with `z`.

use alloc::vec::Vec;

use super::{conformal_index, kth_smallest, ConformalError, ConformityMeasure, Interval, IntervalUnion};
use crate::homotopy::{GridPoint, HomotopyPath};
use crate::linalg::dot;
use crate::optim::{Dataset, Problem};
use crate::regularizers::RegKind;

fn check_path(path: &HomotopyPath, data: &Dataset) -> Result<(), ConformalError> {
    if path.test_point().len() != data.p() {
        return Err(ConformalError::InvalidInput("path and data dimensions differ"));
    }
    Ok(())
}

fn training_scores(data: &Dataset, point: &GridPoint, path: &HomotopyPath, measure: ConformityMeasure) -> Vec<f64> {
    let loss = path.model().loss;
    (0..data.n())
        .map(|i| measure.score(loss, data.y()[i], dot(data.x().row(i), &point.pair.beta)))
        .collect()
}

/// Conformal set for the absolute residual: on each segment, the band
/// `[μ_k − Q_k, μ_k + Q_k]` where `Q_k` is the `K`-th smallest training
/// residual under `β_k`.
pub fn assemble_absolute_residual_set(
    path: &HomotopyPath,
    data: &Dataset,
    alpha: f64,
) -> Result<IntervalUnion, ConformalError> {
    check_path(path, data)?;
    let n = data.n();
    let k = conformal_index(n + 1, alpha)?;
    let mut pieces = Vec::with_capacity(path.len());
    for point in path.points() {
        let segment = Interval::new(point.lo, point.hi);
        if k == n + 1 {
            pieces.push(segment);
            continue;
        }
        let residuals = training_scores(data, point, path, ConformityMeasure::AbsoluteResidual);
        let q = kth_smallest(&residuals, k);
        let mu = point.prediction;
        if let Some(iv) = Interval::checked(segment.lo.max(mu - q), segment.hi.min(mu + q)) {
            pieces.push(iv);
        }
    }
    Ok(IntervalUnion::from_intervals(pieces))
}

/// Conformal set for any supported measure, by sweeping the breakpoints
/// where the augmented score crosses each training score.
pub fn assemble_generic_set(
    path: &HomotopyPath,
    data: &Dataset,
    alpha: f64,
    measure: ConformityMeasure,
) -> Result<IntervalUnion, ConformalError> {
    shifted_assembly(path, data, alpha, measure, |_| Ok(0.0))
}

/// Assembles `{z : #{i ≤ n : R_{n+1}(z) ≤ R_i + shift_k} ≥ n+1−K}` per
/// segment, where `shift_k` comes from `shift(k)`.
fn shifted_assembly(
    path: &HomotopyPath,
    data: &Dataset,
    alpha: f64,
    measure: ConformityMeasure,
    mut shift: impl FnMut(usize) -> Result<f64, ConformalError>,
) -> Result<IntervalUnion, ConformalError> {
    check_path(path, data)?;
    let n = data.n();
    let needed = n + 1 - conformal_index(n + 1, alpha)?;
    let loss = path.model().loss;
    let mut pieces = Vec::new();
    let mut windows = Vec::with_capacity(n);
    for (k, point) in path.points().iter().enumerate() {
        let delta = shift(k)?;
        let mu = point.prediction;
        windows.clear();
        if needed > 0 {
            for r in training_scores(data, point, path, measure) {
                if let Some((a, b)) = measure.sublevel(loss, r + delta) {
                    windows.push((mu + a, mu + b));
                }
            }
        }
        sweep(point.lo, point.hi, &windows, needed, &mut pieces);
    }
    Ok(IntervalUnion::from_intervals(pieces))
}

/// Appends to `out` the closed pieces of `[lo, hi]` covered by at least
/// `needed` of the closed `windows`.
fn sweep(lo: f64, hi: f64, windows: &[(f64, f64)], needed: usize, out: &mut Vec<Interval>) {
    if needed == 0 {
        out.push(Interval::new(lo, hi));
        return;
    }
    if windows.len() < needed {
        return;
    }
    let mut starts: Vec<f64> = windows.iter().map(|w| w.0).collect();
    let mut ends: Vec<f64> = windows.iter().map(|w| w.1).collect();
    starts.sort_by(f64::total_cmp);
    ends.sort_by(f64::total_cmp);

    let mut cuts: Vec<f64> = Vec::with_capacity(2 * windows.len() + 2);
    cuts.push(lo);
    cuts.extend(starts.iter().chain(&ends).copied().filter(|&p| p > lo && p < hi));
    cuts.push(hi);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let started = |p: f64| starts.partition_point(|&a| a <= p);
    // Windows containing the point p.
    let at = |p: f64| started(p) - ends.partition_point(|&b| b < p);
    // Windows containing the open piece just right of p.
    let after = |p: f64| started(p) - ends.partition_point(|&b| b <= p);

    for (j, &p) in cuts.iter().enumerate() {
        if at(p) >= needed {
            out.push(Interval::new(p, p));
        }
        if let Some(&next) = cuts.get(j + 1) {
            if after(p) >= needed {
                out.push(Interval::new(p, next));
            }
        }
    }
}

/// Inner and outer approximations of the exact conformal set for the
/// gradient-based measure.
#[derive(Debug, Clone, PartialEq)]
pub struct WrappingSets {
    pub lower: IntervalUnion,
    pub upper: IntervalUnion,
    /// The unshifted set assembled from the same path.
    pub base: IntervalUnion,
    /// Score shift used on each segment.
    pub shifts: Vec<f64>,
}

/// Sets nested around the exact conformal set of the gradient-based
/// measure.
///
/// For ridge, the gradient scores are `λ|θ_i|` with `θ` the dual vector
/// built from the loss gradient. If that dual vector has gap `g`, it lies
/// within `√(2νg)/λ` of the dual optimum, so each approximate score is
/// within `√(2νg)` of its exact value. Shifting the training scores down
/// (up) by twice that amount only keeps labels that are certainly in (may
/// be in) the exact set. On each segment `g` is the larger of `ε` and the
/// recomputed gap at both segment ends; the gap is convex along the
/// segment, so the ends bound it.
pub fn wrap_sets(path: &HomotopyPath, data: &Dataset, alpha: f64) -> Result<WrappingSets, ConformalError> {
    check_path(path, data)?;
    let model = *path.model();
    if model.reg != RegKind::Ridge {
        return Err(ConformalError::Unsupported(
            "wrapping sets need a strongly convex regularizer",
        ));
    }
    let nu = model
        .loss
        .regularity()
        .smoothness()
        .ok_or(ConformalError::Unsupported("wrapping sets need a globally smooth loss"))?;
    let epsilon = path.epsilon();
    let x_new = path.test_point();

    let mut shifts = Vec::with_capacity(path.len());
    for point in path.points() {
        let mut gap = epsilon;
        for end in [point.lo, point.hi] {
            let problem = Problem::augmented(data, x_new, end, model);
            gap = gap.max(problem.certify(&point.pair.beta)?.gap);
        }
        shifts.push(2.0 * libm::sqrt(2.0 * nu * gap));
    }

    let measure = ConformityMeasure::GradientBased;
    let lower = shifted_assembly(path, data, alpha, measure, |k| Ok(-shifts[k]))?;
    let upper = shifted_assembly(path, data, alpha, measure, |k| Ok(shifts[k]))?;
    let base = assemble_generic_set(path, data, alpha, measure)?;
    Ok(WrappingSets {
        lower,
        upper,
        base,
        shifts,
    })
}
