//! Reference sets: the exact ridge conformal set, split conformal, and the
//! evaluation-only oracle interval.

use alloc::vec::Vec;

use super::{check_alpha, quantile, ConformalError, Interval, IntervalUnion};
use crate::linalg::{dot, Cholesky};
use crate::optim::{fit, Dataset, Model, Problem, SolverConfig};

/// Exact full conformal set (absolute residual) for quadratic loss with
/// ridge penalty `λ`, restricted to `range`.
///
/// The augmented ridge solution is affine in the candidate label, so every
/// residual is `|c_i + d_i z|`. Comparing the augmented residual with a
/// training residual changes sign only at the roots of
/// `((c_i − c) + (d_i − d) z)((c_i + c) + (d_i + d) z)`, and membership is
/// constant between consecutive roots.
pub fn exact_ridge_set(
    data: &Dataset,
    x_new: &[f64],
    lambda: f64,
    alpha: f64,
    range: (f64, f64),
) -> Result<IntervalUnion, ConformalError> {
    check_alpha(alpha)?;
    let (lo, hi) = range;
    if !(lo <= hi) {
        return Err(ConformalError::InvalidInput("empty range"));
    }
    if x_new.len() != data.p() {
        return Err(ConformalError::InvalidInput("test point has wrong dimension"));
    }
    let n = data.n();
    let p = data.p();

    let mut gram = data.x().gram();
    for j in 0..p {
        for k in 0..p {
            gram.set(j, k, gram.get(j, k) + x_new[j] * x_new[k]);
        }
        gram.set(j, j, gram.get(j, j) + 0.5 * lambda);
    }
    let chol = Cholesky::factor(&gram)?;
    let b0 = chol.solve(&data.x().tr_mul_vec(data.y()));
    let b1 = chol.solve(x_new);

    // Residual of row i at label z is c_i + d_i z; the augmented one is c + d z.
    let c: Vec<f64> = (0..n).map(|i| data.y()[i] - dot(data.x().row(i), &b0)).collect();
    let d: Vec<f64> = (0..n).map(|i| -dot(data.x().row(i), &b1)).collect();
    let c_new = -dot(x_new, &b0);
    let d_new = 1.0 - dot(x_new, &b1);

    let needed = n + 1 - super::conformal_index(n + 1, alpha)?;
    if needed == 0 {
        return Ok(IntervalUnion::single(Interval::new(lo, hi)));
    }

    let mut cuts = Vec::with_capacity(2 * n + 2);
    for i in 0..n {
        for (num, den) in [(c[i] - c_new, d[i] - d_new), (c[i] + c_new, d[i] + d_new)] {
            if den != 0.0 {
                let root = -num / den;
                if root > lo && root < hi {
                    cuts.push(root);
                }
            }
        }
    }
    if lo.is_finite() {
        cuts.push(lo);
    }
    if hi.is_finite() {
        cuts.push(hi);
    }
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let count = |z: f64, tolerant: bool| {
        let r_new = (c_new + d_new * z).abs();
        (0..n)
            .filter(|&i| {
                let r = (c[i] + d[i] * z).abs();
                let slack = if tolerant { 1e-12 * (1.0 + r.max(r_new)) } else { 0.0 };
                r_new <= r + slack
            })
            .count()
    };

    let mut pieces = Vec::new();
    if cuts.is_empty() {
        if count(0.0f64.clamp(lo, hi), false) >= needed {
            pieces.push(Interval::new(lo, hi));
        }
        return Ok(IntervalUnion::from_intervals(pieces));
    }
    if lo < cuts[0] {
        let probe = cuts[0] - 1.0 - cuts[0].abs();
        if count(probe, false) >= needed {
            pieces.push(Interval::new(lo, cuts[0]));
        }
    }
    for (j, &p) in cuts.iter().enumerate() {
        if count(p, true) >= needed {
            pieces.push(Interval::new(p, p));
        }
        let next = cuts.get(j + 1).copied().unwrap_or(hi);
        if next > p {
            let probe = if next.is_finite() { 0.5 * (p + next) } else { p + 1.0 + p.abs() };
            if count(probe, false) >= needed {
                pieces.push(Interval::new(p, next));
            }
        }
    }
    Ok(IntervalUnion::from_intervals(pieces))
}

/// Split-conformal radius from calibration residuals: the
/// `⌈(m+1)(1−α)⌉`-th smallest of the `m` residuals, or `None` when that
/// index exceeds `m`.
pub fn split_radius(residuals: &[f64], alpha: f64) -> Result<Option<f64>, ConformalError> {
    check_alpha(alpha)?;
    let m = residuals.len();
    let x = (m + 1) as f64 * (1.0 - alpha);
    let k = (libm::ceil(x - 1e-9 * x.max(1.0)) as usize).max(1);
    if k > m {
        return Ok(None);
    }
    Ok(Some(super::kth_smallest(residuals, k)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSet {
    Bounded(Interval),
    /// Too few calibration points for the requested level: the whole line.
    Unbounded,
}

impl SplitSet {
    pub fn contains(&self, z: f64) -> bool {
        match self {
            SplitSet::Bounded(iv) => iv.contains(z),
            SplitSet::Unbounded => true,
        }
    }

    pub fn length(&self) -> f64 {
        match self {
            SplitSet::Bounded(iv) => iv.length(),
            SplitSet::Unbounded => f64::INFINITY,
        }
    }
}

/// Split conformal interval: fit on the first `⌊f·n⌋` rows, calibrate on
/// the rest.
pub fn split_conformal(
    data: &Dataset,
    x_new: &[f64],
    alpha: f64,
    split_fraction: f64,
    model: Model,
    solver: &SolverConfig,
) -> Result<SplitSet, ConformalError> {
    check_alpha(alpha)?;
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(ConformalError::InvalidInput("split fraction must lie in (0, 1)"));
    }
    let n = data.n();
    let n_train = libm::floor(split_fraction * n as f64) as usize;
    if n_train < 2 || n_train >= n {
        return Err(ConformalError::InvalidInput("split leaves a fold too small"));
    }
    let train_idx: Vec<usize> = (0..n_train).collect();
    let train = data.subset(&train_idx)?;
    let beta = fit(&Problem::new(&train, model), solver)?;
    let residuals: Vec<f64> = (n_train..n)
        .map(|i| (data.y()[i] - dot(data.x().row(i), &beta)).abs())
        .collect();
    let mu = dot(x_new, &beta);
    Ok(match split_radius(&residuals, alpha)? {
        Some(r) => SplitSet::Bounded(Interval::new(mu - r, mu + r)),
        None => SplitSet::Unbounded,
    })
}

/// Oracle interval: fit on the data augmented with the true label and take
/// the conformal quantile of all `n+1` absolute residuals around the
/// prediction. Evaluation only, since it needs the true label.
pub fn oracle_set(
    data: &Dataset,
    x_new: &[f64],
    y_true: f64,
    alpha: f64,
    model: Model,
    solver: &SolverConfig,
) -> Result<Interval, ConformalError> {
    check_alpha(alpha)?;
    if x_new.len() != data.p() {
        return Err(ConformalError::InvalidInput("test point has wrong dimension"));
    }
    let problem = Problem::augmented(data, x_new, y_true, model);
    let beta = fit(&problem, solver)?;
    let residuals: Vec<f64> = (0..problem.n_samples())
        .map(|i| (problem.label(i) - dot(problem.row(i), &beta)).abs())
        .collect();
    let q = quantile(&residuals, alpha)?;
    let mu = dot(x_new, &beta);
    Ok(Interval::new(mu - q, mu + q))
}
