//! Conformal prediction sets built from a homotopy path.
//!
//! Membership of a candidate label `z` follows the usual conformal p-value:
//! with scores `R_1, …, R_{n+1}` computed on the data augmented with
//! `(x_{n+1}, z)`, `z` is kept when
//! `#{i ≤ n+1 : R_i ≥ R_{n+1}} > (n+1)α`. Writing
//! `K = ⌈(n+1)(1−α)⌉`, this is `#{i ≤ n : R_i ≥ R_{n+1}} ≥ n+1−K`, so the
//! set is `{z : R_{n+1}(z) ≤ R_(K)}` where `R_(K)` is the `K`-th smallest
//! training score (every label when `K = n+1`).

mod assembly;
mod baselines;
mod interval;

pub use assembly::{assemble_absolute_residual_set, assemble_generic_set, wrap_sets, WrappingSets};
pub use baselines::{exact_ridge_set, oracle_set, split_conformal, split_radius, SplitSet};
pub use interval::{Interval, IntervalUnion};

use alloc::vec::Vec;

use thiserror::Error;

use crate::homotopy::HomotopyError;
use crate::linalg::{dot, LinalgError};
use crate::losses::LossKind;
use crate::optim::{Dataset, OptimError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConformalError {
    #[error("miscoverage level must lie in (0, 1), got {0}")]
    InvalidAlpha(f64),
    #[error("unsupported configuration: {0}")]
    Unsupported(&'static str),
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error(transparent)]
    Homotopy(#[from] HomotopyError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Rule mapping a (label, prediction) pair to a nonnegative score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConformityMeasure {
    /// `|y − u|`.
    #[default]
    AbsoluteResidual,
    /// `|∂ℓ(y, u)/∂u|`, the magnitude of the loss gradient.
    GradientBased,
}

impl ConformityMeasure {
    #[inline]
    pub fn score(&self, loss: LossKind, y: f64, u: f64) -> f64 {
        match self {
            ConformityMeasure::AbsoluteResidual => (y - u).abs(),
            ConformityMeasure::GradientBased => loss.grad(y, u).abs(),
        }
    }

    /// Label offsets `d` with `score(u + d, u) ≤ c`, as a closed interval,
    /// or `None` when no label qualifies.
    pub fn sublevel(&self, loss: LossKind, c: f64) -> Option<(f64, f64)> {
        match self {
            ConformityMeasure::AbsoluteResidual => (c >= 0.0).then_some((-c, c)),
            ConformityMeasure::GradientBased => loss.gradient_sublevel(c),
        }
    }
}

/// Scores of the `n` training points and the augmented point `(x_new, z)`
/// under the model `beta`.
pub fn conformity_scores(
    data: &Dataset,
    x_new: &[f64],
    z: f64,
    beta: &[f64],
    loss: LossKind,
    measure: ConformityMeasure,
) -> Vec<f64> {
    let mut scores: Vec<f64> = (0..data.n())
        .map(|i| measure.score(loss, data.y()[i], dot(data.x().row(i), beta)))
        .collect();
    scores.push(measure.score(loss, z, dot(x_new, beta)));
    scores
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypicalnessReport {
    pub z: f64,
    pub scores: Vec<f64>,
    /// `#{i : R_i ≤ R_{n+1}}`, ties included.
    pub rank: usize,
    /// `1 − rank/(n+1)`.
    pub pi: f64,
    /// `#{i : R_i ≥ R_{n+1}}/(n+1)`, the statistic that decides membership.
    pub p_value: f64,
}

impl TypicalnessReport {
    pub fn is_member(&self, alpha: f64) -> bool {
        self.p_value > alpha
    }
}

/// Rank and typicalness of the last score among all scores.
pub fn typicalness(z: f64, scores: &[f64]) -> TypicalnessReport {
    assert!(scores.len() >= 2, "need at least two scores");
    let last = scores[scores.len() - 1];
    let m = scores.len() as f64;
    let rank = scores.iter().filter(|&&r| r <= last).count();
    let at_least = scores.iter().filter(|&&r| r >= last).count();
    TypicalnessReport {
        z,
        scores: scores.to_vec(),
        rank,
        pi: 1.0 - rank as f64 / m,
        p_value: at_least as f64 / m,
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), ConformalError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(ConformalError::InvalidAlpha(alpha))
    }
}

/// `⌈m(1−α)⌉` clamped to `[1, m]`. A relative slack of `1e-9` absorbs the
/// rounding of `m(1−α)` when it should be an integer.
pub fn conformal_index(m: usize, alpha: f64) -> Result<usize, ConformalError> {
    check_alpha(alpha)?;
    let x = m as f64 * (1.0 - alpha);
    let k = libm::ceil(x - 1e-9 * x.max(1.0)) as usize;
    Ok(k.clamp(1, m))
}

/// The `⌈m(1−α)⌉`-th smallest of the `m` values.
pub fn quantile(values: &[f64], alpha: f64) -> Result<f64, ConformalError> {
    if values.is_empty() {
        return Err(ConformalError::InvalidInput("empty sequence"));
    }
    let k = conformal_index(values.len(), alpha)?;
    Ok(kth_smallest(values, k))
}

/// `k`-th smallest value (1-based).
pub(crate) fn kth_smallest(values: &[f64], k: usize) -> f64 {
    let mut v = values.to_vec();
    let (_, kth, _) = v.select_nth_unstable_by(k - 1, f64::total_cmp);
    *kth
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn strictly_smallest_score_has_rank_one() {
        let r = typicalness(0.0, &[0.5, 0.7, 0.9, 0.1]);
        assert_eq!(r.rank, 1);
        assert!((r.pi - 0.75).abs() < 1e-15);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn equal_scores_take_the_top_rank() {
        let r = typicalness(0.0, &[0.3; 5]);
        assert_eq!(r.rank, 5);
        assert_eq!(r.pi, 0.0);
    }

    #[test]
    fn rank_counts_ties_inclusively() {
        let r = typicalness(0.0, &[0.1, 0.2, 0.3, 0.25]);
        assert_eq!(r.rank, 3);
        assert!((r.pi - 0.25).abs() < 1e-15);
        assert!((r.p_value - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quantile_examples() {
        let seq: Vec<f64> = (1..=10).map(f64::from).collect();
        assert_eq!(quantile(&seq, 0.1).unwrap(), 9.0);
        assert_eq!(quantile(&[5.0, 1.0, 4.0, 2.0, 3.0], 0.5).unwrap(), 3.0);
        for alpha in [0.01, 0.3, 0.99] {
            assert_eq!(quantile(&[2.5; 7], alpha).unwrap(), 2.5);
        }
        assert!(matches!(quantile(&seq, 0.0), Err(ConformalError::InvalidAlpha(_))));
        assert!(matches!(quantile(&seq, 1.0), Err(ConformalError::InvalidAlpha(_))));
    }

    #[test]
    fn index_is_robust_to_rounding() {
        assert_eq!(conformal_index(100, 0.1).unwrap(), 90);
        assert_eq!(conformal_index(10, 0.1).unwrap(), 9);
        assert_eq!(conformal_index(101, 0.1).unwrap(), 91);
        assert_eq!(conformal_index(21, 0.999).unwrap(), 1);
        assert_eq!(conformal_index(5, 0.01).unwrap(), 5);
    }

    #[test]
    fn perfect_fit_scores_vanish() {
        let x = crate::Matrix::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let data = Dataset::new(x, vec![2.0, 4.0, 6.0]).unwrap();
        let s = conformity_scores(&data, &[4.0], 8.0, &[2.0], LossKind::Quadratic, ConformityMeasure::AbsoluteResidual);
        assert_eq!(s, vec![0.0; 4]);
    }

    #[test]
    fn gradient_scores_double_residuals_for_quadratic() {
        let x = crate::Matrix::from_rows(&[vec![1.0, 0.3], vec![-2.0, 1.0], vec![0.5, 0.5]]).unwrap();
        let data = Dataset::new(x, vec![1.0, -1.0, 0.2]).unwrap();
        let beta = [0.4, -0.7];
        let a = conformity_scores(&data, &[0.1, 0.9], 1.7, &beta, LossKind::Quadratic, ConformityMeasure::AbsoluteResidual);
        let g = conformity_scores(&data, &[0.1, 0.9], 1.7, &beta, LossKind::Quadratic, ConformityMeasure::GradientBased);
        for (a, g) in a.iter().zip(&g) {
            assert!((g - 2.0 * a).abs() <= 1e-15 * (1.0 + a));
        }
    }
}
