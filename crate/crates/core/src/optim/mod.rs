//! Primal and dual objectives of regularized ERM, dual feasible vectors,
//! duality-gap certificates, and the gap-variation identity used by the
//! homotopy.
//!
//! The primal on (possibly augmented) data is
//! `P_z(β) = Σᵢ ℓ(yᵢ, xᵢᵀβ) + ℓ(z, x_{n+1}ᵀβ) + λΩ(β)` and its dual
//! `D_z(θ) = −Σᵢ ℓ*(yᵢ, −λθᵢ) − ℓ*(z, −λθ_{n+1}) − λΩ*(Xᵀθ)`.

mod solver;

pub use solver::{solve_to_tol, Solution, Solver, SolverConfig};

use alloc::vec::Vec;

use thiserror::Error;

use crate::ext::ExtendedReal;
use crate::linalg::{axpy, dot, exact_sum, Cholesky, ExactSum, LinalgError, Matrix};
use crate::losses::{LossError, LossKind};
use crate::regularizers::RegKind;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("dual vector is infeasible")]
    InfeasibleDual,
    #[error("solver stopped after {iterations} iterations with gap {best_gap:e} above tolerance {tolerance:e}")]
    NotConverged {
        best_gap: f64,
        tolerance: f64,
        iterations: usize,
    },
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Training data: row-wise features and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    x: Matrix,
    y: Vec<f64>,
}

impl Dataset {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self, OptimError> {
        if x.rows() != y.len() {
            return Err(OptimError::InvalidInput("feature rows and labels differ in length"));
        }
        if x.rows() < 2 {
            return Err(OptimError::InvalidInput("need at least two samples"));
        }
        if x.cols() < 1 {
            return Err(OptimError::InvalidInput("need at least one feature"));
        }
        if x.as_slice().iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(OptimError::InvalidInput("non-finite feature or label"));
        }
        Ok(Self { x, y })
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    pub fn x(&self) -> &Matrix {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// The rows listed in `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Result<Dataset, OptimError> {
        let y = idx.iter().map(|&i| self.y[i]).collect();
        Dataset::new(self.x.select_rows(idx), y)
    }

    /// Splits off row `i` as a test point: returns the remaining data, the
    /// held-out features and the held-out label.
    pub fn hold_out(&self, i: usize) -> Result<(Dataset, Vec<f64>, f64), OptimError> {
        let keep: Vec<usize> = (0..self.n()).filter(|&j| j != i).collect();
        Ok((self.subset(&keep)?, self.x.row(i).to_vec(), self.y[i]))
    }

    /// Copy with a constant feature of ones appended, acting as a
    /// (penalized) intercept.
    pub fn with_intercept(&self) -> Dataset {
        let p = self.p();
        let mut data = Vec::with_capacity(self.n() * (p + 1));
        for i in 0..self.n() {
            data.extend_from_slice(self.x.row(i));
            data.push(1.0);
        }
        Dataset {
            x: Matrix::from_row_major(self.n(), p + 1, data).expect("shape is consistent"),
            y: self.y.clone(),
        }
    }

    /// Labels sorted ascending.
    pub fn sorted_labels(&self) -> Vec<f64> {
        let mut y = self.y.clone();
        y.sort_by(f64::total_cmp);
        y
    }
}

/// Loss, regularizer and regularization strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub loss: LossKind,
    pub reg: RegKind,
    pub lambda: f64,
}

impl Model {
    pub fn new(loss: LossKind, reg: RegKind, lambda: f64) -> Result<Self, OptimError> {
        loss.validate()?;
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(OptimError::InvalidInput("lambda must be positive"));
        }
        Ok(Self { loss, reg, lambda })
    }

    /// Smallest `λ` for which `β = 0` solves the problem on `data`, for the
    /// l1 penalty: `‖Xᵀ∇ℓ(y, 0)‖∞`. The same quantity anchors the
    /// regularization grid for ridge.
    pub fn lambda_max(loss: LossKind, data: &Dataset) -> f64 {
        let g: Vec<f64> = data.y().iter().map(|&y| loss.grad(y, 0.0)).collect();
        crate::linalg::norm_inf(&data.x().tr_mul_vec(&g))
    }
}

/// A primal/dual pair certified at candidate label `z` (`None` for the
/// non-augmented problem).
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalDualPair {
    pub beta: Vec<f64>,
    pub theta: Vec<f64>,
    pub gap: f64,
    pub z: Option<f64>,
}

/// Training data, optionally augmented with `(x_{n+1}, z)`, together with a
/// model.
#[derive(Debug, Clone, Copy)]
pub struct Problem<'a> {
    data: &'a Dataset,
    extra: Option<(&'a [f64], f64)>,
    model: Model,
}

impl<'a> Problem<'a> {
    pub fn new(data: &'a Dataset, model: Model) -> Self {
        Self {
            data,
            extra: None,
            model,
        }
    }

    pub fn augmented(data: &'a Dataset, x_new: &'a [f64], z: f64, model: Model) -> Self {
        assert_eq!(x_new.len(), data.p(), "test point has wrong dimension");
        Self {
            data,
            extra: Some((x_new, z)),
            model,
        }
    }

    /// Same data and test point with a different candidate label.
    pub fn with_label(&self, z: f64) -> Self {
        let (x_new, _) = self.extra.expect("problem is not augmented");
        Self {
            extra: Some((x_new, z)),
            ..*self
        }
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn candidate(&self) -> Option<f64> {
        self.extra.map(|(_, z)| z)
    }

    pub fn test_point(&self) -> Option<&'a [f64]> {
        self.extra.map(|(x, _)| x)
    }

    pub fn n_samples(&self) -> usize {
        self.data.n() + usize::from(self.extra.is_some())
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        if i < self.data.n() {
            self.data.x.row(i)
        } else {
            self.extra.expect("row index out of range").0
        }
    }

    #[inline]
    pub fn label(&self, i: usize) -> f64 {
        if i < self.data.n() {
            self.data.y[i]
        } else {
            self.extra.expect("row index out of range").1
        }
    }

    /// `Xβ` over all (augmented) rows.
    pub fn predictions(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n_samples()).map(|i| dot(self.row(i), beta)).collect()
    }

    /// `Xᵀv` over all (augmented) rows, each coordinate summed exactly so
    /// the result is independent of the sample order.
    pub fn tr_mul(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.n_samples());
        let mut acc = alloc::vec![ExactSum::new(); self.p()];
        for (i, &vi) in v.iter().enumerate() {
            for (a, &x) in acc.iter_mut().zip(self.row(i)) {
                a.add(vi * x);
            }
        }
        acc.iter().map(ExactSum::value).collect()
    }

    /// Plain `Xᵀv` together with a rigorous bound on the distance of each
    /// coordinate from its correctly rounded value (the one [`Problem::tr_mul`]
    /// returns).
    fn tr_mul_bounded(&self, v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.p();
        let mut sum = alloc::vec![0.0; p];
        let mut abs = alloc::vec![0.0; p];
        for (i, &t) in v.iter().enumerate() {
            for ((s, a), &x) in sum.iter_mut().zip(abs.iter_mut()).zip(self.row(i)) {
                let prod = t * x;
                *s += prod;
                *a += prod.abs();
            }
        }
        // Recursive summation of m terms errs by at most (m−1)u·Σ|terms|;
        // the abs sum is itself rounded, and the final rounding adds an ulp,
        // hence the doubled, padded factor.
        let factor = 2.0 * (v.len() as f64 + 2.0) * f64::EPSILON;
        abs.iter_mut().for_each(|a| *a *= factor);
        (sum, abs)
    }

    fn tr_mul_coordinate(&self, v: &[f64], j: usize) -> f64 {
        let mut acc = ExactSum::new();
        for (i, &t) in v.iter().enumerate() {
            acc.add(t * self.row(i)[j]);
        }
        acc.value()
    }

    /// `max(floor, ‖Xᵀv‖∞)` with `Xᵀv` as [`Problem::tr_mul`] computes it,
    /// summing exactly only the coordinates that might exceed `floor`.
    fn dual_norm_at_least(&self, v: &[f64], floor: f64) -> f64 {
        let (sum, bound) = self.tr_mul_bounded(v);
        let mut out = floor;
        for j in 0..self.p() {
            if sum[j].abs() + bound[j] > floor {
                out = out.max(self.tr_mul_coordinate(v, j).abs());
            }
        }
        out
    }

    /// Decides `‖Xᵀθ‖∞ ≤ 1` exactly as [`Problem::tr_mul`] would.
    pub fn unit_dual_norm(&self, theta: &[f64]) -> bool {
        self.dual_norm_at_least(theta, 1.0) <= 1.0
    }

    /// `Xᵀv` with plain floating-point accumulation, for solver inner loops.
    pub(crate) fn tr_mul_fast(&self, v: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.p()];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(vi, self.row(i), &mut out);
            }
        }
        out
    }

    /// `Σᵢ ℓ(Yᵢ, predᵢ)` accumulated in order (fast, not order-exact).
    pub fn loss_sum(&self, pred: &[f64]) -> f64 {
        let loss = self.model.loss;
        pred.iter()
            .enumerate()
            .map(|(i, &u)| loss.value(self.label(i), u))
            .sum()
    }

    /// `∇ℓ(Y, pred)`, coordinate-wise derivative in the prediction.
    pub fn loss_gradient(&self, pred: &[f64]) -> Vec<f64> {
        let loss = self.model.loss;
        pred.iter()
            .enumerate()
            .map(|(i, &u)| loss.grad(self.label(i), u))
            .collect()
    }

    pub fn primal(&self, beta: &[f64]) -> f64 {
        let loss = self.model.loss;
        let data_fit = exact_sum(
            (0..self.n_samples()).map(|i| loss.value(self.label(i), dot(self.row(i), beta))),
        );
        data_fit + self.model.lambda * self.model.reg.eval(beta)
    }

    pub fn dual(&self, theta: &[f64]) -> ExtendedReal {
        assert_eq!(theta.len(), self.n_samples(), "dual vector has wrong length");
        let Model { loss, reg, lambda } = self.model;
        let mut terms = Vec::with_capacity(theta.len());
        for (i, &t) in theta.iter().enumerate() {
            match loss.conjugate(self.label(i), -lambda * t) {
                ExtendedReal::Finite(c) => terms.push(c),
                _ => return ExtendedReal::NegInfinity,
            }
        }
        let reg_conj = match reg {
            // The indicator of the unit dual ball only needs the membership test.
            RegKind::L1 if self.unit_dual_norm(theta) => ExtendedReal::ZERO,
            RegKind::L1 => ExtendedReal::PosInfinity,
            RegKind::Ridge => reg.conjugate(&self.tr_mul(theta)),
        };
        ExtendedReal::Finite(exact_sum(terms)).add(reg_conj.scale(lambda)).neg()
    }

    /// Rescales the negative loss gradient into `dom D`:
    /// `θ = −g / max{λ, σ°(Xᵀg)}` for a norm penalty, `θ = −g/λ` for ridge.
    pub fn dual_from_gradient(&self, grad: &[f64]) -> Vec<f64> {
        let lambda = self.model.lambda;
        match self.model.reg {
            RegKind::Ridge => grad.iter().map(|g| -g / lambda).collect(),
            RegKind::L1 => {
                let scale = self.dual_norm_at_least(grad, lambda);
                let mut theta: Vec<f64> = grad.iter().map(|g| -g / scale).collect();
                // ‖Xᵀθ‖∞ = σ/scale ≤ 1 in exact arithmetic. Rounding in the
                // products can push it just above 1; shrink until it is not.
                let mut margin = 4.0 * f64::EPSILON;
                while !self.unit_dual_norm(&theta) {
                    let over = crate::linalg::norm_inf(&self.tr_mul(&theta));
                    let shrink = (1.0 - margin) / over;
                    theta.iter_mut().for_each(|t| *t *= shrink);
                    margin *= 4.0;
                }
                theta
            }
        }
    }

    pub fn dual_feasible(&self, beta: &[f64]) -> Vec<f64> {
        let pred = self.predictions(beta);
        self.dual_from_gradient(&self.loss_gradient(&pred))
    }

    /// `P(β) − D(θ)`, clamped at zero against rounding.
    pub fn duality_gap(&self, beta: &[f64], theta: &[f64]) -> Result<f64, OptimError> {
        let d = self.dual(theta).finite().ok_or(OptimError::InfeasibleDual)?;
        Ok((self.primal(beta) - d).max(0.0))
    }

    /// Builds the gradient-based dual certificate for `beta` from scratch.
    pub fn certify(&self, beta: &[f64]) -> Result<PrimalDualPair, OptimError> {
        let theta = self.dual_feasible(beta);
        let gap = self.duality_gap(beta, &theta)?;
        Ok(PrimalDualPair {
            beta: beta.to_vec(),
            theta,
            gap,
            z: self.candidate(),
        })
    }
}

/// Exact minimizer for quadratic loss with ridge:
/// `(XᵀX + (λ/2) I) β = XᵀY` over the (augmented) rows.
pub fn ridge_closed_form(problem: &Problem<'_>) -> Result<Vec<f64>, OptimError> {
    let model = problem.model();
    if model.loss != LossKind::Quadratic || model.reg != RegKind::Ridge {
        return Err(OptimError::InvalidInput("closed form needs quadratic loss with ridge"));
    }
    let p = problem.p();
    let mut a = Matrix::zeros(p, p);
    let mut rhs = alloc::vec![0.0; p];
    for i in 0..problem.n_samples() {
        let row = problem.row(i);
        for (j, &xj) in row.iter().enumerate() {
            for (k, &xk) in row.iter().enumerate().take(j + 1) {
                a.set(j, k, a.get(j, k) + xj * xk);
            }
        }
        axpy(problem.label(i), row, &mut rhs);
    }
    for j in 0..p {
        a.set(j, j, a.get(j, j) + 0.5 * model.lambda);
        for k in 0..j {
            a.set(k, j, a.get(j, k));
        }
    }
    Ok(Cholesky::factor(&a)?.solve(&rhs))
}

/// Fitted coefficients: the closed form for quadratic loss with ridge, the
/// iterative solver otherwise.
pub fn fit(problem: &Problem<'_>, config: &SolverConfig) -> Result<Vec<f64>, OptimError> {
    let model = problem.model();
    if model.loss == LossKind::Quadratic && model.reg == RegKind::Ridge {
        ridge_closed_form(problem)
    } else {
        Ok(solve_to_tol(problem, config)?.pair.beta)
    }
}

/// Variation `Gap_z(β, θ) − Gap_{z0}(β, θ)` of the duality gap when the
/// augmented label moves from `z0` to `z`, given `prediction = x_{n+1}ᵀβ`
/// and the last dual coordinate `theta_last = θ_{n+1}`. Only the loss on the
/// augmented point and its conjugate enter.
pub fn gap_variation(
    loss: LossKind,
    lambda: f64,
    prediction: f64,
    theta_last: f64,
    z: f64,
    z0: f64,
) -> Result<f64, OptimError> {
    let v = -lambda * theta_last;
    let cz = loss.conjugate(z, v).finite().ok_or(OptimError::InfeasibleDual)?;
    let cz0 = loss.conjugate(z0, v).finite().ok_or(OptimError::InfeasibleDual)?;
    let lz = loss.eval(z, prediction)?;
    let lz0 = loss.eval(z0, prediction)?;
    Ok((lz - lz0) + (cz - cz0))
}

/// Extends a dual vector of the non-augmented problem with a zero last
/// coordinate, which keeps it feasible for every candidate label.
pub fn extend_dual(theta: &[f64]) -> Vec<f64> {
    let mut t = Vec::with_capacity(theta.len() + 1);
    t.extend_from_slice(theta);
    t.push(0.0);
    t
}

/// Upper bound `√(2ν·gap)/λ` on the distance between a dual feasible vector
/// and the dual optimum, for a `ν`-smooth loss.
pub fn dual_distance_bound(gap: f64, nu: f64, lambda: f64) -> f64 {
    libm::sqrt(2.0 * nu * gap.max(0.0)) / lambda
}

#[cfg(test)]
mod tests;
