//! L1/L2-regularized logistic regression.
//!
//! Full-batch proximal gradient descent with backtracking line search:
//! the smooth part is the weighted mean log-loss (plus the ridge term for
//! L2); the L1 penalty enters through soft-thresholding. Features are
//! standardized internally with training-set statistics because the
//! regularization strength is scale-sensitive; the intercept is never
//! penalized.

use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Penalty {
    L1,
    L2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticParams {
    pub penalty: Penalty,
    /// Regularization strength; 0 disables the penalty.
    pub strength: f64,
    pub max_iter: usize,
    /// Stop when the gradient norm (or proximal residual) drops below this.
    pub tol: f64,
}

impl LogisticParams {
    pub fn new(penalty: Penalty, strength: f64) -> Self {
        LogisticParams {
            penalty,
            strength,
            max_iter: 10_000,
            tol: 1e-6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strength >= 0.0) || !self.strength.is_finite() {
            return Err(Error::Invalid {
                what: "strength",
                detail: "must be finite and nonnegative".into(),
            });
        }
        if self.max_iter == 0 {
            return Err(Error::Invalid {
                what: "max_iter",
                detail: "must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Coefficients in standardized feature space.
    weights: Vec<f64>,
    intercept: f64,
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl LogisticModel {
    pub fn n_features(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut z = self.intercept;
        for j in 0..self.weights.len() {
            z += self.weights[j] * (row[j] - self.means[j]) / self.stds[j];
        }
        sigmoid(z)
    }
}

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + libm::log(1.0 + libm::exp(-libm::fabs(z)))
}

/// Weighted mean log-loss and its gradient, without any penalty.
///
/// Sample weights should be pre-normalized to mean 1 so the penalty scale
/// is comparable across datasets.
fn smooth_loss_grad(
    weights: &[f64],
    intercept: f64,
    x: &Matrix,
    y: &[bool],
    sample_w: &[f64],
) -> (f64, Vec<f64>, f64) {
    let n = x.n_rows();
    let d = x.n_cols();
    let mut loss = 0.0;
    let mut grad = vec![0.0; d];
    let mut grad_b = 0.0;
    for i in 0..n {
        let row = x.row(i);
        let mut z = intercept;
        for j in 0..d {
            z += weights[j] * row[j];
        }
        let yi = f64::from(u8::from(y[i]));
        let s = sample_w[i];
        loss += s * (softplus(z) - yi * z);
        let residual = s * (sigmoid(z) - yi);
        for j in 0..d {
            grad[j] += residual * row[j];
        }
        grad_b += residual;
    }
    let inv = 1.0 / n as f64;
    loss *= inv;
    for g in grad.iter_mut() {
        *g *= inv;
    }
    grad_b *= inv;
    (loss, grad, grad_b)
}

/// Penalized loss and gradient in the optimizer's parameter space.
///
/// For L1 the gradient uses `strength * sign(w_j)` with sign(0) = 0, so it
/// is exact wherever no coefficient sits at zero. Exposed for gradient
/// verification against finite differences.
pub fn penalized_loss_grad(
    weights: &[f64],
    intercept: f64,
    x: &Matrix,
    y: &[bool],
    sample_w: &[f64],
    penalty: Penalty,
    strength: f64,
) -> (f64, Vec<f64>, f64) {
    let (mut loss, mut grad, grad_b) = smooth_loss_grad(weights, intercept, x, y, sample_w);
    match penalty {
        Penalty::L2 => {
            for (g, &w) in grad.iter_mut().zip(weights) {
                *g += strength * w;
            }
            loss += 0.5 * strength * weights.iter().map(|w| w * w).sum::<f64>();
        }
        Penalty::L1 => {
            for (g, &w) in grad.iter_mut().zip(weights) {
                *g += strength * sign(w);
            }
            loss += strength * weights.iter().map(|w| libm::fabs(*w)).sum::<f64>();
        }
    }
    (loss, grad, grad_b)
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub(crate) fn fit_logistic(
    x: &Matrix,
    y: &[bool],
    sample_w: &[f64],
    params: &LogisticParams,
) -> Result<LogisticModel> {
    params.validate()?;
    let n = x.n_rows();
    let d = x.n_cols();

    let (means, stds) = x.column_stats();
    let mut z = Matrix::zeros(n, d);
    for i in 0..n {
        let src = x.row(i);
        let dst = z.row_mut(i);
        for j in 0..d {
            dst[j] = (src[j] - means[j]) / stds[j];
        }
    }
    let mean_w: f64 = sample_w.iter().sum::<f64>() / n as f64;
    let norm_w: Vec<f64> = sample_w.iter().map(|w| w / mean_w).collect();

    let mut weights = vec![0.0; d];
    let mut intercept = 0.0;
    let lambda = params.strength;
    let l2 = matches!(params.penalty, Penalty::L2);

    // smooth objective: mean log-loss plus the ridge term when L2
    let objective = |w: &[f64], b: f64| -> (f64, Vec<f64>, f64) {
        let (mut f, mut g, gb) = smooth_loss_grad(w, b, &z, y, &norm_w);
        if l2 {
            f += 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>();
            for (gj, &wj) in g.iter_mut().zip(w.iter()) {
                *gj += lambda * wj;
            }
        }
        (f, g, gb)
    };

    let mut step = 1.0;
    let mut next = vec![0.0; d];
    for _ in 0..params.max_iter {
        let (f, g, gb) = objective(&weights, intercept);

        // backtracking proximal step
        let mut eta = step;
        let (new_w, new_b);
        loop {
            for j in 0..d {
                let v = weights[j] - eta * g[j];
                next[j] = if l2 { v } else { soft_threshold(v, eta * lambda) };
            }
            let b = intercept - eta * gb;
            let (f_new, _, _) = objective(&next, b);
            // sufficient decrease for the smooth part around the step
            let mut quad = 0.0;
            let mut lin = 0.0;
            for j in 0..d {
                let dj = next[j] - weights[j];
                quad += dj * dj;
                lin += g[j] * dj;
            }
            let db = b - intercept;
            quad += db * db;
            lin += gb * db;
            if f_new <= f + lin + quad / (2.0 * eta) + 1e-15 || eta < 1e-12 {
                new_w = next.clone();
                new_b = b;
                step = eta * 1.5;
                break;
            }
            eta *= 0.5;
        }

        // convergence: gradient norm for smooth penalties, proximal
        // residual for L1
        let mut residual = 0.0;
        for j in 0..d {
            let r = (weights[j] - new_w[j]) / eta;
            residual += r * r;
        }
        let rb = (intercept - new_b) / eta;
        residual += rb * rb;
        weights.copy_from_slice(&new_w);
        intercept = new_b;
        if libm::sqrt(residual) <= params.tol {
            break;
        }
    }

    Ok(LogisticModel {
        weights,
        intercept,
        means,
        stds,
    })
}
