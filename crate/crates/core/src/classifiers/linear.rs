//! Logistic regression and linear SVM sharing one parameter layout.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, ClassifierError};
use crate::features::FeatureMatrix;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Logreg,
    LinearSvm,
}

/// Weights and bias of a linear decision function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub trained_kind: LinearKind,
}

impl LinearParams {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

/// Full-batch gradient descent configuration for logistic regression.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogregConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2_lambda: f64,
    /// Kept for interface uniformity; full-batch descent is seed-free.
    pub seed: u64,
}

impl Default for LogregConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2_lambda: 1e-4,
            seed: 42,
        }
    }
}

/// Subgradient descent configuration for the linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    /// Initial step; the schedule is eta_t = eta0 / (1 + t) with t the
    /// epoch index.
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epochs: 200,
            learning_rate: 0.5,
            seed: 42,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Mean cross-entropy plus (lambda/2) * ||w||^2.
pub fn logreg_loss(x: &FeatureMatrix, y: &[u8], w: &[f64], b: f64, l2_lambda: f64) -> f64 {
    let n = x.n_rows() as f64;
    let mut loss = 0.0;
    for (row, &label) in x.rows().zip(y) {
        let p = logistic(dot(w, row) + b).clamp(1e-12, 1.0 - 1e-12);
        loss -= if label == 1 { p.ln() } else { (1.0 - p).ln() };
    }
    loss / n + 0.5 * l2_lambda * dot(w, w)
}

/// Analytic gradient of [`logreg_loss`] with respect to (w, b).
pub fn logreg_gradient(
    x: &FeatureMatrix,
    y: &[u8],
    w: &[f64],
    b: f64,
    l2_lambda: f64,
) -> (Vec<f64>, f64) {
    let n = x.n_rows() as f64;
    let mut grad_w = vec![0.0; w.len()];
    let mut grad_b = 0.0;
    for (row, &label) in x.rows().zip(y) {
        let err = logistic(dot(w, row) + b) - label as f64;
        for (g, &v) in grad_w.iter_mut().zip(row) {
            *g += err * v;
        }
        grad_b += err;
    }
    for (g, &wj) in grad_w.iter_mut().zip(w) {
        *g = *g / n + l2_lambda * wj;
    }
    (grad_w, grad_b / n)
}

/// Minimize mean cross-entropy + L2 by full-batch gradient descent from
/// zero initialization. Deterministic given the config.
pub fn fit_logreg(
    x: &FeatureMatrix,
    y: &[u8],
    config: &LogregConfig,
) -> Result<LinearParams, ClassifierError> {
    check_both_classes(y)?;
    assert_eq!(x.n_rows(), y.len(), "feature rows must align with labels");
    let mut w = vec![0.0; x.n_cols()];
    let mut b = 0.0;
    for epoch in 0..config.epochs {
        let (grad_w, grad_b) = logreg_gradient(x, y, &w, b, config.l2_lambda);
        for (wj, g) in w.iter_mut().zip(&grad_w) {
            *wj -= config.learning_rate * g;
        }
        b -= config.learning_rate * grad_b;
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::Diverged { epoch });
        }
    }
    Ok(LinearParams {
        weights: w,
        bias: b,
        trained_kind: LinearKind::Logreg,
    })
}

/// Logistic of the margin. A calibrated probability for logistic
/// regression; for the SVM it is a monotone ranking score, not a
/// probability.
pub fn predict_proba_linear(params: &LinearParams, x: &[f64]) -> Result<f64, ClassifierError> {
    if x.len() != params.dim() {
        return Err(ClassifierError::DimMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    Ok(logistic(params.margin(x)))
}

/// Primal objective (1/2)||w||^2 + C * sum_i hinge(1 - y_i (w.x_i + b)).
pub fn svm_objective(x: &FeatureMatrix, y: &[u8], w: &[f64], b: f64, c: f64) -> f64 {
    let mut hinge_sum = 0.0;
    for (row, &label) in x.rows().zip(y) {
        let sign = if label == 1 { 1.0 } else { -1.0 };
        hinge_sum += (1.0 - sign * (dot(w, row) + b)).max(0.0);
    }
    0.5 * dot(w, w) + c * hinge_sum
}

/// Deterministic per-sample subgradient descent on the primal objective,
/// labels mapped to {-1, +1}. The sample order is one seeded shuffle,
/// fixed across epochs, and the returned parameters are the uniform
/// average of all iterates.
pub fn fit_linear_svm(
    x: &FeatureMatrix,
    y: &[u8],
    config: &SvmConfig,
) -> Result<LinearParams, ClassifierError> {
    check_both_classes(y)?;
    assert_eq!(x.n_rows(), y.len(), "feature rows must align with labels");
    let n = x.n_rows();
    let d = x.n_cols();

    let mut order: Vec<usize> = (0..n).collect();
    SplitMix64::new(config.seed).shuffle(&mut order);

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut w_avg = vec![0.0; d];
    let mut b_avg = 0.0;
    let mut t = 0usize;
    for epoch in 0..config.epochs {
        let eta = config.learning_rate / (1.0 + epoch as f64);
        for &i in &order {
            t += 1;
            let row = x.row(i);
            let sign = if y[i] == 1 { 1.0 } else { -1.0 };
            let violated = sign * (dot(&w, row) + b) < 1.0;
            // Per-sample objective ||w||^2/(2n) + C * hinge_i.
            let shrink = 1.0 - eta / n as f64;
            for wj in w.iter_mut() {
                *wj *= shrink;
            }
            if violated {
                let step = eta * config.c * sign;
                for (wj, &v) in w.iter_mut().zip(row) {
                    *wj += step * v;
                }
                b += step;
            }
            let count = t as f64;
            for (avg, &wj) in w_avg.iter_mut().zip(&w) {
                *avg += (wj - *avg) / count;
            }
            b_avg += (b - b_avg) / count;
        }
        if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
            return Err(ClassifierError::Diverged { epoch });
        }
    }
    Ok(LinearParams {
        weights: w_avg,
        bias: b_avg,
        trained_kind: LinearKind::LinearSvm,
    })
}
