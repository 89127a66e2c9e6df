//! Gaussian naive Bayes with per-class diagonal Gaussians.

use serde::{Deserialize, Serialize};

use super::{check_both_classes, ClassifierError};
use crate::features::FeatureMatrix;

/// Per-class priors, feature means and variances. Variances are floored
/// at `epsilon` so near-constant features cannot zero out a likelihood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbParams {
    pub priors: [f64; 2],
    /// means[c][j]: mean of feature j within class c.
    pub means: Vec<Vec<f64>>,
    /// variances[c][j]: population variance of feature j within class c,
    /// already floored at epsilon.
    pub variances: Vec<Vec<f64>>,
    pub epsilon: f64,
}

impl GnbParams {
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }
}

/// Fit class priors and per-class mean/variance (population form).
///
/// The variance floor is 1e-9 times the largest pooled feature variance,
/// falling back to 1e-9 when every feature is constant.
pub fn fit_gnb(x: &FeatureMatrix, y: &[u8]) -> Result<GnbParams, ClassifierError> {
    check_both_classes(y)?;
    let n = x.n_rows();
    let d = x.n_cols();
    assert_eq!(n, y.len(), "feature rows must align with labels");

    // Pooled per-feature variance sets the smoothing scale.
    let mut pooled_mean = vec![0.0; d];
    for row in x.rows() {
        for (m, &v) in pooled_mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut pooled_mean {
        *m /= n as f64;
    }
    let mut max_var: f64 = 0.0;
    for j in 0..d {
        let var = x
            .rows()
            .map(|row| (row[j] - pooled_mean[j]).powi(2))
            .sum::<f64>()
            / n as f64;
        max_var = max_var.max(var);
    }
    let epsilon = if max_var > 0.0 { 1e-9 * max_var } else { 1e-9 };

    let mut counts = [0usize; 2];
    let mut means = vec![vec![0.0; d]; 2];
    for (row, &label) in x.rows().zip(y) {
        let c = label as usize;
        counts[c] += 1;
        for (m, &v) in means[c].iter_mut().zip(row) {
            *m += v;
        }
    }
    for c in 0..2 {
        for m in &mut means[c] {
            *m /= counts[c] as f64;
        }
    }

    let mut variances = vec![vec![0.0; d]; 2];
    for (row, &label) in x.rows().zip(y) {
        let c = label as usize;
        for j in 0..d {
            variances[c][j] += (row[j] - means[c][j]).powi(2);
        }
    }
    for c in 0..2 {
        for v in &mut variances[c] {
            *v = (*v / counts[c] as f64).max(epsilon);
        }
    }

    Ok(GnbParams {
        priors: [counts[0] as f64 / n as f64, counts[1] as f64 / n as f64],
        means,
        variances,
        epsilon,
    })
}

/// Class by maximum unnormalized log-posterior
/// `log pi_c + sum_j log N(x_j; mu_cj, var_cj)`; ties go to class 0.
pub fn predict_gnb(params: &GnbParams, x: &[f64]) -> Result<(u8, [f64; 2]), ClassifierError> {
    if x.len() != params.dim() {
        return Err(ClassifierError::DimMismatch {
            expected: params.dim(),
            got: x.len(),
        });
    }
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    let mut log_posteriors = [0.0; 2];
    for (c, log_posterior) in log_posteriors.iter_mut().enumerate() {
        let mut lp = params.priors[c].ln();
        for ((&v, &mean), &var) in x
            .iter()
            .zip(&params.means[c])
            .zip(&params.variances[c])
        {
            lp += -0.5 * (ln_2pi + var.ln()) - (v - mean).powi(2) / (2.0 * var);
        }
        *log_posterior = lp;
    }
    let label = if log_posteriors[1] > log_posteriors[0] {
        1
    } else {
        0
    };
    Ok((label, log_posteriors))
}
