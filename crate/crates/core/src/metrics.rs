//! Confusion-matrix metrics and ROC/AUC for binary classification.
//!
//! The positive class is label 1 (malicious). Accuracy, precision, recall
//! and F1 follow the standard definitions:
//!
//! ```text
//! accuracy  = (TP + TN) / (TP + TN + FP + FN)
//! precision = TP / (TP + FP)
//! recall    = TP / (TP + FN)
//! F1        = 2 * precision * recall / (precision + recall)
//! ```
//!
//! Degenerate denominators (no predicted positives, no actual positives,
//! precision + recall = 0) yield 0 instead of NaN and are flagged, so
//! reports stay serializable and comparable.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("label vectors are empty")]
    Empty,
    #[error("length mismatch: {left} true labels vs {right} predictions")]
    LengthMismatch { left: usize, right: usize },
    #[error("ROC requires both classes in y_true")]
    SingleClass,
    #[error("ROC points must start at (0,0), end at (1,1) and be sorted by fpr")]
    MalformedCurve,
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// TP/TN/FP/FN counts for one classifier on one evaluation set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }
}

/// Count the four outcomes over aligned label vectors. Positive class is 1.
pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if y_true.len() != y_pred.len() {
        return Err(MetricsError::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut cm = ConfusionMatrix {
        tp: 0,
        tn: 0,
        fp: 0,
        fn_: 0,
    };
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fp += 1,
            (1, 0) => cm.fn_ += 1,
            _ => unreachable!("labels are validated to be 0 or 1 at ingestion"),
        }
    }
    Ok(cm)
}

/// One evaluation report. `auc` is filled in only when scores were available.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
    pub degenerate_flags: Vec<String>,
}

/// Derive the four scalar metrics from a confusion matrix.
pub fn report(cm: &ConfusionMatrix) -> Result<MetricsReport, MetricsError> {
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::Empty);
    }
    let mut flags = Vec::new();
    let accuracy = (cm.tp + cm.tn) as f64 / total as f64;
    let precision = if cm.tp + cm.fp == 0 {
        flags.push("precision".to_string());
        0.0
    } else {
        cm.tp as f64 / (cm.tp + cm.fp) as f64
    };
    let recall = if cm.tp + cm.fn_ == 0 {
        flags.push("recall".to_string());
        0.0
    } else {
        cm.tp as f64 / (cm.tp + cm.fn_) as f64
    };
    let f1 = if precision + recall == 0.0 {
        flags.push("f1".to_string());
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        auc: None,
        degenerate_flags: flags,
    })
}

/// One point of a ROC curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// Sweep the decision threshold across descending unique scores.
///
/// Tied scores move together, so the curve has one point per unique score
/// plus the (0,0) origin; it always ends at (1,1).
pub fn roc_curve(y_true: &[u8], scores: &[f64]) -> Result<Vec<RocPoint>, MetricsError> {
    if y_true.len() != scores.len() {
        return Err(MetricsError::LengthMismatch {
            left: y_true.len(),
            right: scores.len(),
        });
    }
    if y_true.is_empty() {
        return Err(MetricsError::Empty);
    }
    let pos = y_true.iter().filter(|&&t| t == 1).count();
    let neg = y_true.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(MetricsError::SingleClass);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite scores"));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        while i < order.len() && scores[order[i]] == score {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve produced by [`roc_curve`].
pub fn auc(points: &[RocPoint]) -> Result<f64, MetricsError> {
    let first = points.first().ok_or(MetricsError::MalformedCurve)?;
    let last = points.last().ok_or(MetricsError::MalformedCurve)?;
    if first.fpr != 0.0 || first.tpr != 0.0 || last.fpr != 1.0 || last.tpr != 1.0 {
        return Err(MetricsError::MalformedCurve);
    }
    let mut area = 0.0;
    for pair in points.windows(2) {
        if pair[1].fpr < pair[0].fpr {
            return Err(MetricsError::MalformedCurve);
        }
        area += (pair[1].fpr - pair[0].fpr) * (pair[1].tpr + pair[0].tpr) / 2.0;
    }
    Ok(area)
}

/// Write the curve as `fpr,tpr` CSV with six decimal places, ready for plotting.
pub fn emit_roc_csv(points: &[RocPoint], path: &Path) -> Result<(), MetricsError> {
    let io_err = |source| MetricsError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    writeln!(file, "fpr,tpr").map_err(io_err)?;
    for p in points {
        writeln!(file, "{:.6},{:.6}", p.fpr, p.tpr).map_err(io_err)?;
    }
    Ok(())
}
