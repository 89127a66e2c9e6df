//! Four from-scratch binary classifiers over dense feature vectors:
//! Gaussian naive Bayes, logistic regression, a linear SVM and a random
//! forest. All training is deterministic given (data, config, seed).

mod forest;
mod gnb;
mod linear;

pub use forest::{fit_random_forest, predict_forest, ForestConfig, ForestParams, Tree, TreeNode};
pub use gnb::{fit_gnb, predict_gnb, GnbParams};
pub use linear::{
    fit_linear_svm, fit_logreg, logistic, logreg_gradient, logreg_loss, predict_proba_linear,
    svm_objective, LinearKind, LinearParams, LogregConfig, SvmConfig,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClassifierError {
    #[error("training data is empty")]
    Empty,
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("feature dimension mismatch: model expects {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Diverged { epoch: usize },
}

/// Classifier family, as recorded in persisted models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Gnb,
    Logreg,
    LinearSvm,
    RandomForest,
}

impl ModelKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelKind::Gnb => "gnb",
            ModelKind::Logreg => "logreg",
            ModelKind::LinearSvm => "linear_svm",
            ModelKind::RandomForest => "random_forest",
        }
    }
}

pub(crate) fn check_both_classes(y: &[u8]) -> Result<(), ClassifierError> {
    if y.is_empty() {
        return Err(ClassifierError::Empty);
    }
    if y.iter().all(|&l| l == 0) || y.iter().all(|&l| l == 1) {
        return Err(ClassifierError::SingleClass);
    }
    Ok(())
}
