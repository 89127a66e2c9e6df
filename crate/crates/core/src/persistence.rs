//! Model serialization: one JSON file per trained model, carrying the
//! classifier parameters together with their featurizer provenance.
//!
//! Top-level keys are exactly `schema_version`, `model_kind`, `featurizer`,
//! `params`, `training_config` and `created_at`. Floats round-trip
//! losslessly (shortest-representation encoding), so a reloaded model
//! predicts bit-identically.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classifiers::{
    ForestConfig, ForestParams, GnbParams, LinearKind, LinearParams, LogregConfig, ModelKind,
    SvmConfig,
};
use crate::tfidf::TermStats;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PersistError {
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("corrupted model JSON: {0}")]
    Json(String),
    #[error("unsupported schema version {found} (this build reads {supported})")]
    UnsupportedSchema { found: u32, supported: u32 },
    #[error("model_kind {kind:?} does not match params of kind {params:?}")]
    KindMismatch { kind: ModelKind, params: ModelKind },
}

/// Featurizer provenance stored with every model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Featurizer {
    /// Dense vectors from a transformer embedding run or cache.
    EmbeddingCache { dim: usize, model_id: String },
    /// Bag-of-words statistics fitted on the training split.
    Tfidf(TermStats),
}

impl Featurizer {
    pub fn name(&self) -> &'static str {
        match self {
            Featurizer::EmbeddingCache { .. } => "embedding",
            Featurizer::Tfidf(_) => "tfidf",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Featurizer::EmbeddingCache { dim, .. } => *dim,
            Featurizer::Tfidf(stats) => stats.vocab_len(),
        }
    }
}

/// Parameters of one trained classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelParams {
    Gnb(GnbParams),
    Logreg(LinearParams),
    LinearSvm(LinearParams),
    RandomForest(ForestParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Gnb(_) => ModelKind::Gnb,
            ModelParams::Logreg(_) => ModelKind::Logreg,
            ModelParams::LinearSvm(_) => ModelKind::LinearSvm,
            ModelParams::RandomForest(_) => ModelKind::RandomForest,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelParams::Gnb(p) => p.dim(),
            ModelParams::Logreg(p) | ModelParams::LinearSvm(p) => p.dim(),
            ModelParams::RandomForest(p) => p.dim,
        }
    }
}

/// Everything the training run pinned down, for reproducibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub seed: u64,
    /// Decision threshold applied to scores everywhere.
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pooling: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logreg: Option<LogregConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub svm: Option<SvmConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forest: Option<ForestConfig>,
}

impl TrainingConfig {
    pub fn bare(seed: u64) -> Self {
        Self {
            seed,
            threshold: 0.5,
            max_len: None,
            pooling: None,
            logreg: None,
            svm: None,
            forest: None,
        }
    }
}

/// A serialized classifier plus provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub schema_version: u32,
    pub model_kind: ModelKind,
    pub featurizer: Featurizer,
    pub params: ModelParams,
    pub training_config: TrainingConfig,
    pub created_at: String,
}

impl TrainedModel {
    pub fn new(featurizer: Featurizer, params: ModelParams, training_config: TrainingConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            model_kind: params.kind(),
            featurizer,
            params,
            training_config,
            created_at: chrono::Utc::now().to_rfc3339(),
        }
    }

    fn validate(&self) -> Result<(), PersistError> {
        if self.schema_version > SCHEMA_VERSION {
            return Err(PersistError::UnsupportedSchema {
                found: self.schema_version,
                supported: SCHEMA_VERSION,
            });
        }
        if self.params.kind() != self.model_kind {
            return Err(PersistError::KindMismatch {
                kind: self.model_kind,
                params: self.params.kind(),
            });
        }
        // A linear params block must agree with the declared kind too.
        let linear_kind = match &self.params {
            ModelParams::Logreg(p) | ModelParams::LinearSvm(p) => Some(p.trained_kind),
            _ => None,
        };
        match (self.model_kind, linear_kind) {
            (ModelKind::Logreg, Some(LinearKind::LinearSvm))
            | (ModelKind::LinearSvm, Some(LinearKind::Logreg)) => {
                Err(PersistError::KindMismatch {
                    kind: self.model_kind,
                    params: self.params.kind(),
                })
            }
            _ => Ok(()),
        }
    }
}

pub fn save_model(model: &TrainedModel, path: &Path) -> Result<(), PersistError> {
    model.validate()?;
    let body = serde_json::to_string_pretty(model).map_err(|e| PersistError::Json(e.to_string()))?;
    std::fs::write(path, body + "\n").map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<TrainedModel, PersistError> {
    let body = std::fs::read_to_string(path).map_err(|source| PersistError::Io {
        path: path.display().to_string(),
        source,
    })?;
    // Check the schema version before full decoding so future layouts fail
    // with the right error.
    let probe: serde_json::Value =
        serde_json::from_str(&body).map_err(|e| PersistError::Json(e.to_string()))?;
    if let Some(version) = probe.get("schema_version").and_then(|v| v.as_u64()) {
        if version as u32 > SCHEMA_VERSION {
            return Err(PersistError::UnsupportedSchema {
                found: version as u32,
                supported: SCHEMA_VERSION,
            });
        }
    }
    let mut model: TrainedModel =
        serde_json::from_str(&body).map_err(|e| PersistError::Json(e.to_string()))?;
    if let Featurizer::Tfidf(stats) = &mut model.featurizer {
        stats.rebuild_index();
    }
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{
        fit_gnb, fit_linear_svm, fit_logreg, fit_random_forest, predict_forest, predict_gnb,
        predict_proba_linear,
    };
    use crate::features::FeatureMatrix;
    use crate::rng::SplitMix64;

    fn toy_training() -> (FeatureMatrix, Vec<u8>) {
        let mut rng = SplitMix64::new(5);
        let rows: Vec<Vec<f64>> = (0..24)
            .map(|i| {
                let shift = if i % 2 == 0 { -1.0 } else { 1.0 };
                (0..3).map(|_| rng.next_f64() + shift).collect()
            })
            .collect();
        let y: Vec<u8> = (0..24).map(|i| (i % 2) as u8).collect();
        (FeatureMatrix::from_rows(rows).unwrap(), y)
    }

    fn embedding_featurizer(dim: usize) -> Featurizer {
        Featurizer::EmbeddingCache {
            dim,
            model_id: "test-encoder".into(),
        }
    }

    #[test]
    fn logreg_roundtrip_is_bitwise() {
        let (x, y) = toy_training();
        let params = fit_logreg(&x, &y, &Default::default()).unwrap();
        let model = TrainedModel::new(
            embedding_featurizer(3),
            ModelParams::Logreg(params.clone()),
            TrainingConfig::bare(42),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        match back.params {
            ModelParams::Logreg(p) => {
                assert_eq!(p.bias.to_bits(), params.bias.to_bits());
                for (a, b) in p.weights.iter().zip(&params.weights) {
                    assert_eq!(a.to_bits(), b.to_bits());
                }
            }
            _ => panic!("wrong params kind"),
        }
    }

    #[test]
    fn forest_roundtrip_is_node_for_node() {
        let (x, y) = toy_training();
        let params = fit_random_forest(
            &x,
            &y,
            &ForestConfig { n_trees: 7, ..Default::default() },
        )
        .unwrap();
        let model = TrainedModel::new(
            embedding_featurizer(3),
            ModelParams::RandomForest(params.clone()),
            TrainingConfig::bare(42),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.params, ModelParams::RandomForest(params));
    }

    #[test]
    fn prediction_equivalence_after_roundtrip() {
        let (x, y) = toy_training();
        let dir = tempfile::tempdir().unwrap();
        let models = vec![
            ModelParams::Gnb(fit_gnb(&x, &y).unwrap()),
            ModelParams::Logreg(fit_logreg(&x, &y, &Default::default()).unwrap()),
            ModelParams::LinearSvm(fit_linear_svm(&x, &y, &Default::default()).unwrap()),
            ModelParams::RandomForest(
                fit_random_forest(&x, &y, &ForestConfig { n_trees: 9, ..Default::default() })
                    .unwrap(),
            ),
        ];
        let mut rng = SplitMix64::new(77);
        let probes: Vec<Vec<f64>> = (0..100)
            .map(|_| (0..3).map(|_| rng.next_f64() * 4.0 - 2.0).collect())
            .collect();
        for params in models {
            let model = TrainedModel::new(
                embedding_featurizer(3),
                params.clone(),
                TrainingConfig::bare(42),
            );
            let path = dir.path().join(format!("{}.json", model.model_kind.as_str()));
            save_model(&model, &path).unwrap();
            let back = load_model(&path).unwrap();
            for probe in &probes {
                match (&params, &back.params) {
                    (ModelParams::Gnb(a), ModelParams::Gnb(b)) => {
                        let (la, pa) = predict_gnb(a, probe).unwrap();
                        let (lb, pb) = predict_gnb(b, probe).unwrap();
                        assert_eq!(la, lb);
                        assert_eq!(pa[0].to_bits(), pb[0].to_bits());
                        assert_eq!(pa[1].to_bits(), pb[1].to_bits());
                    }
                    (ModelParams::Logreg(a), ModelParams::Logreg(b))
                    | (ModelParams::LinearSvm(a), ModelParams::LinearSvm(b)) => {
                        let sa = predict_proba_linear(a, probe).unwrap();
                        let sb = predict_proba_linear(b, probe).unwrap();
                        assert_eq!(sa.to_bits(), sb.to_bits());
                    }
                    (ModelParams::RandomForest(a), ModelParams::RandomForest(b)) => {
                        assert_eq!(
                            predict_forest(a, probe).unwrap(),
                            predict_forest(b, probe).unwrap()
                        );
                    }
                    _ => panic!("params kind changed across roundtrip"),
                }
            }
        }
    }

    #[test]
    fn future_schema_version_fails_loudly() {
        let (x, y) = toy_training();
        let model = TrainedModel::new(
            embedding_featurizer(3),
            ModelParams::Gnb(fit_gnb(&x, &y).unwrap()),
            TrainingConfig::bare(42),
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("future.json");
        save_model(&model, &path).unwrap();
        let body = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\": 1", "\"schema_version\": 999");
        std::fs::write(&path, body).unwrap();
        assert!(matches!(
            load_model(&path),
            Err(PersistError::UnsupportedSchema { found: 999, .. })
        ));
    }

    #[test]
    fn kind_params_mismatch_is_rejected() {
        let (x, y) = toy_training();
        let mut model = TrainedModel::new(
            embedding_featurizer(3),
            ModelParams::Logreg(fit_logreg(&x, &y, &Default::default()).unwrap()),
            TrainingConfig::bare(42),
        );
        model.model_kind = ModelKind::Gnb;
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        assert!(matches!(
            save_model(&model, &path),
            Err(PersistError::KindMismatch { .. })
        ));
        // Corrupt JSON is a parse error, not a panic.
        std::fs::write(&path, "{ not json").unwrap();
        assert!(matches!(load_model(&path), Err(PersistError::Json(_))));
    }

    #[test]
    fn top_level_keys_are_exactly_the_contract() {
        let (x, y) = toy_training();
        let model = TrainedModel::new(
            embedding_featurizer(3),
            ModelParams::Gnb(fit_gnb(&x, &y).unwrap()),
            TrainingConfig::bare(42),
        );
        let value = serde_json::to_value(&model).unwrap();
        let mut keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(
            keys,
            vec![
                "created_at",
                "featurizer",
                "model_kind",
                "params",
                "schema_version",
                "training_config"
            ]
        );
    }

    #[test]
    fn tfidf_featurizer_serializes_term_stats_inline() {
        let stats = crate::tfidf::fit(&[
            vec!["a".to_string(), "b".to_string()],
            vec!["b".to_string()],
        ])
        .unwrap();
        let featurizer = Featurizer::Tfidf(stats);
        let value = serde_json::to_value(&featurizer).unwrap();
        assert_eq!(value["kind"], "tfidf");
        assert_eq!(value["n_docs"], 2);
        assert!(value["vocab"].is_array());
        assert!(value["df"].is_array());
    }
}
