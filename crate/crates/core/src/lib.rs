//! Core library for prompt-injection detection: corpus loading, WordPiece
//! tokenization, transformer embeddings with a portable cache format,
//! TF-IDF baseline features, four from-scratch classifiers, evaluation
//! metrics and model persistence.

pub mod classifiers;
pub mod dataset;
pub mod embedding;
pub mod features;
pub mod guard;
pub mod metrics;
pub mod persistence;
pub mod rng;
pub mod tfidf;
pub mod tokenizer;

#[cfg(feature = "onnx")]
pub mod onnx;

pub use dataset::{LabeledCorpus, PromptRecord, Split};
pub use guard::{Classification, Detector};
pub use metrics::{ConfusionMatrix, MetricsReport};
pub use persistence::{load_model, save_model, TrainedModel};
pub use tokenizer::{TokenSequence, Vocab};
