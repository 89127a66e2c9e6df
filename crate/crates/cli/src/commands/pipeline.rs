//! Feature preparation and training shared by `train`, `eval` and
//! `compare`. Training only ever sees rows selected from the train split;
//! TF-IDF statistics are likewise fitted on the train split alone.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use promptguard_core::classifiers::{
    fit_gnb, fit_linear_svm, fit_logreg, fit_random_forest, ForestConfig, LogregConfig,
    ModelKind, SvmConfig,
};
use promptguard_core::dataset::{LabeledCorpus, Split};
use promptguard_core::features::{densify, select_split, FeatureMatrix};
use promptguard_core::persistence::{Featurizer, ModelParams, TrainingConfig};
use promptguard_core::tfidf;
use promptguard_core::tokenizer::basic_tokenize;

use crate::common::{stem_of, DatasetArgs, FeaturizerArg};

/// Classifier hyperparameters; unset flags fall back to the documented
/// defaults.
#[derive(Args, Debug, Clone)]
pub struct HyperArgs {
    /// Logistic-regression step size, or the SVM's initial step.
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Gradient-descent epochs (logistic regression and SVM).
    #[arg(long)]
    pub epochs: Option<usize>,
    /// L2 penalty for logistic regression.
    #[arg(long)]
    pub l2_lambda: Option<f64>,
    /// Hinge-loss weight C for the SVM.
    #[arg(long)]
    pub svm_c: Option<f64>,
    /// Trees in the random forest.
    #[arg(long)]
    pub n_trees: Option<usize>,
    /// Depth cap for forest trees.
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Minimum samples per forest leaf.
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Features drawn per forest split (default: ceil(sqrt(d))).
    #[arg(long)]
    pub features_per_split: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Hyper {
    pub logreg: LogregConfig,
    pub svm: SvmConfig,
    pub forest: ForestConfig,
    pub seed: u64,
}

impl Hyper {
    pub fn from_args(args: &HyperArgs, seed: u64) -> Self {
        let mut logreg = LogregConfig { seed, ..Default::default() };
        let mut svm = SvmConfig { seed, ..Default::default() };
        let mut forest = ForestConfig { seed, ..Default::default() };
        if let Some(lr) = args.learning_rate {
            logreg.learning_rate = lr;
            svm.learning_rate = lr;
        }
        if let Some(epochs) = args.epochs {
            logreg.epochs = epochs;
            svm.epochs = epochs;
        }
        if let Some(lambda) = args.l2_lambda {
            logreg.l2_lambda = lambda;
        }
        if let Some(c) = args.svm_c {
            svm.c = c;
        }
        if let Some(n) = args.n_trees {
            forest.n_trees = n;
        }
        if let Some(depth) = args.max_depth {
            forest.max_depth = depth;
        }
        if let Some(min_leaf) = args.min_leaf {
            forest.min_leaf = min_leaf;
        }
        forest.features_per_split = args.features_per_split;
        Self { logreg, svm, forest, seed }
    }

    pub fn training_config(&self, kind: ModelKind) -> TrainingConfig {
        let mut config = TrainingConfig::bare(self.seed);
        match kind {
            ModelKind::Gnb => {}
            ModelKind::Logreg => config.logreg = Some(self.logreg.clone()),
            ModelKind::LinearSvm => config.svm = Some(self.svm.clone()),
            ModelKind::RandomForest => config.forest = Some(self.forest.clone()),
        }
        config
    }
}

/// Fit one classifier kind on prepared training data.
pub fn fit_kind(
    kind: ModelKind,
    x: &FeatureMatrix,
    y: &[u8],
    hyper: &Hyper,
) -> Result<ModelParams> {
    Ok(match kind {
        ModelKind::Gnb => ModelParams::Gnb(fit_gnb(x, y)?),
        ModelKind::Logreg => ModelParams::Logreg(fit_logreg(x, y, &hyper.logreg)?),
        ModelKind::LinearSvm => ModelParams::LinearSvm(fit_linear_svm(x, y, &hyper.svm)?),
        ModelKind::RandomForest => {
            ModelParams::RandomForest(fit_random_forest(x, y, &hyper.forest)?)
        }
    })
}

/// One split's worth of classifier input, with source row indices.
pub struct SplitData {
    pub features: FeatureMatrix,
    pub labels: Vec<u8>,
    /// Row indices into the originating cache/corpus.
    pub rows: Vec<usize>,
}

/// Features for both splits plus the featurizer provenance to persist.
pub struct PreparedData {
    pub train: SplitData,
    pub test: SplitData,
    pub featurizer: Featurizer,
}

/// Load the embedding cache named by `--cache` and slice it by split.
pub fn prepare_from_cache(cache_path: &Path, model_id: Option<String>) -> Result<PreparedData> {
    let (matrix, labels, splits) = promptguard_core::embedding::load_cache(cache_path)
        .with_context(|| format!("loading {}", cache_path.display()))?;
    let train = select_split(&matrix, &labels, &splits, Split::Train)?;
    let test = select_split(&matrix, &labels, &splits, Split::Test)?;
    let featurizer = Featurizer::EmbeddingCache {
        dim: matrix.dim(),
        model_id: model_id.unwrap_or_else(|| stem_of(cache_path)),
    };
    Ok(PreparedData {
        train: SplitData {
            features: train.features,
            labels: train.labels,
            rows: train.rows,
        },
        test: SplitData {
            features: test.features,
            labels: test.labels,
            rows: test.rows,
        },
        featurizer,
    })
}

/// Tokenize the corpus, fit TF-IDF statistics on the train split only and
/// transform both splits.
pub fn prepare_tfidf(corpus: &LabeledCorpus) -> Result<PreparedData> {
    let (train_records, _) = corpus.split()?;
    if train_records.is_empty() {
        bail!("corpus has no train rows");
    }
    let train_tokens: Vec<Vec<String>> = train_records
        .iter()
        .map(|r| basic_tokenize(&r.text, true))
        .collect();
    let stats = tfidf::fit(&train_tokens)?;

    let split_data = |which: Split| -> Result<SplitData> {
        let rows: Vec<usize> = corpus
            .records()
            .iter()
            .enumerate()
            .filter(|(_, r)| r.split == Some(which))
            .map(|(i, _)| i)
            .collect();
        let vectors: Vec<_> = rows
            .iter()
            .map(|&i| tfidf::transform(&basic_tokenize(&corpus.records()[i].text, true), &stats))
            .collect();
        Ok(SplitData {
            features: densify(&vectors)?,
            labels: rows.iter().map(|&i| corpus.records()[i].label).collect(),
            rows,
        })
    };
    let train = split_data(Split::Train)?;
    let test = split_data(Split::Test)?;
    Ok(PreparedData {
        train,
        test,
        featurizer: Featurizer::Tfidf(stats),
    })
}

/// Resolve the featurizer source flags shared by train and compare:
/// exactly one of an embedding cache or a TF-IDF dataset.
pub fn prepare_features(
    cache: &Option<PathBuf>,
    dataset: &DatasetArgs,
    featurizer: Option<FeaturizerArg>,
    model_id: Option<String>,
) -> Result<(PreparedData, Option<LabeledCorpus>)> {
    match (cache, dataset.is_present(), featurizer) {
        (Some(path), _, None | Some(FeaturizerArg::Embedding)) => {
            let prepared = prepare_from_cache(path, model_id)?;
            // A dataset alongside the cache only contributes prompt texts
            // for reporting.
            let corpus = if dataset.is_present() {
                Some(dataset.load()?)
            } else {
                None
            };
            Ok((prepared, corpus))
        }
        (Some(_), _, Some(FeaturizerArg::Tfidf)) => {
            bail!("--featurizer tfidf conflicts with --cache; supply exactly one featurizer source")
        }
        (None, true, None | Some(FeaturizerArg::Tfidf)) => {
            let corpus = dataset.load()?;
            let prepared = prepare_tfidf(&corpus)?;
            Ok((prepared, Some(corpus)))
        }
        (None, true, Some(FeaturizerArg::Embedding)) => {
            bail!("embedding features come from a cache; run `promptguard embed` first and pass --cache")
        }
        (None, false, _) => bail!("supply exactly one featurizer source: --cache or --dataset"),
    }
}
