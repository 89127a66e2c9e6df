//! Flag plumbing shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;

use promptguard_core::classifiers::ModelKind;
use promptguard_core::dataset::{load_corpus, Format, LabeledCorpus, Split};
use promptguard_core::persistence::{load_model, TrainedModel};

/// Dataset source: one tagged snapshot, or a two-file train/test pair.
#[derive(Args, Debug, Clone)]
pub struct DatasetArgs {
    /// Corpus snapshot with per-record split tags.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    pub dataset: Option<PathBuf>,
    /// Snapshot format; inferred from the extension when omitted.
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Training-split file (two-file layout).
    #[arg(long, requires = "test")]
    pub train: Option<PathBuf>,
    /// Held-out-split file (two-file layout).
    #[arg(long, requires = "train")]
    pub test: Option<PathBuf>,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl DatasetArgs {
    pub fn is_present(&self) -> bool {
        self.dataset.is_some() || self.train.is_some()
    }

    fn format_for(&self, path: &Path) -> Result<Format> {
        Ok(match self.format {
            Some(FormatArg::Csv) => Format::Csv,
            Some(FormatArg::Jsonl) => Format::Jsonl,
            None => Format::infer(path)?,
        })
    }

    pub fn load(&self) -> Result<LabeledCorpus> {
        if let Some(path) = &self.dataset {
            let corpus = load_corpus(path, self.format_for(path)?)
                .with_context(|| format!("loading {}", path.display()))?;
            return Ok(corpus);
        }
        match (&self.train, &self.test) {
            (Some(train_path), Some(test_path)) => {
                let train = load_corpus(train_path, self.format_for(train_path)?)
                    .with_context(|| format!("loading {}", train_path.display()))?
                    .with_split(Split::Train);
                let test = load_corpus(test_path, self.format_for(test_path)?)
                    .with_context(|| format!("loading {}", test_path.display()))?
                    .with_split(Split::Test);
                Ok(train.concat(test))
            }
            _ => bail!("supply --dataset, or --train together with --test"),
        }
    }
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeaturizerArg {
    Embedding,
    Tfidf,
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassifierArg {
    Gnb,
    Rf,
    Svm,
    Logreg,
}

impl ClassifierArg {
    pub fn kind(self) -> ModelKind {
        match self {
            ClassifierArg::Gnb => ModelKind::Gnb,
            ClassifierArg::Rf => ModelKind::RandomForest,
            ClassifierArg::Svm => ModelKind::LinearSvm,
            ClassifierArg::Logreg => ModelKind::Logreg,
        }
    }
}

#[derive(clap::ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolingArg {
    Mean,
    Cls,
}

impl PoolingArg {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolingArg::Mean => "mean",
            PoolingArg::Cls => "cls",
        }
    }
}

/// Resolve a model path, falling back to `$PROMPTGUARD_MODEL_DIR`.
pub fn resolve_model_path(flag: Option<PathBuf>) -> Result<PathBuf> {
    let model_dir = std::env::var_os("PROMPTGUARD_MODEL_DIR").map(PathBuf::from);
    match flag {
        Some(path) => {
            if path.exists() {
                return Ok(path);
            }
            if path.is_relative() {
                if let Some(dir) = &model_dir {
                    let fallback = dir.join(&path);
                    if fallback.exists() {
                        return Ok(fallback);
                    }
                }
            }
            bail!("model file {} not found", path.display());
        }
        None => match model_dir {
            Some(dir) => {
                let default = dir.join("model.json");
                if default.exists() {
                    Ok(default)
                } else {
                    bail!(
                        "no --model given and {} does not exist",
                        default.display()
                    );
                }
            }
            None => bail!("no --model given and PROMPTGUARD_MODEL_DIR is unset"),
        },
    }
}

pub fn load_model_from(flag: Option<PathBuf>) -> Result<(TrainedModel, PathBuf)> {
    let path = resolve_model_path(flag)?;
    let model = load_model(&path).with_context(|| format!("loading {}", path.display()))?;
    Ok((model, path))
}

pub fn ensure_out_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))
}

/// File stem used as the default model identifier string.
pub fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "unknown".to_string())
}
