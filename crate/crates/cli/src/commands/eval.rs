//! `promptguard eval`: run a saved model over the held-out split only.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;

use promptguard_core::dataset::Split;
use promptguard_core::embedding::load_cache;
use promptguard_core::features::{densify, select_split, FeatureMatrix};
use promptguard_core::guard::{evaluate, Evaluation};
use promptguard_core::metrics::emit_roc_csv;
use promptguard_core::persistence::{Featurizer, TrainedModel};
use promptguard_core::tfidf;
use promptguard_core::tokenizer::basic_tokenize;

use crate::common::{ensure_out_dir, load_model_from, DatasetArgs};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Saved model JSON; defaults to $PROMPTGUARD_MODEL_DIR/model.json.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// PGEMB1 cache for embedding-featurizer models.
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

/// Held-out features for whichever featurizer the model was trained on.
pub fn test_features(
    model: &TrainedModel,
    cache: &Option<PathBuf>,
    dataset: &DatasetArgs,
) -> Result<(FeatureMatrix, Vec<u8>, Vec<usize>)> {
    match &model.featurizer {
        Featurizer::EmbeddingCache { .. } => {
            if cache.is_none() && dataset.is_present() {
                bail!("featurizer mismatch: model was trained on embedding features; supply --cache");
            }
            let path = cache
                .as_ref()
                .context("model uses embedding features; supply --cache")?;
            let (matrix, labels, splits) =
                load_cache(path).with_context(|| format!("loading {}", path.display()))?;
            let test = select_split(&matrix, &labels, &splits, Split::Test)?;
            Ok((test.features, test.labels, test.rows))
        }
        Featurizer::Tfidf(stats) => {
            if cache.is_some() {
                bail!("featurizer mismatch: model was trained on tfidf features, --cache supplied");
            }
            let corpus = dataset.load()?;
            let (_, test_records) = corpus.split()?;
            let rows: Vec<usize> = corpus
                .records()
                .iter()
                .enumerate()
                .filter(|(_, r)| r.split == Some(Split::Test))
                .map(|(i, _)| i)
                .collect();
            let vectors: Vec<_> = test_records
                .iter()
                .map(|r| tfidf::transform(&basic_tokenize(&r.text, true), stats))
                .collect();
            let labels = test_records.iter().map(|r| r.label).collect();
            Ok((densify(&vectors)?, labels, rows))
        }
    }
}

pub fn summary_line(kind: &str, eval: &Evaluation) -> String {
    format!(
        "{kind}: accuracy {:.4} precision {:.4} recall {:.4} f1 {:.4} auc {}",
        eval.report.accuracy,
        eval.report.precision,
        eval.report.recall,
        eval.report.f1,
        eval.report
            .auc
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "n/a".into()),
    )
}

pub fn run(args: EvalArgs) -> Result<ExitCode> {
    let (model, _) = load_model_from(args.model.clone())?;
    let (features, labels, _) = test_features(&model, &args.cache, &args.dataset)?;
    if labels.is_empty() {
        bail!("no held-out rows to evaluate");
    }
    let evaluation = evaluate(
        &model.params,
        model.training_config.threshold,
        &features,
        &labels,
    )?;

    ensure_out_dir(&args.out_dir)?;
    let metrics_path = args.out_dir.join("metrics.json");
    std::fs::write(
        &metrics_path,
        serde_json::to_string_pretty(&evaluation.report)? + "\n",
    )?;
    let roc_path = args.out_dir.join("roc.csv");
    emit_roc_csv(&evaluation.roc, &roc_path)?;

    println!(
        "evaluated {} on {} held-out rows",
        model.model_kind.as_str(),
        labels.len()
    );
    println!("{}", summary_line(model.model_kind.as_str(), &evaluation));
    println!("wrote {} and {}", metrics_path.display(), roc_path.display());
    Ok(ExitCode::SUCCESS)
}
