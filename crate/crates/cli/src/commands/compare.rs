//! `promptguard compare`: all four classifiers under one seed, one table.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;

use promptguard_core::classifiers::ModelKind;
use promptguard_core::dataset::LabeledCorpus;
use promptguard_core::guard::{evaluate, round4, Evaluation};
use promptguard_core::metrics::emit_roc_csv;

use crate::common::{ensure_out_dir, DatasetArgs, FeaturizerArg};
use crate::commands::pipeline::{fit_kind, prepare_features, Hyper, HyperArgs, PreparedData};

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub featurizer: Option<FeaturizerArg>,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub model_id: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

const ORDER: [(ModelKind, &str); 4] = [
    (ModelKind::Gnb, "Gaussian Naive Bayes"),
    (ModelKind::RandomForest, "Random Forest"),
    (ModelKind::LinearSvm, "Support Vector Machine"),
    (ModelKind::Logreg, "Logistic Regression"),
];

pub struct ModelRun {
    pub kind: ModelKind,
    pub display: &'static str,
    pub eval: Evaluation,
}

/// Train and evaluate the four classifiers on already-prepared features.
pub fn run_all(prepared: &PreparedData, hyper: &Hyper) -> Result<Vec<ModelRun>> {
    if prepared.test.labels.is_empty() {
        bail!("no held-out rows to evaluate");
    }
    ORDER
        .iter()
        .map(|&(kind, display)| {
            let params =
                fit_kind(kind, &prepared.train.features, &prepared.train.labels, hyper)?;
            let eval = evaluate(&params, 0.5, &prepared.test.features, &prepared.test.labels)?;
            Ok(ModelRun { kind, display, eval })
        })
        .collect()
}

pub fn markdown_table(runs: &[ModelRun]) -> String {
    let mut out = String::from(
        "| Model | accuracy | precision | recall | F1-score |\n|---|---|---|---|---|\n",
    );
    for run in runs {
        out.push_str(&format!(
            "| {} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
            run.display,
            run.eval.report.accuracy,
            run.eval.report.precision,
            run.eval.report.recall,
            run.eval.report.f1,
        ));
    }
    out
}

fn json_table(runs: &[ModelRun], seed: u64, featurizer: &str) -> serde_json::Value {
    serde_json::json!({
        "seed": seed,
        "featurizer": featurizer,
        "models": runs.iter().map(|run| serde_json::json!({
            "model": run.kind.as_str(),
            "accuracy": run.eval.report.accuracy,
            "precision": run.eval.report.precision,
            "recall": run.eval.report.recall,
            "f1": run.eval.report.f1,
            "auc": run.eval.report.auc,
            "confusion": run.eval.confusion,
        })).collect::<Vec<_>>(),
    })
}

/// Misclassified held-out prompts with their scores; texts appear when a
/// dataset accompanies the cache.
fn write_misclassified(
    path: &PathBuf,
    run: &ModelRun,
    rows: &[usize],
    labels: &[u8],
    corpus: Option<&LabeledCorpus>,
) -> Result<usize> {
    let mut writer = csv::Writer::from_path(path)?;
    writer.write_record(["row", "label", "predicted", "score", "text"])?;
    let mut count = 0;
    for (i, (&pred, &label)) in run.eval.predictions.iter().zip(labels).enumerate() {
        if pred == label {
            continue;
        }
        count += 1;
        let source_row = rows[i];
        let text = corpus
            .and_then(|c| c.records().get(source_row))
            .map(|r| r.text.as_str())
            .unwrap_or("");
        writer.write_record([
            source_row.to_string(),
            label.to_string(),
            pred.to_string(),
            format!("{:.4}", round4(run.eval.scores[i])),
            text.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(count)
}

pub fn run(args: CompareArgs) -> Result<ExitCode> {
    let (prepared, corpus) = prepare_features(
        &args.cache,
        &args.dataset,
        args.featurizer,
        args.model_id.clone(),
    )?;
    let hyper = Hyper::from_args(&args.hyper, args.seed);
    let runs = run_all(&prepared, &hyper)?;

    ensure_out_dir(&args.out_dir)?;
    let table = markdown_table(&runs);
    std::fs::write(args.out_dir.join("table.md"), &table)?;
    std::fs::write(
        args.out_dir.join("compare.json"),
        serde_json::to_string_pretty(&json_table(&runs, args.seed, prepared.featurizer.name()))?
            + "\n",
    )?;
    for run in &runs {
        emit_roc_csv(
            &run.eval.roc,
            &args.out_dir.join(format!("roc-{}.csv", run.kind.as_str())),
        )?;
        let path = args
            .out_dir
            .join(format!("misclassified-{}.csv", run.kind.as_str()));
        let count = write_misclassified(
            &path,
            run,
            &prepared.test.rows,
            &prepared.test.labels,
            corpus.as_ref(),
        )?;
        let cm = &run.eval.confusion;
        debug_assert_eq!(count, cm.fp + cm.fn_);
    }

    println!(
        "compared 4 classifiers on {} train / {} test rows (featurizer {}, seed {})",
        prepared.train.labels.len(),
        prepared.test.labels.len(),
        prepared.featurizer.name(),
        args.seed
    );
    print!("{table}");
    println!("outputs in {}", args.out_dir.display());
    Ok(ExitCode::SUCCESS)
}
