//! `promptguard train`: fit one classifier on the train split and save it.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;

use promptguard_core::guard::evaluate;
use promptguard_core::persistence::{save_model, TrainedModel};

use crate::common::{ensure_out_dir, ClassifierArg, DatasetArgs, FeaturizerArg};
use crate::commands::pipeline::{fit_kind, prepare_features, Hyper, HyperArgs};

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// PGEMB1 embedding cache (embedding featurizer).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub featurizer: Option<FeaturizerArg>,
    #[arg(long, value_enum)]
    pub classifier: ClassifierArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, env = "PROMPTGUARD_MODEL_DIR", default_value = ".")]
    pub out_dir: PathBuf,
    /// Identifier recorded with embedding models (default: cache stem).
    #[arg(long)]
    pub model_id: Option<String>,
    #[command(flatten)]
    pub hyper: HyperArgs,
}

pub fn run(args: TrainArgs) -> Result<ExitCode> {
    let (prepared, _) = prepare_features(
        &args.cache,
        &args.dataset,
        args.featurizer,
        args.model_id.clone(),
    )?;
    let hyper = Hyper::from_args(&args.hyper, args.seed);
    let kind = args.classifier.kind();

    let params = fit_kind(kind, &prepared.train.features, &prepared.train.labels, &hyper)?;
    let train_eval = evaluate(&params, 0.5, &prepared.train.features, &prepared.train.labels)?;

    let model = TrainedModel::new(prepared.featurizer, params, hyper.training_config(kind));
    ensure_out_dir(&args.out_dir)?;
    let path = args.out_dir.join(format!("model-{}.json", kind.as_str()));
    save_model(&model, &path)?;

    println!(
        "trained {} on {} rows (d={}, seed {}); train accuracy {:.4}",
        kind.as_str(),
        prepared.train.features.n_rows(),
        prepared.train.features.n_cols(),
        args.seed,
        train_eval.report.accuracy,
    );
    println!("saved {}", path.display());
    Ok(ExitCode::SUCCESS)
}
