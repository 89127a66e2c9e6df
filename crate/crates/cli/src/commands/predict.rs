//! `promptguard predict`: one prompt in, label and score out.
//!
//! Exit code 0 means legitimate, 3 means malicious, so shell pipelines
//! can gate on detection; other errors exit 2.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;

use promptguard_core::embedding::CachedCorpusProvider;
use promptguard_core::guard::{round4, Detector, EmbeddingBackend};
use promptguard_core::persistence::{Featurizer, TrainedModel};
use promptguard_core::tokenizer::load_vocab;

use crate::common::{load_model_from, DatasetArgs, PoolingArg};

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Saved model JSON; defaults to $PROMPTGUARD_MODEL_DIR/model.json.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Vocabulary file (embedding models).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// PGEMB1 cache to look prompts up in (embedding models).
    #[arg(long)]
    pub cache: Option<PathBuf>,
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// ONNX encoder for embedding prompts on the fly.
    #[arg(long)]
    pub model_file: Option<PathBuf>,
    /// Must match the value used when the cache was written.
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    #[arg(long, value_enum, default_value = "mean")]
    pub pooling: PoolingArg,
    /// The prompt to classify.
    pub text: String,
}

pub fn build_detector(model: TrainedModel, args: &PredictArgs) -> Result<Detector> {
    let backend = match &model.featurizer {
        Featurizer::Tfidf(_) => None,
        Featurizer::EmbeddingCache { .. } => {
            let vocab_path = args
                .vocab
                .as_ref()
                .context("embedding models need --vocab")?;
            let vocab = load_vocab(vocab_path)
                .with_context(|| format!("loading vocabulary {}", vocab_path.display()))?;
            if let Some(model_file) = &args.model_file {
                Some(onnx_backend(model_file, vocab, args)?)
            } else {
                let cache = args
                    .cache
                    .as_ref()
                    .context("embedding models need --cache (with --dataset) or --model-file")?;
                let corpus = args.dataset.load().context(
                    "embedding cache lookup needs --dataset to map prompts to cache rows",
                )?;
                let provider = CachedCorpusProvider::open(cache, &corpus, &vocab, args.max_len)?;
                Some(EmbeddingBackend {
                    provider: Box::new(provider),
                    vocab,
                    max_len: args.max_len,
                })
            }
        }
    };
    Ok(Detector::new(model, backend)?)
}

#[cfg(feature = "onnx")]
fn onnx_backend(
    model_file: &std::path::Path,
    vocab: promptguard_core::tokenizer::Vocab,
    args: &PredictArgs,
) -> Result<EmbeddingBackend> {
    use promptguard_core::embedding::Pooling;
    use promptguard_core::onnx::OnnxEncoder;
    let pooling = match args.pooling {
        PoolingArg::Mean => Pooling::Mean,
        PoolingArg::Cls => Pooling::Cls,
    };
    let encoder = OnnxEncoder::load(model_file, args.max_len, vocab.pad_id(), pooling)
        .with_context(|| format!("loading encoder {}", model_file.display()))?;
    Ok(EmbeddingBackend {
        provider: Box::new(encoder),
        vocab,
        max_len: args.max_len,
    })
}

#[cfg(not(feature = "onnx"))]
fn onnx_backend(
    _model_file: &std::path::Path,
    _vocab: promptguard_core::tokenizer::Vocab,
    _args: &PredictArgs,
) -> Result<EmbeddingBackend> {
    bail!("this build has no ONNX runtime; rebuild with --features onnx or use --cache")
}

pub fn run(args: PredictArgs) -> Result<ExitCode> {
    if args.text.trim().is_empty() {
        bail!("text is empty");
    }
    if !(2..=512).contains(&args.max_len) {
        bail!("--max-len must be between 2 and 512");
    }
    let (model, _) = load_model_from(args.model.clone())?;
    let detector = build_detector(model, &args)?;
    let result = detector.classify(&args.text)?;
    let label = if result.label == 1 {
        "malicious"
    } else {
        "legitimate"
    };
    println!("{label} {:.4}", round4(result.score));
    Ok(if result.label == 1 {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}
