//! `promptguard embed`: corpus -> ONNX encoder -> PGEMB1 cache.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;

use crate::common::{DatasetArgs, PoolingArg};

#[derive(Args, Debug)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub dataset: DatasetArgs,
    /// Vocabulary file, one token per line.
    #[arg(long)]
    pub vocab: PathBuf,
    /// ONNX encoder exported from the pretrained checkpoint.
    #[arg(long)]
    pub model_file: PathBuf,
    /// Token-sequence length; prompts are truncated to fit.
    #[arg(long, default_value_t = 128)]
    pub max_len: usize,
    #[arg(long, value_enum, default_value = "mean")]
    pub pooling: PoolingArg,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Output cache path.
    #[arg(long)]
    pub out: PathBuf,
}

#[cfg(feature = "onnx")]
pub fn run(args: EmbedArgs) -> Result<ExitCode> {
    use promptguard_core::dataset::Split;
    use promptguard_core::embedding::{save_cache, EmbeddingMatrix, EmbeddingProvider, Pooling};
    use promptguard_core::onnx::OnnxEncoder;
    use promptguard_core::tokenizer::{encode, load_vocab};
    use rayon::prelude::*;

    if !(2..=512).contains(&args.max_len) {
        anyhow::bail!("--max-len must be between 2 and 512");
    }
    let corpus = args.dataset.load()?;
    // Every record needs a split tag for the cache metadata.
    corpus.split()?;
    if corpus.is_empty() {
        anyhow::bail!("corpus is empty");
    }

    let vocab = load_vocab(&args.vocab)
        .with_context(|| format!("loading vocabulary {}", args.vocab.display()))?;
    let pooling = match args.pooling {
        PoolingArg::Mean => Pooling::Mean,
        PoolingArg::Cls => Pooling::Cls,
    };
    let encoder = OnnxEncoder::load(&args.model_file, args.max_len, vocab.pad_id(), pooling)
        .with_context(|| format!("loading encoder {}", args.model_file.display()))?;

    let sequences: Vec<_> = corpus
        .records()
        .iter()
        .map(|r| encode(&r.text, &vocab, args.max_len))
        .collect();
    let rows: Vec<Vec<f32>> = sequences
        .par_iter()
        .map(|seq| {
            encoder
                .embed_batch(std::slice::from_ref(seq))
                .map(|m| m.row(0).to_vec())
        })
        .collect::<Result<_, _>>()?;
    let matrix = EmbeddingMatrix::from_rows(rows)?;

    let labels: Vec<u8> = corpus.records().iter().map(|r| r.label).collect();
    let splits: Vec<Split> = corpus
        .records()
        .iter()
        .map(|r| r.split.expect("validated above"))
        .collect();
    save_cache(&matrix, &labels, &splits, &args.out)?;
    println!(
        "wrote {}x{} embeddings to {} (pooling {}, max_len {}, seed {})",
        matrix.n_rows(),
        matrix.dim(),
        args.out.display(),
        args.pooling.as_str(),
        args.max_len,
        args.seed
    );
    Ok(ExitCode::SUCCESS)
}

#[cfg(not(feature = "onnx"))]
pub fn run(_args: EmbedArgs) -> Result<ExitCode> {
    anyhow::bail!("this build has no ONNX runtime; rebuild with --features onnx")
}
