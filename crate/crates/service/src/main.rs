//! promptguard-serve: load a trained detector and listen for classify
//! requests.

use std::net::SocketAddr;
use std::path::PathBuf;

use clap::Parser;

use promptguard_core::dataset::{load_corpus, Format};
use promptguard_core::embedding::CachedCorpusProvider;
use promptguard_core::guard::{Detector, EmbeddingBackend};
use promptguard_core::persistence::{load_model, Featurizer};
use promptguard_core::tokenizer::load_vocab;

use promptguard_service::{router, AppState};

#[derive(Parser)]
#[command(
    name = "promptguard-serve",
    version,
    about = "HTTP guard endpoint for a trained prompt-injection detector"
)]
struct ServeArgs {
    /// Saved model JSON; defaults to $PROMPTGUARD_MODEL_DIR/model.json.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8722")]
    listen: SocketAddr,
    /// PGEMB1 cache backing embedding-featurizer models.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Corpus the cache was built from (row-aligned).
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Vocabulary file for embedding-featurizer models.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Must match the value used when the cache was written.
    #[arg(long, default_value_t = 128)]
    max_len: usize,
}

fn resolve_model_path(flag: Option<PathBuf>) -> Result<PathBuf, String> {
    if let Some(path) = flag {
        if path.exists() {
            return Ok(path);
        }
        return Err(format!("model file {} not found", path.display()));
    }
    match std::env::var_os("PROMPTGUARD_MODEL_DIR") {
        Some(dir) => {
            let path = PathBuf::from(dir).join("model.json");
            if path.exists() {
                Ok(path)
            } else {
                Err(format!("no --model given and {} does not exist", path.display()))
            }
        }
        None => Err("no --model given and PROMPTGUARD_MODEL_DIR is unset".into()),
    }
}

fn build_detector(args: &ServeArgs) -> Result<Detector, String> {
    let model_path = resolve_model_path(args.model.clone())?;
    let model = load_model(&model_path).map_err(|e| e.to_string())?;
    let backend = match &model.featurizer {
        Featurizer::Tfidf(_) => None,
        Featurizer::EmbeddingCache { .. } => {
            let cache = args
                .cache
                .as_ref()
                .ok_or("embedding models need --cache, --dataset and --vocab")?;
            let dataset = args
                .dataset
                .as_ref()
                .ok_or("embedding models need --dataset alongside --cache")?;
            let vocab_path = args
                .vocab
                .as_ref()
                .ok_or("embedding models need --vocab")?;
            let corpus = load_corpus(dataset, Format::infer(dataset).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let vocab = load_vocab(vocab_path).map_err(|e| e.to_string())?;
            let provider = CachedCorpusProvider::open(cache, &corpus, &vocab, args.max_len)
                .map_err(|e| e.to_string())?;
            Some(EmbeddingBackend {
                provider: Box::new(provider),
                vocab,
                max_len: args.max_len,
            })
        }
    };
    Detector::new(model, backend).map_err(|e| e.to_string())
}

#[tokio::main]
async fn main() {
    let args = ServeArgs::parse();
    let detector = match build_detector(&args) {
        Ok(detector) => detector,
        Err(message) => {
            eprintln!("error: {message}");
            std::process::exit(2);
        }
    };
    let model_kind = detector.model().model_kind.as_str();
    let app = router(AppState::ready(detector));

    let listener = match tokio::net::TcpListener::bind(args.listen).await {
        Ok(listener) => listener,
        Err(err) => {
            eprintln!("error: cannot bind {}: {err}", args.listen);
            std::process::exit(2);
        }
    };
    println!("serving {model_kind} detector on http://{}", args.listen);
    if let Err(err) = axum::serve(listener, app).await {
        eprintln!("error: server terminated: {err}");
        std::process::exit(1);
    }
}
