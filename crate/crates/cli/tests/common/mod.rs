//! Synthetic corpora and embedding caches for integration tests. All
//! generation flows from explicit seeds, so every test is reproducible.

#![allow(dead_code)]

use std::path::Path;

use promptguard_core::dataset::{LabeledCorpus, PromptRecord, Split};
use promptguard_core::embedding::{save_cache, EmbeddingMatrix};
use promptguard_core::rng::SplitMix64;

pub const BENIGN_WORDS: [&str; 12] = [
    "what", "is", "the", "weather", "please", "translate", "summarize", "report", "how", "today",
    "capital", "recipe",
];
pub const MALICIOUS_WORDS: [&str; 12] = [
    "ignore", "previous", "instructions", "disregard", "system", "prompt", "reveal", "secret",
    "override", "obey", "print", "hidden",
];

/// Every word the synthetic texts can contain, plus specials. Tests write
/// this as the vocabulary file backing cache lookups.
pub fn vocab_lines() -> Vec<String> {
    let mut lines: Vec<String> = ["[PAD]", "[UNK]", "[CLS]", "[SEP]"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    lines.extend(BENIGN_WORDS.iter().map(|w| w.to_string()));
    lines.extend(MALICIOUS_WORDS.iter().map(|w| w.to_string()));
    lines
}

pub fn write_vocab(path: &Path) {
    std::fs::write(path, vocab_lines().join("\n") + "\n").unwrap();
}

fn synth_text(rng: &mut SplitMix64, label: u8, index: usize) -> String {
    let pool: &[&str] = if label == 1 {
        &MALICIOUS_WORDS
    } else {
        &BENIGN_WORDS
    };
    let other: &[&str] = if label == 1 {
        &BENIGN_WORDS
    } else {
        &MALICIOUS_WORDS
    };
    let len = 4 + rng.index(5);
    let mut words: Vec<&str> = (0..len)
        .map(|_| {
            // Mostly class words with some crosstalk so the task is not
            // trivially separable for TF-IDF.
            if rng.index(10) < 8 {
                pool[rng.index(pool.len())]
            } else {
                other[rng.index(other.len())]
            }
        })
        .collect();
    // A distinct tail keeps texts unique so cache lookups stay exact.
    let tail = pool[index % pool.len()];
    words.push(tail);
    words.join(" ")
}

/// Deterministic labeled corpus with both classes in both splits.
pub fn synth_corpus(n_train: usize, n_test: usize, seed: u64) -> LabeledCorpus {
    let mut rng = SplitMix64::new(seed);
    let mut records = Vec::with_capacity(n_train + n_test);
    for i in 0..n_train + n_test {
        let split = if i < n_train { Split::Train } else { Split::Test };
        let label = (i % 2) as u8;
        records.push(PromptRecord {
            text: synth_text(&mut rng, label, i),
            label,
            split: Some(split),
        });
    }
    LabeledCorpus::new(records)
}

fn standard_normal(rng: &mut SplitMix64) -> f64 {
    let u1 = 1.0 - rng.next_f64();
    let u2 = rng.next_f64();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Class-separated Gaussian embeddings aligned with the corpus rows.
pub fn synth_matrix(corpus: &LabeledCorpus, dim: usize, seed: u64) -> EmbeddingMatrix {
    let mut rng = SplitMix64::new(seed);
    let rows: Vec<Vec<f32>> = corpus
        .records()
        .iter()
        .map(|record| {
            let center = if record.label == 1 { 0.6 } else { -0.6 };
            (0..dim)
                .map(|_| (center + standard_normal(&mut rng)) as f32)
                .collect()
        })
        .collect();
    EmbeddingMatrix::from_rows(rows).unwrap()
}

/// Write corpus + matrix as a PGEMB1 cache.
pub fn write_cache(corpus: &LabeledCorpus, matrix: &EmbeddingMatrix, path: &Path) {
    let labels: Vec<u8> = corpus.records().iter().map(|r| r.label).collect();
    let splits: Vec<Split> = corpus.records().iter().map(|r| r.split.unwrap()).collect();
    save_cache(matrix, &labels, &splits, path).unwrap();
}

/// Corpus, cache and vocabulary files under one temp directory.
pub struct SynthFiles {
    pub dir: tempfile::TempDir,
    pub corpus: LabeledCorpus,
    pub dataset_path: std::path::PathBuf,
    pub cache_path: std::path::PathBuf,
    pub vocab_path: std::path::PathBuf,
}

pub fn synth_files(n_train: usize, n_test: usize, dim: usize, seed: u64) -> SynthFiles {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(n_train, n_test, seed);
    let matrix = synth_matrix(&corpus, dim, seed ^ 0xABCD);
    let dataset_path = dir.path().join("corpus.jsonl");
    corpus.save_jsonl(&dataset_path).unwrap();
    let cache_path = dir.path().join("embeddings.pgemb");
    write_cache(&corpus, &matrix, &cache_path);
    let vocab_path = dir.path().join("vocab.txt");
    write_vocab(&vocab_path);
    SynthFiles {
        dir,
        corpus,
        dataset_path,
        cache_path,
        vocab_path,
    }
}

/// Run the promptguard binary with the given arguments.
pub fn promptguard(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_promptguard"))
        .args(args)
        .env_remove("PROMPTGUARD_MODEL_DIR")
        .output()
        .expect("binary runs")
}

pub fn stdout_of(output: &std::process::Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn stderr_of(output: &std::process::Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}
