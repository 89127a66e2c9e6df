//! Prompt embeddings: pooling, the PGEMB1 cache format and the provider
//! abstraction that lets everything downstream run without the transformer.
//!
//! A provider either runs a neural-network interchange model (see the
//! `onnx` module, feature-gated) or serves vectors recorded in a cache
//! file. Cache layout "PGEMB1":
//!
//! ```text
//! bytes 0..8    magic  b"PGEMB1\0\0"
//! bytes 8..12   u32 LE record count n
//! bytes 12..16  u32 LE dimension d
//! bytes 16..24  u64 LE reserved (written as zero)
//! then n pairs  (u8 label, u8 split code: 0 = train, 1 = test)
//! then n*d      f32 LE values, row-major
//! ```

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::dataset::{LabeledCorpus, Split};
use crate::tokenizer::{encode, TokenSequence, Vocab};

pub const CACHE_MAGIC: [u8; 8] = *b"PGEMB1\0\0";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding rows disagree on dimension: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("non-finite embedding value in row {row}")]
    NonFinite { row: usize },
    #[error("attention mask selects no positions")]
    AllMasked,
    #[error("hidden state length {len} is not a multiple of dim {dim} times mask length {mask}")]
    ShapeMismatch { len: usize, dim: usize, mask: usize },
    #[error("no sequences to embed")]
    NoSequences,
    #[error("{path} is not a PGEMB1 file")]
    BadMagic { path: String },
    #[error("truncated PGEMB1 file {path}: expected {expected} bytes after header, found {found}")]
    Truncated {
        path: String,
        expected: usize,
        found: usize,
    },
    #[error("invalid {what} code {value} at record {row}")]
    BadMetadata {
        what: &'static str,
        value: u8,
        row: usize,
    },
    #[error("cache holds {cache} records but the corpus has {corpus}")]
    CorpusMismatch { cache: usize, corpus: usize },
    #[error("cache record {row} disagrees with the corpus on {what}")]
    CorpusMetadataMismatch { row: usize, what: &'static str },
    #[error("sequence is not present in the embedding cache; re-embed or check --vocab/--max-len")]
    SequenceNotCached,
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("model runtime error: {0}")]
    Runtime(String),
}

/// Dense n x d matrix of prompt vectors, row i aligned with record i of the
/// source corpus. Stored in IEEE-754 single precision, the cache precision.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Vec<f32>,
    dim: usize,
}

impl EmbeddingMatrix {
    pub fn from_rows(rows: Vec<Vec<f32>>) -> Result<Self, EmbedError> {
        let dim = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(EmbedError::DimMismatch {
                    left: dim,
                    right: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(EmbedError::NonFinite { row: i });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { data, dim })
    }

    pub fn from_raw(data: Vec<f32>, dim: usize) -> Result<Self, EmbedError> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(EmbedError::ShapeMismatch {
                len: data.len(),
                dim,
                mask: 0,
            });
        }
        Ok(Self { data, dim })
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim)
    }
}

/// How a sequence of per-token hidden states collapses to one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pooling {
    /// Mean over unmasked positions (default).
    Mean,
    /// The vector at position 0, the [CLS] slot.
    Cls,
}

/// Mean of the unmasked rows of a T x d hidden-state matrix (row-major).
///
/// Uses a running mean, so a matrix whose unmasked rows all equal v
/// returns v exactly.
pub fn mean_pool(hidden: &[f64], dim: usize, mask: &[u8]) -> Result<Vec<f64>, EmbedError> {
    if dim == 0 || hidden.len() != dim * mask.len() {
        return Err(EmbedError::ShapeMismatch {
            len: hidden.len(),
            dim,
            mask: mask.len(),
        });
    }
    let mut pooled = vec![0.0; dim];
    let mut count = 0.0;
    for (row, &m) in hidden.chunks_exact(dim).zip(mask) {
        if m == 0 {
            continue;
        }
        count += 1.0;
        for (acc, &value) in pooled.iter_mut().zip(row) {
            *acc += (value - *acc) / count;
        }
    }
    if count == 0.0 {
        return Err(EmbedError::AllMasked);
    }
    Ok(pooled)
}

/// Where a provider's vectors come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProviderKind {
    TransformerRuntime,
    CacheFile,
}

/// Source of prompt vectors. `dim` is fixed for the provider's lifetime and
/// `embed_batch` keeps row i aligned with sequence i.
pub trait EmbeddingProvider: Send + Sync {
    fn kind(&self) -> ProviderKind;
    fn dim(&self) -> usize;
    fn embed_batch(&self, sequences: &[TokenSequence]) -> Result<EmbeddingMatrix, EmbedError>;
}

/// Write a cache file. `labels` and `splits` must be row-aligned with the
/// matrix.
pub fn save_cache(
    matrix: &EmbeddingMatrix,
    labels: &[u8],
    splits: &[Split],
    path: &Path,
) -> Result<(), EmbedError> {
    let n = matrix.n_rows();
    assert!(
        labels.len() == n && splits.len() == n,
        "labels and splits must align with matrix rows"
    );
    let io_err = |source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf = Vec::with_capacity(24 + n * 2 + matrix.data.len() * 4);
    buf.extend_from_slice(&CACHE_MAGIC);
    buf.extend_from_slice(&(n as u32).to_le_bytes());
    buf.extend_from_slice(&(matrix.dim() as u32).to_le_bytes());
    buf.extend_from_slice(&0u64.to_le_bytes());
    for (label, split) in labels.iter().zip(splits) {
        buf.push(*label);
        buf.push(split.code());
    }
    for value in &matrix.data {
        buf.extend_from_slice(&value.to_le_bytes());
    }
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    file.write_all(&buf).map_err(io_err)?;
    Ok(())
}

/// Read a cache file back; bit-exact with respect to [`save_cache`].
pub fn load_cache(path: &Path) -> Result<(EmbeddingMatrix, Vec<u8>, Vec<Split>), EmbedError> {
    let io_err = |source| EmbedError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::open(path).map_err(io_err)?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(io_err)?;

    if bytes.len() < 24 || bytes[..8] != CACHE_MAGIC {
        return Err(EmbedError::BadMagic {
            path: path.display().to_string(),
        });
    }
    let n = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let dim = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    // Bytes 16..24 are reserved; ignored on read.
    let expected = n * 2 + n * dim * 4;
    let payload = &bytes[24..];
    if payload.len() != expected {
        return Err(EmbedError::Truncated {
            path: path.display().to_string(),
            expected,
            found: payload.len(),
        });
    }

    let mut labels = Vec::with_capacity(n);
    let mut splits = Vec::with_capacity(n);
    for row in 0..n {
        let label = payload[row * 2];
        let split_code = payload[row * 2 + 1];
        if label > 1 {
            return Err(EmbedError::BadMetadata {
                what: "label",
                value: label,
                row,
            });
        }
        let split = Split::from_code(split_code).ok_or(EmbedError::BadMetadata {
            what: "split",
            value: split_code,
            row,
        })?;
        labels.push(label);
        splits.push(split);
    }

    let mut data = Vec::with_capacity(n * dim);
    let floats = &payload[n * 2..];
    for chunk in floats.chunks_exact(4) {
        data.push(f32::from_le_bytes(chunk.try_into().unwrap()));
    }
    let matrix = if n == 0 {
        EmbeddingMatrix { data, dim }
    } else {
        EmbeddingMatrix::from_raw(data, dim)?
    };
    Ok((matrix, labels, splits))
}

/// Cache-backed provider: serves recorded vectors for sequences whose
/// token ids match a corpus row, so prediction and serving work with no
/// transformer runtime present.
pub struct CachedCorpusProvider {
    matrix: EmbeddingMatrix,
    labels: Vec<u8>,
    splits: Vec<Split>,
    index: HashMap<Vec<u32>, usize>,
}

impl CachedCorpusProvider {
    /// Load a cache and index it by the token sequences of the corpus it
    /// was built from. The corpus must align with the cache row-for-row.
    pub fn open(
        cache_path: &Path,
        corpus: &LabeledCorpus,
        vocab: &Vocab,
        max_len: usize,
    ) -> Result<Self, EmbedError> {
        let (matrix, labels, splits) = load_cache(cache_path)?;
        if matrix.n_rows() != corpus.len() {
            return Err(EmbedError::CorpusMismatch {
                cache: matrix.n_rows(),
                corpus: corpus.len(),
            });
        }
        let mut index = HashMap::with_capacity(corpus.len());
        for (row, record) in corpus.records().iter().enumerate() {
            if record.label != labels[row] {
                return Err(EmbedError::CorpusMetadataMismatch { row, what: "label" });
            }
            if let Some(split) = record.split {
                if split != splits[row] {
                    return Err(EmbedError::CorpusMetadataMismatch { row, what: "split" });
                }
            }
            let seq = encode(&record.text, vocab, max_len);
            // Duplicate texts keep the first row; identical sequences map to
            // identical vectors under any deterministic encoder.
            index.entry(seq.ids).or_insert(row);
        }
        Ok(Self {
            matrix,
            labels,
            splits,
            index,
        })
    }

    pub fn matrix(&self) -> &EmbeddingMatrix {
        &self.matrix
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn splits(&self) -> &[Split] {
        &self.splits
    }

    fn lookup(&self, sequence: &TokenSequence) -> Result<usize, EmbedError> {
        let real = sequence.real_len();
        let key = &sequence.ids[..real];
        self.index
            .get(key)
            .copied()
            .ok_or(EmbedError::SequenceNotCached)
    }
}

impl EmbeddingProvider for CachedCorpusProvider {
    fn kind(&self) -> ProviderKind {
        ProviderKind::CacheFile
    }

    fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn embed_batch(&self, sequences: &[TokenSequence]) -> Result<EmbeddingMatrix, EmbedError> {
        if sequences.is_empty() {
            return Err(EmbedError::NoSequences);
        }
        let mut rows = Vec::with_capacity(sequences.len());
        for seq in sequences {
            let row = self.lookup(seq)?;
            rows.push(self.matrix.row(row).to_vec());
        }
        EmbeddingMatrix::from_rows(rows)
    }
}
