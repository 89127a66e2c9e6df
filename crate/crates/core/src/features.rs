//! Dense f64 feature matrices fed to the classifiers, plus the split
//! selection that is the single path from cached embeddings or TF-IDF
//! vectors into training and evaluation.

use thiserror::Error;

use crate::dataset::Split;
use crate::embedding::EmbeddingMatrix;
use crate::tfidf::SparseVector;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature rows disagree on dimension: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },
    #[error("metadata length {meta} does not match row count {rows}")]
    MetadataMismatch { meta: usize, rows: usize },
}

/// Row-major n x d matrix of f64 features.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f64>,
    cols: usize,
}

impl FeatureMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self, FeatureError> {
        let cols = rows.first().map(|r| r.len()).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in &rows {
            if row.len() != cols {
                return Err(FeatureError::DimMismatch {
                    left: cols,
                    right: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { data, cols })
    }

    pub fn n_rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }
}

/// Features, labels and the originating row indices for one split.
#[derive(Debug, Clone)]
pub struct SplitFeatures {
    pub features: FeatureMatrix,
    pub labels: Vec<u8>,
    /// Indices into the source matrix/corpus each row came from. Training
    /// code never sees rows outside this selection.
    pub rows: Vec<usize>,
}

/// Select one split of a cached embedding matrix as classifier input.
pub fn select_split(
    matrix: &EmbeddingMatrix,
    labels: &[u8],
    splits: &[Split],
    which: Split,
) -> Result<SplitFeatures, FeatureError> {
    if labels.len() != matrix.n_rows() || splits.len() != matrix.n_rows() {
        return Err(FeatureError::MetadataMismatch {
            meta: labels.len().min(splits.len()),
            rows: matrix.n_rows(),
        });
    }
    let rows: Vec<usize> = (0..matrix.n_rows())
        .filter(|&i| splits[i] == which)
        .collect();
    let features = FeatureMatrix::from_rows(
        rows.iter()
            .map(|&i| matrix.row(i).iter().map(|&v| v as f64).collect())
            .collect(),
    )?;
    let labels = rows.iter().map(|&i| labels[i]).collect();
    Ok(SplitFeatures {
        features,
        labels,
        rows,
    })
}

/// Densify sparse TF-IDF vectors into a classifier input matrix.
pub fn densify(vectors: &[SparseVector]) -> Result<FeatureMatrix, FeatureError> {
    FeatureMatrix::from_rows(vectors.iter().map(SparseVector::to_dense).collect())
}
