//! TF-IDF featurizer, the bag-of-words baseline to compare embeddings against.
//!
//! Definitions, with `n_{t,d}` the count of term t in document d, `N_d` the
//! token count of d, `N` the corpus size and `df(t)` the number of documents
//! containing t:
//!
//! ```text
//! TF(t, d)  = n_{t,d} / N_d
//! IDF(t)    = ln(N / df(t))          (natural log, unsmoothed)
//! TF-IDF    = TF * IDF
//! ```
//!
//! Terms unseen at fit time contribute weight 0 at transform time.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TfidfError {
    #[error("document has no tokens")]
    EmptyDocument,
    #[error("corpus has no non-empty documents")]
    EmptyCorpus,
    #[error("term {0:?} is not in the fitted vocabulary")]
    UnknownTerm(String),
}

/// Corpus statistics fitted once and immutable afterwards.
///
/// Vocabulary indices are assigned in lexicographic term order so two fits
/// over the same corpus (in any document order) agree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStats {
    vocab: Vec<String>,
    df: Vec<u32>,
    n_docs: u32,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TermStats {
    pub fn corpus_size(&self) -> u32 {
        self.n_docs
    }

    pub fn vocab_len(&self) -> usize {
        self.vocab.len()
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        if self.index.is_empty() && !self.vocab.is_empty() {
            // Deserialized stats carry no index; fall back to binary search
            // over the sorted vocabulary.
            return self.vocab.binary_search_by(|t| t.as_str().cmp(term)).ok();
        }
        self.index.get(term).copied()
    }

    pub fn document_frequency(&self, term: &str) -> Option<u32> {
        self.term_index(term).map(|i| self.df[i])
    }

    /// Rebuild the term index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }
}

/// Sparse feature vector: strictly increasing indices, no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub entries: Vec<(usize, f64)>,
    pub dim: usize,
}

impl SparseVector {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            dense[i] = w;
        }
        dense
    }
}

/// TF(t, d) over a tokenized document.
pub fn term_frequency(term: &str, doc_tokens: &[String]) -> Result<f64, TfidfError> {
    if doc_tokens.is_empty() {
        return Err(TfidfError::EmptyDocument);
    }
    let count = doc_tokens.iter().filter(|t| t.as_str() == term).count();
    Ok(count as f64 / doc_tokens.len() as f64)
}

/// IDF(t) = ln(N / df(t)). Unknown terms are an error here; `transform`
/// gives them weight 0 instead of calling this.
pub fn inverse_document_frequency(term: &str, stats: &TermStats) -> Result<f64, TfidfError> {
    let df = stats
        .document_frequency(term)
        .ok_or_else(|| TfidfError::UnknownTerm(term.to_string()))?;
    Ok((stats.n_docs as f64 / df as f64).ln())
}

/// Collect vocabulary and document frequencies over a tokenized corpus.
pub fn fit(corpus_tokens: &[Vec<String>]) -> Result<TermStats, TfidfError> {
    if corpus_tokens.iter().all(|d| d.is_empty()) {
        return Err(TfidfError::EmptyCorpus);
    }
    let mut df_map: HashMap<&str, u32> = HashMap::new();
    for doc in corpus_tokens {
        let distinct: HashSet<&str> = doc.iter().map(String::as_str).collect();
        for term in distinct {
            *df_map.entry(term).or_insert(0) += 1;
        }
    }
    let mut vocab: Vec<String> = df_map.keys().map(|t| t.to_string()).collect();
    vocab.sort_unstable();
    let df = vocab.iter().map(|t| df_map[t.as_str()]).collect();
    let mut stats = TermStats {
        vocab,
        df,
        n_docs: corpus_tokens.len() as u32,
        index: HashMap::new(),
    };
    stats.rebuild_index();
    Ok(stats)
}

/// Weight every in-vocabulary term of the document by TF * IDF.
///
/// Zero weights (terms present in every fitted document) are dropped, and
/// out-of-vocabulary terms contribute nothing.
pub fn transform(doc_tokens: &[String], stats: &TermStats) -> SparseVector {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for token in doc_tokens {
        if let Some(i) = stats.term_index(token) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let total = doc_tokens.len() as f64;
    let mut entries: Vec<(usize, f64)> = counts
        .into_iter()
        .map(|(i, count)| {
            let tf = count as f64 / total;
            let idf = (stats.n_docs as f64 / stats.df[i] as f64).ln();
            (i, tf * idf)
        })
        .filter(|&(_, w)| w != 0.0)
        .collect();
    entries.sort_unstable_by_key(|&(i, _)| i);
    SparseVector {
        entries,
        dim: stats.vocab.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;

    fn doc(words: &[&str]) -> Vec<String> {
        words.iter().map(|w| w.to_string()).collect()
    }

    #[test]
    fn tf_examples() {
        let d = doc(&["chatbots", "are", "helpful"]);
        assert_eq!(term_frequency("are", &d).unwrap(), 1.0 / 3.0);
        assert_eq!(term_frequency("absent", &d).unwrap(), 0.0);
        assert_eq!(term_frequency("a", &doc(&["a", "a"])).unwrap(), 1.0);
        assert!(matches!(
            term_frequency("a", &[]),
            Err(TfidfError::EmptyDocument)
        ));
    }

    #[test]
    fn idf_formula_values() {
        // Four-document corpus: term frequencies df = 1, 2 and 4.
        let corpus = vec![
            doc(&["common", "rare"]),
            doc(&["common", "mid"]),
            doc(&["common", "mid"]),
            doc(&["common"]),
        ];
        let stats = fit(&corpus).unwrap();
        let rare = inverse_document_frequency("rare", &stats).unwrap();
        let mid = inverse_document_frequency("mid", &stats).unwrap();
        let common = inverse_document_frequency("common", &stats).unwrap();
        assert!((rare - 4.0f64.ln()).abs() < 1e-12); // ~1.386294
        assert!((mid - 2.0f64.ln()).abs() < 1e-12); // ~0.693147
        assert_eq!(common, 0.0);
        assert!(matches!(
            inverse_document_frequency("nope", &stats),
            Err(TfidfError::UnknownTerm(_))
        ));
    }

    #[test]
    fn fit_counts_documents_not_occurrences() {
        let stats = fit(&[doc(&["a", "b"]), doc(&["b"])]).unwrap();
        assert_eq!(stats.corpus_size(), 2);
        assert_eq!(stats.document_frequency("a"), Some(1));
        assert_eq!(stats.document_frequency("b"), Some(2));

        let repeated = fit(&[doc(&["x", "x", "x"])]).unwrap();
        assert_eq!(repeated.document_frequency("x"), Some(1));

        assert!(matches!(fit(&[]), Err(TfidfError::EmptyCorpus)));
        assert!(matches!(
            fit(&[vec![], vec![]]),
            Err(TfidfError::EmptyCorpus)
        ));
    }

    #[test]
    fn transform_hand_computed() {
        let stats = fit(&[doc(&["a", "b"]), doc(&["b"])]).unwrap();
        let v = transform(&doc(&["a", "b"]), &stats);
        // weight(a) = 1/2 * ln 2; weight(b) = 1/2 * ln 1 = 0, dropped.
        assert_eq!(v.entries.len(), 1);
        let (idx, w) = v.entries[0];
        assert_eq!(idx, stats.term_index("a").unwrap());
        assert!((w - 0.5 * 2.0f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn transform_out_of_vocabulary_only() {
        let stats = fit(&[doc(&["a"]), doc(&["b"])]).unwrap();
        let v = transform(&doc(&["zz", "qq"]), &stats);
        assert!(v.entries.is_empty());
        assert_eq!(v.dim, 2);
    }

    #[test]
    fn ubiquitous_term_always_weighs_zero() {
        let stats = fit(&[doc(&["k", "a"]), doc(&["k"]), doc(&["k", "b"])]).unwrap();
        for tokens in [doc(&["k"]), doc(&["k", "a"]), doc(&["k", "k", "b"])] {
            let v = transform(&tokens, &stats);
            assert!(v.entries.iter().all(|&(i, _)| i != stats.term_index("k").unwrap()));
        }
    }

    #[test]
    fn idf_strictly_decreases_in_df() {
        let n = 10u32;
        let mut last = f64::INFINITY;
        for df in 1..=n {
            let idf = (n as f64 / df as f64).ln();
            assert!(idf < last);
            last = idf;
        }
    }

    /// Dense brute-force oracle: weight of every vocabulary term computed
    /// independently via term_frequency and the printed IDF formula.
    fn dense_oracle(tokens: &[String], stats: &TermStats) -> Vec<f64> {
        (0..stats.vocab_len())
            .map(|i| {
                let term = &stats.vocab[i];
                let count = tokens.iter().filter(|t| *t == term).count() as f64;
                let tf = count / tokens.len() as f64;
                tf * (stats.n_docs as f64 / stats.df[i] as f64).ln()
            })
            .collect()
    }

    #[test]
    fn transform_matches_dense_oracle_on_random_corpora() {
        let terms = [
            "alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa",
            "lambda", "mu", "nu", "xi", "omega",
        ];
        let mut rng = SplitMix64::new(404);
        for _ in 0..200 {
            let n_docs = 1 + rng.index(10);
            let corpus: Vec<Vec<String>> = (0..n_docs)
                .map(|_| {
                    let len = 1 + rng.index(12);
                    (0..len).map(|_| terms[rng.index(terms.len())].to_string()).collect()
                })
                .collect();
            let stats = fit(&corpus).unwrap();
            for tokens in &corpus {
                let sparse = transform(tokens, &stats);
                let dense = dense_oracle(tokens, &stats);
                assert_eq!(sparse.to_dense().len(), dense.len());
                for (got, want) in sparse.to_dense().iter().zip(&dense) {
                    assert!((got - want).abs() < 1e-12);
                }
                // Structure invariants: sorted indices, no zeros.
                for pair in sparse.entries.windows(2) {
                    assert!(pair[0].0 < pair[1].0);
                }
                assert!(sparse.entries.iter().all(|&(_, w)| w != 0.0));
            }
        }
    }

    #[test]
    fn stats_survive_serialization() {
        let stats = fit(&[doc(&["a", "b"]), doc(&["b", "c"])]).unwrap();
        let json = serde_json::to_string(&stats).unwrap();
        let mut back: TermStats = serde_json::from_str(&json).unwrap();
        assert_eq!(back.term_index("c"), stats.term_index("c"));
        back.rebuild_index();
        assert_eq!(back, stats);
        let v1 = transform(&doc(&["a", "c"]), &stats);
        let v2 = transform(&doc(&["a", "c"]), &back);
        assert_eq!(v1, v2);
    }
}
