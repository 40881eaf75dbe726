//! Page-label correction by majority vote of the textually nearest pages.

use std::collections::{BTreeMap, HashMap};

use crate::ingest::{EventStore, PageId, StopWords, TokenList};

use super::CategorizeError;

pub const DEFAULT_NEIGHBORS: usize = 5;

/// Pairwise similarity between page documents.
pub trait PageSimilarity {
    fn pairwise(&self, docs: &[TokenList]) -> Vec<Vec<f64>>;
}

/// TF-IDF term vectors (raw term frequency, smoothed idf) compared by cosine.
#[derive(Debug, Clone, Copy, Default)]
pub struct TfIdfCosine;

impl TfIdfCosine {
    /// Sparse L2-normalised TF-IDF vectors, terms sorted for a stable order.
    pub fn vectors(docs: &[TokenList]) -> Vec<Vec<(String, f64)>> {
        let mut df: HashMap<&str, usize> = HashMap::new();
        let mut tfs: Vec<BTreeMap<&str, usize>> = Vec::with_capacity(docs.len());
        for doc in docs {
            let mut tf: BTreeMap<&str, usize> = BTreeMap::new();
            for t in doc.tokens() {
                *tf.entry(t.as_str()).or_default() += 1;
            }
            for term in tf.keys() {
                *df.entry(term).or_default() += 1;
            }
            tfs.push(tf);
        }
        let n = docs.len() as f64;
        tfs.into_iter()
            .map(|tf| {
                let mut v: Vec<(String, f64)> = tf
                    .into_iter()
                    .map(|(term, count)| {
                        let idf = ((1.0 + n) / (1.0 + df[term] as f64)).ln() + 1.0;
                        (term.to_string(), count as f64 * idf)
                    })
                    .collect();
                let norm = v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
                if norm > 0.0 {
                    for (_, w) in &mut v {
                        *w /= norm;
                    }
                }
                v
            })
            .collect()
    }
}

fn sparse_dot(a: &[(String, f64)], b: &[(String, f64)]) -> f64 {
    let (mut i, mut j, mut dot) = (0, 0, 0.0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    dot
}

impl PageSimilarity for TfIdfCosine {
    fn pairwise(&self, docs: &[TokenList]) -> Vec<Vec<f64>> {
        let vectors = Self::vectors(docs);
        vectors
            .iter()
            .map(|a| vectors.iter().map(|b| sparse_dot(a, b)).collect())
            .collect()
    }
}

/// One corrected label per document. Each page takes the unique majority
/// label among its `k` most similar non-empty pages, judged on the original
/// labels; ties and empty documents keep their label.
pub fn correct_labels_with<S: PageSimilarity>(
    docs: &[TokenList],
    labels: &[String],
    k: usize,
    similarity: &S,
) -> Result<Vec<String>, CategorizeError> {
    if docs.len() != labels.len() {
        return Err(CategorizeError::ShapeMismatch);
    }
    if k == 0 || k >= docs.len() {
        return Err(CategorizeError::InvalidNeighbors { k, pages: docs.len() });
    }
    let sim = similarity.pairwise(docs);
    let corrected = (0..docs.len())
        .map(|i| {
            if docs[i].is_empty() {
                return labels[i].clone();
            }
            let mut others: Vec<usize> = (0..docs.len()).filter(|&j| j != i && !docs[j].is_empty()).collect();
            others.sort_by(|&a, &b| sim[i][b].total_cmp(&sim[i][a]).then(a.cmp(&b)));
            let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
            for &j in others.iter().take(k) {
                *votes.entry(labels[j].as_str()).or_default() += 1;
            }
            let Some(&top) = votes.values().max() else {
                return labels[i].clone();
            };
            let mut winners = votes.iter().filter(|(_, &v)| v == top);
            match (winners.next(), winners.next()) {
                (Some((label, _)), None) => label.to_string(),
                _ => labels[i].clone(),
            }
        })
        .collect();
    Ok(corrected)
}

/// Corrected metadata labels for every page of the store, using TF-IDF cosine
/// similarity over the preprocessed post texts.
pub fn correct_labels(store: &EventStore, k: usize, stopwords: &StopWords) -> Result<BTreeMap<PageId, String>, CategorizeError> {
    let pages: Vec<&PageId> = store.page_ids().collect();
    let docs: Vec<TokenList> = pages.iter().map(|p| store.page_tokens(p, stopwords)).collect();
    let labels: Vec<String> = pages
        .iter()
        .map(|p| store.page(p).map(|m| m.label.clone()).unwrap_or_default())
        .collect();
    let corrected = correct_labels_with(&docs, &labels, k, &TfIdfCosine)?;
    Ok(pages.into_iter().cloned().zip(corrected).collect())
}
