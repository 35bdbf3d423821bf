//! Cluster-level TF-IDF: every cluster's prompts form one document, so a
//! term scores high when it is frequent in its cluster and rare in others.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::PipelineError;

const DEFAULT_STOPWORDS: &[&str] = &[
    "the", "and", "with", "for", "from", "into", "onto", "over", "under", "near", "this", "that", "these", "those",
    "are", "was", "were", "is", "its", "his", "her", "their", "our", "your", "has", "have", "had", "but", "not",
    "very", "while", "who", "which", "what", "when", "where", "there", "then", "than", "they", "them", "she", "him",
    "will", "would", "can", "could", "should", "all", "any", "some", "each", "out", "off", "about", "above", "below",
    "through", "during", "before", "after", "between", "being", "been", "also", "just", "more", "most", "such",
];

#[derive(Debug, Clone)]
pub struct Tokenizer {
    pub stopwords: BTreeSet<String>,
    pub min_len: usize,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self { stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(), min_len: 3 }
    }
}

impl Tokenizer {
    pub fn with_stopwords<I: IntoIterator<Item = S>, S: Into<String>>(words: I) -> Self {
        Self { stopwords: words.into_iter().map(Into::into).collect(), min_len: 3 }
    }

    /// Lowercase, split on non-alphanumerics, drop short tokens and stopwords.
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_lowercase)
            .filter(|t| t.chars().count() >= self.min_len && !self.stopwords.contains(t))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredKeyword {
    pub term: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterKeywords {
    pub cluster_id: usize,
    pub keywords: Vec<ScoredKeyword>,
    pub warning: Option<String>,
}

/// `score(t, c) = tf(t, c) * ln((1 + N) / (1 + df(t)))` over cluster
/// documents. Terms present in every cluster score zero and are never
/// returned. Ties go to the lexicographically smaller term.
pub fn tfidf_keywords(
    clusters: &[(usize, Vec<String>)],
    per_cluster: usize,
    tokenizer: &Tokenizer,
) -> Result<Vec<ClusterKeywords>, PipelineError> {
    if clusters.len() < 2 {
        return Err(PipelineError::InvalidInput("tf-idf needs at least two clusters".into()));
    }
    let term_freqs: Vec<BTreeMap<String, usize>> = clusters
        .iter()
        .map(|(_, prompts)| {
            let mut tf = BTreeMap::new();
            for prompt in prompts {
                for tok in tokenizer.tokenize(prompt) {
                    *tf.entry(tok).or_insert(0) += 1;
                }
            }
            tf
        })
        .collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for tf in &term_freqs {
        for term in tf.keys() {
            *df.entry(term.as_str()).or_insert(0) += 1;
        }
    }
    let n_docs = clusters.len() as f64;

    Ok(clusters
        .iter()
        .zip(&term_freqs)
        .map(|((cluster_id, _), tf)| {
            if tf.is_empty() {
                return ClusterKeywords {
                    cluster_id: *cluster_id,
                    keywords: Vec::new(),
                    warning: Some(format!("cluster {cluster_id} has no usable tokens")),
                };
            }
            let mut scored: Vec<ScoredKeyword> = tf
                .iter()
                .map(|(term, &count)| {
                    let idf = ((1.0 + n_docs) / (1.0 + df[term.as_str()] as f64)).ln();
                    ScoredKeyword { term: term.clone(), score: count as f64 * idf }
                })
                .filter(|k| k.score > 0.0)
                .collect();
            scored.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.term.cmp(&b.term)));
            scored.truncate(per_cluster);
            ClusterKeywords { cluster_id: *cluster_id, keywords: scored, warning: None }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn terms(k: &ClusterKeywords) -> Vec<&str> {
        k.keywords.iter().map(|k| k.term.as_str()).collect()
    }

    #[test]
    fn disjoint_vocabularies() {
        let clusters = vec![
            (0, vec!["rocket launch countdown".to_string()]),
            (1, vec!["puppy chasing butterfly".to_string()]),
        ];
        let out = tfidf_keywords(&clusters, 10, &Tokenizer::default()).unwrap();
        assert_eq!(terms(&out[0]), vec!["countdown", "launch", "rocket"]);
        assert_eq!(terms(&out[1]), vec!["butterfly", "chasing", "puppy"]);
    }

    #[test]
    fn shared_term_never_outranks_unique() {
        let clusters = vec![
            (0, vec!["glowing forest glowing".to_string(), "forest".to_string()]),
            (1, vec!["glowing city city".to_string()]),
        ];
        let out = tfidf_keywords(&clusters, 10, &Tokenizer::default()).unwrap();
        // "glowing" appears in both clusters; "forest" only in cluster 0
        assert_eq!(terms(&out[0]), vec!["forest"]);
        assert_eq!(terms(&out[1]), vec!["city"]);
    }

    #[test]
    fn no_stopwords_or_duplicates() {
        let clusters = vec![
            (0, vec!["the cat and the hat with the bat".to_string()]),
            (1, vec!["a dog".to_string()]),
        ];
        let out = tfidf_keywords(&clusters, 10, &Tokenizer::default()).unwrap();
        let t = terms(&out[0]);
        assert!(t.iter().all(|w| !["the", "and", "with"].contains(w)));
        let unique: BTreeSet<_> = t.iter().collect();
        assert_eq!(unique.len(), t.len());
        assert!(out[1].keywords.iter().all(|k| k.term == "dog"));
    }

    #[test]
    fn empty_cluster_warns() {
        let clusters = vec![(0, vec!["a an".to_string()]), (1, vec!["sunset".to_string()])];
        let out = tfidf_keywords(&clusters, 10, &Tokenizer::default()).unwrap();
        assert!(out[0].keywords.is_empty());
        assert!(out[0].warning.is_some());
        assert!(tfidf_keywords(&clusters[..1], 10, &Tokenizer::default()).is_err());
    }
}
