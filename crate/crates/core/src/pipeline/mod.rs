//! Prompt selection: reduce embeddings to 3-D, cluster, keep the largest
//! clusters, extract per-cluster keywords, pick and augment representative
//! prompts, tag content and draw a balanced final sample.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::ContentCategory;
use crate::llm::LlmError;

pub mod augment;
pub mod balance;
pub mod clusters;
pub mod io;
pub mod kmeans;
pub mod labels;
pub mod reduce;
pub mod select;
pub mod tfidf;

pub use augment::{build_augmentation_request, run_augmentation, AugmentationRequest};
pub use balance::{deviation, monte_carlo_balance, BalanceResult};
pub use clusters::{select_top_clusters, TopClusters};
pub use kmeans::{kmeans, KMeansResult};
pub use labels::tag_content_categories;
pub use reduce::{reduce_embeddings, PcaReducer, Precomputed, Reducer, Reduction};
pub use select::{select_representative_prompts, Representatives};
pub use tfidf::{tfidf_keywords, ClusterKeywords, ScoredKeyword, Tokenizer};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient-points: {n} points for {k} clusters")]
    InsufficientPoints { n: usize, k: usize },
    #[error("insufficient-exemplars: need 3 distinct exemplars, got {0}")]
    InsufficientExemplars(usize),
    #[error("duplicate exemplar: {0:?}")]
    DuplicateExemplar(String),
    #[error("insufficient candidates: have {have}, need {need}")]
    InsufficientCandidates { have: usize, need: usize },
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("malformed {what} at line {line}: {message}")]
    Format { what: &'static str, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Sampled,
    Generated,
}

impl Origin {
    pub fn name(self) -> &'static str {
        match self {
            Origin::Sampled => "sampled",
            Origin::Generated => "generated",
        }
    }

    pub fn from_name(text: &str) -> Option<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "sampled" => Some(Origin::Sampled),
            "generated" => Some(Origin::Generated),
            _ => None,
        }
    }
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embedding: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords3: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster_id: Option<usize>,
    #[serde(default)]
    pub content_labels: BTreeSet<ContentCategory>,
    pub origin: Origin,
}

impl PromptRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, origin: Origin) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            embedding: None,
            coords3: None,
            cluster_id: None,
            content_labels: BTreeSet::new(),
            origin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub k: usize,
    pub top_m: usize,
    pub coverage_target: f64,
    pub keywords_per_cluster: usize,
    pub prompts_per_cluster: usize,
    pub min_keywords_in_prompt: usize,
    pub final_sample: usize,
    pub mc_trials: usize,
    pub seed: u64,
}

impl PipelineConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            k: 80,
            top_m: 30,
            coverage_target: 0.89,
            keywords_per_cluster: 10,
            prompts_per_cluster: 30,
            min_keywords_in_prompt: 2,
            final_sample: 100,
            mc_trials: 10_000,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let counts = [
            ("k", self.k),
            ("top_m", self.top_m),
            ("keywords_per_cluster", self.keywords_per_cluster),
            ("prompts_per_cluster", self.prompts_per_cluster),
            ("min_keywords_in_prompt", self.min_keywords_in_prompt),
            ("final_sample", self.final_sample),
            ("mc_trials", self.mc_trials),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(PipelineError::InvalidInput(format!("{name} must be positive")));
        }
        if !(self.coverage_target > 0.0 && self.coverage_target < 1.0) {
            return Err(PipelineError::InvalidInput("coverage_target must lie in (0, 1)".into()));
        }
        Ok(())
    }
}
