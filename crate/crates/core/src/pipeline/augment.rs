use std::collections::BTreeSet;

use serde::Serialize;

use super::{Origin, PipelineError, PromptRecord};
use crate::llm::{task_header, LlmClient, TASK_AUGMENT};

pub const EXEMPLARS: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AugmentationRequest {
    pub cluster_id: usize,
    pub keywords: Vec<String>,
    pub exemplars: Vec<String>,
    pub count: usize,
    pub text: String,
}

/// Builds the prompt-writing request for one cluster. Exactly the first
/// three exemplars are used; they must be distinct.
pub fn build_augmentation_request(
    cluster_id: usize,
    keywords: &[String],
    exemplars: &[String],
    count: usize,
) -> Result<AugmentationRequest, PipelineError> {
    let distinct: BTreeSet<&str> = exemplars.iter().map(|e| e.trim()).collect();
    if distinct.len() < exemplars.len() {
        let mut seen = BTreeSet::new();
        let dup = exemplars.iter().find(|e| !seen.insert(e.trim())).cloned().unwrap_or_default();
        return Err(PipelineError::DuplicateExemplar(dup));
    }
    if exemplars.len() < EXEMPLARS {
        return Err(PipelineError::InsufficientExemplars(exemplars.len()));
    }
    if keywords.is_empty() || count == 0 {
        return Err(PipelineError::InvalidInput("augmentation needs keywords and a positive count".into()));
    }
    let exemplars: Vec<String> = exemplars[..EXEMPLARS].iter().map(|e| e.replace('\n', " ")).collect();

    let mut text = task_header(TASK_AUGMENT);
    text.push_str(&format!(
        "Write {count} new text-to-video prompts, one per line. Each should read like the examples \
         and work in at least two of the keywords.\n"
    ));
    text.push_str(&format!("keywords: {}\n", keywords.join(", ")));
    for e in &exemplars {
        text.push_str(&format!("example: {e}\n"));
    }
    text.push_str(&format!("count: {count}\n"));
    Ok(AugmentationRequest { cluster_id, keywords: keywords.to_vec(), exemplars, count, text })
}

/// Sends the request and turns each non-empty reply line into a Generated
/// record with id `gen-{cluster}-{n}`. Extra lines are dropped.
pub fn run_augmentation(req: &AugmentationRequest, client: &dyn LlmClient) -> Result<Vec<PromptRecord>, PipelineError> {
    let reply = client.complete(&req.text)?;
    let records: Vec<PromptRecord> = reply
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .take(req.count)
        .enumerate()
        .map(|(i, line)| {
            let mut r = PromptRecord::new(format!("gen-{}-{:03}", req.cluster_id, i + 1), line, Origin::Generated);
            r.cluster_id = Some(req.cluster_id);
            r
        })
        .collect();
    if records.len() < req.count {
        return Err(PipelineError::InsufficientCandidates { have: records.len(), need: req.count });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::StubLlmClient;

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn request_contains_everything() {
        let kws = strings(&["neon", "rain", "alley", "cyberpunk", "reflection", "umbrella", "night", "crowd", "sign", "steam"]);
        let ex = strings(&["neon rain in a narrow alley", "a crowd under umbrellas at night", "steam rising past a sign"]);
        let req = build_augmentation_request(4, &kws, &ex, 30).unwrap();
        for item in kws.iter().chain(&ex) {
            assert!(req.text.contains(item.as_str()), "{item}");
        }
        assert_eq!(req, build_augmentation_request(4, &kws, &ex, 30).unwrap());

        let out = run_augmentation(&req, &StubLlmClient).unwrap();
        assert_eq!(out.len(), 30);
        assert!(out.iter().all(|r| r.origin == Origin::Generated && r.cluster_id == Some(4)));
    }

    #[test]
    fn exemplar_preconditions() {
        let kws = strings(&["a"]);
        assert!(matches!(
            build_augmentation_request(0, &kws, &strings(&["x", "y"]), 30),
            Err(PipelineError::InsufficientExemplars(2))
        ));
        assert!(matches!(
            build_augmentation_request(0, &kws, &strings(&["x", "y", "x"]), 30),
            Err(PipelineError::DuplicateExemplar(_))
        ));
    }
}
