//! Text-in/text-out interface to an external language model, plus a
//! deterministic offline stand-in used by tests and the CLI.
//!
//! Every request built by this crate starts with a `### task: <name>` line;
//! the stub dispatches on it.

use thiserror::Error;

use crate::pipeline::labels::lexicon_labels;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error("retryable-error: {0}")]
    Retryable(String),
    #[error("llm request failed: {0}")]
    Failed(String),
}

pub trait LlmClient {
    fn complete(&self, request: &str) -> Result<String, LlmError>;
}

pub const TASK_AUGMENT: &str = "augment";
pub const TASK_TAG: &str = "tag";
pub const TASK_DISTILL: &str = "distill";

pub(crate) fn task_header(task: &str) -> String {
    format!("### task: {task}\n")
}

fn field<'a>(request: &'a str, key: &str) -> impl Iterator<Item = &'a str> + 'a {
    let prefix = format!("{key}:");
    request.lines().filter_map(move |l| l.strip_prefix(prefix.as_str()).map(str::trim))
}

/// Offline client: templated prompts for augmentation, lexicon lookup for
/// tagging, and an echo of the ground-truth evidence for distillation.
#[derive(Debug, Default, Clone, Copy)]
pub struct StubLlmClient;

impl LlmClient for StubLlmClient {
    fn complete(&self, request: &str) -> Result<String, LlmError> {
        let task = request
            .lines()
            .next()
            .and_then(|l| l.strip_prefix("### task:"))
            .map(str::trim)
            .ok_or_else(|| LlmError::Failed("request has no task header".into()))?;
        match task {
            TASK_AUGMENT => Ok(stub_augment(request)),
            TASK_TAG => {
                let prompt = field(request, "prompt").next().unwrap_or("");
                let labels: Vec<&str> = lexicon_labels(prompt).iter().map(|c| c.name()).collect();
                Ok(labels.join(", "))
            }
            TASK_DISTILL => stub_distill(request),
            other => Err(LlmError::Failed(format!("stub does not handle task '{other}'"))),
        }
    }
}

fn stub_augment(request: &str) -> String {
    let keywords: Vec<&str> = field(request, "keywords")
        .next()
        .map(|l| l.split(',').map(str::trim).filter(|s| !s.is_empty()).collect())
        .unwrap_or_default();
    let count: usize = field(request, "count").next().and_then(|c| c.parse().ok()).unwrap_or(0);
    let n = keywords.len().max(1);
    let kw = |i: usize| keywords.get(i % n).copied().unwrap_or("scene");
    (0..count)
        .map(|i| format!("{} and {} in a cinematic shot, variation {}", kw(i), kw(i + 1), i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

fn stub_distill(request: &str) -> Result<String, LlmError> {
    let start = request
        .find("<evidence>")
        .ok_or_else(|| LlmError::Failed("distill request has no ground-truth evidence".into()))?;
    let end = request[start..]
        .find("</answer>")
        .map(|e| start + e + "</answer>".len())
        .ok_or_else(|| LlmError::Failed("distill request has no ground-truth answer".into()))?;
    let video = field(request, "video").next().unwrap_or("the clip");
    Ok(format!(
        "<think>Working through {video} frame by frame, deriving each ground-truth cue in turn before deciding.</think>\n{}",
        &request[start..end]
    ))
}

/// A client that always fails; handy for exercising error paths.
#[derive(Debug, Clone)]
pub struct FailingLlmClient(pub LlmError);

impl LlmClient for FailingLlmClient {
    fn complete(&self, _request: &str) -> Result<String, LlmError> {
        Err(self.0.clone())
    }
}
