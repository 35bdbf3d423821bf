use serde::Serialize;

use super::ReasoningTrace;
use crate::evidence::{VideoMeta, Verdict, NORMALIZED_MAX};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LintCode {
    AnswerEvidenceConflict,
    PartialPlaceholder,
    PointOutOfRange,
    FrameOutsideSpan,
    FrameOutsideVideo,
    TimestampDisordered,
    ThinkTooShort,
}

impl LintCode {
    pub fn code(self) -> &'static str {
        match self {
            LintCode::AnswerEvidenceConflict => "answer-evidence-conflict",
            LintCode::PartialPlaceholder => "partial-placeholder",
            LintCode::PointOutOfRange => "point-out-of-range",
            LintCode::FrameOutsideSpan => "frame-outside-span",
            LintCode::FrameOutsideVideo => "frame-outside-video",
            LintCode::TimestampDisordered => "timestamp-disordered",
            LintCode::ThinkTooShort => "think-too-short",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lint {
    pub code: LintCode,
    pub block: Option<usize>,
    pub message: String,
}

const MIN_THINK_CHARS: usize = 20;
// half of the last printed decimal of a timestamp
const SPAN_SLACK_S: f64 = 0.005;

/// Structural checks over a parsed trace. `meta` enables the frame/span check.
pub fn lint_trace(trace: &ReasoningTrace, meta: Option<&VideoMeta>) -> Vec<Lint> {
    let mut lints = Vec::new();
    let mut push = |code, block, message: String| lints.push(Lint { code, block, message });

    let substantive = trace.evidence.iter().filter(|b| !b.is_placeholder()).count();
    match trace.answer {
        Verdict::AiGenerated if substantive == 0 => push(
            LintCode::AnswerEvidenceConflict,
            None,
            "AI verdict but every evidence block is a placeholder".into(),
        ),
        Verdict::Real if substantive > 0 => push(
            LintCode::AnswerEvidenceConflict,
            None,
            format!("real verdict but {substantive} block(s) carry defect values"),
        ),
        _ => {}
    }

    for (i, b) in trace.evidence.iter().enumerate() {
        if !b.is_placeholder() && !b.is_substantive() {
            push(LintCode::PartialPlaceholder, Some(i), "block mixes None placeholders with values".into());
        }
        for &(x, y) in b.points.iter().flatten() {
            if x > NORMALIZED_MAX || y > NORMALIZED_MAX {
                push(LintCode::PointOutOfRange, Some(i), format!("point ({x}, {y}) outside 0..=1000"));
            }
        }
        if let Some(ts) = b.timestamp {
            if !ts.is_well_ordered() {
                push(LintCode::TimestampDisordered, Some(i), format!("timestamp {ts} does not move forward"));
            }
        }
        if let (Some(meta), Some(frame)) = (meta, b.located_frame) {
            if frame >= meta.frame_count {
                push(
                    LintCode::FrameOutsideVideo,
                    Some(i),
                    format!("frame {frame} beyond clip length {}", meta.frame_count),
                );
            }
            if let Some(ts) = b.timestamp {
                if meta.fps > 0.0 {
                    let t = f64::from(frame) / meta.fps;
                    let span = ts.span();
                    if t < span.start_s - SPAN_SLACK_S || t > span.end_s + SPAN_SLACK_S {
                        push(
                            LintCode::FrameOutsideSpan,
                            Some(i),
                            format!("frame {frame} is at {t:.2}s, outside {ts}"),
                        );
                    }
                }
            }
        }
    }

    if trace.think.trim().chars().count() <= MIN_THINK_CHARS {
        push(LintCode::ThinkTooShort, None, format!("think section has {MIN_THINK_CHARS} characters or fewer"));
    }
    lints
}
