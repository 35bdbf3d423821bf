//! Ground-truth-anchored reasoning traces: teacher requests, verification of
//! teacher output against the annotation, cue splitting and SFT records.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{
    frames_to_timespan, normalize_point, training_point_view, validate_annotation, DefectCategory, DefectRecord,
    EvidenceError, VideoAnnotation, Verdict, Violation,
};
use crate::llm::{task_header, LlmClient, LlmError, TASK_DISTILL};
use crate::tagseq::{
    parse_trace, serialize_trace, EvidenceBlock, ParseMode, ReasoningTrace, SerializeError, TraceTimestamp,
};

pub const DEFAULT_MAX_CUES: usize = 3;
pub const POINT_SLACK: u32 = 1;

pub const DEFAULT_TASK_PROMPT: &str = "Decide whether this clip was produced by a video generator or filmed \
with a camera. Reason inside <think>, list every visual flaw you rely on inside <evidence> using \
<defect_cate>, <timestamp>, <explanation>, <located_frame> and <point_2d> (coordinates scaled to 0-1000), \
and finish with <answer>AI generated video</answer> or <answer>Real video</answer>. For a camera clip, \
write one evidence block whose tags other than <explanation> hold None.";

#[derive(Debug, Error)]
pub enum DistillError {
    #[error("annotation failed validation: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("teacher output does not parse: {0}")]
    Unparseable(String),
    #[error("trace disagrees with ground truth: {}", join(.0))]
    Mismatch(Vec<TraceDiff>),
    #[error(transparent)]
    Serialize(#[from] SerializeError),
    #[error("max_cues must be positive")]
    ZeroMaxCues,
}

fn join<T: std::fmt::Display>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Category glossary handed to the teacher model.
pub fn default_definitions() -> Vec<(DefectCategory, &'static str)> {
    use DefectCategory::*;
    vec![
        (ObjectInconsistency, "a thing changes identity, shape, colour or part count between frames without cause"),
        (TextureJitter, "surface detail shimmers, crawls or boils from frame to frame while the object itself holds still"),
        (InteractionAnomaly, "two touching or overlapping things merge, stick together or lose the edge between them"),
        (MovementAnomaly, "a motion path or body movement that no real body or mechanism could follow"),
        (SpaceAnomaly, "depth, scale or layout that contradicts itself, such as objects passing through each other"),
        (LightingAnomaly, "shadows, reflections or light sources that disagree with the rest of the scene"),
    ]
}

fn defect_order(defects: &[DefectRecord]) -> Vec<&DefectRecord> {
    let mut sorted: Vec<&DefectRecord> = defects.iter().collect();
    sorted.sort_by_key(|d| d.frame_range.start_frame);
    sorted
}

fn one_line(text: &str) -> String {
    text.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn gt_block(a: &VideoAnnotation, d: &DefectRecord) -> Result<EvidenceBlock, DistillError> {
    let point = training_point_view(d)?;
    let n = normalize_point(&point, a.width, a.height)?;
    let span = frames_to_timespan(d.frame_range, a.fps)?;
    Ok(EvidenceBlock {
        categories: Some(d.categories.clone()),
        timestamp: Some(TraceTimestamp::from_span(&span)),
        explanation: one_line(&d.explanation),
        located_frame: Some(point.frame),
        points: Some(vec![(n.x, n.y)]),
    })
}

fn check(a: &VideoAnnotation) -> Result<(), DistillError> {
    let violations = validate_annotation(a);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(DistillError::Invalid(violations))
    }
}

/// The trace implied by an annotation. Blocks follow defect start order; each
/// carries the training point on its own frame.
pub fn gt_trace(a: &VideoAnnotation) -> Result<ReasoningTrace, DistillError> {
    check(a)?;
    let evidence = match a.verdict {
        Verdict::Real => vec![EvidenceBlock::placeholder(one_line(a.real_explanation.as_deref().unwrap_or_default()))],
        Verdict::AiGenerated => {
            defect_order(&a.defects).into_iter().map(|d| gt_block(a, d)).collect::<Result<_, _>>()?
        }
    };
    let think = match a.verdict {
        Verdict::Real => format!("Clip {} shows no generation flaw in any frame.", a.video_id),
        Verdict::AiGenerated => format!("Clip {} shows {} generation flaw(s).", a.video_id, evidence.len()),
    };
    Ok(ReasoningTrace { think, evidence, answer: a.verdict })
}

/// Teacher request for one annotation.
pub fn build_distill_request(a: &VideoAnnotation, definitions: &[(DefectCategory, &str)]) -> Result<String, DistillError> {
    let gt = serialize_trace(&gt_trace(a)?)?;
    let gt_body = &gt[gt.find("<evidence>").unwrap_or(0)..];

    let mut req = task_header(TASK_DISTILL);
    req.push_str(&format!("video: {}\n", a.video_id));
    req.push_str(&format!("frames: {} at {} fps, {}x{}\n", a.frame_count, a.fps, a.width, a.height));
    if let Some(anchor) = a.anchor {
        req.push_str(&format!("anchor_type: {}\n", anchor.name()));
    }
    req.push_str("\nYou are writing the reasoning a careful analyst would produce for this clip. ");
    req.push_str("The verified findings are listed below. Work your way to each of them from what is visible; ");
    req.push_str("do not add flaws, frames, points or categories that are not in the list. ");
    req.push_str("Copy every tag value exactly. You may rewrite only the text inside <explanation>, and ");
    req.push_str("put your step-by-step reasoning inside <think>.\n");
    if a.verdict == Verdict::Real {
        req.push_str("This clip is camera footage. Explain why it looks real, and keep a single evidence block ");
        req.push_str("with None in every tag except <explanation>.\n");
    }
    req.push_str("\ncategories:\n");
    for (cat, text) in definitions {
        req.push_str(&format!("- {}: {}\n", cat.name(), text));
    }
    req.push_str("\nfindings:\n");
    req.push_str(gt_body);
    req.push('\n');
    Ok(req)
}

/// Asks the teacher for a trace and checks it before returning.
pub fn distill(
    a: &VideoAnnotation,
    definitions: &[(DefectCategory, &str)],
    client: &dyn LlmClient,
) -> Result<ReasoningTrace, DistillError> {
    let reply = client.complete(&build_distill_request(a, definitions)?)?;
    let outcome = parse_trace(&reply, ParseMode::Strict);
    let trace = match outcome.trace {
        Some(t) if !outcome.has_errors() => t,
        _ => return Err(DistillError::Unparseable(join(&outcome.diagnostics.iter().map(|d| &d.message).collect::<Vec<_>>()))),
    };
    let diffs = verify_trace_against_gt(&trace, a);
    if diffs.is_empty() {
        Ok(trace)
    } else {
        Err(DistillError::Mismatch(diffs))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceDiff {
    pub block: Option<usize>,
    pub field: String,
    pub expected: String,
    pub found: String,
}

impl std::fmt::Display for TraceDiff {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.block {
            Some(b) => write!(f, "block {b} {}: expected {}, found {}", self.field, self.expected, self.found),
            None => write!(f, "{}: expected {}, found {}", self.field, self.expected, self.found),
        }
    }
}

fn show<T: std::fmt::Debug>(v: &Option<T>) -> String {
    match v {
        Some(v) => format!("{v:?}"),
        None => "None".into(),
    }
}

/// Every tag but `<explanation>` must agree with the annotation. Blocks and
/// defects are paired after sorting both by start time. An empty result
/// means the trace passes.
pub fn verify_trace_against_gt(trace: &ReasoningTrace, a: &VideoAnnotation) -> Vec<TraceDiff> {
    let mut diffs = Vec::new();
    let mut diff = |block: Option<usize>, field: &str, expected: String, found: String| {
        diffs.push(TraceDiff { block, field: field.into(), expected, found })
    };
    if trace.answer != a.verdict {
        diff(None, "answer", a.verdict.answer_text().into(), trace.answer.answer_text().into());
    }

    if a.verdict == Verdict::Real {
        if trace.evidence.is_empty() {
            diff(None, "evidence", "one placeholder block".into(), "no blocks".into());
        }
        for (i, b) in trace.evidence.iter().enumerate() {
            if !b.is_placeholder() {
                diff(Some(i), "placeholder", "None".into(), "values".into());
            }
        }
        return diffs;
    }

    if trace.evidence.len() != a.defects.len() {
        diff(None, "block_count", a.defects.len().to_string(), trace.evidence.len().to_string());
        return diffs;
    }
    let mut blocks: Vec<&EvidenceBlock> = trace.evidence.iter().collect();
    blocks.sort_by_key(|b| b.timestamp.map_or(u64::MAX, |t| t.start_cs));

    for (i, (b, d)) in blocks.iter().zip(defect_order(&a.defects)).enumerate() {
        let expected = match gt_block(a, d) {
            Ok(e) => e,
            Err(e) => {
                diff(Some(i), "ground_truth", "valid defect".into(), e.to_string());
                continue;
            }
        };
        if b.categories != expected.categories {
            diff(Some(i), "defect_cate", show(&expected.categories), show(&b.categories));
        }
        if b.timestamp.map(|t| t.canonical()) != expected.timestamp.map(|t| t.canonical()) {
            diff(Some(i), "timestamp", show(&expected.timestamp), show(&b.timestamp));
        }
        if b.located_frame != expected.located_frame {
            diff(Some(i), "located_frame", show(&expected.located_frame), show(&b.located_frame));
        }
        let close = match (&b.points, &expected.points) {
            (Some(found), Some(want)) => {
                found.len() == want.len()
                    && found
                        .iter()
                        .zip(want)
                        .all(|(f, w)| f.0.abs_diff(w.0) <= POINT_SLACK && f.1.abs_diff(w.1) <= POINT_SLACK)
            }
            _ => false,
        };
        if !close {
            diff(Some(i), "point_2d", show(&expected.points), show(&b.points));
        }
    }
    diffs
}

/// Splits an annotation into views of at most `max_cues` defects, taken in
/// start order. Real annotations come back as a single unchanged view.
pub fn split_sample(a: &VideoAnnotation, max_cues: usize) -> Result<Vec<VideoAnnotation>, DistillError> {
    if max_cues == 0 {
        return Err(DistillError::ZeroMaxCues);
    }
    check(a)?;
    if a.verdict == Verdict::Real {
        return Ok(vec![a.clone()]);
    }
    let ordered: Vec<DefectRecord> = defect_order(&a.defects).into_iter().cloned().collect();
    Ok(ordered
        .chunks(max_cues)
        .map(|chunk| VideoAnnotation { defects: chunk.to_vec(), ..a.clone() })
        .collect())
}

/// A view together with a trace already checked against it.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedView {
    view: VideoAnnotation,
    trace: ReasoningTrace,
}

impl VerifiedView {
    pub fn new(view: VideoAnnotation, trace: ReasoningTrace) -> Result<Self, DistillError> {
        check(&view)?;
        let diffs = verify_trace_against_gt(&trace, &view);
        if !diffs.is_empty() {
            return Err(DistillError::Mismatch(diffs));
        }
        Ok(Self { view, trace })
    }

    /// Uses the trace derived directly from the annotation.
    pub fn from_ground_truth(view: VideoAnnotation) -> Result<Self, DistillError> {
        let trace = gt_trace(&view)?;
        Self::new(view, trace)
    }

    pub fn view(&self) -> &VideoAnnotation {
        &self.view
    }

    pub fn trace(&self) -> &ReasoningTrace {
        &self.trace
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftRecord {
    pub prompt: String,
    pub target: String,
    pub label: u8,
}

pub fn emit_sft_records(views: &[VerifiedView], task_prompt: &str) -> Result<Vec<SftRecord>, DistillError> {
    views
        .iter()
        .map(|v| {
            Ok(SftRecord {
                prompt: task_prompt.to_string(),
                target: serialize_trace(&v.trace)?,
                label: v.trace.answer.label(),
            })
        })
        .collect()
}

/// One JSON object per line.
pub fn sft_jsonl(records: &[SftRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("plain strings serialize") + "\n")
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{AnchorType, FrameRange, PointPrompt};
    use crate::llm::StubLlmClient;

    fn defect(start: u32, cats: &[DefectCategory]) -> DefectRecord {
        DefectRecord {
            categories: cats.iter().copied().collect(),
            frame_range: FrameRange::new(start, start + 10),
            points: vec![PointPrompt::negative(start, 5, 5), PointPrompt::positive(start + 2, 320, 240)],
            explanation: format!("flaw starting at frame {start}"),
            attempts: vec![],
        }
    }

    fn ai(defects: Vec<DefectRecord>) -> VideoAnnotation {
        VideoAnnotation {
            video_id: "clip-7".into(),
            source: "GenX".into(),
            fps: 24.0,
            width: 640,
            height: 480,
            frame_count: 240,
            verdict: Verdict::AiGenerated,
            anchor: Some(AnchorType::NaturalRecorded),
            defects,
            real_explanation: None,
        }
    }

    #[test]
    fn stub_round_trip_verifies() {
        let a = ai(vec![defect(50, &[DefectCategory::TextureJitter]), defect(3, &[DefectCategory::MovementAnomaly])]);
        let req = build_distill_request(&a, &default_definitions()).unwrap();
        assert!(req.contains("Texture Jitter") && req.contains("Movement Anomaly"));
        assert!(req.contains("(500, 500)"));
        let trace = distill(&a, &default_definitions(), &StubLlmClient).unwrap();
        assert_eq!(trace.evidence[0].located_frame, Some(5));
    }

    #[test]
    fn category_swap_is_reported() {
        let a = ai(vec![defect(3, &[DefectCategory::MovementAnomaly])]);
        let mut t = gt_trace(&a).unwrap();
        t.evidence[0].categories = Some([DefectCategory::SpaceAnomaly].into());
        let d = verify_trace_against_gt(&t, &a);
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].block, d[0].field.as_str()), (Some(0), "defect_cate"));
    }

    #[test]
    fn split_seven() {
        let a = ai((0..7).rev().map(|i| defect(i * 20, &[DefectCategory::ObjectInconsistency])).collect());
        let views = split_sample(&a, 3).unwrap();
        assert_eq!(views.iter().map(|v| v.defects.len()).collect::<Vec<_>>(), vec![3, 3, 1]);
        assert_eq!(views[0].defects[0].frame_range.start_frame, 0);
        assert!(split_sample(&a, 0).is_err());
    }
}
