use std::fmt::Write;

use thiserror::Error;

use super::lexer::contains_tag;
use super::{EvidenceBlock, ReasoningTrace};
use crate::evidence::Verdict;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SerializeError {
    #[error("unserializable: {0}")]
    Invariant(String),
}

fn check_text(field: &str, text: &str) -> Result<(), SerializeError> {
    if text.is_empty() {
        return Err(SerializeError::Invariant(format!("{field} is empty")));
    }
    if text.trim() != text {
        return Err(SerializeError::Invariant(format!("{field} has surrounding whitespace")));
    }
    if contains_tag(text) {
        return Err(SerializeError::Invariant(format!("{field} contains a reserved tag")));
    }
    Ok(())
}

fn check_block(i: usize, block: &EvidenceBlock, answer: Verdict) -> Result<(), SerializeError> {
    check_text(&format!("evidence[{i}].explanation"), &block.explanation)?;
    match answer {
        Verdict::Real if !block.is_placeholder() => {
            Err(SerializeError::Invariant(format!("evidence[{i}] has values under a real verdict")))
        }
        Verdict::AiGenerated if !block.is_substantive() => {
            Err(SerializeError::Invariant(format!("evidence[{i}] is incomplete under an AI verdict")))
        }
        _ => {
            if block.categories.as_ref().is_some_and(|c| c.is_empty()) {
                return Err(SerializeError::Invariant(format!("evidence[{i}] has an empty category set")));
            }
            if block.points.as_ref().is_some_and(|p| p.is_empty()) {
                return Err(SerializeError::Invariant(format!("evidence[{i}] has an empty point list")));
            }
            Ok(())
        }
    }
}

/// Renders a trace in canonical form: fixed tag order, one line per tag,
/// canonical category names and timestamps, points as `(x, y)` pairs.
pub fn serialize_trace(trace: &ReasoningTrace) -> Result<String, SerializeError> {
    check_text("think", &trace.think)?;
    if trace.answer == Verdict::AiGenerated && trace.evidence.is_empty() {
        return Err(SerializeError::Invariant("AI verdict without evidence".into()));
    }
    for (i, block) in trace.evidence.iter().enumerate() {
        check_block(i, block, trace.answer)?;
    }

    let mut out = String::new();
    let _ = writeln!(out, "<think>{}</think>", trace.think);
    out.push_str("<evidence>\n");
    for block in &trace.evidence {
        write_block(&mut out, block);
    }
    out.push_str("</evidence>\n");
    let _ = write!(out, "<answer>{}</answer>", trace.answer.answer_text());
    Ok(out)
}

fn write_block(out: &mut String, block: &EvidenceBlock) {
    let none = || "None".to_string();
    let cats = block
        .categories
        .as_ref()
        .map_or_else(none, |c| c.iter().map(|c| c.name()).collect::<Vec<_>>().join(", "));
    let ts = block.timestamp.map_or_else(none, |t| t.canonical());
    let frame = block.located_frame.map_or_else(none, |f| f.to_string());
    let points = block.points.as_ref().map_or_else(none, |p| {
        p.iter().map(|(x, y)| format!("({x}, {y})")).collect::<Vec<_>>().join(", ")
    });
    let _ = writeln!(out, "<defect_cate>{cats}</defect_cate>");
    let _ = writeln!(out, "<timestamp>{ts}</timestamp>");
    let _ = writeln!(out, "<explanation>{}</explanation>", block.explanation);
    let _ = writeln!(out, "<located_frame>{frame}</located_frame>");
    let _ = writeln!(out, "<point_2d>{points}</point_2d>");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::DefectCategory;
    use crate::tagseq::{parse_trace, ParseMode, TraceTimestamp};

    fn block(points: Vec<(u32, u32)>) -> EvidenceBlock {
        EvidenceBlock {
            categories: Some([DefectCategory::ObjectInconsistency, DefectCategory::TextureJitter].into()),
            timestamp: Some(TraceTimestamp::new(100, 203)),
            explanation: "The cup handle melts into the table.".into(),
            located_frame: Some(30),
            points: Some(points),
        }
    }

    #[test]
    fn canonical_points_and_round_trip() {
        let trace = ReasoningTrace {
            think: "Checking the cup across frames.".into(),
            evidence: vec![block(vec![(10, 20), (30, 40)]), block(vec![(1, 1)])],
            answer: Verdict::AiGenerated,
        };
        let text = serialize_trace(&trace).unwrap();
        assert!(text.contains("<point_2d>(10, 20), (30, 40)</point_2d>"));
        assert!(text.contains("<defect_cate>Object Inconsistency, Texture Jitter</defect_cate>"));
        assert_eq!(text.matches("<defect_cate>").count(), 2);
        let back = parse_trace(&text, ParseMode::Strict);
        assert!(back.diagnostics.is_empty());
        assert_eq!(back.trace.unwrap(), trace);
    }

    #[test]
    fn rejects_invariant_violations() {
        let real_with_values = ReasoningTrace {
            think: "thinking".into(),
            evidence: vec![block(vec![(1, 1)])],
            answer: Verdict::Real,
        };
        assert!(serialize_trace(&real_with_values).is_err());

        let tagged_think = ReasoningTrace {
            think: "look at </think> this".into(),
            evidence: vec![EvidenceBlock::placeholder("fine")],
            answer: Verdict::Real,
        };
        assert!(serialize_trace(&tagged_think).is_err());

        let ai_empty = ReasoningTrace { think: "x".into(), evidence: vec![], answer: Verdict::AiGenerated };
        assert!(serialize_trace(&ai_empty).is_err());
    }
}
