//! The `<think>…<evidence>…<answer>` output format: data model, parser,
//! canonical serializer and structural linter.
//!
//! Inside `<evidence>` every defect is described by five consecutive tags:
//! `<defect_cate>`, `<timestamp>`, `<explanation>`, `<located_frame>` and
//! `<point_2d>`. A real-video trace carries one block whose non-explanation
//! slots hold the literal `None`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::evidence::{DefectCategory, TimeSpan, Verdict};

mod lexer;
mod lint;
mod parser;
mod serialize;

pub use lint::{lint_trace, Lint, LintCode};
pub use parser::{coerce_verdict, parse_trace, parse_trace_bytes};
pub use serialize::{serialize_trace, SerializeError};

/// A timestamp as written in a trace, held exactly in centiseconds so that
/// the two-decimal text form round-trips.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceTimestamp {
    pub start_cs: u64,
    pub end_cs: u64,
}

impl TraceTimestamp {
    pub fn new(start_cs: u64, end_cs: u64) -> Self {
        Self { start_cs, end_cs }
    }

    /// Rounds a span to the same two decimals its canonical string shows.
    pub fn from_span(span: &TimeSpan) -> Self {
        let cs = |v: f64| {
            let text = format!("{:.2}", v.max(0.0));
            parser::decimal_to_centis(&text).unwrap_or(0)
        };
        Self { start_cs: cs(span.start_s), end_cs: cs(span.end_s) }
    }

    pub fn canonical(&self) -> String {
        format!(
            "{}.{:02}s-{}.{:02}s",
            self.start_cs / 100,
            self.start_cs % 100,
            self.end_cs / 100,
            self.end_cs % 100
        )
    }

    pub fn span(&self) -> TimeSpan {
        TimeSpan { start_s: self.start_cs as f64 / 100.0, end_s: self.end_cs as f64 / 100.0 }
    }

    pub fn is_well_ordered(&self) -> bool {
        self.start_cs < self.end_cs
    }
}

impl fmt::Display for TraceTimestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

/// One defect cue. `None` slots correspond to the literal `None` placeholder.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceBlock {
    pub categories: Option<BTreeSet<DefectCategory>>,
    pub timestamp: Option<TraceTimestamp>,
    pub explanation: String,
    pub located_frame: Option<u32>,
    pub points: Option<Vec<(u32, u32)>>,
}

impl EvidenceBlock {
    pub fn placeholder(explanation: impl Into<String>) -> Self {
        Self {
            categories: None,
            timestamp: None,
            explanation: explanation.into(),
            located_frame: None,
            points: None,
        }
    }

    fn filled_slots(&self) -> usize {
        [
            self.categories.is_some(),
            self.timestamp.is_some(),
            self.located_frame.is_some(),
            self.points.is_some(),
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }

    /// Every slot other than the explanation is `None`.
    pub fn is_placeholder(&self) -> bool {
        self.filled_slots() == 0
    }

    /// Every slot is filled.
    pub fn is_substantive(&self) -> bool {
        self.filled_slots() == 4
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningTrace {
    pub think: String,
    pub evidence: Vec<EvidenceBlock>,
    pub answer: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Strict,
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    /// Byte offset into the input.
    pub offset: usize,
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{sev}[{}] at byte {}: {}", self.code, self.offset, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseOutcome {
    pub trace: Option<ReasoningTrace>,
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseOutcome {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Diagnostic> {
        self.diagnostics.iter().filter(|d| d.severity == Severity::Warning)
    }
}
