//! Annotation domain types: defect categories, anchors, point prompts, frame
//! ranges and the per-video annotation record, plus the conversions and
//! policies defined over them.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("invalid-rate: fps must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("point-out-of-frame: ({x}, {y}) outside {width}x{height}")]
    PointOutOfFrame { x: u32, y: u32, width: u32, height: u32 },
    #[error("no-positive-prompt: defect has no positive point")]
    NoPositivePrompt,
}

/// The six flaw classes a defect can be assigned to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum DefectCategory {
    #[serde(rename = "Object Inconsistency")]
    ObjectInconsistency,
    #[serde(rename = "Texture Jitter")]
    TextureJitter,
    #[serde(rename = "Interaction Anomaly")]
    InteractionAnomaly,
    #[serde(rename = "Movement Anomaly")]
    MovementAnomaly,
    #[serde(rename = "Space Anomaly")]
    SpaceAnomaly,
    #[serde(rename = "Lighting Anomaly")]
    LightingAnomaly,
}

impl DefectCategory {
    pub const ALL: [DefectCategory; 6] = [
        DefectCategory::ObjectInconsistency,
        DefectCategory::TextureJitter,
        DefectCategory::InteractionAnomaly,
        DefectCategory::MovementAnomaly,
        DefectCategory::SpaceAnomaly,
        DefectCategory::LightingAnomaly,
    ];

    /// Canonical name, used in every serialized form.
    pub fn name(self) -> &'static str {
        match self {
            DefectCategory::ObjectInconsistency => "Object Inconsistency",
            DefectCategory::TextureJitter => "Texture Jitter",
            DefectCategory::InteractionAnomaly => "Interaction Anomaly",
            DefectCategory::MovementAnomaly => "Movement Anomaly",
            DefectCategory::SpaceAnomaly => "Space Anomaly",
            DefectCategory::LightingAnomaly => "Lighting Anomaly",
        }
    }

    /// Matches a category name ignoring case, with spaces, underscores and
    /// hyphens treated as the same separator.
    pub fn from_loose(text: &str) -> Option<Self> {
        let wanted = loose_key(text);
        Self::ALL.into_iter().find(|c| loose_key(c.name()) == wanted)
    }
}

fn loose_key(text: &str) -> String {
    text.split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

impl fmt::Display for DefectCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Real-video category a synthetic clip is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorType {
    NaturalRecorded,
    Handcrafted,
}

impl AnchorType {
    pub const ALL: [AnchorType; 2] = [AnchorType::NaturalRecorded, AnchorType::Handcrafted];

    pub fn name(self) -> &'static str {
        match self {
            AnchorType::NaturalRecorded => "natural recorded video",
            AnchorType::Handcrafted => "handcrafted video",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    AiGenerated,
    Real,
}

impl Verdict {
    /// Binary label: Real = 0, AI-generated = 1.
    pub fn label(self) -> u8 {
        match self {
            Verdict::AiGenerated => 1,
            Verdict::Real => 0,
        }
    }

    pub fn from_label(label: u8) -> Option<Self> {
        match label {
            0 => Some(Verdict::Real),
            1 => Some(Verdict::AiGenerated),
            _ => None,
        }
    }

    /// The exact answer text used in reasoning traces.
    pub fn answer_text(self) -> &'static str {
        match self {
            Verdict::AiGenerated => "AI generated video",
            Verdict::Real => "Real video",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.answer_text())
    }
}

/// Spatial-content labels attached to prompts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContentCategory {
    People,
    Animals,
    Vehicles,
    Plants,
    Artifacts,
    Food,
    Buildings,
    Scenery,
}

impl ContentCategory {
    pub const ALL: [ContentCategory; 8] = [
        ContentCategory::People,
        ContentCategory::Animals,
        ContentCategory::Vehicles,
        ContentCategory::Plants,
        ContentCategory::Artifacts,
        ContentCategory::Food,
        ContentCategory::Buildings,
        ContentCategory::Scenery,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContentCategory::People => "people",
            ContentCategory::Animals => "animals",
            ContentCategory::Vehicles => "vehicles",
            ContentCategory::Plants => "plants",
            ContentCategory::Artifacts => "artifacts",
            ContentCategory::Food => "food",
            ContentCategory::Buildings => "buildings",
            ContentCategory::Scenery => "scenery",
        }
    }

    pub fn from_name(text: &str) -> Option<Self> {
        let t = text.trim().to_lowercase();
        Self::ALL.into_iter().find(|c| c.name() == t)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ContentCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
}

/// A segmentation prompt: `[frame, x, y, label]` with label 1 positive, 0 negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "[u32; 4]", try_from = "[u32; 4]")]
pub struct PointPrompt {
    pub frame: u32,
    pub x: u32,
    pub y: u32,
    pub polarity: Polarity,
}

impl PointPrompt {
    pub fn positive(frame: u32, x: u32, y: u32) -> Self {
        Self { frame, x, y, polarity: Polarity::Positive }
    }

    pub fn negative(frame: u32, x: u32, y: u32) -> Self {
        Self { frame, x, y, polarity: Polarity::Negative }
    }

    pub fn is_positive(&self) -> bool {
        self.polarity == Polarity::Positive
    }
}

impl From<PointPrompt> for [u32; 4] {
    fn from(p: PointPrompt) -> Self {
        let label = match p.polarity {
            Polarity::Positive => 1,
            Polarity::Negative => 0,
        };
        [p.frame, p.x, p.y, label]
    }
}

impl TryFrom<[u32; 4]> for PointPrompt {
    type Error = String;

    fn try_from([frame, x, y, label]: [u32; 4]) -> Result<Self, Self::Error> {
        let polarity = match label {
            1 => Polarity::Positive,
            0 => Polarity::Negative,
            other => return Err(format!("point label must be 0 or 1, got {other}")),
        };
        Ok(Self { frame, x, y, polarity })
    }
}

/// Point coordinates on the 0..=1000 grid used in model-facing text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizedPoint {
    pub frame: u32,
    pub x: u32,
    pub y: u32,
}

pub const NORMALIZED_MAX: u32 = 1000;

/// Inclusive range of affected frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[u32; 2]", into = "[u32; 2]")]
pub struct FrameRange {
    pub start_frame: u32,
    pub end_frame: u32,
}

impl FrameRange {
    pub fn new(start_frame: u32, end_frame: u32) -> Self {
        Self { start_frame, end_frame }
    }

    pub fn is_ordered(&self) -> bool {
        self.start_frame <= self.end_frame
    }

    pub fn contains(&self, frame: u32) -> bool {
        self.start_frame <= frame && frame <= self.end_frame
    }
}

impl From<[u32; 2]> for FrameRange {
    fn from([start_frame, end_frame]: [u32; 2]) -> Self {
        Self { start_frame, end_frame }
    }
}

impl From<FrameRange> for [u32; 2] {
    fn from(r: FrameRange) -> Self {
        [r.start_frame, r.end_frame]
    }
}

/// Half-open interval in seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeSpan {
    /// `"{start}s-{end}s"` with two decimals, e.g. `1.00s-2.03s`.
    pub fn canonical(&self) -> String {
        format!("{:.2}s-{:.2}s", self.start_s, self.end_s)
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Temporal intersection-over-union; 0 when either span is empty.
    pub fn iou(&self, other: &TimeSpan) -> f64 {
        let inter = (self.end_s.min(other.end_s) - self.start_s.max(other.start_s)).max(0.0);
        let union = self.duration().max(0.0) + other.duration().max(0.0) - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// One annotated flaw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectRecord {
    #[serde(rename = "defect_cate")]
    pub categories: BTreeSet<DefectCategory>,
    pub frame_range: FrameRange,
    #[serde(rename = "point")]
    pub points: Vec<PointPrompt>,
    pub explanation: String,
    /// Earlier point sets tried during refinement, oldest first.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attempts: Vec<Vec<PointPrompt>>,
}

/// Ground truth for one clip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VideoAnnotation {
    pub video_id: String,
    pub source: String,
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
    pub verdict: Verdict,
    #[serde(rename = "anchor_type", default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<AnchorType>,
    #[serde(default)]
    pub defects: Vec<DefectRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub real_explanation: Option<String>,
}

impl VideoAnnotation {
    pub fn meta(&self) -> VideoMeta {
        VideoMeta {
            fps: self.fps,
            width: self.width,
            height: self.height,
            frame_count: self.frame_count,
        }
    }
}

/// Geometry and timing of a clip.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VideoMeta {
    pub fps: f64,
    pub width: u32,
    pub height: u32,
    pub frame_count: u32,
}

/// Seconds covered by a frame range: `[start/fps, (end+1)/fps)`.
pub fn frames_to_timespan(range: FrameRange, fps: f64) -> Result<TimeSpan, EvidenceError> {
    if !(fps.is_finite() && fps > 0.0) {
        return Err(EvidenceError::InvalidRate(fps));
    }
    Ok(TimeSpan {
        start_s: f64::from(range.start_frame) / fps,
        end_s: (f64::from(range.end_frame) + 1.0) / fps,
    })
}

// round(v * 1000 / dim), half-up, in exact integer arithmetic
fn scale_half_up(v: u64, num: u64, den: u64) -> u64 {
    (2 * v * num + den) / (2 * den)
}

pub fn normalize_point(p: &PointPrompt, width: u32, height: u32) -> Result<NormalizedPoint, EvidenceError> {
    if p.x >= width || p.y >= height {
        return Err(EvidenceError::PointOutOfFrame { x: p.x, y: p.y, width, height });
    }
    let max = u64::from(NORMALIZED_MAX);
    let x = scale_half_up(u64::from(p.x), max, u64::from(width)).min(max);
    let y = scale_half_up(u64::from(p.y), max, u64::from(height)).min(max);
    Ok(NormalizedPoint { frame: p.frame, x: x as u32, y: y as u32 })
}

/// Maps a normalized point back to pixels. Results are clamped to the last
/// pixel row/column so the returned point always lies inside the frame.
pub fn denormalize_point(n: &NormalizedPoint, width: u32, height: u32) -> (u32, u32) {
    let max = u64::from(NORMALIZED_MAX);
    let x = scale_half_up(u64::from(n.x.min(NORMALIZED_MAX)), u64::from(width), max);
    let y = scale_half_up(u64::from(n.y.min(NORMALIZED_MAX)), u64::from(height), max);
    let clamp = |v: u64, dim: u32| v.min(u64::from(dim.saturating_sub(1))) as u32;
    (clamp(x, width), clamp(y, height))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    Strict,
    Relaxed,
}

/// Handcrafted anchors tolerate more movement, space and lighting oddities.
pub fn strictness_policy(anchor: AnchorType, category: DefectCategory) -> Strictness {
    use DefectCategory::*;
    match (anchor, category) {
        (AnchorType::Handcrafted, MovementAnomaly | SpaceAnomaly | LightingAnomaly) => Strictness::Relaxed,
        _ => Strictness::Strict,
    }
}

/// The single point kept for training: the earliest-frame positive point,
/// first in list order on ties.
pub fn training_point_view(defect: &DefectRecord) -> Result<PointPrompt, EvidenceError> {
    defect
        .points
        .iter()
        .filter(|p| p.is_positive())
        .min_by_key(|p| p.frame)
        .copied()
        .ok_or(EvidenceError::NoPositivePrompt)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    EmptyVideoId,
    EmptySource,
    InvalidRate,
    ZeroDimensions,
    ZeroFrameCount,
    VerdictDefectConflict,
    MissingDefects,
    MissingAnchor,
    UnexpectedAnchor,
    MissingRealExplanation,
    UnexpectedRealExplanation,
    RealSourceMismatch,
    EmptyCategories,
    InvertedFrameRange,
    FrameRangeOutsideVideo,
    PointFrameOutsideRange,
    PointOutOfFrame,
    EmptyExplanation,
}

impl Rule {
    pub fn code(self) -> &'static str {
        match self {
            Rule::EmptyVideoId => "empty-video-id",
            Rule::EmptySource => "empty-source",
            Rule::InvalidRate => "invalid-rate",
            Rule::ZeroDimensions => "zero-dimensions",
            Rule::ZeroFrameCount => "zero-frame-count",
            Rule::VerdictDefectConflict => "verdict-defect-conflict",
            Rule::MissingDefects => "missing-defects",
            Rule::MissingAnchor => "missing-anchor",
            Rule::UnexpectedAnchor => "unexpected-anchor",
            Rule::MissingRealExplanation => "missing-real-explanation",
            Rule::UnexpectedRealExplanation => "unexpected-real-explanation",
            Rule::RealSourceMismatch => "real-source-mismatch",
            Rule::EmptyCategories => "empty-categories",
            Rule::InvertedFrameRange => "inverted-frame-range",
            Rule::FrameRangeOutsideVideo => "frame-range-outside-video",
            Rule::PointFrameOutsideRange => "point-frame-outside-range",
            Rule::PointOutOfFrame => "point-out-of-frame",
            Rule::EmptyExplanation => "empty-explanation",
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.rule)
    }
}

pub const REAL_SOURCE: &str = "Real";

/// Checks every structural invariant of an annotation. An empty result means
/// the annotation is consistent.
pub fn validate_annotation(a: &VideoAnnotation) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |field: String, rule: Rule| out.push(Violation { field, rule });

    if a.video_id.trim().is_empty() {
        push("video_id".into(), Rule::EmptyVideoId);
    }
    if a.source.trim().is_empty() {
        push("source".into(), Rule::EmptySource);
    }
    if !(a.fps.is_finite() && a.fps > 0.0) {
        push("fps".into(), Rule::InvalidRate);
    }
    if a.width == 0 || a.height == 0 {
        push("width/height".into(), Rule::ZeroDimensions);
    }
    if a.frame_count == 0 {
        push("frame_count".into(), Rule::ZeroFrameCount);
    }
    if (a.verdict == Verdict::Real) != (a.source == REAL_SOURCE) {
        push("source".into(), Rule::RealSourceMismatch);
    }

    match a.verdict {
        Verdict::Real => {
            if !a.defects.is_empty() {
                push("defects".into(), Rule::VerdictDefectConflict);
            }
            if a.anchor.is_some() {
                push("anchor_type".into(), Rule::UnexpectedAnchor);
            }
            match &a.real_explanation {
                Some(text) if !text.trim().is_empty() => {}
                _ => push("real_explanation".into(), Rule::MissingRealExplanation),
            }
        }
        Verdict::AiGenerated => {
            if a.defects.is_empty() {
                push("defects".into(), Rule::MissingDefects);
            }
            if a.anchor.is_none() {
                push("anchor_type".into(), Rule::MissingAnchor);
            }
            if a.real_explanation.is_some() {
                push("real_explanation".into(), Rule::UnexpectedRealExplanation);
            }
        }
    }

    for (i, d) in a.defects.iter().enumerate() {
        let field = |name: &str| format!("defects[{i}].{name}");
        if d.categories.is_empty() {
            push(field("defect_cate"), Rule::EmptyCategories);
        }
        if !d.frame_range.is_ordered() {
            push(field("frame_range"), Rule::InvertedFrameRange);
        }
        if a.frame_count > 0 && d.frame_range.end_frame >= a.frame_count {
            push(field("frame_range"), Rule::FrameRangeOutsideVideo);
        }
        if d.explanation.trim().is_empty() {
            push(field("explanation"), Rule::EmptyExplanation);
        }
        let all_sets = std::iter::once(&d.points).chain(d.attempts.iter());
        for (set_idx, points) in all_sets.enumerate() {
            let base = if set_idx == 0 { field("point") } else { field(&format!("attempts[{}]", set_idx - 1)) };
            for (j, p) in points.iter().enumerate() {
                if set_idx == 0 && !d.frame_range.contains(p.frame) {
                    push(format!("{base}[{j}]"), Rule::PointFrameOutsideRange);
                }
                if p.x >= a.width || p.y >= a.height {
                    push(format!("{base}[{j}]"), Rule::PointOutOfFrame);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defect(points: Vec<PointPrompt>) -> DefectRecord {
        DefectRecord {
            categories: [DefectCategory::TextureJitter].into(),
            frame_range: FrameRange::new(0, 20),
            points,
            explanation: "grass texture crawls".into(),
            attempts: vec![],
        }
    }

    fn ai_annotation() -> VideoAnnotation {
        VideoAnnotation {
            video_id: "v1".into(),
            source: "Sora".into(),
            fps: 30.0,
            width: 1920,
            height: 1080,
            frame_count: 300,
            verdict: Verdict::AiGenerated,
            anchor: Some(AnchorType::NaturalRecorded),
            defects: vec![defect(vec![PointPrompt::positive(3, 100, 200)])],
            real_explanation: None,
        }
    }

    #[test]
    fn timespan_examples() {
        let s = frames_to_timespan(FrameRange::new(30, 60), 30.0).unwrap();
        assert_eq!(s.start_s, 1.0);
        assert!((s.end_s - 61.0 / 30.0).abs() < 1e-12);
        assert_eq!(s.canonical(), "1.00s-2.03s");

        let s = frames_to_timespan(FrameRange::new(0, 0), 10.0).unwrap();
        assert_eq!(s.canonical(), "0.00s-0.10s");
        assert!(s.duration() > 0.0);

        // 12/24 = 1/2, 48/24 = 2
        let s = frames_to_timespan(FrameRange::new(12, 47), 24.0).unwrap();
        assert_eq!((s.start_s, s.end_s), (0.5, 2.0));
    }

    #[test]
    fn timespan_rejects_bad_rate() {
        for fps in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                frames_to_timespan(FrameRange::new(0, 1), fps),
                Err(EvidenceError::InvalidRate(_))
            ));
        }
    }

    #[test]
    fn normalize_examples() {
        let n = normalize_point(&PointPrompt::positive(0, 960, 540), 1920, 1080).unwrap();
        assert_eq!((n.x, n.y), (500, 500));
        let n = normalize_point(&PointPrompt::positive(0, 0, 0), 640, 480).unwrap();
        assert_eq!((n.x, n.y), (0, 0));
        // 1919/1920*1000 = 999.48, 1079/1080*1000 = 999.07
        let n = normalize_point(&PointPrompt::positive(0, 1919, 1079), 1920, 1080).unwrap();
        assert_eq!((n.x, n.y), (999, 999));
        assert!(matches!(
            normalize_point(&PointPrompt::positive(0, 1920, 5), 1920, 1080),
            Err(EvidenceError::PointOutOfFrame { .. })
        ));
    }

    #[test]
    fn normalize_rounds_half_up() {
        // 1/8 * 1000 = 125 exactly; 1/16 * 1000 = 62.5 -> 63
        let n = normalize_point(&PointPrompt::positive(0, 1, 1), 16, 8).unwrap();
        assert_eq!((n.x, n.y), (63, 125));
    }

    #[test]
    fn denormalize_examples() {
        let at = |x, y| NormalizedPoint { frame: 0, x, y };
        assert_eq!(denormalize_point(&at(500, 500), 1920, 1080), (960, 540));
        assert_eq!(denormalize_point(&at(0, 0), 1920, 1080), (0, 0));
        // 999*1.92 = 1918.08, 999*1.08 = 1078.92
        assert_eq!(denormalize_point(&at(999, 999), 1920, 1080), (1918, 1079));
        assert_eq!(denormalize_point(&at(1000, 1000), 1920, 1080), (1919, 1079));
    }

    #[test]
    fn strictness_examples() {
        use DefectCategory::*;
        assert_eq!(strictness_policy(AnchorType::Handcrafted, MovementAnomaly), Strictness::Relaxed);
        assert_eq!(strictness_policy(AnchorType::NaturalRecorded, MovementAnomaly), Strictness::Strict);
        assert_eq!(strictness_policy(AnchorType::Handcrafted, ObjectInconsistency), Strictness::Strict);
        let relaxed = AnchorType::ALL
            .iter()
            .flat_map(|a| DefectCategory::ALL.iter().map(move |c| strictness_policy(*a, *c)))
            .filter(|s| *s == Strictness::Relaxed)
            .count();
        assert_eq!(relaxed, 3);
    }

    #[test]
    fn training_point_examples() {
        let d = defect(vec![
            PointPrompt::positive(5, 1, 1),
            PointPrompt::negative(5, 2, 2),
            PointPrompt::positive(7, 3, 3),
        ]);
        assert_eq!(training_point_view(&d).unwrap(), PointPrompt::positive(5, 1, 1));

        let d = defect(vec![PointPrompt::positive(9, 4, 4)]);
        assert_eq!(training_point_view(&d).unwrap(), PointPrompt::positive(9, 4, 4));

        let d = defect(vec![
            PointPrompt::negative(8, 0, 0),
            PointPrompt::positive(6, 10, 10),
            PointPrompt::positive(6, 20, 20),
        ]);
        assert_eq!(training_point_view(&d).unwrap(), PointPrompt::positive(6, 10, 10));

        let d = defect(vec![PointPrompt::negative(1, 0, 0)]);
        assert_eq!(training_point_view(&d), Err(EvidenceError::NoPositivePrompt));
    }

    #[test]
    fn category_loose_matching() {
        assert_eq!(DefectCategory::from_loose("texture_jitter"), Some(DefectCategory::TextureJitter));
        assert_eq!(DefectCategory::from_loose("  LIGHTING   anomaly "), Some(DefectCategory::LightingAnomaly));
        assert_eq!(DefectCategory::from_loose("Space-Anomaly"), Some(DefectCategory::SpaceAnomaly));
        assert_eq!(DefectCategory::from_loose("texture"), None);
    }

    #[test]
    fn validate_examples() {
        assert!(validate_annotation(&ai_annotation()).is_empty());

        let mut a = ai_annotation();
        a.anchor = None;
        let v = validate_annotation(&a);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].rule, Rule::MissingAnchor);

        let real = VideoAnnotation {
            video_id: "r1".into(),
            source: REAL_SOURCE.into(),
            verdict: Verdict::Real,
            anchor: None,
            defects: vec![],
            real_explanation: Some("consistent motion blur and sensor noise".into()),
            ..ai_annotation()
        };
        assert!(validate_annotation(&real).is_empty());

        let conflicted = VideoAnnotation { defects: ai_annotation().defects, ..real };
        let v = validate_annotation(&conflicted);
        assert_eq!(v.iter().map(|v| v.rule).collect::<Vec<_>>(), vec![Rule::VerdictDefectConflict]);
    }

    #[test]
    fn validate_defect_rules() {
        let mut a = ai_annotation();
        a.defects[0].categories.clear();
        a.defects[0].frame_range = FrameRange::new(10, 5);
        a.defects[0].points = vec![PointPrompt::positive(50, 5000, 0)];
        a.defects[0].explanation = "  ".into();
        let rules: Vec<Rule> = validate_annotation(&a).into_iter().map(|v| v.rule).collect();
        assert_eq!(
            rules,
            vec![
                Rule::EmptyCategories,
                Rule::InvertedFrameRange,
                Rule::EmptyExplanation,
                Rule::PointFrameOutsideRange,
                Rule::PointOutOfFrame
            ]
        );
    }
}
