//! Detection recall and accuracy, explanation precision and diversity, an
//! automatic cue matcher and the multi-model report table.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::evidence::{frames_to_timespan, normalize_point, training_point_view, VideoAnnotation, Verdict, REAL_SOURCE};
use crate::tagseq::EvidenceBlock;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("undefined-metric: {0}")]
    UndefinedMetric(&'static str),
    #[error("record {video_id}: source {source_name:?} disagrees with true verdict")]
    SourceVerdictMismatch { video_id: String, source_name: String },
    #[error("invalid match config: {0}")]
    InvalidConfig(String),
    #[error("malformed {what} at line {line}: {message}")]
    Format { what: &'static str, line: usize, message: String },
}

/// An exact fraction shown as a percentage with one decimal, rounded half up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "ratio denominator must be positive");
        Self { num, den }
    }

    /// Percentage in tenths, rounded half up.
    pub fn tenths(&self) -> u64 {
        (2 * 1000 * self.num + self.den) / (2 * self.den)
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.num as f64 / self.den as f64
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.tenths();
        write!(f, "{}.{}", t / 10, t % 10)
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Shown<'a> {
            num: u64,
            den: u64,
            percent: &'a str,
        }
        Shown { num: self.num, den: self.den, percent: &self.to_string() }.serialize(s)
    }
}

fn default_model() -> String {
    "model".into()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectionRecord {
    #[serde(default = "default_model")]
    pub model: String,
    pub video_id: String,
    pub source: String,
    pub truth: Verdict,
    pub predicted: Verdict,
}

impl DetectionRecord {
    pub fn check(&self) -> Result<(), EvalError> {
        if (self.source == REAL_SOURCE) != (self.truth == Verdict::Real) {
            return Err(EvalError::SourceVerdictMismatch {
                video_id: self.video_id.clone(),
                source_name: self.source.clone(),
            });
        }
        Ok(())
    }

    pub fn correct(&self) -> bool {
        self.truth == self.predicted
    }
}

/// A human judgment on one predicted cue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgedCue {
    #[serde(default = "default_model")]
    pub model: String,
    pub video_id: String,
    pub cue_index: usize,
    #[serde(deserialize_with = "bool_from_digit", serialize_with = "bool_to_digit")]
    pub valid: bool,
}

fn bool_from_digit<'de, D: serde::Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim() {
        "1" | "true" => Ok(true),
        "0" | "false" => Ok(false),
        other => Err(serde::de::Error::custom(format!("valid must be 0 or 1, got {other:?}"))),
    }
}

fn bool_to_digit<S: Serializer>(v: &bool, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*v))
}

/// Reads `[model,]video_id,cue_index,valid` rows with a header line.
pub fn read_judgments_csv(text: &str) -> Result<Vec<JudgedCue>, EvalError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| EvalError::Format { what: "judgments", line: i + 2, message: e.to_string() }))
        .collect()
}

/// One JSON detection per line.
pub fn read_detections_jsonl(text: &str) -> Result<Vec<DetectionRecord>, EvalError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let r: DetectionRecord = serde_json::from_str(l)
                .map_err(|e| EvalError::Format { what: "detections", line: i + 1, message: e.to_string() })?;
            r.check()?;
            Ok(r)
        })
        .collect()
}

/// Source names in first-seen order with `Real` moved last.
pub fn source_order(records: &[DetectionRecord]) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut real = false;
    for r in records {
        if r.source == REAL_SOURCE {
            real = true;
        } else if !out.contains(&r.source) {
            out.push(r.source.clone());
        }
    }
    if real {
        out.push(REAL_SOURCE.into());
    }
    out
}

pub fn recall_by_source(records: &[DetectionRecord]) -> Vec<(String, Ratio)> {
    source_order(records)
        .into_iter()
        .map(|s| {
            let group: Vec<&DetectionRecord> = records.iter().filter(|r| r.source == s).collect();
            let correct = group.iter().filter(|r| r.correct()).count();
            let ratio = Ratio::new(correct as u64, group.len() as u64);
            (s, ratio)
        })
        .collect()
}

pub fn overall_accuracy(records: &[DetectionRecord]) -> Result<Ratio, EvalError> {
    if records.is_empty() {
        return Err(EvalError::UndefinedMetric("accuracy over no records"));
    }
    let correct = records.iter().filter(|r| r.correct()).count();
    Ok(Ratio::new(correct as u64, records.len() as u64))
}

pub fn explanation_precision(judged: &[JudgedCue]) -> Result<Ratio, EvalError> {
    if judged.is_empty() {
        return Err(EvalError::UndefinedMetric("precision over no cues"));
    }
    let valid = judged.iter().filter(|j| j.valid).count();
    Ok(Ratio::new(valid as u64, judged.len() as u64))
}

/// A ground-truth defect: the clip and its index in the annotation.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GtItem {
    pub video_id: String,
    pub defect: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diversity {
    pub per_model: Vec<(String, Ratio)>,
    pub union: usize,
    pub warning: Option<String>,
}

/// Share of the pooled ground-truth items that each model retrieved.
pub fn explanation_diversity(sets: &[(String, BTreeSet<GtItem>)]) -> Diversity {
    let union: BTreeSet<&GtItem> = sets.iter().flat_map(|(_, s)| s.iter()).collect();
    let den = union.len().max(1) as u64;
    Diversity {
        per_model: sets.iter().map(|(m, s)| (m.clone(), Ratio::new(s.len() as u64, den))).collect(),
        union: union.len(),
        warning: union.is_empty().then(|| "no model retrieved any ground-truth item".to_string()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub tau: f64,
    pub radius: f64,
    pub require_category: bool,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { tau: 0.3, radius: 100.0, require_category: true }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(EvalError::InvalidConfig(format!("tau {} outside (0, 1]", self.tau)));
        }
        if !(0.0..=1414.0).contains(&self.radius) {
            return Err(EvalError::InvalidConfig(format!("radius {} outside [0, 1414]", self.radius)));
        }
        Ok(())
    }
}

/// Indices of the ground-truth defects a predicted cue lands on.
pub fn auto_match(block: &EvidenceBlock, gt: &VideoAnnotation, cfg: &MatchConfig) -> Vec<usize> {
    let Some(ts) = block.timestamp else {
        return Vec::new();
    };
    let span = ts.span();
    gt.defects
        .iter()
        .enumerate()
        .filter(|(_, d)| {
            if cfg.require_category {
                let Some(cats) = &block.categories else { return false };
                if cats.is_disjoint(&d.categories) {
                    return false;
                }
            }
            let Ok(gt_span) = frames_to_timespan(d.frame_range, gt.fps) else { return false };
            if span.iou(&gt_span) < cfg.tau {
                return false;
            }
            match &block.points {
                None => true,
                Some(points) if points.is_empty() => true,
                Some(points) => {
                    let Some(target) = training_point_view(d)
                        .ok()
                        .and_then(|p| normalize_point(&p, gt.width, gt.height).ok())
                    else {
                        return false;
                    };
                    points.iter().any(|&(x, y)| {
                        let dx = f64::from(x) - f64::from(target.x);
                        let dy = f64::from(y) - f64::from(target.y);
                        dx.hypot(dy) <= cfg.radius
                    })
                }
            }
        })
        .map(|(i, _)| i)
        .collect()
}

/// Ground-truth defects matched by one predicted cue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CueMatch {
    pub video_id: String,
    pub cue_index: usize,
    pub defects: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelInputs {
    pub name: String,
    pub detections: Vec<DetectionRecord>,
    pub judged: Vec<JudgedCue>,
    pub matches: Vec<CueMatch>,
}

impl ModelInputs {
    /// Ground-truth items reached by cues counted as correct: judged valid
    /// when judgments exist, otherwise every matched cue.
    pub fn retrieved_items(&self) -> BTreeSet<GtItem> {
        let verdicts: BTreeMap<(&str, usize), bool> =
            self.judged.iter().map(|j| ((j.video_id.as_str(), j.cue_index), j.valid)).collect();
        self.matches
            .iter()
            .filter(|m| self.judged.is_empty() || verdicts.get(&(m.video_id.as_str(), m.cue_index)) == Some(&true))
            .flat_map(|m| m.defects.iter().map(|&d| GtItem { video_id: m.video_id.clone(), defect: d }))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub model: String,
    /// Aligned with [`MetricsReport::sources`]; `None` when the model has no
    /// records for that source.
    pub recalls: Vec<Option<Ratio>>,
    pub accuracy: Ratio,
    pub precision: Option<Ratio>,
    pub diversity: Option<Ratio>,
}

impl ReportRow {
    /// Recalls, then `|`, then accuracy.
    pub fn detection_text(&self) -> String {
        let recalls: Vec<String> =
            self.recalls.iter().map(|r| r.map_or_else(|| "n/a".into(), |r| r.to_string())).collect();
        format!("{} | {}", recalls.join(" "), self.accuracy)
    }

    pub fn text(&self) -> String {
        let opt = |r: Option<Ratio>| r.map_or_else(|| "n/a".into(), |r| r.to_string());
        format!("{} | {} {}", self.detection_text(), opt(self.precision), opt(self.diversity))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub sources: Vec<String>,
    pub rows: Vec<ReportRow>,
    pub match_config: MatchConfig,
    pub diversity_union: usize,
    pub warnings: Vec<String>,
}

impl MetricsReport {
    pub fn row(&self, model: &str) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.model == model)
    }

    pub fn to_text(&self) -> String {
        let width = self.rows.iter().map(|r| r.model.len()).chain([5]).max().unwrap_or(5);
        let mut out = format!("{:<width$}  {} | Avg | Precision Diversity\n", "model", self.sources.join(" "));
        for r in &self.rows {
            out.push_str(&format!("{:<width$}  {}\n", r.model, r.text()));
        }
        out.push_str(&format!(
            "# match: tau={} radius={} require_category={}\n",
            self.match_config.tau, self.match_config.radius, self.match_config.require_category
        ));
        for w in &self.warnings {
            out.push_str(&format!("# warning: {w}\n"));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Builds one row per model. Source columns follow first appearance across
/// all models with `Real` last.
pub fn build_report(models: &[ModelInputs], cfg: MatchConfig) -> Result<MetricsReport, EvalError> {
    cfg.validate()?;
    let all: Vec<DetectionRecord> = models.iter().flat_map(|m| m.detections.iter().cloned()).collect();
    for r in &all {
        r.check()?;
    }
    let sources = source_order(&all);
    let mut warnings = Vec::new();

    let retrieved: Vec<(String, BTreeSet<GtItem>)> =
        models.iter().map(|m| (m.name.clone(), m.retrieved_items())).collect();
    let any_matches = models.iter().any(|m| !m.matches.is_empty());
    let diversity = explanation_diversity(&retrieved);
    if any_matches {
        warnings.extend(diversity.warning.clone());
    }

    let mut rows = Vec::new();
    for (i, m) in models.iter().enumerate() {
        let recall: BTreeMap<String, Ratio> = recall_by_source(&m.detections).into_iter().collect();
        for s in &sources {
            if !recall.contains_key(s) {
                warnings.push(format!("{}: no records for source {s}", m.name));
            }
        }
        let precision = if m.judged.is_empty() { None } else { Some(explanation_precision(&m.judged)?) };
        rows.push(ReportRow {
            model: m.name.clone(),
            recalls: sources.iter().map(|s| recall.get(s).copied()).collect(),
            accuracy: overall_accuracy(&m.detections)?,
            precision,
            diversity: any_matches.then(|| diversity.per_model[i].1),
        });
    }
    Ok(MetricsReport { sources, rows, match_config: cfg, diversity_union: diversity.union, warnings })
}

/// Splits detections by their `model` field, keeping first-seen order.
pub fn group_by_model(records: Vec<DetectionRecord>) -> Vec<ModelInputs> {
    let mut out: Vec<ModelInputs> = Vec::new();
    for r in records {
        match out.iter_mut().find(|m| m.name == r.model) {
            Some(m) => m.detections.push(r),
            None => out.push(ModelInputs { name: r.model.clone(), detections: vec![r], ..Default::default() }),
        }
    }
    out
}
