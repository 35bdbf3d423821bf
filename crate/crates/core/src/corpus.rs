//! Real-video chunk planning, similarity filtering and corpus counts.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::evidence::{DefectCategory, VideoAnnotation, REAL_SOURCE};

pub const CHUNK_SIZES: [u32; 4] = [30, 20, 10, 5];
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.22;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorpusError {
    #[error("invalid duration {0}")]
    InvalidDuration(f64),
    #[error("similarity table row {row} has {found} columns, expected {expected}")]
    RaggedTable { row: usize, found: usize, expected: usize },
    #[error("similarity [{row}][{col}] = {value} outside [-1, 1]")]
    OutOfRange { row: usize, col: usize, value: f64 },
    #[error("malformed similarity table at line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChunkSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl ChunkSpan {
    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Cuts a clip left to right. Each pass walks the sizes from longest to
/// shortest and emits every size that still fits once; passes repeat until
/// less than the shortest size remains, which is dropped.
pub fn chunk_plan(duration_s: f64) -> Result<Vec<ChunkSpan>, CorpusError> {
    if !duration_s.is_finite() || duration_s < 0.0 {
        return Err(CorpusError::InvalidDuration(duration_s));
    }
    let min = f64::from(CHUNK_SIZES[CHUNK_SIZES.len() - 1]);
    let mut spans = Vec::new();
    let mut pos = 0u64;
    while duration_s - pos as f64 >= min {
        for size in CHUNK_SIZES {
            if duration_s - pos as f64 >= f64::from(size) {
                spans.push(ChunkSpan { start_s: pos as f64, end_s: (pos + u64::from(size)) as f64 });
                pos += u64::from(size);
            }
        }
    }
    Ok(spans)
}

/// Chunk-by-prompt cosine similarities.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityTable {
    rows: Vec<Vec<f64>>,
}

impl SimilarityTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, CorpusError> {
        let expected = rows.first().map_or(0, Vec::len);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != expected {
                return Err(CorpusError::RaggedTable { row: r, found: row.len(), expected });
            }
            for (c, &value) in row.iter().enumerate() {
                if !(-1.0..=1.0).contains(&value) {
                    return Err(CorpusError::OutOfRange { row: r, col: c, value });
                }
            }
        }
        Ok(Self { rows })
    }

    /// One row per line, comma separated.
    pub fn from_csv(text: &str) -> Result<Self, CorpusError> {
        let rows = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                l.split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(rows)
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Indices of chunks whose best prompt similarity reaches `threshold`.
pub fn semantic_filter(table: &SimilarityTable, threshold: f64) -> Vec<usize> {
    table
        .rows
        .iter()
        .enumerate()
        .filter(|(_, row)| row.iter().any(|&s| s >= threshold))
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsReport {
    /// `(source, videos)`, generated sources in first-seen order, Real last.
    pub sources: Vec<(String, usize)>,
    /// `(category, count)` for all six categories in canonical order.
    pub categories: Vec<(DefectCategory, usize)>,
    pub total_videos: usize,
    pub total_defects: usize,
    pub total_category_labels: usize,
}

impl StatsReport {
    pub fn source_count(&self, source: &str) -> usize {
        self.sources.iter().find(|(s, _)| s == source).map_or(0, |(_, n)| *n)
    }

    pub fn category_count(&self, cat: DefectCategory) -> usize {
        self.categories.iter().find(|(c, _)| *c == cat).map_or(0, |(_, n)| *n)
    }

    /// Two tab-separated tables: videos per source, then defects per category.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("Video Source\tCount\n");
        for (s, n) in &self.sources {
            out.push_str(&format!("{s}\t{n}\n"));
        }
        out.push_str(&format!("Total\t{}\n\n", self.total_videos));
        let names: Vec<&str> = self.categories.iter().map(|(c, _)| c.name()).collect();
        let counts: Vec<String> = self.categories.iter().map(|(_, n)| n.to_string()).collect();
        out.push_str(&format!("Defect\t{}\n", names.join("\t")));
        out.push_str(&format!("Count\t{}\n", counts.join("\t")));
        out
    }
}

/// A defect with several categories adds one to each of them.
pub fn corpus_stats(annotations: &[VideoAnnotation]) -> StatsReport {
    let mut sources: Vec<(String, usize)> = Vec::new();
    let mut real = 0;
    let mut cats = [0usize; 6];
    let mut total_defects = 0;
    for a in annotations {
        if a.source == REAL_SOURCE {
            real += 1;
        } else if let Some(entry) = sources.iter_mut().find(|(s, _)| *s == a.source) {
            entry.1 += 1;
        } else {
            sources.push((a.source.clone(), 1));
        }
        for d in &a.defects {
            total_defects += 1;
            for c in &d.categories {
                cats[*c as usize] += 1;
            }
        }
    }
    if real > 0 {
        sources.push((REAL_SOURCE.to_string(), real));
    }
    StatsReport {
        sources,
        categories: DefectCategory::ALL.iter().map(|&c| (c, cats[c as usize])).collect(),
        total_videos: annotations.len(),
        total_defects,
        total_category_labels: cats.iter().sum(),
    }
}
