//! File formats for the prompt pipeline.
//!
//! Embeddings: `EMB1` magic, row count and dimension as u32 LE, then f32 LE
//! values row by row; or CSV with one row per prompt. Prompts: TSV with
//! `id, text, origin`. Selection: TSV with `id, cluster_id, labels, origin`
//! where labels are comma-joined.

use std::collections::BTreeSet;

use super::{Origin, PipelineError, PromptRecord};
use crate::evidence::ContentCategory;

pub const EMBEDDING_MAGIC: &[u8; 4] = b"EMB1";

pub fn write_embeddings_binary(rows: &[Vec<f32>]) -> Result<Vec<u8>, PipelineError> {
    let d = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != d) {
        return Err(PipelineError::InvalidInput("embedding rows differ in length".into()));
    }
    let mut out = Vec::with_capacity(12 + rows.len() * d * 4);
    out.extend_from_slice(EMBEDDING_MAGIC);
    out.extend_from_slice(&(rows.len() as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for v in rows.iter().flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

fn format_err(what: &'static str, line: usize, message: impl Into<String>) -> PipelineError {
    PipelineError::Format { what, line, message: message.into() }
}

pub fn read_embeddings_binary(bytes: &[u8]) -> Result<Vec<Vec<f64>>, PipelineError> {
    if bytes.len() < 12 || &bytes[..4] != EMBEDDING_MAGIC {
        return Err(format_err("embeddings", 0, "missing EMB1 header"));
    }
    let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = &bytes[12..];
    if n.checked_mul(d).and_then(|c| c.checked_mul(4)) != Some(body.len()) {
        return Err(format_err("embeddings", 0, format!("expected {n}x{d} floats, body has {} bytes", body.len())));
    }
    if d == 0 {
        return Ok(vec![Vec::new(); n]);
    }
    Ok(body
        .chunks_exact(d * 4)
        .map(|row| row.chunks_exact(4).map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap()))).collect())
        .collect())
}

pub fn read_embeddings_csv(text: &str) -> Result<Vec<Vec<f64>>, PipelineError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| format_err("embeddings", i + 1, e.to_string()))?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(format_err("embeddings", i + 1, "row length differs from first row"));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Dispatches on the magic bytes.
pub fn read_embeddings(bytes: &[u8]) -> Result<Vec<Vec<f64>>, PipelineError> {
    if bytes.starts_with(EMBEDDING_MAGIC) {
        return read_embeddings_binary(bytes);
    }
    let text = std::str::from_utf8(bytes).map_err(|e| format_err("embeddings", 0, e.to_string()))?;
    read_embeddings_csv(text)
}

pub fn read_prompts_tsv(text: &str) -> Result<Vec<PromptRecord>, PipelineError> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if i == 0 && cols.first().is_some_and(|c| c.eq_ignore_ascii_case("id")) {
            continue;
        }
        let [id, text, origin] = cols[..] else {
            return Err(format_err("prompts", i + 1, format!("expected 3 columns, found {}", cols.len())));
        };
        let origin = Origin::from_name(origin).ok_or_else(|| format_err("prompts", i + 1, format!("bad origin {origin:?}")))?;
        if !ids.insert(id.to_string()) {
            return Err(format_err("prompts", i + 1, format!("duplicate id {id}")));
        }
        out.push(PromptRecord::new(id, text, origin));
    }
    Ok(out)
}

pub fn write_prompts_tsv(records: &[PromptRecord]) -> String {
    let mut out = String::from("id\ttext\torigin\n");
    for r in records {
        out.push_str(&format!("{}\t{}\t{}\n", r.id, clean(&r.text), r.origin));
    }
    out
}

fn clean(text: &str) -> String {
    text.replace(['\t', '\n', '\r'], " ")
}

pub fn write_selection_tsv(records: &[&PromptRecord]) -> String {
    let mut out = String::from("id\tcluster_id\tlabels\torigin\n");
    for r in records {
        let cluster = r.cluster_id.map(|c| c.to_string()).unwrap_or_default();
        let labels: Vec<&str> = r.content_labels.iter().map(|c| c.name()).collect();
        out.push_str(&format!("{}\t{}\t{}\t{}\n", r.id, cluster, labels.join(","), r.origin));
    }
    out
}

/// Returns `(id, cluster_id, labels, origin)` rows.
pub fn read_selection_tsv(text: &str) -> Result<Vec<(String, usize, BTreeSet<ContentCategory>, Origin)>, PipelineError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [id, cluster, labels, origin] = cols[..] else {
            return Err(format_err("selection", i + 1, "expected 4 columns"));
        };
        let cluster = cluster.parse().map_err(|_| format_err("selection", i + 1, "bad cluster id"))?;
        let labels = labels
            .split(',')
            .filter(|l| !l.is_empty())
            .map(|l| ContentCategory::from_name(l).ok_or_else(|| format_err("selection", i + 1, format!("bad label {l}"))))
            .collect::<Result<_, _>>()?;
        let origin = Origin::from_name(origin).ok_or_else(|| format_err("selection", i + 1, "bad origin"))?;
        out.push((id.to_string(), cluster, labels, origin));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let rows = vec![vec![1.5f32, -2.0, 0.25], vec![0.0, 3.0, 1e-3]];
        let bytes = write_embeddings_binary(&rows).unwrap();
        let back = read_embeddings(&bytes).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back[1][2], f64::from(1e-3f32));
        assert!(read_embeddings_binary(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn csv_and_tsv() {
        assert_eq!(read_embeddings(b"1,2,3\n4,5,6\n").unwrap()[1], vec![4.0, 5.0, 6.0]);
        assert!(read_embeddings(b"1,2\n4,5,6\n").is_err());

        let p = read_prompts_tsv("id\ttext\torigin\na\ta cat\tsampled\nb\ta dog\tgenerated\n").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p[1].origin, Origin::Generated);
        assert_eq!(read_prompts_tsv(&write_prompts_tsv(&p)).unwrap(), p);
        assert!(read_prompts_tsv("a\tx\tsampled\na\ty\tsampled\n").is_err());

        let mut r = p[0].clone();
        r.cluster_id = Some(7);
        r.content_labels = [ContentCategory::Animals, ContentCategory::People].into();
        let sel = read_selection_tsv(&write_selection_tsv(&[&r])).unwrap();
        assert_eq!(sel[0], ("a".to_string(), 7, r.content_labels.clone(), Origin::Sampled));
    }
}
