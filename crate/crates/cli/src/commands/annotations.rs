use std::path::{Path, PathBuf};

use serde_json::Value;
use vidcue_core::corpus::corpus_stats;
use vidcue_core::distill::{
    build_distill_request, default_definitions, distill, emit_sft_records, sft_jsonl, split_sample, VerifiedView,
    DEFAULT_TASK_PROMPT,
};
use vidcue_core::evidence::{validate_annotation, VideoAnnotation};
use vidcue_core::llm::StubLlmClient;

use crate::cli::{DistillArgs, StatsArgs, ValidateArgs};
use crate::context::RunContext;
use crate::error::{CliError, Result};

pub struct Loaded {
    /// `path` or `path:line` or `path#record`.
    pub origin: String,
    pub record: std::result::Result<VideoAnnotation, String>,
}

fn from_value(v: Value) -> std::result::Result<VideoAnnotation, String> {
    serde_json::from_value(v).map_err(|e| format!("malformed annotation: {e}"))
}

fn load_file(ctx: &mut RunContext, path: &Path, out: &mut Vec<Loaded>) -> Result<()> {
    let text = ctx.read_text(path)?;
    let name = path.display().to_string();
    if path.extension().is_some_and(|x| x == "jsonl") {
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record = serde_json::from_str::<Value>(line).map_err(|e| format!("malformed JSON: {e}")).and_then(from_value);
            out.push(Loaded { origin: format!("{name}:{}", i + 1), record });
        }
        return Ok(());
    }
    let value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            out.push(Loaded { origin: name, record: Err(format!("malformed JSON: {e}")) });
            return Ok(());
        }
    };
    match value {
        Value::Object(mut m) if m.contains_key("format") && m.contains_key("records") => {
            let records = match m.remove("records") {
                Some(Value::Array(r)) => r,
                _ => return Err(CliError::io(path, "archive records is not a list")),
            };
            for (i, r) in records.into_iter().enumerate() {
                out.push(Loaded { origin: format!("{name}#{i}"), record: from_value(r) });
            }
        }
        Value::Object(mut m) if m.contains_key("revision") && m.contains_key("info") => {
            if let Some(a) = m.remove("annotation").filter(|a| !a.is_null()) {
                out.push(Loaded { origin: name, record: from_value(a) });
            }
        }
        other => out.push(Loaded { origin: name, record: from_value(other) }),
    }
    Ok(())
}

pub fn load(ctx: &mut RunContext, files: &[PathBuf]) -> Result<Vec<Loaded>> {
    let mut out = Vec::new();
    for f in files {
        for p in ctx.expand(f)? {
            load_file(ctx, &p, &mut out)?;
        }
    }
    Ok(out)
}

/// Loads annotations, failing on the first malformed record.
pub fn load_strict(ctx: &mut RunContext, files: &[PathBuf]) -> Result<Vec<VideoAnnotation>> {
    load(ctx, files)?
        .into_iter()
        .map(|l| l.record.map_err(|e| CliError::Io { path: l.origin.into(), message: e }))
        .collect()
}

pub fn validate(ctx: &mut RunContext, args: &ValidateArgs) -> Result<()> {
    let loaded = load(ctx, &args.files)?;
    let mut bad = 0;
    for l in &loaded {
        match &l.record {
            Err(e) => {
                ctx.out(format!("{}: {e}", l.origin));
                bad += 1;
            }
            Ok(a) => {
                let v = validate_annotation(a);
                for violation in &v {
                    ctx.out(format!("{}: {}: {violation}", l.origin, a.video_id));
                }
                bad += usize::from(!v.is_empty());
            }
        }
    }
    ctx.out(format!("{} records checked, {bad} with problems", loaded.len()));
    ctx.findings += bad;
    Ok(())
}

pub fn stats(ctx: &mut RunContext, args: &StatsArgs) -> Result<()> {
    let annotations = load_strict(ctx, &args.files)?;
    let report = corpus_stats(&annotations);
    let tsv = report.to_tsv();
    ctx.stdout.push_str(&tsv);
    if let Some(out) = &args.out {
        ctx.write(out.join("stats.tsv"), tsv);
    }
    Ok(())
}

pub fn distill_prep(ctx: &mut RunContext, args: &DistillArgs) -> Result<()> {
    if args.max_cues == 0 {
        return Err(CliError::Usage("--max-cues must be positive".into()));
    }
    let annotations = load_strict(ctx, &args.files)?;
    let defs = default_definitions();
    let mut requests = String::new();
    let mut verified = Vec::new();
    for a in &annotations {
        let violations = validate_annotation(a);
        if !violations.is_empty() {
            for v in violations {
                ctx.note(format!("{}: {v}", a.video_id));
            }
            ctx.findings += 1;
            continue;
        }
        let views = split_sample(a, args.max_cues).map_err(|e| CliError::Internal(e.to_string()))?;
        for (part, view) in views.into_iter().enumerate() {
            let request = build_distill_request(&view, &defs).map_err(|e| CliError::Internal(e.to_string()))?;
            let line = serde_json::json!({ "video_id": view.video_id, "part": part, "request": request });
            requests.push_str(&line.to_string());
            requests.push('\n');
            let checked = distill(&view, &defs, &StubLlmClient).and_then(|t| VerifiedView::new(view.clone(), t));
            match checked {
                Ok(v) => verified.push(v),
                Err(e) => {
                    ctx.note(format!("{} part {part}: {e}", a.video_id));
                    ctx.findings += 1;
                }
            }
        }
    }
    let records = emit_sft_records(&verified, DEFAULT_TASK_PROMPT).map_err(|e| CliError::Internal(e.to_string()))?;
    ctx.write(args.out.join("requests.jsonl"), requests);
    ctx.write(args.out.join("sft.jsonl"), sft_jsonl(&records));
    ctx.out(format!("{} annotations, {} verified views, {} SFT records", annotations.len(), verified.len(), records.len()));
    Ok(())
}
