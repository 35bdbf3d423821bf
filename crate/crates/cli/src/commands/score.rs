use std::collections::BTreeMap;

use serde::Deserialize;
use vidcue_core::eval::{auto_match, build_report, group_by_model, read_detections_jsonl, read_judgments_csv, CueMatch, EvalError, MatchConfig};
use vidcue_core::evidence::VideoAnnotation;
use vidcue_core::tagseq::{parse_trace, ParseMode};

use crate::cli::{Format, ScoreArgs};
use crate::commands::annotations::load_strict;
use crate::context::RunContext;
use crate::error::{CliError, Result};

fn default_model() -> String {
    "model".into()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchLine {
    #[serde(default = "default_model")]
    model: String,
    #[serde(flatten)]
    cue: CueMatch,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TraceLine {
    #[serde(default = "default_model")]
    model: String,
    video_id: String,
    output: String,
}

fn eval_err(e: EvalError) -> CliError {
    match e {
        EvalError::Format { .. } => CliError::Findings(e.to_string()),
        EvalError::InvalidConfig(m) => CliError::Usage(m),
        other => CliError::Findings(other.to_string()),
    }
}

fn jsonl<T: for<'de> Deserialize<'de>>(text: &str, path: &std::path::Path) -> Result<Vec<T>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::io(path, format!("line {}: {e}", i + 1))))
        .collect()
}

pub fn score(ctx: &mut RunContext, args: &ScoreArgs) -> Result<()> {
    let cfg = MatchConfig { tau: args.tau, radius: args.radius, require_category: !args.any_category };
    cfg.validate().map_err(eval_err)?;
    let text = ctx.read_text(&args.detections)?;
    let mut models = group_by_model(read_detections_jsonl(&text).map_err(eval_err)?);

    let slot = |name: &str| -> Result<usize> {
        models
            .iter()
            .position(|m| m.name == name)
            .ok_or_else(|| CliError::Findings(format!("model {name} has no detections")))
    };
    let mut judged = Vec::new();
    if let Some(path) = &args.judgments {
        let text = ctx.read_text(path)?;
        for j in read_judgments_csv(&text).map_err(eval_err)? {
            judged.push((slot(&j.model)?, j));
        }
    }
    let mut matches = Vec::new();
    if let Some(path) = &args.matches {
        let text = ctx.read_text(path)?;
        for m in jsonl::<MatchLine>(&text, path)? {
            matches.push((slot(&m.model)?, m.cue));
        }
    }
    if let Some(path) = &args.traces {
        let gt: BTreeMap<String, VideoAnnotation> =
            load_strict(ctx, &args.gt)?.into_iter().map(|a| (a.video_id.clone(), a)).collect();
        let text = ctx.read_text(path)?;
        for t in jsonl::<TraceLine>(&text, path)? {
            let idx = slot(&t.model)?;
            let Some(a) = gt.get(&t.video_id) else {
                ctx.note(format!("warning: no ground truth for {}", t.video_id));
                continue;
            };
            let outcome = parse_trace(&t.output, ParseMode::Lenient);
            let Some(trace) = outcome.trace else {
                ctx.note(format!("warning: {} output for {} does not parse", t.model, t.video_id));
                continue;
            };
            for (i, block) in trace.evidence.iter().enumerate() {
                let defects = auto_match(block, a, &cfg);
                if !defects.is_empty() {
                    matches.push((idx, CueMatch { video_id: t.video_id.clone(), cue_index: i, defects }));
                }
            }
        }
    }
    for (i, j) in judged {
        models[i].judged.push(j);
    }
    for (i, m) in matches {
        models[i].matches.push(m);
    }

    let report = build_report(&models, cfg).map_err(eval_err)?;
    let rendered = match args.format {
        Format::Text => report.to_text(),
        Format::Json => report.to_json(),
    };
    if let Some(dir) = &args.out {
        let name = if args.format == Format::Json { "report.json" } else { "report.txt" };
        ctx.write(dir.join(name), rendered.clone());
    }
    ctx.stdout.push_str(&rendered);
    Ok(())
}
