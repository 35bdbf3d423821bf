use serde_json::json;
use vidcue_core::tagseq::{lint_trace, parse_trace_bytes, ParseMode};

use crate::cli::ParseArgs;
use crate::context::RunContext;
use crate::error::Result;

pub fn parse(ctx: &mut RunContext, args: &ParseArgs) -> Result<()> {
    let mode = if args.lenient { ParseMode::Lenient } else { ParseMode::Strict };
    let mut failed = 0;
    for path in &args.files {
        let bytes = ctx.read(path)?;
        let outcome = parse_trace_bytes(&bytes, mode);
        let name = path.display().to_string();
        for d in &outcome.diagnostics {
            ctx.note(format!("{name}: {d}"));
        }
        if let Some(t) = &outcome.trace {
            for l in lint_trace(t, None) {
                ctx.note(format!("{name}: lint[{}]: {}", l.code.code(), l.message));
            }
        }
        let ok = outcome.trace.is_some() && !outcome.has_errors();
        failed += usize::from(!ok);
        let record = json!({ "file": name, "ok": ok, "trace": outcome.trace, "diagnostics": outcome.diagnostics });
        match &args.out {
            Some(dir) => {
                let stem = path.file_stem().map_or_else(|| "trace".into(), |s| s.to_string_lossy().into_owned());
                ctx.write(dir.join(format!("{stem}.trace.json")), serde_json::to_string_pretty(&record).expect("json") + "\n");
            }
            None => ctx.out(record.to_string()),
        }
    }
    ctx.findings += failed;
    Ok(())
}
