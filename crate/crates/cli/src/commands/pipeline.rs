use std::collections::{BTreeMap, BTreeSet};

use serde_json::json;
use vidcue_core::corpus::{chunk_plan, semantic_filter, SimilarityTable};
use vidcue_core::llm::StubLlmClient;
use vidcue_core::pipeline::io::{read_embeddings, read_prompts_tsv, read_selection_tsv, write_prompts_tsv, write_selection_tsv};
use vidcue_core::pipeline::reduce::Reducer;
use vidcue_core::pipeline::{
    build_augmentation_request, kmeans, monte_carlo_balance, reduce_embeddings, run_augmentation, select_representative_prompts,
    select_top_clusters, tag_content_categories, tfidf_keywords, PipelineError, Precomputed, PromptRecord, Tokenizer,
};

use crate::cli::{ChunkArgs, ClusterArgs, KeywordsArgs, SampleArgs};
use crate::context::RunContext;
use crate::error::{CliError, Result};

fn pipeline_err(e: PipelineError) -> CliError {
    match e {
        PipelineError::Io(e) => CliError::Internal(e.to_string()),
        PipelineError::Llm(e) => CliError::Internal(e.to_string()),
        other => CliError::Findings(other.to_string()),
    }
}

fn read_coords(text: &str) -> std::result::Result<Vec<[f64; 3]>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|x| x.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| format!("line {}: {e}", i + 1))?;
            <[f64; 3]>::try_from(v).map_err(|v| format!("line {}: expected 3 values, got {}", i + 1, v.len()))
        })
        .collect()
}

pub fn cluster(ctx: &mut RunContext, args: &ClusterArgs) -> Result<()> {
    if !(args.coverage > 0.0 && args.coverage < 1.0) {
        return Err(CliError::Usage("--coverage must lie in (0, 1)".into()));
    }
    if args.k == 0 || args.top_m == 0 {
        return Err(CliError::Usage("--k and --top-m must be positive".into()));
    }
    let bytes = ctx.read(&args.embeddings)?;
    let vectors = read_embeddings(&bytes).map_err(|e| CliError::io(&args.embeddings, e))?;
    let reduction = match &args.coords {
        Some(path) => {
            let text = ctx.read_text(path)?;
            let coords = read_coords(&text).map_err(|e| CliError::io(path, e))?;
            Precomputed(coords).reduce(&vectors)
        }
        None => reduce_embeddings(&vectors),
    }
    .map_err(pipeline_err)?;
    for w in &reduction.warnings {
        ctx.note(format!("warning: {w}"));
    }
    let km = kmeans(&reduction.coords, args.k, args.seed).map_err(pipeline_err)?;
    let top = select_top_clusters(&km.assignments, args.top_m, args.coverage);
    if let Some(w) = &top.warning {
        ctx.note(format!("warning: {w}"));
    }

    let mut tsv = String::from("index\tcluster_id\tx\ty\tz\n");
    for (i, (c, p)) in km.assignments.iter().zip(&reduction.coords).enumerate() {
        tsv.push_str(&format!("{i}\t{c}\t{}\t{}\t{}\n", p[0], p[1], p[2]));
    }
    ctx.write(args.out.join("assignments.tsv"), tsv);
    let report = json!({
        "k": args.k,
        "inertia": km.inertia,
        "iterations": km.iterations,
        "top": top,
    });
    ctx.write(args.out.join("top_clusters.json"), serde_json::to_string_pretty(&report).expect("json") + "\n");
    ctx.out(format!(
        "{} points, k={}, top {} clusters cover {} ({:.1}%)",
        vectors.len(),
        args.k,
        top.clusters.len(),
        top.covered,
        top.coverage * 100.0
    ));
    Ok(())
}

fn read_assignments(text: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && line.starts_with("index")) {
            continue;
        }
        let mut cols = line.split('\t');
        let idx: usize = cols.next().unwrap_or("").trim().parse().map_err(|e| format!("line {}: {e}", i + 1))?;
        let c: usize = cols.next().unwrap_or("").trim().parse().map_err(|e| format!("line {}: {e}", i + 1))?;
        if idx != out.len() {
            return Err(format!("line {}: expected row index {}, found {idx}", i + 1, out.len()));
        }
        out.push(c);
    }
    Ok(out)
}

pub fn keywords(ctx: &mut RunContext, args: &KeywordsArgs) -> Result<()> {
    let text = ctx.read_text(&args.prompts)?;
    let prompts = read_prompts_tsv(&text).map_err(|e| CliError::io(&args.prompts, e))?;
    let text = ctx.read_text(&args.assignments)?;
    let assignments = read_assignments(&text).map_err(|e| CliError::io(&args.assignments, e))?;
    if assignments.len() != prompts.len() {
        return Err(CliError::Findings(format!(
            "{} assignments for {} prompts",
            assignments.len(),
            prompts.len()
        )));
    }
    let cluster_ids: Vec<usize> = match &args.top {
        Some(path) => {
            let text = ctx.read_text(path)?;
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
            v["top"]["clusters"]
                .as_array()
                .ok_or_else(|| CliError::io(path, "no top.clusters list"))?
                .iter()
                .map(|c| c[0].as_u64().map(|c| c as usize).ok_or_else(|| CliError::io(path, "bad cluster entry")))
                .collect::<Result<_>>()?
        }
        None => assignments.iter().copied().collect::<BTreeSet<_>>().into_iter().collect(),
    };
    let tokenizer = match &args.stopwords {
        Some(path) => {
            let text = ctx.read_text(path)?;
            Tokenizer::with_stopwords(text.lines().map(str::trim).filter(|l| !l.is_empty()))
        }
        None => Tokenizer::default(),
    };

    let mut members: BTreeMap<usize, Vec<&PromptRecord>> = BTreeMap::new();
    for (p, &c) in prompts.iter().zip(&assignments) {
        members.entry(c).or_default().push(p);
    }
    let docs: Vec<(usize, Vec<String>)> = cluster_ids
        .iter()
        .map(|c| (*c, members.get(c).map(|m| m.iter().map(|p| p.text.clone()).collect()).unwrap_or_default()))
        .collect();
    let keywords = tfidf_keywords(&docs, args.per_cluster, &tokenizer).map_err(pipeline_err)?;

    let mut candidates: Vec<PromptRecord> = Vec::new();
    let mut generated: Vec<PromptRecord> = Vec::new();
    for kw in &keywords {
        if let Some(w) = &kw.warning {
            ctx.note(format!("warning: cluster {}: {w}", kw.cluster_id));
        }
        let pool: Vec<(String, String)> = members
            .get(&kw.cluster_id)
            .map(|m| m.iter().map(|p| (p.id.clone(), p.text.clone())).collect())
            .unwrap_or_default();
        let reps = select_representative_prompts(&pool, &kw.keywords, args.prompts_per_cluster, args.min_keywords, &tokenizer);
        if let Some(w) = &reps.warning {
            ctx.note(format!("warning: cluster {}: {w}", kw.cluster_id));
        }
        let by_id: BTreeMap<&str, &PromptRecord> = members[&kw.cluster_id].iter().map(|p| (p.id.as_str(), *p)).collect();
        let mut chosen: Vec<PromptRecord> = reps.ids.iter().map(|id| (*by_id[id.as_str()]).clone()).collect();
        if args.augment > 0 {
            let terms: Vec<String> = kw.keywords.iter().map(|k| k.term.clone()).collect();
            let mut seen = BTreeSet::new();
            let exemplars: Vec<String> =
                chosen.iter().map(|p| p.text.clone()).filter(|t| seen.insert(t.clone())).collect();
            let req = build_augmentation_request(kw.cluster_id, &terms, &exemplars, args.augment).map_err(pipeline_err)?;
            let made = run_augmentation(&req, &StubLlmClient).map_err(pipeline_err)?;
            generated.extend(made.iter().cloned());
            chosen.extend(made);
        }
        for mut p in chosen {
            p.cluster_id = Some(kw.cluster_id);
            p.content_labels = tag_content_categories(&p.text, &StubLlmClient).map_err(|e| CliError::Internal(e.to_string()))?;
            candidates.push(p);
        }
    }

    ctx.write(args.out.join("keywords.json"), serde_json::to_string_pretty(&keywords).expect("json") + "\n");
    let refs: Vec<&PromptRecord> = candidates.iter().collect();
    ctx.write(args.out.join("candidates.tsv"), write_selection_tsv(&refs));
    if !generated.is_empty() {
        ctx.write(args.out.join("generated.tsv"), write_prompts_tsv(&generated));
    }
    for kw in &keywords {
        let terms: Vec<&str> = kw.keywords.iter().map(|k| k.term.as_str()).collect();
        ctx.out(format!("cluster {}: {}", kw.cluster_id, terms.join(", ")));
    }
    ctx.out(format!("{} candidates ({} generated)", candidates.len(), generated.len()));
    Ok(())
}

pub fn sample_prompts(ctx: &mut RunContext, args: &SampleArgs) -> Result<()> {
    let text = ctx.read_text(&args.candidates)?;
    let rows = read_selection_tsv(&text).map_err(|e| CliError::io(&args.candidates, e))?;
    let pool: Vec<PromptRecord> = rows
        .into_iter()
        .map(|(id, cluster, labels, origin)| PromptRecord {
            cluster_id: Some(cluster),
            content_labels: labels,
            ..PromptRecord::new(id, "", origin)
        })
        .collect();
    let result = monte_carlo_balance(&pool, args.k, args.trials, args.seed).map_err(pipeline_err)?;
    let chosen: Vec<&PromptRecord> = result.indices.iter().map(|&i| &pool[i]).collect();
    ctx.write(args.out.join("selection.tsv"), write_selection_tsv(&chosen));
    let summary = json!({
        "pool": pool.len(),
        "k": args.k,
        "trials": args.trials,
        "seed": args.seed,
        "best_trial": result.trial,
        "deviation": result.deviation,
        "ids": result.ids,
    });
    ctx.write(args.out.join("balance.json"), serde_json::to_string_pretty(&summary).expect("json") + "\n");
    ctx.out(format!(
        "selected {} of {} candidates, deviation {:.6} (trial {})",
        args.k,
        pool.len(),
        result.deviation,
        result.trial
    ));
    Ok(())
}

pub fn chunk_filter(ctx: &mut RunContext, args: &ChunkArgs) -> Result<()> {
    let text = ctx.read_text(&args.durations)?;
    let mut videos = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end();
        if line.is_empty() || (i == 0 && line.to_ascii_lowercase().starts_with("video")) {
            continue;
        }
        let (id, d) = line
            .split_once('\t')
            .ok_or_else(|| CliError::io(&args.durations, format!("line {}: expected video_id<TAB>seconds", i + 1)))?;
        let d: f64 = d.trim().parse().map_err(|e| CliError::io(&args.durations, format!("line {}: {e}", i + 1)))?;
        videos.push((id.to_string(), d));
    }
    let mut chunks = Vec::new();
    for (id, d) in &videos {
        let plan = chunk_plan(*d).map_err(|e| CliError::Findings(format!("{id}: {e}")))?;
        chunks.extend(plan.into_iter().enumerate().map(|(j, c)| (id.clone(), j, c)));
    }
    let text = ctx.read_text(&args.similarity)?;
    let table = SimilarityTable::from_csv(&text).map_err(|e| CliError::io(&args.similarity, e))?;
    if table.rows().len() != chunks.len() {
        return Err(CliError::Findings(format!(
            "similarity table has {} rows for {} planned chunks",
            table.rows().len(),
            chunks.len()
        )));
    }
    let kept: BTreeSet<usize> = semantic_filter(&table, args.threshold).into_iter().collect();
    let mut tsv = String::from("video_id\tchunk\tstart_s\tend_s\tkept\n");
    for (i, (id, j, c)) in chunks.iter().enumerate() {
        tsv.push_str(&format!("{id}\t{j}\t{}\t{}\t{}\n", c.start_s, c.end_s, u8::from(kept.contains(&i))));
    }
    ctx.out(format!("kept {} of {} chunks from {} videos", kept.len(), chunks.len(), videos.len()));
    match &args.out {
        Some(dir) => ctx.write(dir.join("chunks.tsv"), tsv),
        None => ctx.stdout.push_str(&tsv),
    }
    Ok(())
}
