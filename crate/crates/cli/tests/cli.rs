use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use vidcue_core::evidence::VideoAnnotation;
use vidcue_service::Store;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vidcue"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn text(b: &[u8]) -> String {
    String::from_utf8_lossy(b).into_owned()
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

#[test]
fn validate_clean_fixture_exits_zero() {
    let out = run(&["validate", &fx("annotations")]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("2 records checked, 0 with problems"));
}

#[test]
fn validate_reports_violations_with_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let good = std::fs::read_to_string(fixtures().join("annotations/kling-0007.json")).unwrap();
    let bad = good.replace("[24, 60]", "[24, 500]");
    std::fs::write(dir.path().join("bad.json"), bad).unwrap();
    std::fs::write(dir.path().join("broken.json"), "{").unwrap();
    let out = run(&["validate", &dir.path().display().to_string()]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("frame-range-outside-video"), "{stdout}");
    assert!(stdout.contains("broken.json: malformed JSON"), "{stdout}");
    assert!(stdout.contains("2 records checked, 2 with problems"), "{stdout}");
}

#[test]
fn strict_parse_of_malformed_trace_fails_with_diagnostics() {
    let out = run(&["parse", "--strict", &fx("traces/malformed.txt")]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = text(&out.stderr);
    assert!(stderr.contains("error[unclosed-tag]"), "{stderr}");

    let ok = run(&["parse", "--strict", &fx("traces/well_formed.txt")]);
    assert_eq!(ok.status.code(), Some(0), "{}", text(&ok.stderr));
    let rec: serde_json::Value = serde_json::from_str(text(&ok.stdout).trim()).unwrap();
    assert_eq!(rec["trace"]["answer"], "ai_generated");
    assert_eq!(rec["trace"]["evidence"][0]["located_frame"], 30);
}

#[test]
fn lenient_flag_overrides_strict() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.txt");
    let trace = std::fs::read_to_string(fixtures().join("traces/well_formed.txt")).unwrap();
    std::fs::write(&p, trace.replace("<answer>AI generated video</answer>", "<answer>ai-generated</answer>")).unwrap();
    let p = p.display().to_string();
    assert_eq!(run(&["parse", "--strict", &p]).status.code(), Some(1));
    let out = run(&["parse", "--strict", "--lenient", &p]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stderr).contains("warning["), "{}", text(&out.stderr));
}

#[test]
fn score_reproduces_table_rows() {
    let out = run(&["score", "--detections", &fx("detections/david_xr1.jsonl")]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.contains("DAVID-XR1  80.0 86.7 46.7 80.0 93.3 73.3 | 76.7"), "{stdout}");

    let out = run(&["score", "--detections", &fx("detections/detections.jsonl"), "--format", "json"]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let avg: Vec<(String, String)> = report["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| (r["model"].as_str().unwrap().into(), r["accuracy"]["percent"].as_str().unwrap().into()))
        .collect();
    let expected = [
        ("GPT-4o", "38.9"),
        ("GPT-4.1", "73.3"),
        ("Gemini-2.0-flash", "46.7"),
        ("Gemini-2.5-pro", "72.2"),
        ("Qwen2.5-VL-7B", "26.7"),
        ("DAVID-XR1", "76.7"),
    ];
    assert_eq!(avg, expected.map(|(a, b)| (a.to_string(), b.to_string())));
}

#[test]
fn score_matches_traces_against_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det.jsonl");
    std::fs::write(
        &det,
        "{\"model\":\"m\",\"video_id\":\"kling-0007\",\"source\":\"Kling 2.0\",\"truth\":\"ai_generated\",\"predicted\":\"ai_generated\"}\n\
         {\"model\":\"m\",\"video_id\":\"real-0003\",\"source\":\"Real\",\"truth\":\"real\",\"predicted\":\"real\"}\n",
    )
    .unwrap();
    let output = std::fs::read_to_string(fixtures().join("traces/well_formed.txt")).unwrap();
    let traces = dir.path().join("traces.jsonl");
    std::fs::write(&traces, serde_json::json!({ "model": "m", "video_id": "kling-0007", "output": output }).to_string() + "\n").unwrap();
    let judg = dir.path().join("j.csv");
    std::fs::write(&judg, "model,video_id,cue_index,valid\nm,kling-0007,0,1\nm,kling-0007,1,0\n").unwrap();
    let out = run(&[
        "score",
        "--detections",
        det.to_str().unwrap(),
        "--traces",
        traces.to_str().unwrap(),
        "--judgments",
        judg.to_str().unwrap(),
        "--gt",
        &fx("annotations"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    // one of two judged cues is valid; with a single model the union is its own set
    assert!(stdout.contains("m      100.0 100.0 | 100.0 | 50.0 100.0"), "{stdout}");
    let out = run(&[
        "score",
        "--detections",
        det.to_str().unwrap(),
        "--traces",
        traces.to_str().unwrap(),
        "--gt",
        &fx("annotations"),
        "--format",
        "json",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["diversity_union"], 1);
    assert!(report["rows"][0]["precision"].is_null());
}

#[test]
fn usage_and_io_exit_codes() {
    assert_eq!(run(&["train-toy", "--out", "x"]).status.code(), Some(2), "seed is mandatory");
    assert_eq!(run(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(run(&["stats", "/definitely/missing.json"]).status.code(), Some(3));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    let out = run(&["train-toy", "--seed", "1", "--weights", "1-10", "--out", "x"]);
    assert_eq!(out.status.code(), Some(2), "{}", text(&out.stderr));
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# toy run\nseed = 3\ntrain-toy.steps = 5\ntrain-toy.weights = 1:1\nthreshold = 0.5\n").unwrap();
    let out_dir = dir.path().join("a");
    let out = run(&["--config", cfg.to_str().unwrap(), "train-toy", "--steps", "3", "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("run-manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config"]["steps"], 3);
    assert_eq!(manifest["config"]["weights"], "1:1");
    let curve = std::fs::read_to_string(out_dir.join("curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 4);

    std::fs::write(&cfg, "stats.nope = 1\n").unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "stats", &fx("annotations")]);
    assert_eq!(out.status.code(), Some(2));
}

fn write_prompt_corpus(dir: &Path) -> (PathBuf, PathBuf) {
    let topics = [
        ("dog", ["puppy", "grass", "park", "ball"], [4.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        ("city", ["street", "car", "building", "traffic"], [0.0, 4.0, 0.0, 0.0, 1.0, 0.0]),
        ("kitchen", ["bread", "chef", "soup", "oven"], [0.0, 0.0, 4.0, 0.0, 0.0, 1.0]),
    ];
    let mut tsv = String::from("id\ttext\torigin\n");
    let mut csv = String::new();
    for i in 0..60 {
        let (head, words, center) = &topics[i % 3];
        let a = words[i % 4];
        let b = words[(i / 3 + 1) % 4];
        tsv.push_str(&format!("p{i:02}\ta {head} scene with {a} and {b} at dusk, take {i}\tsampled\n"));
        let row: Vec<String> =
            center.iter().enumerate().map(|(d, c)| format!("{}", c + 0.3 * ((i * 7 + d * 13) as f64).sin())).collect();
        csv.push_str(&row.join(","));
        csv.push('\n');
    }
    let p = dir.join("prompts.tsv");
    let e = dir.join("emb.csv");
    std::fs::write(&p, tsv).unwrap();
    std::fs::write(&e, csv).unwrap();
    (p, e)
}

fn pipeline_chain(work: &Path, prompts: &Path, emb: &Path) -> Vec<(String, Vec<u8>)> {
    let s = |p: &Path| p.display().to_string();
    let c = work.join("cluster");
    let out = run(&["cluster", "--embeddings", &s(emb), "--k", "3", "--top-m", "3", "--coverage", "0.5", "--seed", "9", "--out", &s(&c)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("60 points, k=3, top 3 clusters cover 60"), "{}", text(&out.stdout));
    let k = work.join("keywords");
    let out = run(&[
        "keywords",
        "--prompts",
        &s(prompts),
        "--assignments",
        &s(&c.join("assignments.tsv")),
        "--top",
        &s(&c.join("top_clusters.json")),
        "--per-cluster",
        "4",
        "--prompts-per-cluster",
        "8",
        "--min-keywords",
        "1",
        "--augment",
        "4",
        "--out",
        &s(&k),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("36 candidates (12 generated)"), "{}", text(&out.stdout));
    let m = work.join("sample");
    let out = run(&["sample-prompts", "--candidates", &s(&k.join("candidates.tsv")), "--k", "12", "--trials", "300", "--seed", "5", "--out", &s(&m)]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let selection = std::fs::read_to_string(m.join("selection.tsv")).unwrap();
    assert_eq!(selection.lines().count(), 13);

    let mut files = Vec::new();
    for sub in ["cluster", "keywords", "sample"] {
        let mut names: Vec<_> = std::fs::read_dir(work.join(sub)).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        for n in names.into_iter().filter(|n| n != "run-manifest.json") {
            files.push((format!("{sub}/{}", n.to_string_lossy()), std::fs::read(work.join(sub).join(&n)).unwrap()));
        }
    }
    files
}

#[test]
fn prompt_pipeline_chain_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (prompts, emb) = write_prompt_corpus(dir.path());
    let first = pipeline_chain(&dir.path().join("run1"), &prompts, &emb);
    let second = pipeline_chain(&dir.path().join("run2"), &prompts, &emb);
    assert_eq!(first, second);

    let keywords: serde_json::Value = serde_json::from_slice(&first.iter().find(|(n, _)| n == "keywords/keywords.json").unwrap().1).unwrap();
    let mut tops: Vec<String> = keywords
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["keywords"][0]["term"].as_str().unwrap().to_string())
        .collect();
    tops.sort();
    assert_eq!(tops.len(), 3);
    for t in &tops {
        assert!(["dog", "city", "kitchen", "puppy", "grass", "park", "ball", "street", "car", "building", "traffic", "bread", "chef", "soup", "oven"].contains(&t.as_str()), "{t}");
    }

    let m1: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run1/sample/run-manifest.json")).unwrap()).unwrap();
    let m2: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("run2/sample/run-manifest.json")).unwrap()).unwrap();
    let digests = |m: &serde_json::Value| m["outputs"].as_object().unwrap().values().cloned().collect::<Vec<_>>();
    assert_eq!(digests(&m1), digests(&m2));
    assert_eq!(m1["seed"], 5);
}

#[test]
fn chunk_filter_keeps_threshold_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().join("d.tsv");
    std::fs::write(&d, "video_id\tseconds\na\t65\nb\t37\n").unwrap();
    let s = dir.path().join("s.csv");
    std::fs::write(&s, "0.1,0.22\n0.2199,0.0\n0.9,0.1\n-0.5,0.0\n0.3,0.3\n0.21,0.2\n").unwrap();
    let out = run(&["chunk-filter", "--durations", d.to_str().unwrap(), "--similarity", s.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    let stdout = text(&out.stdout);
    assert!(stdout.starts_with("kept 3 of 6 chunks from 2 videos"), "{stdout}");
    let kept: Vec<&str> = stdout.lines().skip(2).map(|l| l.rsplit('\t').next().unwrap()).collect();
    assert_eq!(kept, ["1", "0", "1", "0", "1", "0"]);
    assert!(stdout.contains("a\t0\t0\t30\t1") && stdout.contains("b\t1\t30\t35\t0"), "{stdout}");

    std::fs::write(&s, "0.5\n").unwrap();
    assert_eq!(run(&["chunk-filter", "--durations", d.to_str().unwrap(), "--similarity", s.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn distill_prep_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["distill-prep", &fx("annotations"), "--max-cues", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", text(&out.stderr));
    assert!(text(&out.stdout).contains("2 annotations, 3 verified views, 3 SFT records"));
    let sft = std::fs::read_to_string(dir.path().join("sft.jsonl")).unwrap();
    let labels: Vec<u64> = sft.lines().map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["label"].as_u64().unwrap()).collect();
    assert_eq!(labels, [1, 1, 0]);

    let out = run(&["stats", &fx("annotations")]);
    let stdout = text(&out.stdout);
    assert!(stdout.contains("Kling 2.0\t1\nReal\t1\nTotal\t2"), "{stdout}");
    assert!(text(&out.stderr).contains("manifest: {"));
}

#[test]
fn serve_imports_an_archive_and_answers_requests() {
    let src = tempfile::tempdir().unwrap();
    let store = Store::open(src.path()).unwrap();
    for name in ["kling-0007", "real-0003"] {
        let a: VideoAnnotation = serde_json::from_str(&std::fs::read_to_string(fixtures().join(format!("annotations/{name}.json"))).unwrap()).unwrap();
        store.put(name, a, 0).unwrap();
    }
    let archive_path = src.path().join("archive.json");
    let archive = store.export().unwrap();
    std::fs::write(&archive_path, &archive).unwrap();

    let target = tempfile::tempdir().unwrap();
    let mut child = bin()
        .args(["serve", "--bind", "127.0.0.1:0", "--import", archive_path.to_str().unwrap()])
        .env("VIDCUE_STORE", target.path())
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stderr.take().unwrap()).lines();
    let addr = loop {
        let line = lines.next().expect("server prints its address").unwrap();
        if let Some(a) = line.strip_prefix("listening on http://") {
            break a.to_string();
        }
    };
    let get = |path: &str| {
        let mut s = TcpStream::connect(&addr).unwrap();
        write!(s, "GET {path} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
        let mut body = String::new();
        s.read_to_string(&mut body).unwrap();
        body
    };
    let list = get("/videos");
    let export = {
        let mut s = TcpStream::connect(&addr).unwrap();
        write!(s, "POST /export HTTP/1.1\r\nHost: x\r\nContent-Length: 0\r\nConnection: close\r\n\r\n").unwrap();
        let mut body = String::new();
        s.read_to_string(&mut body).unwrap();
        body
    };
    child.kill().unwrap();
    let _ = child.wait();
    assert!(list.starts_with("HTTP/1.1 200"), "{list}");
    assert!(list.find("kling-0007").unwrap() < list.find("real-0003").unwrap());
    assert!(export.ends_with(&archive), "re-export differs");
}
