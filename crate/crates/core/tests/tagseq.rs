use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vidcue_core::evidence::{DefectCategory, Verdict};
use vidcue_core::synth::random_trace;
use vidcue_core::tagseq::*;

#[test]
fn generated_corpus_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for i in 0..200 {
        let t = random_trace(&mut rng);
        let text = serialize_trace(&t).unwrap();
        let out = parse_trace(&text, ParseMode::Strict);
        assert!(out.diagnostics.is_empty(), "trace {i}: {:?}\n{text}", out.diagnostics);
        assert_eq!(out.trace.as_ref(), Some(&t), "trace {i}\n{text}");
        assert_eq!(serialize_trace(&t).unwrap(), text);
    }
}

const MINIMAL_AI: &str = "<think>The mug handle fuses with the fingers.</think>
<evidence>
<defect_cate>Texture Jitter</defect_cate>
<timestamp>1.00s-2.03s</timestamp>
<explanation>Bark pattern crawls on a still trunk.</explanation>
<located_frame>30</located_frame>
<point_2d>(500, 500)</point_2d>
</evidence>
<answer>AI generated video</answer>";

#[test]
fn grammar_examples() {
    let out = parse_trace(MINIMAL_AI, ParseMode::Strict);
    let t = out.trace.unwrap();
    assert_eq!(t.answer, Verdict::AiGenerated);
    assert_eq!(t.evidence.len(), 1);
    let b = &t.evidence[0];
    assert_eq!(b.categories, Some([DefectCategory::TextureJitter].into()));
    assert_eq!(b.timestamp.unwrap().canonical(), "1.00s-2.03s");
    assert_eq!(b.located_frame, Some(30));
    assert_eq!(b.points, Some(vec![(500, 500)]));

    let real = "<think>Consistent lighting and stable textures throughout.</think><evidence><defect_cate>None</defect_cate><timestamp>None</timestamp><explanation>Handheld shake matches the motion blur.</explanation><located_frame>None</located_frame><point_2d>None</point_2d></evidence><answer>Real video</answer>";
    let t = parse_trace(real, ParseMode::Strict).trace.unwrap();
    assert_eq!(t.answer, Verdict::Real);
    assert!(t.evidence.len() == 1 && t.evidence[0].is_placeholder());

    let unclosed = MINIMAL_AI.trim_end_matches("</answer>");
    let strict = parse_trace(unclosed, ParseMode::Strict);
    assert!(strict.trace.is_none() && strict.has_errors());
    let lenient = parse_trace(unclosed, ParseMode::Lenient);
    assert_eq!(lenient.trace.unwrap().answer, Verdict::AiGenerated);
    assert!(lenient.diagnostics.iter().any(|d| d.severity == Severity::Warning && d.message == "unclosed answer tag"));
}

#[test]
fn lenient_repairs() {
    let messy = MINIMAL_AI
        .replace("Texture Jitter", "texture_jitter")
        .replace("(500, 500)", "[[500, 500], [10, 20]]")
        .replace("AI generated video", "this is an AI-generated video");
    assert!(parse_trace(&messy, ParseMode::Strict).trace.is_none());
    let out = parse_trace(&messy, ParseMode::Lenient);
    let t = out.trace.unwrap();
    assert_eq!(t.evidence[0].points, Some(vec![(500, 500), (10, 20)]));
    assert_eq!(t.answer, Verdict::AiGenerated);
    assert!(!out.diagnostics.is_empty());
}

fn arb_text() -> impl Strategy<Value = String> {
    let pieces = prop::sample::select(vec![
        "<think>", "</think>", "<evidence>", "</evidence>", "<answer>", "</answer>", "<defect_cate>",
        "</defect_cate>", "<timestamp>", "</timestamp>", "<explanation>", "</explanation>", "<located_frame>",
        "</located_frame>", "<point_2d>", "</point_2d>", "None", "Real video", "AI generated video", "1.00s-2.00s",
        "(1, 2)", "Texture Jitter", "Object Inconsistency", "12", ",", " ", "\n", "<", ">", "x", "é",
    ]);
    prop::collection::vec(pieces, 0..40).prop_map(|v| v.concat())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn lenient_accepts_what_strict_accepts(text in arb_text()) {
        let strict = parse_trace(&text, ParseMode::Strict);
        prop_assert_eq!(strict.trace.is_some(), !strict.has_errors());
        if let Some(t) = strict.trace {
            let lenient = parse_trace(&text, ParseMode::Lenient);
            prop_assert_eq!(lenient.trace, Some(t));
            prop_assert!(lenient.diagnostics.is_empty());
        }
    }

    #[test]
    fn arbitrary_bytes_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..300)) {
        for mode in [ParseMode::Strict, ParseMode::Lenient] {
            let out = parse_trace_bytes(&bytes, mode);
            prop_assert!(out.trace.is_some() || out.has_errors());
        }
    }

    #[test]
    fn serialization_is_deterministic_and_lints_clean_points(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = random_trace(&mut rng);
        prop_assert_eq!(serialize_trace(&t.clone()).unwrap(), serialize_trace(&t).unwrap());
        prop_assert!(lint_trace(&t, None).iter().all(|l| l.code != LintCode::PointOutOfRange && l.code != LintCode::AnswerEvidenceConflict));
    }
}
