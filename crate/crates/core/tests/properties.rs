use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vidcue_core::corpus::*;
use vidcue_core::distill::*;
use vidcue_core::evidence::*;
use vidcue_core::record::{annotation_from_record, annotation_to_record};
use vidcue_core::synth::random_annotation;
use vidcue_core::tagseq::{parse_trace, ParseMode};

#[test]
fn strictness_relaxed_for_exactly_three_pairs() {
    let mut relaxed = Vec::new();
    for anchor in [AnchorType::NaturalRecorded, AnchorType::Handcrafted] {
        for cat in DefectCategory::ALL {
            if strictness_policy(anchor, cat) == Strictness::Relaxed {
                relaxed.push((anchor, cat));
            }
        }
    }
    assert_eq!(
        relaxed,
        vec![
            (AnchorType::Handcrafted, DefectCategory::MovementAnomaly),
            (AnchorType::Handcrafted, DefectCategory::SpaceAnomaly),
            (AnchorType::Handcrafted, DefectCategory::LightingAnomaly),
        ]
    );
}

fn mutate_point(v: u32, by: i64) -> u32 {
    (i64::from(v) + by).clamp(0, 1000) as u32
}

#[test]
fn renormalized_points_pass_within_slack() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for i in 0..200 {
        let a = random_annotation(&mut rng, &format!("v{i}"), 3);
        if a.verdict == Verdict::Real {
            continue;
        }
        let mut t = gt_trace(&a).unwrap();
        // renormalize the pixel the point maps back to
        for b in &mut t.evidence {
            let (x, y) = b.points.as_ref().unwrap()[0];
            let (px, py) = denormalize_point(&NormalizedPoint { frame: 0, x, y }, a.width, a.height);
            let n = normalize_point(&PointPrompt::positive(0, px, py), a.width, a.height).unwrap();
            b.points = Some(vec![(n.x, n.y)]);
        }
        assert!(verify_trace_against_gt(&t, &a).is_empty());
    }
}

fn field_names(diffs: &[TraceDiff]) -> Vec<&str> {
    diffs.iter().map(|d| d.field.as_str()).collect()
}

#[test]
fn single_mutations_are_named() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    while checked < 100 {
        let a = random_annotation(&mut rng, "v", 3);
        if a.verdict == Verdict::Real {
            continue;
        }
        checked += 1;
        let gt = gt_trace(&a).unwrap();
        assert!(verify_trace_against_gt(&gt, &a).is_empty());
        let last = gt.evidence.len() - 1;

        let mut t = gt.clone();
        let cats = t.evidence[last].categories.as_mut().unwrap();
        let extra = DefectCategory::ALL.into_iter().find(|c| !cats.contains(c)).unwrap();
        cats.insert(extra);
        assert_eq!(field_names(&verify_trace_against_gt(&t, &a)), vec!["defect_cate"]);

        let mut t = gt.clone();
        let ts = t.evidence[last].timestamp.as_mut().unwrap();
        ts.end_cs += 1;
        assert_eq!(field_names(&verify_trace_against_gt(&t, &a)), vec!["timestamp"]);

        let mut t = gt.clone();
        *t.evidence[last].located_frame.as_mut().unwrap() += 1;
        assert_eq!(field_names(&verify_trace_against_gt(&t, &a)), vec!["located_frame"]);

        let mut t = gt.clone();
        let p = &mut t.evidence[last].points.as_mut().unwrap()[0];
        let moved = if p.0 >= 2 { p.0 - 2 } else { p.0 + 2 };
        p.0 = moved;
        assert_eq!(field_names(&verify_trace_against_gt(&t, &a)), vec!["point_2d"]);

        let mut t = gt.clone();
        let p = &mut t.evidence[last].points.as_mut().unwrap()[0];
        p.1 = mutate_point(p.1, if p.1 == 1000 { -1 } else { 1 });
        assert!(verify_trace_against_gt(&t, &a).is_empty());

        let mut t = gt.clone();
        t.evidence[last].explanation = "a different wording".into();
        assert!(verify_trace_against_gt(&t, &a).is_empty());

        let mut t = gt.clone();
        t.answer = Verdict::Real;
        assert!(field_names(&verify_trace_against_gt(&t, &a)).contains(&"answer"));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn normalize_round_trip(w in 1u32..8000, h in 1u32..8000, fx in 0.0f64..1.0, fy in 0.0f64..1.0, frame in 0u32..1000) {
        let x = ((fx * f64::from(w)) as u32).min(w - 1);
        let y = ((fy * f64::from(h)) as u32).min(h - 1);
        let n = normalize_point(&PointPrompt::positive(frame, x, y), w, h).unwrap();
        prop_assert!(n.x <= 1000 && n.y <= 1000);
        let (bx, by) = denormalize_point(&n, w, h);
        prop_assert!(bx < w && by < h);
        prop_assert!(bx.abs_diff(x) <= w.div_ceil(2000));
        prop_assert!(by.abs_diff(y) <= h.div_ceil(2000));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn chunk_plan_invariants(d in 0.0f64..5000.0) {
        let spans = chunk_plan(d).unwrap();
        let mut prev = 0.0;
        for s in &spans {
            prop_assert!(s.start_s >= prev);
            prop_assert!([5.0, 10.0, 20.0, 30.0].contains(&s.duration()));
            prev = s.end_s;
        }
        prop_assert!(prev <= d);
        prop_assert!(d - prev < 5.0);
    }

    #[test]
    fn semantic_filter_monotone(rows in prop::collection::vec(prop::collection::vec(-1.0f64..=1.0, 3), 0..20), lo in -1.0f64..1.0, gap in 0.0f64..1.0) {
        let t = SimilarityTable::new(rows).unwrap();
        let loose = semantic_filter(&t, lo);
        let tight = semantic_filter(&t, lo + gap);
        prop_assert!(tight.iter().all(|i| loose.contains(i)));
    }

    #[test]
    fn stats_category_mass_covers_defects(seed in any::<u64>(), n in 0usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let corpus: Vec<VideoAnnotation> = (0..n).map(|i| random_annotation(&mut rng, &format!("v{i}"), 4)).collect();
        let s = corpus_stats(&corpus);
        prop_assert!(s.total_category_labels >= s.total_defects);
        prop_assert_eq!(s.sources.iter().map(|(_, c)| c).sum::<usize>(), n);
    }

    #[test]
    fn annotations_validate_and_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_annotation(&mut rng, "clip", 5);
        prop_assert!(validate_annotation(&a).is_empty());
        let text = annotation_to_record(&a);
        prop_assert_eq!(annotation_from_record(&text).unwrap(), a);
    }

    #[test]
    fn split_partitions_and_emit_closes(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_annotation(&mut rng, "clip", 9);
        let views = split_sample(&a, DEFAULT_MAX_CUES).unwrap();
        let total: usize = views.iter().map(|v| v.defects.len()).sum();
        prop_assert_eq!(total, a.defects.len());
        for d in &a.defects {
            prop_assert_eq!(views.iter().map(|v| v.defects.iter().filter(|x| *x == d).count()).sum::<usize>(),
                            a.defects.iter().filter(|x| *x == d).count());
        }
        if a.verdict == Verdict::AiGenerated {
            prop_assert!(views.iter().all(|v| (1..=3).contains(&v.defects.len())));
        } else {
            prop_assert_eq!(&views, &vec![a.clone()]);
        }
        let verified: Vec<VerifiedView> = views.into_iter().map(|v| VerifiedView::from_ground_truth(v).unwrap()).collect();
        let records = emit_sft_records(&verified, DEFAULT_TASK_PROMPT).unwrap();
        prop_assert_eq!(records.len(), verified.len());
        for (r, v) in records.iter().zip(&verified) {
            let out = parse_trace(&r.target, ParseMode::Strict);
            prop_assert!(out.diagnostics.is_empty());
            let t = out.trace.unwrap();
            prop_assert!(verify_trace_against_gt(&t, v.view()).is_empty());
            prop_assert_eq!(r.label, v.view().verdict.label());
        }
    }
}
