//! Random but well-formed traces and annotations for property tests,
//! fuzzing and demos.

use std::collections::BTreeSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::evidence::{
    AnchorType, DefectCategory, DefectRecord, FrameRange, PointPrompt, VideoAnnotation, Verdict, REAL_SOURCE,
};
use crate::tagseq::{EvidenceBlock, ReasoningTrace, TraceTimestamp};

const WORDS: &[&str] = &[
    "the", "hand", "melts", "into", "cup", "edge", "shimmers", "while", "camera", "pans", "left", "shadow", "points",
    "wrong", "way", "a", "<", ">", "&", "x<y", "None", "50%", "(1, 2)", "café", "frame", "jitter", "3.5s", "naïve",
    "sky", "wheel", "flickers", "…", "tail", "grass", "AI", "real", "video",
];

pub fn sentence<R: Rng + ?Sized>(rng: &mut R, max_words: usize) -> String {
    let n = rng.random_range(1..=max_words.max(1));
    (0..n).map(|_| *WORDS.choose(rng).expect("non-empty")).collect::<Vec<_>>().join(" ")
}

pub fn random_block<R: Rng + ?Sized>(rng: &mut R) -> EvidenceBlock {
    let cats: BTreeSet<DefectCategory> =
        (0..rng.random_range(1..=3)).map(|_| *DefectCategory::ALL.choose(rng).expect("six")).collect();
    let start = rng.random_range(0..3000u64);
    let end = start + rng.random_range(1..1000u64);
    let points = (0..rng.random_range(1..=3))
        .map(|_| (rng.random_range(0..=1000u32), rng.random_range(0..=1000u32)))
        .collect();
    EvidenceBlock {
        categories: Some(cats),
        timestamp: Some(TraceTimestamp::new(start, end)),
        explanation: sentence(rng, 12),
        located_frame: Some(rng.random_range(0..2000)),
        points: Some(points),
    }
}

/// A trace satisfying every serializer invariant.
pub fn random_trace<R: Rng + ?Sized>(rng: &mut R) -> ReasoningTrace {
    let think = sentence(rng, 30);
    if rng.random_bool(0.3) {
        ReasoningTrace { think, evidence: vec![EvidenceBlock::placeholder(sentence(rng, 10))], answer: Verdict::Real }
    } else {
        let n = rng.random_range(1..=4);
        ReasoningTrace { think, evidence: (0..n).map(|_| random_block(rng)).collect(), answer: Verdict::AiGenerated }
    }
}

/// An annotation that passes validation. AI clips get 1 to `max_defects`
/// defects with mixed positive and negative points.
pub fn random_annotation<R: Rng + ?Sized>(rng: &mut R, id: &str, max_defects: usize) -> VideoAnnotation {
    let fps = *[24.0, 25.0, 30.0, 29.97, 60.0].choose(rng).expect("rates");
    let (width, height) = *[(640, 480), (1280, 720), (1920, 1080), (720, 1280), (333, 517)].choose(rng).expect("sizes");
    let frame_count = rng.random_range(30..600);
    if rng.random_bool(0.25) {
        return VideoAnnotation {
            video_id: id.into(),
            source: REAL_SOURCE.into(),
            fps,
            width,
            height,
            frame_count,
            verdict: Verdict::Real,
            anchor: None,
            defects: vec![],
            real_explanation: Some(sentence(rng, 10)),
        };
    }
    let defects = (0..rng.random_range(1..=max_defects.max(1)))
        .map(|_| {
            let start = rng.random_range(0..frame_count);
            let end = rng.random_range(start..frame_count);
            let frame = |rng: &mut R| rng.random_range(start..=end);
            let mut points = vec![PointPrompt::positive(
                frame(rng),
                rng.random_range(0..width),
                rng.random_range(0..height),
            )];
            for _ in 0..rng.random_range(0..3) {
                let p = (frame(rng), rng.random_range(0..width), rng.random_range(0..height));
                points.push(if rng.random_bool(0.5) {
                    PointPrompt::positive(p.0, p.1, p.2)
                } else {
                    PointPrompt::negative(p.0, p.1, p.2)
                });
            }
            DefectRecord {
                categories: (0..rng.random_range(1..=2)).map(|_| *DefectCategory::ALL.choose(rng).expect("six")).collect(),
                frame_range: FrameRange::new(start, end),
                points,
                explanation: sentence(rng, 10),
                attempts: vec![],
            }
        })
        .collect();
    VideoAnnotation {
        video_id: id.into(),
        source: ["GenA", "GenB", "GenC"].choose(rng).expect("sources").to_string(),
        fps,
        width,
        height,
        frame_count,
        verdict: Verdict::AiGenerated,
        anchor: Some(if rng.random_bool(0.5) { AnchorType::NaturalRecorded } else { AnchorType::Handcrafted }),
        defects,
        real_explanation: None,
    }
}
