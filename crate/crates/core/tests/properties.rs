use deixis_core::capture::InputSnapshot;
use deixis_core::history::ConversationHistory;
use deixis_core::resolver::{resolve, GeneratorMode, ResolverConfig};
use deixis_core::scene::{
    associate, overlap_ratio, BBox, DetectedEntity, EntityKind, FrameMeta, OcrText, PixelPoint,
    SceneConfig,
};
use deixis_core::taxonomy::{detect_pronouns, TAXONOMY_LEXEMES};
use proptest::prelude::*;

const W: f64 = 640.0;
const H: f64 = 480.0;

fn arb_box() -> impl Strategy<Value = BBox> {
    (0.0..W - 2.0, 0.0..H - 2.0, 1.0..200.0f64, 1.0..200.0f64)
        .prop_map(|(x, y, w, h)| BBox::new(x, y, (x + w).min(W), (y + h).min(H)).unwrap())
}

fn arb_entity() -> impl Strategy<Value = DetectedEntity> {
    (arb_box(), prop::sample::select(vec!["cup", "box", "sign"]), 0.1..1.0f64).prop_map(
        |(bbox, label, confidence)| DetectedEntity {
            kind: EntityKind::Object,
            label: label.to_string(),
            confidence,
            bbox,
        },
    )
}

fn arb_text() -> impl Strategy<Value = OcrText> {
    (arb_box(), "[a-z]{1,6}", 0.1..1.0f64).prop_map(|(bbox, text, confidence)| OcrText {
        text,
        confidence,
        bbox,
    })
}

fn frame() -> FrameMeta {
    FrameMeta::new(W as u32, H as u32).unwrap()
}

proptest! {
    #[test]
    fn association_ignores_input_order(
        (entities, shuffled_e) in prop::collection::vec(arb_entity(), 0..6).prop_shuffle().prop_flat_map(|e| {
            let s = Just(e.clone()).prop_shuffle();
            (Just(e), s)
        }),
        (texts, shuffled_t) in prop::collection::vec(arb_text(), 0..12).prop_flat_map(|t| {
            let s = Just(t.clone()).prop_shuffle();
            (Just(t), s)
        }),
    ) {
        let cfg = SceneConfig::default();
        let a = associate(&entities, &texts, frame(), &cfg);
        let b = associate(&shuffled_e, &shuffled_t, frame(), &cfg);
        prop_assert_eq!(a, b);
    }

    #[test]
    fn children_meet_threshold_and_cap(
        entities in prop::collection::vec(arb_entity(), 0..6),
        texts in prop::collection::vec(arb_text(), 0..20),
    ) {
        let cfg = SceneConfig::default();
        let g = associate(&entities, &texts, frame(), &cfg);
        let mut attached = 0;
        for p in &g.parents {
            prop_assert!(p.children.len() <= cfg.max_children);
            for c in &p.children {
                prop_assert!(overlap_ratio(&c.bbox, &p.entity.bbox).unwrap() >= cfg.overlap_threshold);
            }
            attached += p.children.len();
        }
        // every text is either an orphan or attached to at least one parent
        let orphans = g.orphan_texts.len();
        prop_assert!(orphans <= g.texts.len());
        prop_assert!(attached + orphans >= g.texts.len());
    }

    #[test]
    fn overlap_ratio_in_unit_range(a in arb_box(), b in arb_box()) {
        let r = overlap_ratio(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
    }

    #[test]
    fn detection_is_case_insensitive(words in prop::collection::vec("[a-zA-Z]{1,7}", 1..8)) {
        let q = words.join(" ");
        let lower: Vec<_> = detect_pronouns(&q.to_lowercase()).into_iter().map(|m| (m.lexeme, m.span)).collect();
        let upper: Vec<_> = detect_pronouns(&q.to_uppercase()).into_iter().map(|m| (m.lexeme, m.span)).collect();
        prop_assert_eq!(lower, upper);
    }

    #[test]
    fn every_lexeme_found_as_a_word(
        idx in 0..TAXONOMY_LEXEMES.len(),
        prefix in "[A-Za-z]{0,5}",
        suffix in "[A-Za-z]{0,5}",
    ) {
        let lexeme = TAXONOMY_LEXEMES[idx];
        let q = format!("{prefix} {lexeme}, {suffix}");
        prop_assert!(detect_pronouns(&q).iter().any(|m| m.lexeme == lexeme));
    }

    #[test]
    fn no_match_inside_longer_words(
        idx in 0..TAXONOMY_LEXEMES.len(),
        prefix in "[a-z]{1,4}",
        suffix in "[a-z]{1,4}",
    ) {
        let word = format!("{prefix}{}{suffix}", TAXONOMY_LEXEMES[idx]);
        // the longer word may itself be a pronoun only if it equals one
        let hits = detect_pronouns(&word);
        prop_assert!(hits.iter().all(|m| m.lexeme == word));
    }

    #[test]
    fn spans_point_at_the_lexeme(q in "[ a-zA-Z,.?']{0,60}") {
        for m in detect_pronouns(&q) {
            let text = q[m.span.start..m.span.end].to_lowercase();
            prop_assert!(text == m.lexeme || m.is_combined_form());
        }
    }

    #[test]
    fn resolution_covers_every_pronoun(q in "[ a-zA-Z]{0,60}", gx in 0.0..W, gy in 0.0..H) {
        let scene = associate(&[], &[], frame(), &SceneConfig::default());
        let snap = InputSnapshot::at(PixelPoint::new(gx, gy), None, &scene.frame);
        let matches = detect_pronouns(&q);
        let res = resolve(&matches, &scene, &snap, &ConversationHistory::new(), &ResolverConfig::default(), GeneratorMode::V1);
        prop_assert_eq!(res.len(), matches.len());
    }
}

#[test]
fn ten_thousand_texts_in_one_parent() {
    let parent = DetectedEntity {
        kind: EntityKind::Object,
        label: "shelf".into(),
        confidence: 0.9,
        bbox: BBox::new(0.0, 0.0, 1000.0, 1000.0).unwrap(),
    };
    let texts: Vec<OcrText> = (0..10_000)
        .map(|i| {
            let x = (i % 100) as f64 * 10.0;
            let y = (i / 100) as f64 * 10.0;
            let w = 1.0 + (i % 7) as f64;
            OcrText {
                text: format!("t{i}"),
                confidence: 0.9,
                bbox: BBox::new(x, y, x + w, y + 5.0).unwrap(),
            }
        })
        .collect();
    let f = FrameMeta::new(1000, 1000).unwrap();
    let g = associate(&[parent], &texts, f, &SceneConfig::default());
    assert_eq!(g.parents[0].children.len(), 5);
    assert!(g.parents[0].children.iter().all(|c| c.bbox.width() == 7.0));
    assert_eq!(g.orphan_texts.len(), 10_000 - 5);
}
