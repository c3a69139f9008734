use super::*;
use crate::corpus::{bio_from_spans, Example, Sentence};
use proptest::prelude::*;

fn ex(id: &str, text: &str, spans: &[(usize, usize, &str)]) -> Example {
    let s = Sentence::from_text(id, text).unwrap();
    let spans: Vec<EntitySpan> = spans.iter().map(|(a, b, l)| EntitySpan::new(*a, *b, *l)).collect();
    let tags = bio_from_spans(&spans, s.len()).unwrap();
    Example::new(s, tags).unwrap()
}

fn preds(items: &[(&str, &[(usize, usize, &str)])]) -> Predictions {
    items
        .iter()
        .map(|(id, spans)| {
            (
                id.to_string(),
                spans.iter().map(|(a, b, l)| EntitySpan::new(*a, *b, *l)).collect(),
            )
        })
        .collect()
}

fn fixture() -> Dataset {
    Dataset::new(vec![
        ex("s1", "Nina sang", &[(0, 1, "Artist")]),
        ex("s2", "at Louvre today", &[(1, 2, "Facility")]),
        ex("s3", "Miles Davis played", &[(0, 2, "Artist")]),
    ])
}

#[test]
fn hand_computed_fixture() {
    let tax = Taxonomy::bundled();
    // s1 correct, s2 wrong label, s3 missed
    let p = preds(&[("s1", &[(0, 1, "Artist")]), ("s2", &[(1, 2, "Artist")])]);
    let r = score(&fixture(), &p, &tax).unwrap();
    let artist = r.per_class["Artist"];
    assert_eq!((artist.gold_count, artist.pred_count), (2, 2));
    assert_eq!((artist.precision, artist.recall, artist.f1), (0.5, 0.5, 0.5));
    let fac = r.per_class["Facility"];
    assert_eq!((fac.gold_count, fac.pred_count), (1, 0));
    assert_eq!((fac.precision, fac.recall, fac.f1), (0.0, 0.0, 0.0));
    assert_eq!(r.per_class.len(), 2);
    assert_eq!(r.macro_f1, 0.25);
    // micro: P = 1/2, R = 1/3
    assert!((r.micro_f1 - 0.4).abs() < 1e-12);
    // boundary: P = 2/2, R = 2/3
    assert!((r.boundary_f1 - 0.8).abs() < 1e-12);
    assert_eq!(r.confusion["Artist"]["Artist"], 1);
    assert_eq!(r.confusion["Artist"][MISS], 1);
    assert_eq!(r.confusion["Facility"]["Artist"], 1);
    assert!(!r.confusion.contains_key(SPURIOUS));
}

#[test]
fn perfect_and_empty() {
    let tax = Taxonomy::bundled();
    let g = fixture();
    let r = score(&g, &gold_predictions(&g), &tax).unwrap();
    assert_eq!((r.macro_f1, r.micro_f1, r.boundary_f1), (1.0, 1.0, 1.0));
    for (gl, row) in &r.confusion {
        for (pl, _) in row {
            assert_eq!(gl, pl);
        }
    }
    let r = score(&g, &Predictions::new(), &tax).unwrap();
    assert_eq!(r.macro_f1, 0.0);
}

#[test]
fn predicted_only_class_counts_as_zero() {
    let tax = Taxonomy::bundled();
    let p = preds(&[
        ("s1", &[(0, 1, "Artist")]),
        ("s2", &[(1, 2, "Facility"), (0, 1, "Food")]),
        ("s3", &[(0, 2, "Artist")]),
    ]);
    let r = score(&fixture(), &p, &tax).unwrap();
    assert_eq!(r.per_class["Food"].f1, 0.0);
    assert_eq!(r.macro_f1, 2.0 / 3.0);
    assert_eq!(r.confusion[SPURIOUS]["Food"], 1);
}

#[test]
fn input_errors() {
    let tax = Taxonomy::bundled();
    let g = fixture();
    assert_eq!(
        score(&g, &preds(&[("zz", &[])]), &tax),
        Err(EvalError::UnknownSentence("zz".into()))
    );
    assert!(matches!(
        score(&g, &preds(&[("s1", &[(0, 1, "Wizard")])]), &tax),
        Err(EvalError::UnknownLabel { .. })
    ));
    assert!(matches!(
        score(&g, &preds(&[("s1", &[(0, 1, "Artist"), (0, 1, "Food")])]), &tax),
        Err(EvalError::Duplicate { .. })
    ));
    assert!(matches!(
        score(&g, &preds(&[("s1", &[(0, 5, "Artist")])]), &tax),
        Err(EvalError::OutOfRange { .. })
    ));
}

#[test]
fn clean_noisy_sides() {
    let tax = Taxonomy::bundled();
    let g = fixture();
    let p = gold_predictions(&g);
    assert_eq!(clean_noisy_report(&g, &p, &tax).unwrap(), (Some(1.0), None));
    let mut g2 = g.clone();
    g2.examples[2].sentence.noisy = true;
    assert_eq!(clean_noisy_report(&g2, &p, &tax).unwrap(), (Some(1.0), Some(1.0)));
    let full = evaluate(&g2, &Predictions::new(), &tax).unwrap();
    assert_eq!((full.clean_macro_f1, full.noisy_macro_f1), (Some(0.0), Some(0.0)));
}

#[test]
fn outputs() {
    let tax = Taxonomy::bundled();
    let p = preds(&[("s1", &[(0, 1, "Artist")]), ("s2", &[(1, 2, "Artist"), (0, 1, "Food")])]);
    let r = evaluate(&fixture(), &p, &tax).unwrap();
    let back: EvalReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert_eq!(
        r.confusion_csv(),
        "gold\\pred,Artist,Food,MISS\nArtist,1,0,1\nFacility,1,0,0\nSPURIOUS,0,1,0\n"
    );
    let table = r.to_table();
    assert!(table.contains("macro f1"));
    let widths: BTreeSet<usize> = table.lines().take(4).map(|l| l.len()).collect();
    assert_eq!(widths.len(), 1, "{table}");
}

const LABELS: [&str; 4] = ["Artist", "Facility", "Food", "Disease"];

fn dataset() -> impl Strategy<Value = Dataset> {
    let sentence = prop::collection::vec(prop::option::of(0usize..4), 1..8);
    prop::collection::vec(sentence, 1..12).prop_map(|sents| {
        let examples = sents
            .into_iter()
            .enumerate()
            .map(|(i, toks)| {
                let text: Vec<String> = (0..toks.len()).map(|j| format!("t{j}")).collect();
                let spans: Vec<(usize, usize, &str)> = toks
                    .iter()
                    .enumerate()
                    .filter_map(|(j, l)| l.map(|l| (j, j + 1, LABELS[l])))
                    .collect();
                ex(&format!("s{i}"), &text.join(" "), &spans)
            })
            .collect();
        Dataset::new(examples)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gold_against_itself_is_perfect(g in dataset()) {
        let r = score(&g, &gold_predictions(&g), &Taxonomy::bundled()).unwrap();
        prop_assert_eq!(r.macro_f1, 1.0);
        prop_assert_eq!(r.boundary_f1, 1.0);
    }

    #[test]
    fn order_invariant(g in dataset(), drop in 0usize..4) {
        let tax = Taxonomy::bundled();
        let mut p = gold_predictions(&g);
        for spans in p.values_mut() {
            spans.retain(|s| s.start % 4 != drop);
        }
        let a = score(&g, &p, &tax).unwrap();
        let mut rev = g.clone();
        rev.examples.reverse();
        prop_assert_eq!(a.clone(), score(&rev, &p, &tax).unwrap());
        let mean = a.per_class.values().map(|c| c.f1).sum::<f64>() / a.per_class.len().max(1) as f64;
        if !a.per_class.is_empty() {
            prop_assert!((a.macro_f1 - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn relabeling_keeps_boundary_f1(g in dataset(), shift in 1usize..4) {
        let tax = Taxonomy::bundled();
        let p = gold_predictions(&g);
        let mut q = p.clone();
        for spans in q.values_mut() {
            for s in spans {
                let i = LABELS.iter().position(|l| Some(*l) == s.label.as_deref()).unwrap();
                s.label = Some(LABELS[(i + shift) % 4].to_string());
            }
        }
        let a = score(&g, &p, &tax).unwrap();
        let b = score(&g, &q, &tax).unwrap();
        prop_assert_eq!(a.boundary_f1, b.boundary_f1);
    }
}
