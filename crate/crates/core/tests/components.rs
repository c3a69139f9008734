use kbner::boundary::{ensemble_predict, BoundaryEnsemble};
use kbner::corpus::{bio_from_spans, spans_from_bio, Dataset, EntitySpan, Example, Sentence, Taxonomy};
use kbner::kb::{load_snapshot, KbRecord, KbStore, PageStatus};
use kbner::pipeline::{generate_synthetic, read_corpus, SyntheticSpec};

const NAMES: [&str; 8] = [
    "Alba", "Borin", "Cates", "Dunmor", "Elsk", "Farrow", "Galt", "Hesper",
];
const FILLER: [&str; 6] = ["we", "saw", "the", "town", "near", "today"];

/// Capitalized words are entities, everything else is lowercase filler.
fn toy(prefix: &str, n: usize, offset: usize) -> Dataset {
    let examples = (0..n)
        .map(|i| {
            let a = NAMES[(i + offset) % NAMES.len()];
            let b = NAMES[(i * 3 + offset + 1) % NAMES.len()];
            let words = [
                FILLER[i % 6],
                a,
                FILLER[(i + 1) % 6],
                FILLER[(i + 2) % 6],
                b,
                "Galt",
                FILLER[(i + 4) % 6],
            ];
            let sentence = Sentence::new(format!("{prefix}-{i}"), words).unwrap();
            let spans = [EntitySpan::new(1, 2, "Person"), EntitySpan::new(4, 6, "Person")];
            let tags = bio_from_spans(&spans, words.len()).unwrap();
            Example::new(sentence, tags).unwrap()
        })
        .collect();
    Dataset::new(examples)
}

#[test]
fn boundary_ensemble_learns_separable_toy() {
    let train = toy("tr", 40, 0);
    let dev = toy("dv", 12, 3);
    let ens = BoundaryEnsemble::train(&train, &dev, 6, &[1, 2, 3, 4, 5]).unwrap();
    for m in ens.members() {
        assert_eq!(m.meta.dev_score, 1.0);
    }
    for ex in dev.to_boundary().iter() {
        let pred = ensemble_predict(&ens, &ex.sentence);
        assert_eq!(spans_from_bio(&pred), ex.spans());
    }
}

#[test]
fn thousand_record_snapshot_round_trips() {
    let records: Vec<KbRecord> = (0..1000)
        .map(|i| {
            let mut r = KbRecord::named(format!("Q{}", i + 1), format!("Entity {i}"));
            r.names.insert("de".into(), vec![format!("Ding {i}"), format!("D{i}")]);
            if i % 2 == 0 {
                r.description_en = Some(format!("thing number {i}"));
            }
            if i % 3 == 0 {
                r.instance_of = vec!["Q5".into()];
                r.occupation = vec![format!("Q{}", (i % 50) + 1)];
            }
            if i % 7 == 0 {
                r.subclass_of = vec!["Q2".into()];
                r.summary_en = Some("a \"quoted\"\tsummary\nover lines".into());
            }
            r.status = match i % 11 {
                0 => PageStatus::Deleted,
                1 => PageStatus::Disambiguation,
                2 => PageStatus::List,
                3 => PageStatus::Empty,
                _ => PageStatus::Normal,
            };
            r
        })
        .collect();
    let store = KbStore::from_records(records.clone()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("kb.jsonl");
    store.save(&path).unwrap();
    let loaded = load_snapshot(&path).unwrap();
    assert_eq!(loaded.len(), 1000);
    for r in &records {
        assert_eq!(loaded.get(&r.qid), Some(r));
    }
    assert_eq!(loaded.to_snapshot(), store.to_snapshot());
}

#[test]
fn synthetic_files_read_back_identically() {
    let spec = SyntheticSpec {
        n_entities: 72,
        n_train: 40,
        n_dev: 10,
        n_test: 20,
        ..SyntheticSpec::default()
    };
    let corpus = generate_synthetic(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    corpus.write(dir.path()).unwrap();
    let tax = Taxonomy::bundled();
    for (name, ds) in [("train", &corpus.train), ("dev", &corpus.dev), ("test", &corpus.test)] {
        let back = read_corpus(&dir.path().join(format!("{name}.tsv")), false, Some(&tax)).unwrap();
        assert_eq!(&back, ds, "{name}");
    }
    let kb = load_snapshot(&dir.path().join("kb.jsonl")).unwrap();
    assert_eq!(kb.to_snapshot(), corpus.kb.to_snapshot());
}
