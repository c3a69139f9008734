use super::{CorpusError, EntitySpan, Tag, TagSequence, BOUNDARY_TYPE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    SentenceStart,
    Outside,
    OtherType,
}

/// An `I-X` tag that does not continue an entity of type `X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BioViolation {
    pub position: usize,
    pub kind: ViolationKind,
    /// The offending tag and the tag it follows (if any).
    pub tag: Tag,
    pub previous: Option<Tag>,
}

impl BioViolation {
    pub fn describe_previous(&self) -> String {
        match (&self.kind, &self.previous) {
            (ViolationKind::SentenceStart, _) | (_, None) => "sentence start".to_string(),
            (_, Some(p)) => p.to_string(),
        }
    }
}

fn continues(prev: Option<&Tag>, label: &str) -> Result<(), ViolationKind> {
    match prev {
        None => Err(ViolationKind::SentenceStart),
        Some(Tag::O) => Err(ViolationKind::Outside),
        Some(Tag::B(l) | Tag::I(l)) if l == label => Ok(()),
        Some(_) => Err(ViolationKind::OtherType),
    }
}

/// Finds the first `I-X` that does not continue an `X` entity.
pub fn validate_bio(tags: &[Tag]) -> Result<(), BioViolation> {
    let mut prev: Option<&Tag> = None;
    for (position, tag) in tags.iter().enumerate() {
        if let Tag::I(label) = tag {
            if let Err(kind) = continues(prev, label) {
                return Err(BioViolation {
                    position,
                    kind,
                    tag: tag.clone(),
                    previous: prev.cloned(),
                });
            }
        }
        prev = Some(tag);
    }
    Ok(())
}

/// Promotes every orphan `I-X` to `B-X`.
pub fn repair_bio(tags: &[Tag]) -> TagSequence {
    let mut out: TagSequence = Vec::with_capacity(tags.len());
    for tag in tags {
        let fixed = match tag {
            Tag::I(label) if continues(out.last(), label).is_err() => Tag::B(label.clone()),
            t => t.clone(),
        };
        out.push(fixed);
    }
    out
}

/// One span per maximal `B-X I-X ... I-X` run, ordered by start.
///
/// Expects valid BIO; an orphan `I-X` is read as if it were `B-X`.
pub fn spans_from_bio(tags: &[Tag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, &str)> = None;
    for (i, tag) in tags.iter().enumerate() {
        match tag {
            Tag::I(label) if open.is_some_and(|(_, l)| l == label) => {}
            Tag::O => {
                if let Some((start, l)) = open.take() {
                    spans.push(EntitySpan::new(start, i, l));
                }
            }
            Tag::B(label) | Tag::I(label) => {
                if let Some((start, l)) = open.take() {
                    spans.push(EntitySpan::new(start, i, l));
                }
                open = Some((i, label));
            }
        }
    }
    if let Some((start, l)) = open {
        spans.push(EntitySpan::new(start, tags.len(), l));
    }
    spans
}

/// Inverse of [`spans_from_bio`]. Unlabeled spans are written as `ENTITY`.
pub fn bio_from_spans(spans: &[EntitySpan], n: usize) -> Result<TagSequence, CorpusError> {
    let mut sorted: Vec<&EntitySpan> = spans.iter().collect();
    sorted.sort_by_key(|s| (s.start, s.end));
    for s in &sorted {
        s.check(n)?;
    }
    for pair in sorted.windows(2) {
        if pair[1].start < pair[0].end {
            return Err(CorpusError::Overlap(pair[0].bounds(), pair[1].bounds()));
        }
    }
    let mut tags = vec![Tag::O; n];
    for s in sorted {
        let label = s.label.as_deref().unwrap_or(BOUNDARY_TYPE);
        tags[s.start] = Tag::B(label.to_string());
        for t in &mut tags[s.start + 1..s.end] {
            *t = Tag::I(label.to_string());
        }
    }
    Ok(tags)
}

/// Maps every entity type to `ENTITY`, keeping span structure.
pub fn collapse_to_boundary(tags: &[Tag]) -> TagSequence {
    // Adjacent B-X B-Y stays two spans because B is preserved; I-Y after B-X
    // is already invalid and would merge, so read it through spans instead.
    let spans: Vec<EntitySpan> = spans_from_bio(tags)
        .into_iter()
        .map(|s| EntitySpan::unlabeled(s.start, s.end))
        .collect();
    bio_from_spans(&spans, tags.len()).expect("spans from BIO never overlap")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tags(s: &str) -> TagSequence {
        s.split_whitespace().map(|t| t.parse().unwrap()).collect()
    }

    #[test]
    fn spans_basic() {
        assert_eq!(
            spans_from_bio(&tags("O B-X I-X O")),
            vec![EntitySpan::new(1, 3, "X")]
        );
        assert_eq!(
            spans_from_bio(&tags("B-X B-X")),
            vec![EntitySpan::new(0, 1, "X"), EntitySpan::new(1, 2, "X")]
        );
        assert_eq!(
            spans_from_bio(&tags("B-X I-X B-Y I-Y I-Y")),
            vec![EntitySpan::new(0, 2, "X"), EntitySpan::new(2, 5, "Y")]
        );
    }

    #[test]
    fn bio_from_spans_basic() {
        assert_eq!(bio_from_spans(&[], 3).unwrap(), tags("O O O"));
        assert_eq!(
            bio_from_spans(&[EntitySpan::new(0, 2, "X")], 2).unwrap(),
            tags("B-X I-X")
        );
        assert_eq!(
            bio_from_spans(&[EntitySpan::new(0, 2, "X"), EntitySpan::new(1, 3, "Y")], 3),
            Err(CorpusError::Overlap((0, 2), (1, 3)))
        );
        assert!(bio_from_spans(&[EntitySpan::new(2, 4, "X")], 3).is_err());
        assert!(bio_from_spans(&[EntitySpan::new(1, 1, "X")], 3).is_err());
    }

    #[test]
    fn collapse_examples() {
        assert_eq!(
            collapse_to_boundary(&tags("B-Politician I-Politician O")),
            tags("B-ENTITY I-ENTITY O")
        );
        assert_eq!(collapse_to_boundary(&tags("O O")), tags("O O"));
        assert_eq!(
            collapse_to_boundary(&tags("B-X B-Y I-Y")),
            tags("B-ENTITY B-ENTITY I-ENTITY")
        );
    }

    #[test]
    fn validation_and_repair() {
        let v = validate_bio(&tags("I-Artist")).unwrap_err();
        assert_eq!(v.kind, ViolationKind::SentenceStart);
        let v = validate_bio(&tags("O I-X")).unwrap_err();
        assert_eq!((v.position, v.kind), (1, ViolationKind::Outside));
        let v = validate_bio(&tags("B-Y I-X")).unwrap_err();
        assert_eq!(v.kind, ViolationKind::OtherType);
        assert!(validate_bio(&tags("B-X I-X O B-Y")).is_ok());
        assert_eq!(repair_bio(&tags("I-X I-X O I-Y")), tags("B-X I-X O B-Y"));
        assert_eq!(repair_bio(&tags("B-Y I-X")), tags("B-Y B-X"));
    }

    pub(crate) fn valid_tags(max_len: usize) -> impl Strategy<Value = TagSequence> {
        // 0 = O, 1 = B, 2 = I (only when it can continue)
        prop::collection::vec((0u8..3, 0usize..3), 1..=max_len).prop_map(|raw| {
            let labels = ["X", "Y", "Z"];
            let mut out: TagSequence = Vec::new();
            for (kind, li) in raw {
                let t = match (kind, out.last()) {
                    (2, Some(Tag::B(l) | Tag::I(l))) => Tag::I(l.clone()),
                    (0, _) => Tag::O,
                    _ => Tag::B(labels[li].to_string()),
                };
                out.push(t);
            }
            out
        })
    }

    proptest! {
        #[test]
        fn bio_round_trip(t in valid_tags(12)) {
            prop_assert!(validate_bio(&t).is_ok());
            let spans = spans_from_bio(&t);
            prop_assert_eq!(bio_from_spans(&spans, t.len()).unwrap(), t);
        }

        #[test]
        fn collapse_keeps_boundaries(t in valid_tags(12)) {
            let collapsed = collapse_to_boundary(&t);
            prop_assert!(collapsed.iter().all(|x| x.label().is_none_or(|l| l == BOUNDARY_TYPE)));
            let a: Vec<_> = spans_from_bio(&t).iter().map(EntitySpan::bounds).collect();
            let b: Vec<_> = spans_from_bio(&collapsed).iter().map(EntitySpan::bounds).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn repair_is_valid_and_idempotent(raw in prop::collection::vec(0u8..5, 0..12)) {
            let t: TagSequence = raw.iter().map(|k| match k {
                0 => Tag::O,
                1 => Tag::B("X".into()),
                2 => Tag::I("X".into()),
                3 => Tag::B("Y".into()),
                _ => Tag::I("Y".into()),
            }).collect();
            let r = repair_bio(&t);
            prop_assert!(validate_bio(&r).is_ok());
            prop_assert_eq!(repair_bio(&r), r.clone());
            let a: Vec<_> = spans_from_bio(&t);
            let b: Vec<_> = spans_from_bio(&r);
            prop_assert_eq!(a, b);
        }
    }
}
