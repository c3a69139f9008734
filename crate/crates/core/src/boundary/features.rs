use crate::corpus::Sentence;

/// Number of feature templates; [`extract_features`] emits at most one
/// feature per template.
pub const TEMPLATE_COUNT: usize = 18;

/// Full character shape: upper → `X`, lower → `x`, digit → `d`, other kept.
pub fn word_shape(word: &str) -> String {
    word.chars()
        .map(|c| {
            if c.is_uppercase() {
                'X'
            } else if c.is_lowercase() {
                'x'
            } else if c.is_numeric() {
                'd'
            } else {
                c
            }
        })
        .collect()
}

/// Shape with runs of the same class collapsed (`Xxxxx` → `Xx`).
pub fn short_shape(word: &str) -> String {
    let mut out = String::new();
    for c in word_shape(word).chars() {
        if !out.ends_with(c) {
            out.push(c);
        }
    }
    out
}

fn lower_at(sentence: &Sentence, i: isize) -> String {
    if i < 0 {
        "<s>".to_string()
    } else if i as usize >= sentence.len() {
        "</s>".to_string()
    } else {
        sentence.tokens[i as usize].text.to_lowercase()
    }
}

fn shape_at(sentence: &Sentence, i: isize) -> String {
    if i < 0 {
        "<s>".to_string()
    } else if i as usize >= sentence.len() {
        "</s>".to_string()
    } else {
        short_shape(&sentence.tokens[i as usize].text)
    }
}

/// Sparse indicator features for token `i`.
///
/// Deterministic; no duplicates; at most [`TEMPLATE_COUNT`] entries.
pub fn extract_features(sentence: &Sentence, i: usize) -> Vec<String> {
    let word = &sentence.tokens[i].text;
    let lower = word.to_lowercase();
    let chars: Vec<char> = word.chars().collect();
    let pos = i as isize;

    let mut feats = Vec::with_capacity(TEMPLATE_COUNT);
    feats.push("bias".to_string());
    feats.push(format!("w={lower}"));
    feats.push(format!("shape={}", word_shape(word)));
    feats.push(format!("sshape={}", short_shape(word)));
    for k in 1..=3.min(chars.len()) {
        let pre: String = chars[..k].iter().collect();
        let suf: String = chars[chars.len() - k..].iter().collect();
        feats.push(format!("pre{k}={pre}"));
        feats.push(format!("suf{k}={suf}"));
    }
    let prev = lower_at(sentence, pos - 1);
    let next = lower_at(sentence, pos + 1);
    feats.push(format!("prev={prev}"));
    feats.push(format!("prev2={}", lower_at(sentence, pos - 2)));
    feats.push(format!("next={next}"));
    feats.push(format!("next2={}", lower_at(sentence, pos + 2)));
    feats.push(format!("prevshape={}", shape_at(sentence, pos - 1)));
    feats.push(format!("nextshape={}", shape_at(sentence, pos + 1)));
    feats.push(format!("prev|w={prev}|{lower}"));
    feats.push(format!("w|next={lower}|{next}"));
    feats
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    #[test]
    fn paris_is() {
        let s = Sentence::from_text("s", "Paris is").unwrap();
        let f: HashSet<String> = extract_features(&s, 0).into_iter().collect();
        for want in ["w=paris", "shape=Xxxxx", "suf3=ris", "next=is", "bias"] {
            assert!(f.contains(want), "missing {want}");
        }
        assert!(f.contains("prev=<s>"));
        assert!(f.contains("next2=</s>"));
        assert!(f.contains("pre1=P"));
    }

    #[test]
    fn deterministic() {
        let s = Sentence::from_text("s", "The Eiffel Tower 1889 !").unwrap();
        for i in 0..s.len() {
            assert_eq!(extract_features(&s, i), extract_features(&s, i));
        }
    }

    #[test]
    fn shapes() {
        assert_eq!(word_shape("McD-9"), "XxX-d");
        assert_eq!(short_shape("Paris"), "Xx");
        assert_eq!(short_shape("1889"), "d");
    }

    // Template enumeration: bias, w, shape, sshape (4) + pre/suf 1..3 (6)
    // + four window words (4) + two window shapes (2) + two bigrams (2).
    #[test]
    fn template_count_bound() {
        assert_eq!(4 + 6 + 4 + 2 + 2, TEMPLATE_COUNT);
        assert!(TEMPLATE_COUNT <= 32);
    }

    proptest! {
        #[test]
        fn at_most_32_unique_features(words in prop::collection::vec("[a-zA-Z0-9!é]{1,40}", 1..6), pick in 0usize..6) {
            let s = Sentence::new("p", words).unwrap();
            let i = pick % s.len();
            let f = extract_features(&s, i);
            prop_assert!(f.len() <= 32);
            prop_assert!(f.len() <= TEMPLATE_COUNT);
            let uniq: HashSet<&String> = f.iter().collect();
            prop_assert_eq!(uniq.len(), f.len());
        }
    }
}
