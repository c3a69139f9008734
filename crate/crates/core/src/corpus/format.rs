use std::collections::HashSet;
use std::fmt::Write as _;

use super::{
    repair_bio, validate_bio, CorpusError, Dataset, Example, Sentence, Tag, Taxonomy, Token,
    BOUNDARY_TYPE,
};

#[derive(Clone, Copy, Debug, Default)]
pub struct ParseOptions<'a> {
    /// Promote orphan `I-X` tags to `B-X` instead of rejecting the file.
    pub repair: bool,
    /// When set, every entity type must be a fine label of this taxonomy
    /// (or the boundary type `ENTITY`).
    pub taxonomy: Option<&'a Taxonomy>,
}

#[derive(Default)]
struct Pending {
    id: Option<String>,
    language: Option<String>,
    noisy: bool,
    first_line: usize,
    rows: Vec<(usize, String, Tag)>,
}

impl Pending {
    fn is_blank(&self) -> bool {
        self.rows.is_empty() && self.id.is_none() && !self.noisy && self.language.is_none()
    }
}

/// Parses the tab-separated corpus format.
///
/// Token lines may also use the four-column `token _ _ tag` layout; the
/// first and last columns are read.
pub fn parse_corpus(text: &str, opts: &ParseOptions<'_>) -> Result<Dataset, CorpusError> {
    let mut examples = Vec::new();
    let mut seen = HashSet::new();
    let mut pending = Pending::default();

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut pending, &mut examples, &mut seen, opts)?;
            continue;
        }
        if line.starts_with('#') && !line.contains('\t') {
            if !pending.rows.is_empty() {
                // a header inside a sentence starts a new one
                flush(&mut pending, &mut examples, &mut seen, opts)?;
            }
            if pending.is_blank() {
                pending.first_line = line_no;
            }
            let mut words = line[1..].split_whitespace();
            match words.next() {
                Some("id") => {
                    let id = words.next().ok_or_else(|| CorpusError::Malformed {
                        line: line_no,
                        reason: "`# id` without a value".into(),
                    })?;
                    pending.id = Some(id.to_string());
                }
                Some("lang") => {
                    let lang = words.next().ok_or_else(|| CorpusError::Malformed {
                        line: line_no,
                        reason: "`# lang` without a value".into(),
                    })?;
                    pending.language = Some(lang.to_string());
                }
                Some("noisy") => pending.noisy = true,
                _ => {}
            }
            continue;
        }
        let (token, tag) = split_row(line).ok_or_else(|| CorpusError::Malformed {
            line: line_no,
            reason: "expected `token<TAB>tag`".into(),
        })?;
        if token.chars().any(char::is_whitespace) {
            return Err(CorpusError::Malformed {
                line: line_no,
                reason: format!("token {token:?} contains whitespace"),
            });
        }
        let tag: Tag = tag.parse().map_err(|_| CorpusError::Malformed {
            line: line_no,
            reason: format!("invalid tag {tag:?}"),
        })?;
        if let (Some(tax), Some(label)) = (opts.taxonomy, tag.label()) {
            if label != BOUNDARY_TYPE && !tax.contains(label) {
                return Err(CorpusError::UnknownLabel {
                    line: line_no,
                    label: label.to_string(),
                });
            }
        }
        if pending.is_blank() {
            pending.first_line = line_no;
        }
        pending.rows.push((line_no, token.to_string(), tag));
    }
    flush(&mut pending, &mut examples, &mut seen, opts)?;
    Ok(Dataset::new(examples))
}

fn split_row(line: &str) -> Option<(&str, &str)> {
    if line.contains('\t') {
        let cols: Vec<&str> = line.split('\t').collect();
        return match cols.as_slice() {
            [tok, tag] | [tok, _, _, tag] if !tok.is_empty() => Some((tok, tag.trim())),
            _ => None,
        };
    }
    let cols: Vec<&str> = line.split_whitespace().collect();
    match cols.as_slice() {
        [tok, tag] | [tok, _, _, tag] => Some((tok, tag)),
        _ => None,
    }
}

fn flush(
    pending: &mut Pending,
    examples: &mut Vec<Example>,
    seen: &mut HashSet<String>,
    opts: &ParseOptions<'_>,
) -> Result<(), CorpusError> {
    let p = std::mem::take(pending);
    if p.rows.is_empty() {
        if p.id.is_some() {
            return Err(CorpusError::Malformed {
                line: p.first_line,
                reason: "sentence header without tokens".into(),
            });
        }
        return Ok(());
    }
    let id = p
        .id
        .unwrap_or_else(|| format!("sent-{}", examples.len() + 1));
    if !seen.insert(id.clone()) {
        return Err(CorpusError::DuplicateId {
            line: p.first_line,
            id,
        });
    }
    let lines: Vec<usize> = p.rows.iter().map(|r| r.0).collect();
    let mut tokens = Vec::with_capacity(p.rows.len());
    let mut tags = Vec::with_capacity(p.rows.len());
    for (index, (_, text, tag)) in p.rows.into_iter().enumerate() {
        tokens.push(Token { text, index });
        tags.push(tag);
    }
    if let Err(v) = validate_bio(&tags) {
        if opts.repair {
            tags = repair_bio(&tags);
        } else {
            return Err(CorpusError::Bio {
                line: lines[v.position],
                tag: v.tag.to_string(),
                after: v.describe_previous(),
            });
        }
    }
    let sentence = Sentence {
        id,
        tokens,
        language: p.language.unwrap_or_else(|| "en".to_string()),
        noisy: p.noisy,
    };
    examples.push(Example { sentence, tags });
    Ok(())
}

/// Writes a dataset in the corpus format accepted by [`parse_corpus`].
pub fn format_corpus(dataset: &Dataset) -> String {
    let mut out = String::new();
    for ex in dataset {
        let s = &ex.sentence;
        let _ = writeln!(out, "# id {}", s.id);
        let _ = writeln!(out, "# lang {}", s.language);
        if s.noisy {
            out.push_str("# noisy\n");
        }
        for (tok, tag) in s.tokens.iter().zip(&ex.tags) {
            let _ = writeln!(out, "{}\t{}", tok.text, tag);
        }
        out.push('\n');
    }
    out
}
