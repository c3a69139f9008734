use std::collections::BTreeMap;

use thiserror::Error;

const BUNDLED: &str = include_str!("../../assets/taxonomy-v1.tsv");

pub const BUNDLED_FINE_COUNT: usize = 36;
pub const BUNDLED_COARSE_COUNT: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum TaxonomyError {
    #[error("taxonomy line {line}: expected `fine<TAB>coarse`")]
    Malformed { line: usize },
    #[error("taxonomy line {line}: fine label {label:?} listed twice")]
    Duplicate { line: usize, label: String },
    #[error("taxonomy has {found} {kind} labels, expected {expected}")]
    Count {
        kind: &'static str,
        found: usize,
        expected: usize,
    },
    #[error("taxonomy is empty")]
    Empty,
}

/// Fine labels and the coarse group each one belongs to.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Taxonomy {
    fine: Vec<String>,
    coarse: Vec<String>,
    coarse_of: BTreeMap<String, String>,
    index: BTreeMap<String, usize>,
}

impl Taxonomy {
    /// The 36-label / 6-group taxonomy shipped with the crate.
    pub fn bundled() -> Taxonomy {
        let t = Taxonomy::parse(BUNDLED).expect("bundled taxonomy parses");
        t.expect_counts(BUNDLED_FINE_COUNT, BUNDLED_COARSE_COUNT)
            .expect("bundled taxonomy is 36 -> 6");
        t
    }

    /// Parses `fine<TAB>coarse` lines; `#` lines and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Taxonomy, TaxonomyError> {
        let mut pairs = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split('\t');
            match (cols.next(), cols.next(), cols.next()) {
                (Some(f), Some(c), None) if !f.trim().is_empty() && !c.trim().is_empty() => {
                    pairs.push((i + 1, f.trim().to_string(), c.trim().to_string()))
                }
                _ => return Err(TaxonomyError::Malformed { line: i + 1 }),
            }
        }
        Taxonomy::from_pairs(pairs)
    }

    fn from_pairs(pairs: Vec<(usize, String, String)>) -> Result<Taxonomy, TaxonomyError> {
        if pairs.is_empty() {
            return Err(TaxonomyError::Empty);
        }
        let mut fine = Vec::new();
        let mut coarse: Vec<String> = Vec::new();
        let mut coarse_of = BTreeMap::new();
        let mut index = BTreeMap::new();
        for (line, f, c) in pairs {
            if index.contains_key(&f) {
                return Err(TaxonomyError::Duplicate { line, label: f });
            }
            index.insert(f.clone(), fine.len());
            if !coarse.contains(&c) {
                coarse.push(c.clone());
            }
            coarse_of.insert(f.clone(), c);
            fine.push(f);
        }
        Ok(Taxonomy {
            fine,
            coarse,
            coarse_of,
            index,
        })
    }

    pub fn expect_counts(&self, fine: usize, coarse: usize) -> Result<(), TaxonomyError> {
        if self.fine.len() != fine {
            return Err(TaxonomyError::Count {
                kind: "fine",
                found: self.fine.len(),
                expected: fine,
            });
        }
        if self.coarse.len() != coarse {
            return Err(TaxonomyError::Count {
                kind: "coarse",
                found: self.coarse.len(),
                expected: coarse,
            });
        }
        Ok(())
    }

    pub fn fine_labels(&self) -> &[String] {
        &self.fine
    }

    pub fn coarse_labels(&self) -> &[String] {
        &self.coarse
    }

    pub fn coarse_of(&self, fine: &str) -> Option<&str> {
        self.coarse_of.get(fine).map(String::as_str)
    }

    pub fn contains(&self, fine: &str) -> bool {
        self.index.contains_key(fine)
    }

    pub fn index_of(&self, fine: &str) -> Option<usize> {
        self.index.get(fine).copied()
    }

    pub fn len(&self) -> usize {
        self.fine.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fine.is_empty()
    }
}
