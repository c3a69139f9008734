//! Offline knowledge-base snapshot: one JSON record per line.
//!
//! ```json
//! {"qid":"Q42","names":{"en":["Douglas Adams"]},"description_en":"English writer","instance_of":["Q5"],"subclass_of":[],"occupation":["Q36180"],"summary_en":"Douglas Adams was ...","status":"normal"}
//! ```
//!
//! Absent optionals (`description_en`, `summary_en`) are omitted; the
//! relation lists and `status` are always written.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KbError {
    #[error("snapshot line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("snapshot line {line}: duplicate qid {qid}")]
    Duplicate { line: usize, qid: String },
    #[error("record {qid}: {reason}")]
    Invalid { qid: String, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Whether a qid looks like `Q` followed by one or more ASCII digits.
pub fn is_qid(s: &str) -> bool {
    s.strip_prefix('Q')
        .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageStatus {
    #[default]
    Normal,
    Deleted,
    Empty,
    Disambiguation,
    List,
}

impl fmt::Display for PageStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PageStatus::Normal => "normal",
            PageStatus::Deleted => "deleted",
            PageStatus::Empty => "empty",
            PageStatus::Disambiguation => "disambiguation",
            PageStatus::List => "list",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KbRecord {
    pub qid: String,
    /// Language code → surface names; the first name is the canonical title.
    pub names: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description_en: Option<String>,
    #[serde(default)]
    pub instance_of: Vec<String>,
    #[serde(default)]
    pub subclass_of: Vec<String>,
    #[serde(default)]
    pub occupation: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary_en: Option<String>,
    #[serde(default)]
    pub status: PageStatus,
}

impl KbRecord {
    /// A normal record with a single English name and nothing else.
    pub fn named(qid: impl Into<String>, name_en: impl Into<String>) -> KbRecord {
        KbRecord {
            qid: qid.into(),
            names: BTreeMap::from([("en".to_string(), vec![name_en.into()])]),
            description_en: None,
            instance_of: Vec::new(),
            subclass_of: Vec::new(),
            occupation: Vec::new(),
            summary_en: None,
            status: PageStatus::Normal,
        }
    }

    pub fn canonical_name(&self, language: &str) -> Option<&str> {
        self.names
            .get(language)
            .and_then(|v| v.first())
            .map(String::as_str)
    }

    pub fn validate(&self) -> Result<(), KbError> {
        let invalid = |reason: String| KbError::Invalid {
            qid: self.qid.clone(),
            reason,
        };
        if !is_qid(&self.qid) {
            return Err(invalid("qid must match Q[0-9]+".into()));
        }
        if self.status == PageStatus::Normal && self.names.values().all(Vec::is_empty) {
            return Err(invalid("a normal record needs at least one name".into()));
        }
        for (rel, list) in [
            ("instance_of", &self.instance_of),
            ("subclass_of", &self.subclass_of),
            ("occupation", &self.occupation),
        ] {
            if let Some(bad) = list.iter().find(|q| !is_qid(q)) {
                return Err(invalid(format!("{rel} holds malformed qid {bad:?}")));
            }
        }
        Ok(())
    }
}

/// Record lookup by qid; implemented by the snapshot store.
pub trait KbClient: Send + Sync {
    fn get_record(&self, qid: &str) -> Option<Cow<'_, KbRecord>>;
}

/// Immutable qid → record map.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KbStore {
    records: BTreeMap<String, KbRecord>,
}

impl KbStore {
    pub fn from_records(records: impl IntoIterator<Item = KbRecord>) -> Result<KbStore, KbError> {
        let mut map = BTreeMap::new();
        for (i, r) in records.into_iter().enumerate() {
            r.validate()?;
            if map.contains_key(&r.qid) {
                return Err(KbError::Duplicate {
                    line: i + 1,
                    qid: r.qid,
                });
            }
            map.insert(r.qid.clone(), r);
        }
        Ok(KbStore { records: map })
    }

    pub fn parse(text: &str) -> Result<KbStore, KbError> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let rec: KbRecord = serde_json::from_str(line).map_err(|e| KbError::Malformed {
                line: i + 1,
                reason: e.to_string(),
            })?;
            rec.validate().map_err(|e| KbError::Malformed {
                line: i + 1,
                reason: e.to_string(),
            })?;
            if map.contains_key(&rec.qid) {
                return Err(KbError::Duplicate {
                    line: i + 1,
                    qid: rec.qid,
                });
            }
            map.insert(rec.qid.clone(), rec);
        }
        Ok(KbStore { records: map })
    }

    /// Records in qid order, one JSON object per line.
    pub fn to_snapshot(&self) -> String {
        let mut out = String::new();
        for r in self.records.values() {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), KbError> {
        fs::write(path, self.to_snapshot()).map_err(|source| KbError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn get(&self, qid: &str) -> Option<&KbRecord> {
        self.records.get(qid)
    }

    pub fn records(&self) -> impl Iterator<Item = &KbRecord> + '_ {
        self.records.values()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

impl KbClient for KbStore {
    fn get_record(&self, qid: &str) -> Option<Cow<'_, KbRecord>> {
        self.records.get(qid).map(Cow::Borrowed)
    }
}

pub fn load_snapshot(path: &Path) -> Result<KbStore, KbError> {
    let text = fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.display().to_string(),
        source,
    })?;
    KbStore::parse(&text)
}

/// Exact-match lookup; a missing qid is `None`, not an error.
pub fn get_record<'a, C: KbClient + ?Sized>(kb: &'a C, qid: &str) -> Option<Cow<'a, KbRecord>> {
    kb.get_record(qid)
}

/// Canonical name of `qid` in `language`, or `fallback`.
pub fn label_in<C: KbClient + ?Sized>(kb: &C, qid: &str, language: &str, fallback: &str) -> String {
    kb.get_record(qid)
        .and_then(|r| r.canonical_name(language).map(str::to_string))
        .unwrap_or_else(|| fallback.to_string())
}

/// Canonical English name of `qid`, or `fallback`.
pub fn label_of<C: KbClient + ?Sized>(kb: &C, qid: &str, fallback: &str) -> String {
    label_in(kb, qid, "en", fallback)
}

/// Resolves each qid to its label, falling back to the qid itself; order is
/// kept.
pub fn resolve_labels<C: KbClient + ?Sized>(kb: &C, qids: &[String], language: &str) -> Vec<String> {
    qids.iter().map(|q| label_in(kb, q, language, q)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qid_shape() {
        assert!(is_qid("Q42"));
        assert!(!is_qid("Q"));
        assert!(!is_qid("q42"));
        assert!(!is_qid("Q4a"));
        assert!(!is_qid("P31"));
    }

    #[test]
    fn empty_snapshot() {
        assert!(KbStore::parse("").unwrap().is_empty());
    }

    #[test]
    fn duplicate_rejected() {
        let line = serde_json::to_string(&KbRecord::named("Q1", "A")).unwrap();
        let err = KbStore::parse(&format!("{line}\n{line}\n")).unwrap_err();
        assert!(matches!(err, KbError::Duplicate { line: 2, .. }));
    }

    #[test]
    fn malformed_reported_with_line() {
        let good = serde_json::to_string(&KbRecord::named("Q1", "A")).unwrap();
        let err = KbStore::parse(&format!("{good}\n{{not json\n")).unwrap_err();
        assert!(matches!(err, KbError::Malformed { line: 2, .. }));
        let err = KbStore::parse(r#"{"qid":"X1","names":{"en":["a"]}}"#).unwrap_err();
        assert!(matches!(err, KbError::Malformed { line: 1, .. }));
        let err = KbStore::parse(r#"{"qid":"Q1","names":{}}"#).unwrap_err();
        assert!(matches!(err, KbError::Malformed { line: 1, .. }));
        let err = KbStore::parse(r#"{"qid":"Q1","names":{"en":["a"]},"bogus":1}"#).unwrap_err();
        assert!(matches!(err, KbError::Malformed { line: 1, .. }));
        // non-normal records may be nameless
        assert!(KbStore::parse(r#"{"qid":"Q1","names":{},"status":"deleted"}"#).is_ok());
    }

    #[test]
    fn field_names_are_pinned() {
        let mut r = KbRecord::named("Q42", "Douglas Adams");
        r.description_en = Some("English writer".into());
        r.instance_of = vec!["Q5".into()];
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"qid":"Q42","names":{"en":["Douglas Adams"]},"description_en":"English writer","instance_of":["Q5"],"subclass_of":[],"occupation":[],"status":"normal"}"#
        );
    }

    #[test]
    fn lookup_and_labels() {
        let mut no_en = KbRecord::named("Q43", "x");
        no_en.names = BTreeMap::from([("de".to_string(), vec!["Zett".to_string()])]);
        let store = KbStore::from_records([
            KbRecord::named("Q42", "Douglas Adams"),
            no_en,
            KbRecord::named("Q5", "human"),
        ])
        .unwrap();
        assert_eq!(get_record(&store, "Q42").unwrap().qid, "Q42");
        assert!(get_record(&store, "Q1").is_none());
        assert_eq!(label_of(&store, "Q42", "Q42"), "Douglas Adams");
        assert_eq!(label_of(&store, "Q43", "Q43"), "Q43");
        assert_eq!(label_in(&store, "Q43", "de", "Q43"), "Zett");
        let qids: Vec<String> = ["Q5", "Q99", "Q42"].iter().map(|s| s.to_string()).collect();
        assert_eq!(
            resolve_labels(&store, &qids, "en"),
            vec!["human", "Q99", "Douglas Adams"]
        );
    }
}
