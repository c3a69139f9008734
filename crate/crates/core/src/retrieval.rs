//! Picks the first usable linked record and gathers its description,
//! relations and summary into a [`KnowledgeContext`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{EntitySpan, Sentence};
use crate::kb::{resolve_labels, KbClient, KbRecord, PageStatus};
use crate::linker::{GenerationScorer, LinkCandidate, Linker};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    InstanceOf,
    Occupation,
    SubclassOf,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::InstanceOf => "instance_of",
            Relation::Occupation => "occupation",
            Relation::SubclassOf => "subclass_of",
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeContext {
    pub found: bool,
    pub source_qid: Option<String>,
    pub description: Option<String>,
    pub arguments: Vec<(Relation, Vec<String>)>,
    pub summary: Option<String>,
}

impl KnowledgeContext {
    pub fn not_found() -> Self {
        KnowledgeContext::default()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetrievalConfig {
    /// Also retrieve `subclass_of` (used for the multilingual setting).
    pub include_subclass_of: bool,
    /// Language used to resolve relation labels.
    pub language: String,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            include_subclass_of: false,
            language: "en".to_string(),
        }
    }
}

/// First candidate (in the given order) whose record exists and is a normal
/// page. Deleted, empty, disambiguation and list pages are skipped.
pub fn select_entity<'a, C: KbClient + ?Sized>(
    candidates: &[LinkCandidate],
    kb: &'a C,
) -> Option<(String, std::borrow::Cow<'a, KbRecord>)> {
    candidates.iter().find_map(|c| {
        kb.get_record(&c.qid)
            .filter(|r| r.status == PageStatus::Normal)
            .map(|r| (c.qid.clone(), r))
    })
}

/// Builds the context for a normal record. Relations come in the order
/// instance_of, occupation, subclass_of (only if enabled); empty relations
/// are dropped; labels fall back to the raw qid.
pub fn assemble_context<C: KbClient + ?Sized>(
    record: &KbRecord,
    kb: &C,
    cfg: &RetrievalConfig,
) -> KnowledgeContext {
    let mut relations = vec![
        (Relation::InstanceOf, &record.instance_of),
        (Relation::Occupation, &record.occupation),
    ];
    if cfg.include_subclass_of {
        relations.push((Relation::SubclassOf, &record.subclass_of));
    }
    let arguments = relations
        .into_iter()
        .filter(|(_, qids)| !qids.is_empty())
        .map(|(rel, qids)| (rel, resolve_labels(kb, qids, &cfg.language)))
        .collect();
    KnowledgeContext {
        found: true,
        source_qid: Some(record.qid.clone()),
        description: record.description_en.clone(),
        arguments,
        summary: record.summary_en.clone(),
    }
}

/// What happened while linking one span, for `--trace` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkTrace {
    pub candidates: Vec<LinkCandidate>,
    pub selected: Option<String>,
}

/// Marks `span`, links it, walks the candidates to the first usable record
/// and assembles its context; `found = false` when nothing qualifies.
pub fn link_and_retrieve<S: GenerationScorer, C: KbClient + ?Sized>(
    sentence: &Sentence,
    span: &EntitySpan,
    linker: &Linker<S>,
    kb: &C,
    cfg: &RetrievalConfig,
) -> (KnowledgeContext, LinkTrace) {
    let marked = sentence.marked_text(span);
    let candidates = linker.link(&marked);
    let selected = select_entity(&candidates, kb);
    let (context, selected) = match selected {
        Some((qid, rec)) => (assemble_context(&rec, kb, cfg), Some(qid)),
        None => (KnowledgeContext::not_found(), None),
    };
    (
        context,
        LinkTrace {
            candidates,
            selected,
        },
    )
}
