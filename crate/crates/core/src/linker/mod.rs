//! Entity linking by generating `"name >> lang"` strings one character at a
//! time, constrained to a prefix trie of knowledge-base names.

mod beam;
mod scorer;
mod trie;

pub use beam::{
    constrained_beam_search, log_sum_exp, marginalize, LinkCandidate, DEFAULT_BEAM, DEFAULT_K,
};
pub use scorer::{
    mention_of, train_scorer, CharNgramScorer, GenerationScorer, DEFAULT_COPY_WEIGHT,
    SCORER_SECTION,
};
pub use trie::{build_trie, entry_string, split_entry, AliasTrie, Symbol, LANG_SEPARATOR};

use thiserror::Error;

use crate::kb::KbStore;

#[derive(Debug, Error, PartialEq)]
pub enum LinkerError {
    #[error("scorer training set is empty")]
    EmptyTrainingSet,
    #[error("copy weight {0} is outside [0, 1]")]
    CopyWeight(f64),
}

/// Everything needed to link a marked mention.
pub struct Linker<S> {
    pub trie: AliasTrie,
    pub scorer: S,
    pub beam: usize,
    pub k: usize,
}

impl<S: GenerationScorer> Linker<S> {
    pub fn link(&self, marked_sentence: &str) -> Vec<LinkCandidate> {
        constrained_beam_search(&self.scorer, &self.trie, marked_sentence, self.beam, self.k)
    }
}

/// `(name, "name >> lang")` for every name the trie would hold; used to fit
/// the default scorer on the knowledge base itself.
pub fn name_pairs<L: AsRef<str>>(store: &KbStore, languages: &[L]) -> Vec<(String, String)> {
    let mut pairs = Vec::new();
    for rec in store.records() {
        for lang in languages {
            let lang = lang.as_ref();
            for name in rec.names.get(lang).into_iter().flatten() {
                pairs.push((name.clone(), entry_string(name, lang)));
            }
        }
    }
    pairs
}
