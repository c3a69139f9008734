//! Entity boundary detection: BIO tagging over `{O, B-ENTITY, I-ENTITY}`
//! with a five-member ensemble of averaged structured perceptrons.

mod chain;
mod features;

pub use chain::{
    train_chain, transition_allowed, viterbi_decode, ChainModel, Lattice, ModelMeta, TrainOptions,
};
pub use features::{extract_features, short_shape, word_shape, TEMPLATE_COUNT};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{repair_bio, Dataset, Sentence, Tag, TagSequence, BOUNDARY_TYPE};

pub const ENSEMBLE_SIZE: usize = 5;
pub const MODEL_SECTION: &str = "boundary";

#[derive(Debug, Error, PartialEq)]
pub enum BoundaryError {
    #[error("training and dev data must be non-empty")]
    EmptyDataset,
    #[error("sentence {sentence:?}: tag {tag} is outside the model alphabet")]
    UnknownTag { tag: String, sentence: String },
    #[error("an ensemble needs exactly {ENSEMBLE_SIZE} members, got {0}")]
    EnsembleSize(usize),
}

/// Anything that tags a sentence; the pipeline only depends on this.
pub trait SequenceTagger: Send + Sync {
    fn decode(&self, sentence: &Sentence) -> TagSequence;
}

pub type BoundaryModel = ChainModel;

/// `[O, B-ENTITY, I-ENTITY]`, in decoding tie-break order.
pub fn boundary_tags() -> Vec<Tag> {
    vec![
        Tag::O,
        Tag::B(BOUNDARY_TYPE.to_string()),
        Tag::I(BOUNDARY_TYPE.to_string()),
    ]
}

/// Trains one boundary model. Gold tags may be fine-grained; they are
/// collapsed to the boundary alphabet first.
pub fn train_boundary(
    train: &Dataset,
    dev: &Dataset,
    epochs: usize,
    seed: u64,
) -> Result<BoundaryModel, BoundaryError> {
    train_chain(
        &train.to_boundary(),
        &dev.to_boundary(),
        boundary_tags(),
        &TrainOptions { epochs, seed },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEnsemble {
    members: Vec<BoundaryModel>,
}

impl BoundaryEnsemble {
    pub fn new(members: Vec<BoundaryModel>) -> Result<Self, BoundaryError> {
        if members.len() != ENSEMBLE_SIZE {
            return Err(BoundaryError::EnsembleSize(members.len()));
        }
        Ok(BoundaryEnsemble { members })
    }

    /// Trains one member per seed, in parallel.
    pub fn train(
        train: &Dataset,
        dev: &Dataset,
        epochs: usize,
        seeds: &[u64],
    ) -> Result<Self, BoundaryError> {
        if seeds.len() != ENSEMBLE_SIZE {
            return Err(BoundaryError::EnsembleSize(seeds.len()));
        }
        let train = train.to_boundary();
        let dev = dev.to_boundary();
        let members = seeds
            .par_iter()
            .map(|&seed| train_chain(&train, &dev, boundary_tags(), &TrainOptions { epochs, seed }))
            .collect::<Result<Vec<_>, _>>()?;
        BoundaryEnsemble::new(members)
    }

    pub fn members(&self) -> &[BoundaryModel] {
        &self.members
    }
}

impl SequenceTagger for BoundaryEnsemble {
    fn decode(&self, sentence: &Sentence) -> TagSequence {
        ensemble_predict(self, sentence)
    }
}

fn vote_rank(tag: &Tag) -> (u8, &str) {
    match tag {
        Tag::O => (0, ""),
        Tag::B(l) => (1, l),
        Tag::I(l) => (2, l),
    }
}

/// Per-token vote without repair.
///
/// Each position is first decided as entity vs. outside by majority (a tie
/// goes to `O`); if entity wins, the most voted non-`O` tag is taken, with
/// ties preferring `B-*` over `I-*` and then the smaller label.
pub fn vote_tags(outputs: &[TagSequence]) -> TagSequence {
    let n = outputs.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| {
            let outside = outputs.iter().filter(|o| o[i] == Tag::O).count();
            if outside * 2 >= outputs.len() {
                return Tag::O;
            }
            let mut counts: Vec<(&Tag, usize)> = Vec::new();
            for tag in outputs.iter().map(|o| &o[i]).filter(|t| **t != Tag::O) {
                match counts.iter_mut().find(|(t, _)| *t == tag) {
                    Some((_, c)) => *c += 1,
                    None => counts.push((tag, 1)),
                }
            }
            counts
                .into_iter()
                .min_by(|(a, ca), (b, cb)| cb.cmp(ca).then_with(|| vote_rank(a).cmp(&vote_rank(b))))
                .map(|(t, _)| t.clone())
                .expect("entity side has votes")
        })
        .collect()
}

/// Majority vote of the members, then orphan `I` tags promoted to `B`.
pub fn ensemble_predict(ensemble: &BoundaryEnsemble, sentence: &Sentence) -> TagSequence {
    let outputs: Vec<TagSequence> = ensemble.members.iter().map(|m| m.decode(sentence)).collect();
    repair_bio(&vote_tags(&outputs))
}
