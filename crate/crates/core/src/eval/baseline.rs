use crate::boundary::{train_chain, BoundaryError, ChainModel, TrainOptions};
use crate::corpus::{Dataset, Tag, Taxonomy};

pub const BASELINE_SECTION: &str = "baseline";

/// `[O, B-L1, I-L1, B-L2, I-L2, ...]` over the fine labels.
pub fn baseline_tags(taxonomy: &Taxonomy) -> Vec<Tag> {
    let mut tags = vec![Tag::O];
    for l in taxonomy.fine_labels() {
        tags.push(Tag::B(l.clone()));
        tags.push(Tag::I(l.clone()));
    }
    tags
}

/// A single linear-chain tagger that predicts fine labels directly.
pub fn train_baseline(
    train: &Dataset,
    dev: &Dataset,
    taxonomy: &Taxonomy,
    epochs: usize,
    seed: u64,
) -> Result<ChainModel, BoundaryError> {
    train_chain(train, dev, baseline_tags(taxonomy), &TrainOptions { epochs, seed })
}
