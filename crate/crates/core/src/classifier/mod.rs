//! Fine-grained typing of a marked span from its sentence plus retrieved
//! knowledge, with a five-member voting ensemble.

mod model;
mod render;

pub use model::{
    extract_features, train_classifier, ClassifierInstance, ClassifierModel, ClassifierOptions,
};
pub use render::{render_arguments, render_input, AblationConfig, NO_KNOWLEDGE, SEPARATOR};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Taxonomy;

pub const ENSEMBLE_SIZE: usize = 5;
pub const MODEL_SECTION: &str = "classifier";

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("training and dev instances must be non-empty")]
    EmptyDataset,
    #[error("label {0:?} is not in the taxonomy")]
    UnknownLabel(String),
    #[error("an ensemble needs exactly {ENSEMBLE_SIZE} members, got {0}")]
    EnsembleSize(usize),
    #[error("ensemble members disagree on the label set")]
    LabelMismatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierEnsemble {
    members: Vec<ClassifierModel>,
}

impl ClassifierEnsemble {
    pub fn new(members: Vec<ClassifierModel>) -> Result<Self, ClassifierError> {
        if members.len() != ENSEMBLE_SIZE {
            return Err(ClassifierError::EnsembleSize(members.len()));
        }
        if members.iter().any(|m| m.labels() != members[0].labels()) {
            return Err(ClassifierError::LabelMismatch);
        }
        Ok(ClassifierEnsemble { members })
    }

    /// One member per seed, trained in parallel.
    pub fn train(
        train: &[ClassifierInstance],
        dev: &[ClassifierInstance],
        taxonomy: &Taxonomy,
        epochs: usize,
        seeds: &[u64],
    ) -> Result<Self, ClassifierError> {
        if seeds.len() != ENSEMBLE_SIZE {
            return Err(ClassifierError::EnsembleSize(seeds.len()));
        }
        let members = seeds
            .par_iter()
            .map(|&seed| train_classifier(train, dev, taxonomy, &ClassifierOptions { epochs, seed }))
            .collect::<Result<Vec<_>, _>>()?;
        ClassifierEnsemble::new(members)
    }

    pub fn members(&self) -> &[ClassifierModel] {
        &self.members
    }

    pub fn predict(&self, input: &str) -> String {
        predict_class(self, input)
    }
}

/// Plurality over member argmax labels; ties go to the label with the
/// highest score summed over all members, then to the smaller label.
pub fn predict_class(ensemble: &ClassifierEnsemble, input: &str) -> String {
    let labels = ensemble.members[0].labels();
    let mut votes = vec![0usize; labels.len()];
    let mut summed = vec![0.0f64; labels.len()];
    for m in &ensemble.members {
        let s = m.scores(input);
        let mut best = 0;
        for (i, v) in s.iter().enumerate() {
            summed[i] += v;
            if *v > s[best] {
                best = i;
            }
        }
        votes[best] += 1;
    }
    let top = *votes.iter().max().unwrap_or(&0);
    (0..labels.len())
        .filter(|&i| votes[i] == top)
        .max_by(|&a, &b| {
            summed[a]
                .total_cmp(&summed[b])
                .then_with(|| labels[b].cmp(&labels[a]))
        })
        .map(|i| labels[i].clone())
        .unwrap_or_default()
}

/// Dev accuracy of every member, keyed by seed.
pub fn member_dev_scores(ensemble: &ClassifierEnsemble) -> BTreeMap<u64, f64> {
    ensemble
        .members
        .iter()
        .map(|m| (m.meta.seed, m.meta.dev_score))
        .collect()
}
