//! End-to-end orchestration: configuration, training and loading of all
//! models, prediction with optional per-span traces, the knowledge ablation
//! table, the baseline tagger, and the synthetic corpus generator.

mod config;
mod run;
mod synth;

pub use config::{AblationSetting, Paths, PipelineConfig};
pub use run::{
    ablation_table, build_linker, classifier_instances, link_gold_spans, predictions_of,
    read_corpus, run_ablation, run_baseline, run_evaluate, run_predict, run_train, train_models,
    AblationReport, AblationRow, Manifest, Pipeline, Prediction, SpanTrace, TrainedModels,
    BASELINE_FILE, BOUNDARY_FILE, CLASSIFIER_FILE, MANIFEST_FILE, SCORER_FILE,
};
pub use synth::{generate_synthetic, synthetic_labels, SyntheticCorpus, SyntheticSpec};

use std::fmt::Display;
use std::path::Path;

use thiserror::Error;

use crate::boundary::BoundaryError;
use crate::classifier::ClassifierError;
use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::kb::KbError;
use crate::linker::LinkerError;
use crate::persist::PersistError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("ensemble_size is {expected} but {found} seeds are configured")]
    SeedCount { expected: usize, found: usize },
    #[error("{0}")]
    MissingInput(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Corpus { path: String, source: CorpusError },
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
    #[error(transparent)]
    Linker(#[from] LinkerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PipelineError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub(crate) fn corpus(path: impl Display) -> impl FnOnce(CorpusError) -> Self {
        move |source| PipelineError::Corpus {
            path: path.to_string(),
            source,
        }
    }
}
