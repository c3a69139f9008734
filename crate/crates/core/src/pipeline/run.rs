use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{require, PipelineConfig};
use super::PipelineError;
use crate::boundary::{self, BoundaryEnsemble, ChainModel, SequenceTagger};
use crate::classifier::{
    self, render_input, AblationConfig, ClassifierEnsemble, ClassifierInstance,
};
use crate::corpus::{
    bio_from_spans, parse_corpus, repair_bio, spans_from_bio, Dataset, EntitySpan, Example,
    ParseOptions, Sentence, Taxonomy,
};
use crate::eval::{self, score, EvalReport, Predictions};
use crate::kb::{load_snapshot, KbStore};
use crate::linker::{
    build_trie, name_pairs, CharNgramScorer, LinkCandidate, Linker, SCORER_SECTION,
};
use crate::persist;
use crate::retrieval::{link_and_retrieve, KnowledgeContext, RetrievalConfig};

pub const BOUNDARY_FILE: &str = "boundary.json";
pub const CLASSIFIER_FILE: &str = "classifier.json";
pub const SCORER_FILE: &str = "scorer.json";
pub const BASELINE_FILE: &str = "baseline.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn read_corpus(
    path: &Path,
    repair: bool,
    taxonomy: Option<&Taxonomy>,
) -> Result<Dataset, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_corpus(&text, &ParseOptions { repair, taxonomy })
        .map_err(PipelineError::corpus(path.display()))
}

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Trains the default scorer on the knowledge base's own names.
pub fn build_linker(
    kb: &KbStore,
    cfg: &PipelineConfig,
) -> Result<Linker<CharNgramScorer>, PipelineError> {
    let scorer = CharNgramScorer::train(&name_pairs(kb, &cfg.languages), cfg.copy_weight)?;
    Ok(linker_with(scorer, kb, cfg))
}

fn linker_with(
    scorer: CharNgramScorer,
    kb: &KbStore,
    cfg: &PipelineConfig,
) -> Linker<CharNgramScorer> {
    Linker {
        trie: build_trie(kb, &cfg.languages),
        scorer,
        beam: cfg.beam,
        k: cfg.k_candidates,
    }
}

/// Retrieved knowledge for every gold span, per sentence.
pub fn link_gold_spans(
    data: &Dataset,
    linker: &Linker<CharNgramScorer>,
    kb: &KbStore,
    retrieval: &RetrievalConfig,
) -> Vec<Vec<KnowledgeContext>> {
    data.examples
        .par_iter()
        .map(|ex| {
            ex.spans()
                .iter()
                .map(|s| link_and_retrieve(&ex.sentence, s, linker, kb, retrieval).0)
                .collect()
        })
        .collect()
}

/// Rendered gold-span instances, aligned with [`link_gold_spans`] output.
pub fn classifier_instances(
    data: &Dataset,
    contexts: &[Vec<KnowledgeContext>],
    ablation: &AblationConfig,
) -> Vec<ClassifierInstance> {
    data.iter()
        .zip(contexts)
        .flat_map(|(ex, ctxs)| {
            ex.spans().into_iter().zip(ctxs).map(move |(s, ctx)| ClassifierInstance {
                input: render_input(&ex.sentence, &s, ctx, ablation),
                label: s.label.clone().unwrap_or_default(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    /// SHA-256 of the canonical train, dev and knowledge-base text.
    pub inputs: BTreeMap<String, String>,
    pub seeds: Vec<u64>,
    pub ablation: AblationConfig,
    pub boundary_dev_f1: Vec<f64>,
    pub classifier_dev_accuracy: Vec<f64>,
    pub baseline_dev_f1: Option<f64>,
    pub train_sentences: usize,
    pub dev_sentences: usize,
    pub kb_records: usize,
}

impl Manifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }
}

pub struct TrainedModels {
    pub boundary: BoundaryEnsemble,
    pub classifier: ClassifierEnsemble,
    pub scorer: CharNgramScorer,
    pub baseline: Option<ChainModel>,
    pub manifest: Manifest,
}

/// Trains every model in memory.
pub fn train_models(
    cfg: &PipelineConfig,
    train: &Dataset,
    dev: &Dataset,
    kb: &KbStore,
    taxonomy: &Taxonomy,
) -> Result<TrainedModels, PipelineError> {
    cfg.validate()?;
    let ablation = cfg.ablation.resolve()?;
    let boundary = BoundaryEnsemble::train(train, dev, cfg.epochs, &cfg.seeds)?;
    let linker = build_linker(kb, cfg)?;
    let train_ctx = link_gold_spans(train, &linker, kb, &cfg.retrieval);
    let dev_ctx = link_gold_spans(dev, &linker, kb, &cfg.retrieval);
    let classifier = ClassifierEnsemble::train(
        &classifier_instances(train, &train_ctx, &ablation),
        &classifier_instances(dev, &dev_ctx, &ablation),
        taxonomy,
        cfg.epochs,
        &cfg.seeds,
    )?;
    let baseline = if cfg.train_baseline {
        Some(eval::train_baseline(train, dev, taxonomy, cfg.epochs, cfg.seeds[0])?)
    } else {
        None
    };
    let inputs = BTreeMap::from([
        ("train".to_string(), sha256(&crate::corpus::format_corpus(train))),
        ("dev".to_string(), sha256(&crate::corpus::format_corpus(dev))),
        ("kb".to_string(), sha256(&kb.to_snapshot())),
    ]);
    let manifest = Manifest {
        config_hash: cfg.hash(),
        inputs,
        seeds: cfg.seeds.clone(),
        ablation,
        boundary_dev_f1: boundary.members().iter().map(|m| m.meta.dev_score).collect(),
        classifier_dev_accuracy: classifier.members().iter().map(|m| m.meta.dev_score).collect(),
        baseline_dev_f1: baseline.as_ref().map(|m| m.meta.dev_score),
        train_sentences: train.len(),
        dev_sentences: dev.len(),
        kb_records: kb.len(),
    };
    Ok(TrainedModels {
        boundary,
        classifier,
        scorer: linker.scorer,
        baseline,
        manifest,
    })
}

fn load_training_inputs(
    cfg: &PipelineConfig,
    taxonomy: &Taxonomy,
) -> Result<(Dataset, Dataset, KbStore), PipelineError> {
    let train = read_corpus(require(&cfg.paths.train, "train corpus")?, false, Some(taxonomy))?;
    let dev = read_corpus(require(&cfg.paths.dev, "dev corpus")?, false, Some(taxonomy))?;
    let kb = load_snapshot(require(&cfg.paths.kb, "knowledge base")?)?;
    Ok((train, dev, kb))
}

/// Trains from the configured files and writes every model plus the
/// manifest into the model directory.
pub fn run_train(cfg: &PipelineConfig, taxonomy: &Taxonomy) -> Result<Manifest, PipelineError> {
    cfg.validate()?;
    let dir = require(&cfg.paths.model_dir, "model directory")?;
    let (train, dev, kb) = load_training_inputs(cfg, taxonomy)?;
    let models = train_models(cfg, &train, &dev, &kb, taxonomy)?;
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    persist::save(&dir.join(BOUNDARY_FILE), boundary::MODEL_SECTION, &models.boundary)?;
    persist::save(&dir.join(CLASSIFIER_FILE), classifier::MODEL_SECTION, &models.classifier)?;
    persist::save(&dir.join(SCORER_FILE), SCORER_SECTION, &models.scorer)?;
    if let Some(b) = &models.baseline {
        persist::save(&dir.join(BASELINE_FILE), eval::BASELINE_SECTION, b)?;
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, models.manifest.to_json()).map_err(|e| PipelineError::io(&path, e))?;
    Ok(models.manifest)
}

/// One linked and classified span, for `--trace`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpanTrace {
    pub sentence: String,
    pub start: usize,
    pub end: usize,
    pub mention: String,
    pub candidates: Vec<LinkCandidate>,
    pub selected: Option<String>,
    pub label: String,
}

pub struct Prediction {
    pub dataset: Dataset,
    pub traces: Vec<SpanTrace>,
}

impl Prediction {
    pub fn traces_jsonl(&self) -> String {
        let mut out = String::new();
        for t in &self.traces {
            out.push_str(&serde_json::to_string(t).expect("trace serializes"));
            out.push('\n');
        }
        out
    }
}

/// The trained cascade, ready for inference.
pub struct Pipeline {
    pub boundary: BoundaryEnsemble,
    pub classifier: ClassifierEnsemble,
    pub linker: Linker<CharNgramScorer>,
    pub kb: KbStore,
    pub retrieval: RetrievalConfig,
    pub ablation: AblationConfig,
}

impl Pipeline {
    pub fn from_models(
        cfg: &PipelineConfig,
        models: TrainedModels,
        kb: KbStore,
    ) -> Result<Self, PipelineError> {
        Ok(Pipeline {
            linker: linker_with(models.scorer, &kb, cfg),
            boundary: models.boundary,
            classifier: models.classifier,
            kb,
            retrieval: cfg.retrieval.clone(),
            ablation: cfg.ablation.resolve()?,
        })
    }

    /// Loads models from the model directory and the knowledge base; the
    /// trie is rebuilt from the snapshot.
    pub fn load(cfg: &PipelineConfig) -> Result<Self, PipelineError> {
        cfg.validate()?;
        let dir = require(&cfg.paths.model_dir, "model directory")?;
        let kb = load_snapshot(require(&cfg.paths.kb, "knowledge base")?)?;
        let scorer: CharNgramScorer = persist::load(&dir.join(SCORER_FILE), SCORER_SECTION)?;
        let scorer = scorer.with_copy_weight(cfg.copy_weight);
        Ok(Pipeline {
            boundary: persist::load(&dir.join(BOUNDARY_FILE), boundary::MODEL_SECTION)?,
            classifier: persist::load(&dir.join(CLASSIFIER_FILE), classifier::MODEL_SECTION)?,
            linker: linker_with(scorer, &kb, cfg),
            kb,
            retrieval: cfg.retrieval.clone(),
            ablation: cfg.ablation.resolve()?,
        })
    }

    /// Boundaries, then link, retrieve and classify each span. A span that
    /// links to nothing is classified from the sentence alone.
    pub fn predict_sentence(&self, sentence: &Sentence) -> (Vec<EntitySpan>, Vec<SpanTrace>) {
        let spans = spans_from_bio(&self.boundary.decode(sentence));
        let mut labelled = Vec::with_capacity(spans.len());
        let mut traces = Vec::with_capacity(spans.len());
        for s in spans {
            let (ctx, link) = link_and_retrieve(sentence, &s, &self.linker, &self.kb, &self.retrieval);
            let input = render_input(sentence, &s, &ctx, &self.ablation);
            let label = self.classifier.predict(&input);
            traces.push(SpanTrace {
                sentence: sentence.id.clone(),
                start: s.start,
                end: s.end,
                mention: sentence.span_text(&s),
                candidates: link.candidates,
                selected: link.selected,
                label: label.clone(),
            });
            labelled.push(EntitySpan::new(s.start, s.end, label));
        }
        (labelled, traces)
    }

    /// Predicts every sentence in parallel; output order follows the input.
    pub fn predict(&self, input: &Dataset) -> Prediction {
        let results: Vec<(Example, Vec<SpanTrace>)> = input
            .examples
            .par_iter()
            .map(|ex| {
                let (spans, traces) = self.predict_sentence(&ex.sentence);
                let tags = bio_from_spans(&spans, ex.sentence.len())
                    .expect("predicted spans come from a valid tag sequence");
                (Example { sentence: ex.sentence.clone(), tags }, traces)
            })
            .collect();
        let mut examples = Vec::with_capacity(results.len());
        let mut traces = Vec::new();
        for (ex, t) in results {
            examples.push(ex);
            traces.extend(t);
        }
        Prediction {
            dataset: Dataset::new(examples),
            traces,
        }
    }
}

pub fn run_predict(cfg: &PipelineConfig, input: &Dataset) -> Result<Prediction, PipelineError> {
    Ok(Pipeline::load(cfg)?.predict(input))
}

/// Labelled spans of every sentence, keyed by id.
pub fn predictions_of(dataset: &Dataset) -> Predictions {
    eval::gold_predictions(dataset)
}

pub fn run_evaluate(
    gold: &Dataset,
    predicted: &Dataset,
    taxonomy: &Taxonomy,
) -> Result<EvalReport, PipelineError> {
    Ok(eval::evaluate(gold, &predictions_of(predicted), taxonomy)?)
}

/// Predicts `input` with the baseline tagger, training and saving it first
/// if the model directory has none.
pub fn run_baseline(
    cfg: &PipelineConfig,
    taxonomy: &Taxonomy,
    input: &Dataset,
) -> Result<Dataset, PipelineError> {
    cfg.validate()?;
    let dir = require(&cfg.paths.model_dir, "model directory")?;
    let path = dir.join(BASELINE_FILE);
    let model: ChainModel = if path.exists() {
        persist::load(&path, eval::BASELINE_SECTION)?
    } else {
        let (train, dev, _) = load_training_inputs(cfg, taxonomy)?;
        let m = eval::train_baseline(&train, &dev, taxonomy, cfg.epochs, cfg.seeds[0])?;
        fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        persist::save(&path, eval::BASELINE_SECTION, &m)?;
        m
    };
    Ok(baseline_predict(&model, input))
}

pub(crate) fn baseline_predict(model: &ChainModel, input: &Dataset) -> Dataset {
    let examples = input
        .examples
        .par_iter()
        .map(|ex| Example {
            sentence: ex.sentence.clone(),
            tags: repair_bio(&model.decode(&ex.sentence)),
        })
        .collect();
    Dataset::new(examples)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub preset: String,
    pub config: AblationConfig,
    pub macro_f1: f64,
    pub micro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
}

impl AblationReport {
    pub fn row(&self, preset: &str) -> Option<&AblationRow> {
        self.rows.iter().find(|r| r.preset == preset)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_table(&self) -> String {
        let width = self.rows.iter().map(|r| r.preset.len()).max().unwrap_or(0).max(9);
        let mut out = format!("{:<width$}  {:>8}  {:>8}\n", "knowledge", "macro f1", "micro f1");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>8.2}  {:>8.2}",
                r.preset,
                100.0 * r.macro_f1,
                100.0 * r.micro_f1
            );
        }
        out
    }
}

/// Trains one classifier ensemble per preset on gold spans and scores each
/// on the gold spans of `eval_set`. Linking is done once and shared.
pub fn ablation_table(
    cfg: &PipelineConfig,
    train: &Dataset,
    dev: &Dataset,
    eval_set: &Dataset,
    kb: &KbStore,
    taxonomy: &Taxonomy,
) -> Result<AblationReport, PipelineError> {
    cfg.validate()?;
    let linker = build_linker(kb, cfg)?;
    let train_ctx = link_gold_spans(train, &linker, kb, &cfg.retrieval);
    let dev_ctx = link_gold_spans(dev, &linker, kb, &cfg.retrieval);
    let eval_ctx = link_gold_spans(eval_set, &linker, kb, &cfg.retrieval);
    let mut rows = Vec::new();
    for (name, ablation) in AblationConfig::presets() {
        let ensemble = ClassifierEnsemble::train(
            &classifier_instances(train, &train_ctx, ablation),
            &classifier_instances(dev, &dev_ctx, ablation),
            taxonomy,
            cfg.epochs,
            &cfg.seeds,
        )?;
        let pred: Predictions = eval_set
            .iter()
            .zip(&eval_ctx)
            .map(|(ex, ctxs)| {
                let spans = ex
                    .spans()
                    .iter()
                    .zip(ctxs)
                    .map(|(s, ctx)| {
                        let input = render_input(&ex.sentence, s, ctx, ablation);
                        EntitySpan::new(s.start, s.end, ensemble.predict(&input))
                    })
                    .collect();
                (ex.sentence.id.clone(), spans)
            })
            .collect();
        let report = score(eval_set, &pred, taxonomy)?;
        rows.push(AblationRow {
            preset: name.to_string(),
            config: *ablation,
            macro_f1: report.macro_f1,
            micro_f1: report.micro_f1,
        });
    }
    Ok(AblationReport { rows })
}

/// Ablation over the configured files, scored on the dev split.
pub fn run_ablation(
    cfg: &PipelineConfig,
    taxonomy: &Taxonomy,
) -> Result<AblationReport, PipelineError> {
    let (train, dev, kb) = load_training_inputs(cfg, taxonomy)?;
    ablation_table(cfg, &train, &dev, &dev, &kb, taxonomy)
}
