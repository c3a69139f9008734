//! Entity-level scoring: per-class and macro F1, micro F1, boundary-only
//! F1, a confusion matrix, and the clean/noisy split. Also hosts the direct
//! fine-grained baseline tagger.

mod baseline;
mod report;

pub use baseline::{baseline_tags, train_baseline, BASELINE_SECTION};

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Dataset, EntitySpan, Taxonomy};

/// Confusion column for gold spans without a prediction on the same span.
pub const MISS: &str = "MISS";
/// Confusion row for predictions without a gold span on the same span.
pub const SPURIOUS: &str = "SPURIOUS";

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("prediction for unknown sentence {0:?}")]
    UnknownSentence(String),
    #[error("sentence {sentence:?}: label {label:?} is not in the taxonomy")]
    UnknownLabel { sentence: String, label: String },
    #[error("sentence {sentence:?}: span {start}..{end} has no label")]
    Unlabeled {
        sentence: String,
        start: usize,
        end: usize,
    },
    #[error("sentence {sentence:?}: span {start}..{end} predicted twice")]
    Duplicate {
        sentence: String,
        start: usize,
        end: usize,
    },
    #[error("sentence {sentence:?}: span {start}..{end} outside a {len}-token sentence")]
    OutOfRange {
        sentence: String,
        start: usize,
        end: usize,
        len: usize,
    },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub gold_count: usize,
    pub pred_count: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: BTreeMap<String, ClassScores>,
    pub macro_f1: f64,
    pub micro_f1: f64,
    pub boundary_f1: f64,
    pub clean_macro_f1: Option<f64>,
    pub noisy_macro_f1: Option<f64>,
    /// gold label (or `SPURIOUS`) → predicted label (or `MISS`) → count
    pub confusion: BTreeMap<String, BTreeMap<String, usize>>,
}

/// Predicted spans per sentence id.
pub type Predictions = BTreeMap<String, Vec<EntitySpan>>;

fn prf(tp: usize, pred: usize, gold: usize) -> (f64, f64, f64) {
    let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = div(tp, pred);
    let r = div(tp, gold);
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

/// F1 for a whole set; an empty gold and empty prediction set scores 1.
fn set_f1(tp: usize, pred: usize, gold: usize) -> f64 {
    if pred == 0 && gold == 0 {
        1.0
    } else {
        prf(tp, pred, gold).2
    }
}

type Keyed = (usize, usize, String);

fn labelled(
    sentence: &str,
    spans: &[EntitySpan],
    len: usize,
    taxonomy: &Taxonomy,
) -> Result<Vec<Keyed>, EvalError> {
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(spans.len());
    for s in spans {
        let (start, end) = s.bounds();
        if s.check(len).is_err() {
            return Err(EvalError::OutOfRange {
                sentence: sentence.to_string(),
                start,
                end,
                len,
            });
        }
        let label = s.label.clone().ok_or_else(|| EvalError::Unlabeled {
            sentence: sentence.to_string(),
            start,
            end,
        })?;
        if !taxonomy.contains(&label) {
            return Err(EvalError::UnknownLabel {
                sentence: sentence.to_string(),
                label,
            });
        }
        if !seen.insert((start, end)) {
            return Err(EvalError::Duplicate {
                sentence: sentence.to_string(),
                start,
                end,
            });
        }
        out.push((start, end, label));
    }
    Ok(out)
}

/// Exact (sentence, start, end, label) matching.
///
/// Macro F1 averages over every class that occurs in gold or prediction;
/// boundary F1 ignores labels. With nothing in gold and nothing predicted
/// all summary scores are 1.
pub fn score(gold: &Dataset, pred: &Predictions, taxonomy: &Taxonomy) -> Result<EvalReport, EvalError> {
    let known: BTreeSet<&str> = gold.iter().map(|ex| ex.sentence.id.as_str()).collect();
    if let Some(id) = pred.keys().find(|id| !known.contains(id.as_str())) {
        return Err(EvalError::UnknownSentence(id.clone()));
    }

    let mut tp: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_gold: BTreeMap<String, usize> = BTreeMap::new();
    let mut n_pred: BTreeMap<String, usize> = BTreeMap::new();
    let mut confusion: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let mut bump = |g: &str, p: &str| *confusion.entry(g.into()).or_default().entry(p.into()).or_default() += 1;
    let (mut boundary_tp, mut total_gold, mut total_pred, mut total_tp) = (0, 0, 0, 0);

    for ex in gold {
        let id = &ex.sentence.id;
        let g = labelled(id, &ex.spans(), ex.sentence.len(), taxonomy)?;
        let p = match pred.get(id) {
            Some(spans) => labelled(id, spans, ex.sentence.len(), taxonomy)?,
            None => Vec::new(),
        };
        let p_by_span: BTreeMap<(usize, usize), &str> =
            p.iter().map(|(s, e, l)| ((*s, *e), l.as_str())).collect();
        let g_spans: HashSet<(usize, usize)> = g.iter().map(|(s, e, _)| (*s, *e)).collect();

        for (s, e, label) in &g {
            *n_gold.entry(label.clone()).or_default() += 1;
            match p_by_span.get(&(*s, *e)) {
                Some(pl) => {
                    boundary_tp += 1;
                    bump(label, pl);
                    if pl == label {
                        *tp.entry(label.clone()).or_default() += 1;
                        total_tp += 1;
                    }
                }
                None => bump(label, MISS),
            }
        }
        for (s, e, label) in &p {
            *n_pred.entry(label.clone()).or_default() += 1;
            if !g_spans.contains(&(*s, *e)) {
                bump(SPURIOUS, label);
            }
        }
        total_gold += g.len();
        total_pred += p.len();
    }

    let classes: BTreeSet<&String> = n_gold.keys().chain(n_pred.keys()).collect();
    let per_class: BTreeMap<String, ClassScores> = classes
        .into_iter()
        .map(|c| {
            let t = tp.get(c).copied().unwrap_or(0);
            let gc = n_gold.get(c).copied().unwrap_or(0);
            let pc = n_pred.get(c).copied().unwrap_or(0);
            let (precision, recall, f1) = prf(t, pc, gc);
            (
                c.clone(),
                ClassScores {
                    precision,
                    recall,
                    f1,
                    gold_count: gc,
                    pred_count: pc,
                },
            )
        })
        .collect();
    let macro_f1 = if per_class.is_empty() {
        1.0
    } else {
        per_class.values().map(|c| c.f1).sum::<f64>() / per_class.len() as f64
    };

    Ok(EvalReport {
        macro_f1,
        micro_f1: set_f1(total_tp, total_pred, total_gold),
        boundary_f1: set_f1(boundary_tp, total_pred, total_gold),
        per_class,
        clean_macro_f1: None,
        noisy_macro_f1: None,
        confusion,
    })
}

/// Macro F1 on the clean and noisy partitions separately; an empty side is
/// `None`.
pub fn clean_noisy_report(
    gold: &Dataset,
    pred: &Predictions,
    taxonomy: &Taxonomy,
) -> Result<(Option<f64>, Option<f64>), EvalError> {
    if let Some(id) = pred
        .keys()
        .find(|id| !gold.iter().any(|ex| &ex.sentence.id == *id))
    {
        return Err(EvalError::UnknownSentence(id.clone()));
    }
    let (clean, noisy) = gold.partition_noisy();
    let side = |part: &Dataset| -> Result<Option<f64>, EvalError> {
        if part.is_empty() {
            return Ok(None);
        }
        let ids: BTreeSet<&str> = part.iter().map(|ex| ex.sentence.id.as_str()).collect();
        let sub: Predictions = pred
            .iter()
            .filter(|(id, _)| ids.contains(id.as_str()))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        Ok(Some(score(part, &sub, taxonomy)?.macro_f1))
    };
    Ok((side(&clean)?, side(&noisy)?))
}

/// [`score`] plus the clean/noisy fields.
pub fn evaluate(gold: &Dataset, pred: &Predictions, taxonomy: &Taxonomy) -> Result<EvalReport, EvalError> {
    let mut report = score(gold, pred, taxonomy)?;
    let (clean, noisy) = clean_noisy_report(gold, pred, taxonomy)?;
    report.clean_macro_f1 = clean;
    report.noisy_macro_f1 = noisy;
    Ok(report)
}

/// Gold spans of every sentence, keyed by id.
pub fn gold_predictions(gold: &Dataset) -> Predictions {
    gold.iter()
        .map(|ex| (ex.sentence.id.clone(), ex.spans()))
        .collect()
}

#[cfg(test)]
mod tests;
