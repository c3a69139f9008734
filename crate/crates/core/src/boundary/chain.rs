use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::extract_features;
use super::{BoundaryError, SequenceTagger};
use crate::corpus::{spans_from_bio, Dataset, EntitySpan, Sentence, Tag, TagSequence};

/// Whether tag `cur` may follow `prev` (`None` = sentence start).
pub fn transition_allowed(prev: Option<&Tag>, cur: &Tag) -> bool {
    match cur {
        Tag::I(label) => matches!(prev, Some(Tag::B(l) | Tag::I(l)) if l == label),
        _ => true,
    }
}

/// Emission scores for one sentence plus the transition tables of a model,
/// flattened row-major.
#[derive(Clone, Debug)]
pub struct Lattice<'a> {
    pub n: usize,
    pub t: usize,
    /// `n * t`
    pub emission: Vec<f64>,
    /// `t` scores for the first tag.
    pub start: &'a [f64],
    /// `t * t`, indexed `[prev * t + cur]`.
    pub transition: &'a [f64],
    /// `t * t` hard constraints, same indexing as `transition`.
    pub allowed: &'a [bool],
    pub start_allowed: &'a [bool],
}

impl Lattice<'_> {
    /// Score of a full tag path, or `None` if it breaks a hard constraint.
    pub fn path_score(&self, path: &[usize]) -> Option<f64> {
        let t = self.t;
        let mut score = 0.0;
        for (i, &cur) in path.iter().enumerate() {
            if i == 0 {
                if !self.start_allowed[cur] {
                    return None;
                }
                score += self.start[cur];
            } else {
                let prev = path[i - 1];
                if !self.allowed[prev * t + cur] {
                    return None;
                }
                score += self.transition[prev * t + cur];
            }
            score += self.emission[i * t + cur];
        }
        Some(score)
    }

    /// Exact arg-max path under the hard constraints.
    ///
    /// Ties go to the lowest tag index, both for backpointers and for the
    /// final tag.
    pub fn viterbi(&self) -> Vec<usize> {
        let (n, t) = (self.n, self.t);
        if n == 0 {
            return Vec::new();
        }
        let mut best = vec![f64::NEG_INFINITY; n * t];
        let mut back = vec![0usize; n * t];
        for cur in 0..t {
            if self.start_allowed[cur] {
                best[cur] = self.start[cur] + self.emission[cur];
            }
        }
        for i in 1..n {
            for cur in 0..t {
                let mut arg = usize::MAX;
                let mut val = f64::NEG_INFINITY;
                for prev in 0..t {
                    if !self.allowed[prev * t + cur] {
                        continue;
                    }
                    let p = best[(i - 1) * t + prev];
                    if p == f64::NEG_INFINITY {
                        continue;
                    }
                    let s = p + self.transition[prev * t + cur];
                    if arg == usize::MAX || s > val {
                        arg = prev;
                        val = s;
                    }
                }
                if arg != usize::MAX {
                    best[i * t + cur] = val + self.emission[i * t + cur];
                    back[i * t + cur] = arg;
                }
            }
        }
        let last = &best[(n - 1) * t..n * t];
        let mut tag = 0;
        for cur in 1..t {
            if last[cur] > last[tag] {
                tag = cur;
            }
        }
        let mut path = vec![0usize; n];
        path[n - 1] = tag;
        for i in (1..n).rev() {
            path[i - 1] = back[i * t + path[i]];
        }
        path
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub seed: u64,
    pub epochs_trained: usize,
    pub best_epoch: usize,
    /// Dev span F1 (0–1) of the returned checkpoint.
    pub dev_score: f64,
}

/// A linear-chain model with sparse indicator emissions and first-order
/// transitions over a fixed tag alphabet.
///
/// The alphabet order is also the tie-break order of decoding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ChainRepr", into = "ChainRepr")]
pub struct ChainModel {
    tags: Vec<Tag>,
    features: Vec<String>,
    index: HashMap<String, u32>,
    emission: Vec<f64>,
    start: Vec<f64>,
    transition: Vec<f64>,
    allowed: Vec<bool>,
    start_allowed: Vec<bool>,
    pub meta: ModelMeta,
}

#[derive(Serialize, Deserialize)]
struct ChainRepr {
    tags: Vec<Tag>,
    features: Vec<String>,
    emission: Vec<f64>,
    start: Vec<f64>,
    transition: Vec<f64>,
    meta: ModelMeta,
}

impl From<ChainRepr> for ChainModel {
    fn from(r: ChainRepr) -> Self {
        let mut m = ChainModel::zeros(r.tags, r.features);
        m.emission = r.emission;
        m.start = r.start;
        m.transition = r.transition;
        m.meta = r.meta;
        m
    }
}

impl From<ChainModel> for ChainRepr {
    fn from(m: ChainModel) -> Self {
        ChainRepr {
            tags: m.tags,
            features: m.features,
            emission: m.emission,
            start: m.start,
            transition: m.transition,
            meta: m.meta,
        }
    }
}

impl ChainModel {
    /// A model with every weight set to zero.
    pub fn zeros(tags: Vec<Tag>, features: Vec<String>) -> ChainModel {
        let t = tags.len();
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        let mut allowed = vec![false; t * t];
        for (p, prev) in tags.iter().enumerate() {
            for (c, cur) in tags.iter().enumerate() {
                allowed[p * t + c] = transition_allowed(Some(prev), cur);
            }
        }
        let start_allowed = tags.iter().map(|c| transition_allowed(None, c)).collect();
        ChainModel {
            emission: vec![0.0; features.len() * t],
            start: vec![0.0; t],
            transition: vec![0.0; t * t],
            tags,
            features,
            index,
            allowed,
            start_allowed,
            meta: ModelMeta::default(),
        }
    }

    pub fn tags(&self) -> &[Tag] {
        &self.tags
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn tag_index(&self, tag: &Tag) -> Option<usize> {
        self.tags.iter().position(|t| t == tag)
    }

    pub fn emission_weight(&self, feature: &str, tag: usize) -> f64 {
        self.index
            .get(feature)
            .map_or(0.0, |&f| self.emission[f as usize * self.tags.len() + tag])
    }

    pub fn set_emission_weight(&mut self, feature: &str, tag: usize, w: f64) {
        let t = self.tags.len();
        let f = self.index[feature] as usize;
        self.emission[f * t + tag] = w;
    }

    pub fn set_start_weight(&mut self, tag: usize, w: f64) {
        self.start[tag] = w;
    }

    pub fn set_transition_weight(&mut self, prev: usize, cur: usize, w: f64) {
        let t = self.tags.len();
        self.transition[prev * t + cur] = w;
    }

    pub fn all_weights_finite(&self) -> bool {
        self.emission
            .iter()
            .chain(&self.start)
            .chain(&self.transition)
            .all(|w| w.is_finite())
    }

    fn feature_ids(&self, sentence: &Sentence) -> Vec<Vec<u32>> {
        (0..sentence.len())
            .map(|i| {
                extract_features(sentence, i)
                    .iter()
                    .filter_map(|f| self.index.get(f).copied())
                    .collect()
            })
            .collect()
    }

    fn lattice_from_ids(&self, ids: &[Vec<u32>]) -> Lattice<'_> {
        self.lattice_with(ids, &self.emission, &self.start, &self.transition)
    }

    /// Lattice using external weight tables laid out like the model's own.
    fn lattice_with<'a>(
        &'a self,
        ids: &[Vec<u32>],
        emission_w: &[f64],
        start: &'a [f64],
        transition: &'a [f64],
    ) -> Lattice<'a> {
        let t = self.tags.len();
        let mut emission = vec![0.0; ids.len() * t];
        for (i, fs) in ids.iter().enumerate() {
            let row = &mut emission[i * t..(i + 1) * t];
            for &f in fs {
                let w = &emission_w[f as usize * t..(f as usize + 1) * t];
                for (r, x) in row.iter_mut().zip(w) {
                    *r += x;
                }
            }
        }
        Lattice {
            n: ids.len(),
            t,
            emission,
            start,
            transition,
            allowed: &self.allowed,
            start_allowed: &self.start_allowed,
        }
    }

    pub fn lattice(&self, sentence: &Sentence) -> Lattice<'_> {
        self.lattice_from_ids(&self.feature_ids(sentence))
    }

    /// Model score of `tags` on `sentence`; `None` for BIO-invalid or
    /// out-of-alphabet sequences.
    pub fn score(&self, sentence: &Sentence, tags: &[Tag]) -> Option<f64> {
        let path: Option<Vec<usize>> = tags.iter().map(|t| self.tag_index(t)).collect();
        self.lattice(sentence).path_score(&path?)
    }

    fn decode_ids(&self, ids: &[Vec<u32>]) -> TagSequence {
        self.lattice_from_ids(ids)
            .viterbi()
            .into_iter()
            .map(|i| self.tags[i].clone())
            .collect()
    }
}

impl SequenceTagger for ChainModel {
    fn decode(&self, sentence: &Sentence) -> TagSequence {
        self.decode_ids(&self.feature_ids(sentence))
    }
}

/// Exact decoding with the model's hard BIO constraints.
pub fn viterbi_decode(model: &ChainModel, sentence: &Sentence) -> TagSequence {
    model.decode(sentence)
}

#[derive(Clone, Debug)]
pub struct TrainOptions {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions { epochs: 8, seed: 1 }
    }
}

/// Micro span F1 with labels, 0 when there are neither gold nor predicted
/// spans.
pub(crate) fn span_f1(gold: &[Vec<EntitySpan>], pred: &[Vec<EntitySpan>]) -> f64 {
    let mut tp = 0usize;
    let mut n_gold = 0usize;
    let mut n_pred = 0usize;
    for (g, p) in gold.iter().zip(pred) {
        n_gold += g.len();
        n_pred += p.len();
        tp += p.iter().filter(|s| g.contains(s)).count();
    }
    if tp == 0 {
        return 0.0;
    }
    let prec = tp as f64 / n_pred as f64;
    let rec = tp as f64 / n_gold as f64;
    2.0 * prec * rec / (prec + rec)
}

/// Running sums for the averaged perceptron: `avg = w - u / c`.
struct Averaged {
    w: Vec<f64>,
    u: Vec<f64>,
}

impl Averaged {
    fn new(n: usize) -> Self {
        Averaged {
            w: vec![0.0; n],
            u: vec![0.0; n],
        }
    }

    fn add(&mut self, i: usize, delta: f64, c: f64) {
        self.w[i] += delta;
        self.u[i] += c * delta;
    }

    fn averaged(&self, c: f64) -> Vec<f64> {
        self.w.iter().zip(&self.u).map(|(w, u)| w - u / c).collect()
    }

    fn current(&self) -> &[f64] {
        &self.w
    }
}

struct Prepared {
    ids: Vec<Vec<u32>>,
    gold: Vec<usize>,
}

/// Averaged structured perceptron over `alphabet`.
///
/// After every epoch the averaged weights are scored on `dev` (span F1) and
/// the best epoch's weights are returned; the earliest epoch wins ties.
pub fn train_chain(
    train: &Dataset,
    dev: &Dataset,
    alphabet: Vec<Tag>,
    opts: &TrainOptions,
) -> Result<ChainModel, BoundaryError> {
    if train.is_empty() || dev.is_empty() {
        return Err(BoundaryError::EmptyDataset);
    }
    let tag_pos: HashMap<&Tag, usize> = alphabet.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let lookup = |tag: &Tag, id: &str| {
        tag_pos
            .get(tag)
            .copied()
            .ok_or_else(|| BoundaryError::UnknownTag {
                tag: tag.to_string(),
                sentence: id.to_string(),
            })
    };

    let mut index: HashMap<String, u32> = HashMap::new();
    let mut features: Vec<String> = Vec::new();
    let mut prepared = Vec::with_capacity(train.len());
    for ex in train {
        let mut ids = Vec::with_capacity(ex.sentence.len());
        for i in 0..ex.sentence.len() {
            let row = extract_features(&ex.sentence, i)
                .into_iter()
                .map(|f| {
                    *index.entry(f.clone()).or_insert_with(|| {
                        features.push(f);
                        (features.len() - 1) as u32
                    })
                })
                .collect();
            ids.push(row);
        }
        let gold = ex
            .tags
            .iter()
            .map(|t| lookup(t, &ex.sentence.id))
            .collect::<Result<_, _>>()?;
        prepared.push(Prepared { ids, gold });
    }
    for ex in dev {
        for t in &ex.tags {
            lookup(t, &ex.sentence.id)?;
        }
    }

    let t = alphabet.len();
    let n_emit = features.len() * t;
    let mut model = ChainModel::zeros(alphabet, features);
    // emission, then start, then transition
    let mut acc = Averaged::new(n_emit + t + t * t);
    let emit_at = |f: u32, tag: usize| f as usize * t + tag;
    let start_at = |tag: usize| n_emit + tag;
    let trans_at = |p: usize, c: usize| n_emit + t + p * t + c;

    let dev_ids: Vec<Vec<Vec<u32>>> = dev.iter().map(|ex| model.feature_ids(&ex.sentence)).collect();
    let dev_gold: Vec<Vec<EntitySpan>> = dev.iter().map(|ex| spans_from_bio(&ex.tags)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut c = 1.0f64;
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let p = &prepared[k];
            let w = acc.current();
            let pred = model
                .lattice_with(&p.ids, &w[..n_emit], &w[n_emit..n_emit + t], &w[n_emit + t..])
                .viterbi();
            if pred != p.gold {
                for (sign, path) in [(1.0, &p.gold), (-1.0, &pred)] {
                    for (i, &tag) in path.iter().enumerate() {
                        for &f in &p.ids[i] {
                            acc.add(emit_at(f, tag), sign, c);
                        }
                        if i == 0 {
                            acc.add(start_at(tag), sign, c);
                        } else {
                            acc.add(trans_at(path[i - 1], tag), sign, c);
                        }
                    }
                }
            }
            c += 1.0;
        }
        let avg = acc.averaged(c);
        install(&mut model, &avg, n_emit);
        let pred: Vec<Vec<EntitySpan>> = dev_ids
            .iter()
            .map(|ids| spans_from_bio(&model.decode_ids(ids)))
            .collect();
        let f1 = span_f1(&dev_gold, &pred);
        if best.as_ref().is_none_or(|(b, _, _)| f1 > *b) {
            best = Some((f1, epoch, avg));
        }
    }

    let (dev_score, best_epoch, weights) = match best {
        Some(b) => b,
        None => (0.0, 0, acc.averaged(c)),
    };
    install(&mut model, &weights, n_emit);
    model.meta = ModelMeta {
        seed: opts.seed,
        epochs_trained: opts.epochs,
        best_epoch,
        dev_score,
    };
    Ok(model)
}

fn install(model: &mut ChainModel, weights: &[f64], n_emit: usize) {
    let t = model.tags.len();
    model.emission.copy_from_slice(&weights[..n_emit]);
    model.start.copy_from_slice(&weights[n_emit..n_emit + t]);
    model.transition.copy_from_slice(&weights[n_emit + t..]);
}
