use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ClassifierError;
use crate::boundary::ModelMeta;
use crate::corpus::{Taxonomy, CLOSE_MARK, OPEN_MARK};

/// Bias, word unigrams and bigrams of the whole input, and character
/// 3–5-grams of the marked span.
pub fn extract_features(input: &str) -> Vec<String> {
    let words: Vec<&str> = input.split_whitespace().collect();
    let mut out = Vec::with_capacity(words.len() * 2 + 32);
    out.push("bias".to_string());
    for w in &words {
        out.push(format!("w={w}"));
    }
    for pair in words.windows(2) {
        out.push(format!("b={}|{}", pair[0], pair[1]));
    }
    if let Some(span) = marked_span(&words) {
        let chars: Vec<char> = format!("^{span}$").chars().collect();
        for n in 3..=5 {
            for g in chars.windows(n) {
                out.push(format!("c{n}={}", g.iter().collect::<String>()));
            }
        }
    }
    out
}

fn marked_span(words: &[&str]) -> Option<String> {
    let open = words.iter().position(|w| *w == OPEN_MARK)?;
    let len = words[open + 1..].iter().position(|w| *w == CLOSE_MARK)?;
    Some(words[open + 1..open + 1 + len].join(" "))
}

/// One gold-span training instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassifierInstance {
    pub input: String,
    pub label: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ClassifierOptions {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        ClassifierOptions { epochs: 8, seed: 1 }
    }
}

/// Multiclass linear model; `weights[f * L + l]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "ModelRepr", try_from = "ModelRepr")]
pub struct ClassifierModel {
    labels: Vec<String>,
    features: Vec<String>,
    index: HashMap<String, u32>,
    weights: Vec<f64>,
    pub meta: ModelMeta,
}

#[derive(Serialize, Deserialize)]
struct ModelRepr {
    labels: Vec<String>,
    features: Vec<String>,
    /// Nonzero `(feature, label, weight)` entries.
    weights: Vec<(u32, u32, f64)>,
    meta: ModelMeta,
}

impl From<ClassifierModel> for ModelRepr {
    fn from(m: ClassifierModel) -> Self {
        let l = m.labels.len();
        let weights = m
            .weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(i, w)| ((i / l) as u32, (i % l) as u32, *w))
            .collect();
        ModelRepr {
            labels: m.labels,
            features: m.features,
            weights,
            meta: m.meta,
        }
    }
}

impl TryFrom<ModelRepr> for ClassifierModel {
    type Error = String;

    fn try_from(r: ModelRepr) -> Result<Self, String> {
        if r.labels.is_empty() {
            return Err("classifier has no labels".into());
        }
        let mut m = ClassifierModel::zeros(r.labels, r.features);
        let l = m.labels.len();
        for (f, lab, w) in r.weights {
            if f as usize >= m.features.len() || lab as usize >= l || !w.is_finite() {
                return Err(format!("bad weight entry ({f}, {lab}, {w})"));
            }
            m.weights[f as usize * l + lab as usize] = w;
        }
        m.meta = r.meta;
        Ok(m)
    }
}

impl ClassifierModel {
    pub fn zeros(labels: Vec<String>, features: Vec<String>) -> Self {
        let index = features
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i as u32))
            .collect();
        let weights = vec![0.0; features.len() * labels.len()];
        ClassifierModel {
            labels,
            features,
            index,
            weights,
            meta: ModelMeta {
                seed: 0,
                epochs_trained: 0,
                best_epoch: 0,
                dev_score: 0.0,
            },
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn features(&self) -> &[String] {
        &self.features
    }

    pub fn set_weight(&mut self, feature: &str, label: &str, w: f64) -> bool {
        let (Some(&f), Some(l)) = (self.index.get(feature), self.labels.iter().position(|x| x == label))
        else {
            return false;
        };
        let n = self.labels.len();
        self.weights[f as usize * n + l] = w;
        true
    }

    fn feature_ids(&self, input: &str) -> Vec<u32> {
        extract_features(input)
            .iter()
            .filter_map(|f| self.index.get(f).copied())
            .collect()
    }

    fn scores_ids(&self, ids: &[u32], weights: &[f64]) -> Vec<f64> {
        let n = self.labels.len();
        let mut s = vec![0.0; n];
        for &f in ids {
            let row = &weights[f as usize * n..(f as usize + 1) * n];
            for (acc, w) in s.iter_mut().zip(row) {
                *acc += w;
            }
        }
        s
    }

    /// Score of every label, in label order.
    pub fn scores(&self, input: &str) -> Vec<f64> {
        self.scores_ids(&self.feature_ids(input), &self.weights)
    }

    /// Highest-scoring label; ties go to the earlier label.
    pub fn predict(&self, input: &str) -> &str {
        &self.labels[argmax(&self.scores(input))]
    }
}

fn argmax(s: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in s.iter().enumerate() {
        if *v > s[best] {
            best = i;
        }
    }
    best
}

/// Averaged multiclass perceptron over the taxonomy's fine labels. The
/// checkpoint with the best dev accuracy is kept; the earliest epoch wins
/// ties.
pub fn train_classifier(
    train: &[ClassifierInstance],
    dev: &[ClassifierInstance],
    taxonomy: &Taxonomy,
    opts: &ClassifierOptions,
) -> Result<ClassifierModel, ClassifierError> {
    if train.is_empty() || dev.is_empty() {
        return Err(ClassifierError::EmptyDataset);
    }
    let label_of = |inst: &ClassifierInstance| {
        taxonomy
            .index_of(&inst.label)
            .ok_or_else(|| ClassifierError::UnknownLabel(inst.label.clone()))
    };
    let mut index: HashMap<String, u32> = HashMap::new();
    let mut features = Vec::new();
    let mut prepared = Vec::with_capacity(train.len());
    for inst in train {
        let ids: Vec<u32> = extract_features(&inst.input)
            .into_iter()
            .map(|f| {
                *index.entry(f.clone()).or_insert_with(|| {
                    features.push(f);
                    (features.len() - 1) as u32
                })
            })
            .collect();
        prepared.push((ids, label_of(inst)?));
    }
    let dev_gold = dev.iter().map(label_of).collect::<Result<Vec<_>, _>>()?;

    let labels = taxonomy.fine_labels().to_vec();
    let n = labels.len();
    let mut model = ClassifierModel::zeros(labels, features);
    let dev_ids: Vec<Vec<u32>> = dev.iter().map(|d| model.feature_ids(&d.input)).collect();

    let size = model.weights.len();
    let mut w = vec![0.0; size];
    let mut u = vec![0.0; size];
    let mut c = 1.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut best: Option<(f64, usize, Vec<f64>)> = None;

    for epoch in 1..=opts.epochs {
        order.shuffle(&mut rng);
        for &k in &order {
            let (ids, gold) = &prepared[k];
            let pred = argmax(&model.scores_ids(ids, &w));
            if pred != *gold {
                for &f in ids {
                    let base = f as usize * n;
                    w[base + gold] += 1.0;
                    u[base + gold] += c;
                    w[base + pred] -= 1.0;
                    u[base + pred] -= c;
                }
            }
            c += 1.0;
        }
        let avg: Vec<f64> = w.iter().zip(&u).map(|(w, u)| w - u / c).collect();
        let correct = dev_ids
            .iter()
            .zip(&dev_gold)
            .filter(|(ids, g)| argmax(&model.scores_ids(ids, &avg)) == **g)
            .count();
        let acc = correct as f64 / dev.len() as f64;
        if best.as_ref().is_none_or(|(b, _, _)| acc > *b) {
            best = Some((acc, epoch, avg));
        }
    }

    let (dev_score, best_epoch, weights) = match best {
        Some(b) => b,
        None => (0.0, 0, w),
    };
    model.weights = weights;
    model.meta = ModelMeta {
        seed: opts.seed,
        epochs_trained: opts.epochs,
        best_epoch,
        dev_score,
    };
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn inst(input: &str, label: &str) -> ClassifierInstance {
        ClassifierInstance {
            input: input.into(),
            label: label.into(),
        }
    }

    #[test]
    fn features_of_marked_input() {
        let f = extract_features("<e> Ana </e> ran");
        assert_eq!(f[0], "bias");
        assert!(f.contains(&"w=<e>".to_string()));
        assert!(f.contains(&"b=Ana|</e>".to_string()));
        for g in ["c3=^An", "c3=Ana", "c3=na$", "c4=^Ana", "c5=^Ana$"] {
            assert!(f.contains(&g.to_string()), "{g}");
        }
        assert!(!f.iter().any(|x| x == "c3=ran"));
        assert_eq!(extract_features(""), vec!["bias"]);
    }

    // label decided only by an argument token
    fn separable() -> (Vec<ClassifierInstance>, Vec<ClassifierInstance>) {
        let names = ["Kobo", "Lira", "Mose", "Nadu", "Pelo", "Rika", "Sune", "Tavi"];
        let mk = |name: &str, i: usize| {
            let (arg, label) = if i % 2 == 0 {
                ("physicist", "Scientist")
            } else {
                ("footballer", "Athlete")
            };
            inst(
                &format!("we saw <e> {name} </e> there __SEP__ occupation: {arg}"),
                label,
            )
        };
        let train = names[..6].iter().enumerate().map(|(i, n)| mk(n, i)).collect();
        let dev = names[6..].iter().enumerate().map(|(i, n)| mk(n, i)).collect();
        (train, dev)
    }

    fn strip(v: &[ClassifierInstance]) -> Vec<ClassifierInstance> {
        v.iter()
            .map(|i| inst(i.input.split(" __SEP__ ").next().unwrap(), &i.label))
            .collect()
    }

    #[test]
    fn separable_fixture_reaches_full_accuracy() {
        let tax = Taxonomy::bundled();
        let (train, dev) = separable();
        let m = train_classifier(&train, &dev, &tax, &ClassifierOptions::default()).unwrap();
        assert_eq!(m.meta.dev_score, 1.0);
        assert_eq!(m.labels(), tax.fine_labels());

        let m2 = train_classifier(&strip(&train), &strip(&dev), &tax, &ClassifierOptions::default())
            .unwrap();
        assert!(m2.meta.dev_score < 1.0);
    }

    #[test]
    fn deterministic_and_serializable() {
        let tax = Taxonomy::bundled();
        let (train, dev) = separable();
        let opts = ClassifierOptions { epochs: 5, seed: 9 };
        let a = train_classifier(&train, &dev, &tax, &opts).unwrap();
        let b = train_classifier(&train, &dev, &tax, &opts).unwrap();
        assert_eq!(a, b);
        let back: ClassifierModel = serde_json::from_str(&serde_json::to_string(&a).unwrap()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn rejects_unknown_label() {
        let tax = Taxonomy::bundled();
        let t = vec![inst("<e> x </e>", "Wizard")];
        assert_eq!(
            train_classifier(&t, &t, &tax, &ClassifierOptions::default()),
            Err(ClassifierError::UnknownLabel("Wizard".into()))
        );
    }

    proptest! {
        #[test]
        fn prediction_in_taxonomy(text in "[a-z<>/ _]{0,40}") {
            let tax = Taxonomy::bundled();
            let (train, dev) = separable();
            let m = train_classifier(&train, &dev, &tax, &ClassifierOptions { epochs: 2, seed: 1 }).unwrap();
            prop_assert!(tax.contains(m.predict(&text)));
        }
    }
}
