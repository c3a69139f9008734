use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::trie::{Symbol, LANG_SEPARATOR};
use super::LinkerError;
use crate::corpus::{CLOSE_MARK, OPEN_MARK};

pub const SCORER_SECTION: &str = "scorer";
pub const DEFAULT_COPY_WEIGHT: f64 = 0.5;

/// Next-symbol model used to rank trie paths.
pub trait GenerationScorer: Send + Sync {
    /// Log-probability of each of `symbols` following `prefix`, given the
    /// marked sentence `context`. Finite and deterministic.
    fn score_next(&self, context: &str, prefix: &[char], symbols: &[Symbol]) -> Vec<f64>;
}

/// The text between `<e>` and `</e>`, or the whole context if unmarked.
pub fn mention_of(context: &str) -> &str {
    let Some(open) = context.find(OPEN_MARK) else {
        return context.trim();
    };
    let rest = &context[open + OPEN_MARK.len()..];
    match rest.find(CLOSE_MARK) {
        Some(close) => rest[..close].trim(),
        None => rest.trim(),
    }
}

fn fold(c: char) -> char {
    c.to_lowercase().next().unwrap_or(c)
}

/// Order-3 character model over entry strings with add-one smoothing,
/// mixed with a copy model that follows the marked mention.
///
/// Outcomes are the training alphabet plus an unknown-character bucket and
/// the end marker. The n-gram part averages the trigram, bigram and unigram
/// estimates with equal weight; the copy part gets weight `copy_weight`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(from = "ScorerRepr", into = "ScorerRepr")]
pub struct CharNgramScorer {
    alphabet: Vec<char>,
    code: HashMap<char, u32>,
    copy_weight: f64,
    unigram: Vec<u32>,
    unigram_total: u32,
    bigram: HashMap<u32, (u32, HashMap<u32, u32>)>,
    trigram: HashMap<(u32, u32), (u32, HashMap<u32, u32>)>,
}

type Table<K> = Vec<(K, Vec<(u32, u32)>)>;

#[derive(Serialize, Deserialize)]
struct ScorerRepr {
    alphabet: String,
    copy_weight: f64,
    unigram: Vec<u32>,
    bigram: Table<u32>,
    trigram: Table<(u32, u32)>,
}

fn sorted_table<K: Ord + Copy>(t: &HashMap<K, (u32, HashMap<u32, u32>)>) -> Table<K> {
    let ordered: BTreeMap<K, BTreeMap<u32, u32>> = t
        .iter()
        .map(|(k, (_, m))| (*k, m.iter().map(|(a, b)| (*a, *b)).collect()))
        .collect();
    ordered
        .into_iter()
        .map(|(k, m)| (k, m.into_iter().collect()))
        .collect()
}

fn unsorted_table<K: std::hash::Hash + Eq>(t: Table<K>) -> HashMap<K, (u32, HashMap<u32, u32>)> {
    t.into_iter()
        .map(|(k, row)| {
            let total = row.iter().map(|(_, c)| c).sum();
            (k, (total, row.into_iter().collect()))
        })
        .collect()
}

impl From<ScorerRepr> for CharNgramScorer {
    fn from(r: ScorerRepr) -> Self {
        let alphabet: Vec<char> = r.alphabet.chars().collect();
        let code = alphabet.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
        CharNgramScorer {
            alphabet,
            code,
            copy_weight: r.copy_weight,
            unigram_total: r.unigram.iter().sum(),
            unigram: r.unigram,
            bigram: unsorted_table(r.bigram),
            trigram: unsorted_table(r.trigram),
        }
    }
}

impl From<CharNgramScorer> for ScorerRepr {
    fn from(s: CharNgramScorer) -> Self {
        ScorerRepr {
            alphabet: s.alphabet.iter().collect(),
            copy_weight: s.copy_weight,
            bigram: sorted_table(&s.bigram),
            trigram: sorted_table(&s.trigram),
            unigram: s.unigram,
        }
    }
}

/// Trains the character scorer on `(mention, entry)` pairs with the default
/// copy weight.
pub fn train_scorer<M: AsRef<str>, E: AsRef<str>>(
    pairs: &[(M, E)],
) -> Result<CharNgramScorer, LinkerError> {
    CharNgramScorer::train(pairs, DEFAULT_COPY_WEIGHT)
}

impl CharNgramScorer {
    /// Counts n-grams over the entry strings. Mentions only feed the copy
    /// model at scoring time.
    pub fn train<M: AsRef<str>, E: AsRef<str>>(
        pairs: &[(M, E)],
        copy_weight: f64,
    ) -> Result<CharNgramScorer, LinkerError> {
        if pairs.is_empty() {
            return Err(LinkerError::EmptyTrainingSet);
        }
        if !(0.0..=1.0).contains(&copy_weight) {
            return Err(LinkerError::CopyWeight(copy_weight));
        }
        let alphabet: Vec<char> = pairs
            .iter()
            .flat_map(|(_, e)| e.as_ref().chars())
            .collect::<BTreeSet<char>>()
            .into_iter()
            .collect();
        let code: HashMap<char, u32> =
            alphabet.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
        let mut s = CharNgramScorer {
            unigram: vec![0; alphabet.len() + 2],
            alphabet,
            code,
            copy_weight,
            unigram_total: 0,
            bigram: HashMap::new(),
            trigram: HashMap::new(),
        };
        let (bos, end) = (s.bos(), s.end());
        for (_, entry) in pairs {
            let mut seq: Vec<u32> = entry.as_ref().chars().map(|c| s.code[&c]).collect();
            seq.push(end);
            let (mut h2, mut h1) = (bos, bos);
            for sym in seq {
                s.unigram[sym as usize] += 1;
                s.unigram_total += 1;
                let b = s.bigram.entry(h1).or_default();
                b.0 += 1;
                *b.1.entry(sym).or_default() += 1;
                let t = s.trigram.entry((h2, h1)).or_default();
                t.0 += 1;
                *t.1.entry(sym).or_default() += 1;
                (h2, h1) = (h1, sym);
            }
        }
        Ok(s)
    }

    pub fn with_copy_weight(mut self, copy_weight: f64) -> Self {
        self.copy_weight = copy_weight;
        self
    }

    pub fn copy_weight(&self) -> f64 {
        self.copy_weight
    }

    pub fn alphabet(&self) -> &[char] {
        &self.alphabet
    }

    /// Outcome count: characters, the unknown bucket and the end marker.
    pub fn outcomes(&self) -> usize {
        self.alphabet.len() + 2
    }

    fn unk(&self) -> u32 {
        self.alphabet.len() as u32
    }

    fn end(&self) -> u32 {
        self.alphabet.len() as u32 + 1
    }

    fn bos(&self) -> u32 {
        self.alphabet.len() as u32 + 2
    }

    fn code_of(&self, c: char) -> u32 {
        self.code.get(&c).copied().unwrap_or(self.unk())
    }

    /// Outcome code of a symbol; characters outside the alphabet share the
    /// unknown bucket.
    pub fn symbol_code(&self, sym: Symbol) -> u32 {
        match sym {
            Symbol::Char(c) => self.code_of(c),
            Symbol::End => self.end(),
        }
    }

    fn history(&self, prefix: &[char]) -> (u32, u32) {
        let n = prefix.len();
        let h1 = if n >= 1 { self.code_of(prefix[n - 1]) } else { self.bos() };
        let h2 = if n >= 2 { self.code_of(prefix[n - 2]) } else { self.bos() };
        (h2, h1)
    }

    /// Interpolated n-gram probability of outcome `code` after `prefix`.
    pub fn ngram_prob(&self, prefix: &[char], code: u32) -> f64 {
        let v = self.outcomes() as f64;
        let (h2, h1) = self.history(prefix);
        let smoothed = |row: Option<&(u32, HashMap<u32, u32>)>| {
            let (total, count) =
                row.map_or((0, 0), |(t, m)| (*t, m.get(&code).copied().unwrap_or(0)));
            (count as f64 + 1.0) / (total as f64 + v)
        };
        let p3 = smoothed(self.trigram.get(&(h2, h1)));
        let p2 = smoothed(self.bigram.get(&h1));
        let p1 = (self.unigram[code as usize] as f64 + 1.0) / (self.unigram_total as f64 + v);
        (p3 + p2 + p1) / 3.0
    }

    /// Copy distribution as `(outcome code, probability)` pairs, summing to 1.
    ///
    /// Matching against `mention + " "` is case-insensitive. While the
    /// prefix still spells the start of the mention, the next mention
    /// character gets all the mass. Otherwise the longest suffix of the
    /// prefix that occurs in the mention proposes the character after each
    /// occurrence. A proposed character keeps its case if the alphabet has
    /// it, else takes the other case, else the unknown bucket. With no
    /// match, or once the language separator has been generated, the copy
    /// model is uniform.
    pub fn copy_distribution(&self, mention: &str, prefix: &[char]) -> Vec<(u32, f64)> {
        let uniform = || {
            let p = 1.0 / self.outcomes() as f64;
            (0..self.outcomes() as u32).map(|c| (c, p)).collect()
        };
        let prefix_str: String = prefix.iter().collect();
        if prefix_str.contains(&LANG_SEPARATOR[..2]) {
            return uniform();
        }
        let mut target: Vec<char> = mention.chars().collect();
        target.push(' ');
        let folded: Vec<char> = target.iter().map(|&c| fold(c)).collect();
        let p: Vec<char> = prefix.iter().map(|&c| fold(c)).collect();

        let mut next: Vec<char> = Vec::new();
        if p.len() < folded.len() && folded[..p.len()] == p[..] {
            next.push(target[p.len()]);
        } else {
            for len in (1..=p.len().min(folded.len() - 1)).rev() {
                let suffix = &p[p.len() - len..];
                for j in 0..folded.len() - len {
                    if &folded[j..j + len] == suffix && !next.contains(&target[j + len]) {
                        next.push(target[j + len]);
                    }
                }
                if !next.is_empty() {
                    break;
                }
            }
        }
        if next.is_empty() {
            return uniform();
        }

        let mut mass: BTreeMap<u32, f64> = BTreeMap::new();
        let share = 1.0 / next.len() as f64;
        for c in next {
            let code = [c, fold(c), c.to_uppercase().next().unwrap_or(c)]
                .iter()
                .find_map(|v| self.code.get(v).copied())
                .unwrap_or(self.unk());
            *mass.entry(code).or_default() += share;
        }
        mass.into_iter().collect()
    }

    /// Mixed probability of every outcome code, in code order.
    pub fn distribution(&self, context: &str, prefix: &[char]) -> Vec<f64> {
        let mut probs: Vec<f64> = (0..self.outcomes() as u32)
            .map(|c| (1.0 - self.copy_weight) * self.ngram_prob(prefix, c))
            .collect();
        if self.copy_weight > 0.0 {
            for (code, q) in self.copy_distribution(mention_of(context), prefix) {
                probs[code as usize] += self.copy_weight * q;
            }
        }
        probs
    }
}

impl GenerationScorer for CharNgramScorer {
    fn score_next(&self, context: &str, prefix: &[char], symbols: &[Symbol]) -> Vec<f64> {
        let copy = if self.copy_weight > 0.0 {
            self.copy_distribution(mention_of(context), prefix)
        } else {
            Vec::new()
        };
        symbols
            .iter()
            .map(|&sym| {
                let code = self.symbol_code(sym);
                let q = copy
                    .iter()
                    .find(|(c, _)| *c == code)
                    .map_or(0.0, |(_, q)| *q);
                ((1.0 - self.copy_weight) * self.ngram_prob(prefix, code) + self.copy_weight * q)
                    .ln()
            })
            .collect()
    }
}
