use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scorer::GenerationScorer;
use super::trie::{split_entry, AliasTrie, Symbol};

pub const DEFAULT_BEAM: usize = 12;
pub const DEFAULT_K: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkCandidate {
    pub qid: String,
    pub language: String,
    /// The complete trie entry that produced the best share of this qid.
    pub surface: String,
    /// Marginal log-probability.
    pub score: f64,
}

/// `ln(sum(exp(x)))`, stable for large negative inputs.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Spreads each finished `(surface, log-prob)` evenly over its terminal
/// qids, merges per qid by log-sum-exp, and ranks by score then qid.
pub fn marginalize(
    finished: &[(String, f64)],
    trie: &AliasTrie,
    k: usize,
) -> Vec<LinkCandidate> {
    struct Acc {
        parts: Vec<f64>,
        best: (f64, String),
    }
    let mut by_qid: BTreeMap<String, Acc> = BTreeMap::new();
    for (surface, score) in finished {
        let chars: Vec<char> = surface.chars().collect();
        let Some(payload) = trie.payload(&chars) else {
            continue;
        };
        let share = score - (payload.len() as f64).ln();
        for qid in payload {
            let acc = by_qid.entry(qid.clone()).or_insert_with(|| Acc {
                parts: Vec::new(),
                best: (f64::NEG_INFINITY, String::new()),
            });
            acc.parts.push(share);
            let better = share > acc.best.0 || (share == acc.best.0 && *surface < acc.best.1);
            if better {
                acc.best = (share, surface.clone());
            }
        }
    }
    let mut out: Vec<LinkCandidate> = by_qid
        .into_iter()
        .map(|(qid, acc)| {
            let surface = acc.best.1;
            let language = split_entry(&surface).map_or("", |(_, l)| l).to_string();
            LinkCandidate {
                qid,
                language,
                surface,
                score: log_sum_exp(&acc.parts),
            }
        })
        .collect();
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.qid.cmp(&b.qid)));
    out.truncate(k);
    out
}

/// Beam search restricted to trie paths.
///
/// Each step expands every live hypothesis by the symbols the trie allows;
/// `End` moves a hypothesis to the finished pool, the rest compete for the
/// `beam` live slots (ties broken by prefix). The best `beam` finished
/// hypotheses are then marginalized per qid and the top `k` returned.
/// `beam` and `k` are treated as at least 1.
pub fn constrained_beam_search<S: GenerationScorer + ?Sized>(
    scorer: &S,
    trie: &AliasTrie,
    context: &str,
    beam: usize,
    k: usize,
) -> Vec<LinkCandidate> {
    let beam = beam.max(1);
    let k = k.max(1);
    let mut live: Vec<(Vec<char>, f64)> = vec![(Vec::new(), 0.0)];
    let mut finished: Vec<(String, f64)> = Vec::new();

    while !live.is_empty() {
        let mut expanded: Vec<(Vec<char>, f64)> = Vec::new();
        for (prefix, score) in &live {
            let allowed = trie.allowed_next(prefix);
            if allowed.is_empty() {
                continue;
            }
            let lps = scorer.score_next(context, prefix, &allowed);
            for (sym, lp) in allowed.into_iter().zip(lps) {
                match sym {
                    Symbol::End => finished.push((prefix.iter().collect(), score + lp)),
                    Symbol::Char(c) => {
                        let mut next = prefix.clone();
                        next.push(c);
                        expanded.push((next, score + lp));
                    }
                }
            }
        }
        expanded.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        expanded.truncate(beam);
        live = expanded;
    }

    finished.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    finished.truncate(beam);
    marginalize(&finished, trie, k)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<(char, f64)>);

    impl GenerationScorer for Fixed {
        fn score_next(&self, _: &str, prefix: &[char], symbols: &[Symbol]) -> Vec<f64> {
            symbols
                .iter()
                .map(|s| match (prefix.is_empty(), s) {
                    (true, Symbol::Char(c)) => self.0.iter().find(|(x, _)| x == c).unwrap().1.ln(),
                    _ => 0.0,
                })
                .collect()
        }
    }

    #[test]
    fn forced_single_path() {
        let mut t = AliasTrie::new();
        t.insert("X >> en", "Q1");
        let scorer = Fixed(vec![('X', 0.1)]);
        let out = constrained_beam_search(&scorer, &t, "anything", 3, 5);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].qid, "Q1");
        assert_eq!(out[0].language, "en");
        assert_eq!(out[0].surface, "X >> en");
    }

    #[test]
    fn marginalizes_two_surfaces() {
        let mut t = AliasTrie::new();
        t.insert("a", "Q7");
        t.insert("b", "Q7");
        t.insert("c", "Q8");
        t.insert("d", "Q9");
        let scorer = Fixed(vec![('a', 0.3), ('b', 0.2), ('c', 0.25), ('d', 0.25)]);
        let out = constrained_beam_search(&scorer, &t, "", 12, 5);
        assert_eq!(out[0].qid, "Q7");
        assert!((out[0].score.exp() - 0.5).abs() < 1e-9);
        assert_eq!(out[0].surface, "a");
        assert_eq!(out[1].qid, "Q8");
        assert_eq!(out[2].qid, "Q9");
        assert!((out[1].score.exp() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn homonyms_split_evenly() {
        let mut t = AliasTrie::new();
        t.insert("a", "Q2");
        t.insert("a", "Q1");
        let scorer = Fixed(vec![('a', 0.8)]);
        let out = constrained_beam_search(&scorer, &t, "", 4, 5);
        let qids: Vec<_> = out.iter().map(|c| c.qid.as_str()).collect();
        assert_eq!(qids, ["Q1", "Q2"]);
        for c in &out {
            assert!((c.score.exp() - 0.4).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_trie_gives_nothing() {
        let scorer = Fixed(vec![]);
        assert!(constrained_beam_search(&scorer, &AliasTrie::new(), "", 5, 5).is_empty());
    }

    #[test]
    fn lse() {
        assert!((log_sum_exp(&[0.3f64.ln(), 0.2f64.ln()]) - 0.5f64.ln()).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-9);
    }
}
