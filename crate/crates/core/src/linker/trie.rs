use std::collections::{BTreeMap, BTreeSet};

use crate::kb::KbStore;

/// Separator between an entity name and its language in a trie entry.
pub const LANG_SEPARATOR: &str = " >> ";

/// One generation step: a character or the end of the entry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Char(char),
    End,
}

/// `"name >> lang"`.
pub fn entry_string(name: &str, lang: &str) -> String {
    format!("{name}{LANG_SEPARATOR}{lang}")
}

/// Splits an entry back into `(name, lang)`.
pub fn split_entry(entry: &str) -> Option<(&str, &str)> {
    entry.rsplit_once(LANG_SEPARATOR)
}

#[derive(Clone, Debug, Default)]
struct Node {
    children: BTreeMap<char, usize>,
    payload: BTreeSet<String>,
}

/// Prefix tree over entry characters; terminal nodes carry the qids of
/// every record that produced that entry.
#[derive(Clone, Debug)]
pub struct AliasTrie {
    nodes: Vec<Node>,
    entries: usize,
}

impl Default for AliasTrie {
    fn default() -> Self {
        AliasTrie::new()
    }
}

impl AliasTrie {
    pub fn new() -> AliasTrie {
        AliasTrie {
            nodes: vec![Node::default()],
            entries: 0,
        }
    }

    pub fn insert(&mut self, entry: &str, qid: &str) {
        let mut node = 0;
        for c in entry.chars() {
            node = match self.nodes[node].children.get(&c) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::default());
                    self.nodes[node].children.insert(c, next);
                    next
                }
            };
        }
        let payload = &mut self.nodes[node].payload;
        if payload.is_empty() {
            self.entries += 1;
        }
        payload.insert(qid.to_string());
    }

    fn walk(&self, prefix: &[char]) -> Option<usize> {
        let mut node = 0;
        for c in prefix {
            node = *self.nodes[node].children.get(c)?;
        }
        Some(node)
    }

    /// Child symbols of `prefix`, plus `End` if `prefix` is a full entry.
    /// Empty when `prefix` is not a path in the trie.
    pub fn allowed_next(&self, prefix: &[char]) -> Vec<Symbol> {
        let Some(node) = self.walk(prefix) else {
            return Vec::new();
        };
        let n = &self.nodes[node];
        let mut out: Vec<Symbol> = n.children.keys().map(|&c| Symbol::Char(c)).collect();
        if !n.payload.is_empty() {
            out.push(Symbol::End);
        }
        out
    }

    /// Qids attached to a complete entry.
    pub fn payload(&self, entry: &[char]) -> Option<&BTreeSet<String>> {
        self.walk(entry)
            .map(|n| &self.nodes[n].payload)
            .filter(|p| !p.is_empty())
    }

    pub fn contains(&self, entry: &str) -> bool {
        let chars: Vec<char> = entry.chars().collect();
        self.payload(&chars).is_some()
    }

    /// Number of distinct entries.
    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    /// Every entry with its qids, in character order.
    pub fn entries(&self) -> Vec<(String, Vec<String>)> {
        let mut out = Vec::new();
        let mut stack = vec![(0usize, String::new())];
        while let Some((node, prefix)) = stack.pop() {
            let n = &self.nodes[node];
            if !n.payload.is_empty() {
                out.push((prefix.clone(), n.payload.iter().cloned().collect()));
            }
            for (&c, &child) in n.children.iter().rev() {
                let mut p = prefix.clone();
                p.push(c);
                stack.push((child, p));
            }
        }
        out
    }
}

/// Inserts `"name >> lang"` for every name of every record in the selected
/// languages, whatever the record status.
pub fn build_trie<S: AsRef<str>>(store: &KbStore, languages: &[S]) -> AliasTrie {
    let mut trie = AliasTrie::new();
    for rec in store.records() {
        for lang in languages {
            let lang = lang.as_ref();
            for name in rec.names.get(lang).into_iter().flatten() {
                trie.insert(&entry_string(name, lang), &rec.qid);
            }
        }
    }
    trie
}
