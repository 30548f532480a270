//! Symbol vocabulary with SOS/EOS sentinels.
//!
//! Symbols get dense ids `0..symbol_count` in sorted (unicode scalar)
//! order; SOS and EOS are appended after them. SOS is input-only: the
//! decoder output layer covers the symbols plus EOS, so output index
//! `symbol_count` means EOS.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Vocab {
    symbols: Vec<char>,
    index: BTreeMap<char, usize>,
}

impl Vocab {
    /// Build from training labels: sorted unique characters.
    pub fn from_labels<S: AsRef<str>>(labels: impl IntoIterator<Item = S>) -> Vocab {
        let mut set: Vec<char> = labels
            .into_iter()
            .flat_map(|l| l.as_ref().chars().collect::<Vec<_>>())
            .collect();
        set.sort_unstable();
        set.dedup();
        Vocab::from_symbols(set)
    }

    /// Build from an explicit, already-ordered symbol list.
    pub fn from_symbols(symbols: Vec<char>) -> Vocab {
        let index = symbols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        Vocab { symbols, index }
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn sos_id(&self) -> usize {
        self.symbols.len()
    }

    pub fn eos_id(&self) -> usize {
        self.symbols.len() + 1
    }

    /// Number of embedding rows: symbols plus SOS and EOS.
    pub fn embedding_rows(&self) -> usize {
        self.symbols.len() + 2
    }

    /// Decoder output dimensionality: symbols plus EOS (SOS is never
    /// emitted).
    pub fn output_dim(&self) -> usize {
        self.symbols.len() + 1
    }

    /// Output-layer index that means EOS.
    pub fn eos_output_index(&self) -> usize {
        self.symbols.len()
    }

    pub fn id_of(&self, c: char) -> Option<usize> {
        self.index.get(&c).copied()
    }

    pub fn char_of(&self, id: usize) -> Option<char> {
        self.symbols.get(id).copied()
    }

    /// Map a label to symbol ids; unknown characters are an error.
    pub fn encode(&self, label: &str) -> Result<Vec<usize>> {
        label
            .chars()
            .map(|c| self.id_of(c).ok_or(Error::UnknownSymbol(c)))
            .collect()
    }

    /// True when every character of `label` is a known symbol.
    pub fn covers(&self, label: &str) -> bool {
        label.chars().all(|c| self.index.contains_key(&c))
    }
}
