//! Frozen, lexicographically ordered string vocabularies.

use rustc_hash::FxHashMap;

/// An immutable set of strings with dense ids assigned in byte-lexicographic
/// order, so comparing ids is the same as comparing the strings.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    items: Vec<String>,
    index: FxHashMap<String, u32>,
}

impl Vocab {
    /// Builds a vocabulary from arbitrary strings. Duplicates collapse.
    pub fn from_unsorted<I>(items: I) -> Self
    where
        I: IntoIterator<Item = String>,
    {
        let mut items: Vec<String> = items.into_iter().collect();
        items.sort_unstable();
        items.dedup();
        Self::from_sorted_unchecked(items)
    }

    /// Builds a vocabulary from strictly ascending strings, or returns `None`
    /// when the input is not strictly ascending.
    pub fn from_sorted(items: Vec<String>) -> Option<Self> {
        if items.windows(2).any(|w| w[0] >= w[1]) {
            return None;
        }
        Some(Self::from_sorted_unchecked(items))
    }

    fn from_sorted_unchecked(items: Vec<String>) -> Self {
        let index = items
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Self { items, index }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn id(&self, item: &str) -> Option<u32> {
        self.index.get(item).copied()
    }

    /// Panics if `id` is out of range.
    pub fn name(&self, id: u32) -> &str {
        &self.items[id as usize]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.items.iter().map(String::as_str)
    }

    pub fn as_slice(&self) -> &[String] {
        &self.items
    }
}

impl PartialEq for Vocab {
    fn eq(&self, other: &Self) -> bool {
        self.items == other.items
    }
}

impl Eq for Vocab {}
