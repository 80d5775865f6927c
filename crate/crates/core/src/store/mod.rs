//! Sparse co-occurrence stores: the word-context matrix and the
//! verb-relation-filler tensor.
//!
//! Both stores keep raw marginals (exact integer counts) next to their cell
//! values. Cells hold exact integer counts while `weighting == Raw` and
//! association weights afterwards; the marginals keep describing the raw
//! counts the weights were computed from.

mod codec;

use std::fmt;
use std::io::{self, Write};

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::vocab::Vocab;

pub use codec::LoadError;

/// Which transformation the cell values have been through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Weighting {
    Raw,
    Ppmi,
    Plmi,
}

impl Weighting {
    pub(crate) fn code(self) -> u8 {
        match self {
            Weighting::Raw => 0,
            Weighting::Ppmi => 1,
            Weighting::Plmi => 2,
        }
    }

    pub(crate) fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Weighting::Raw),
            1 => Some(Weighting::Ppmi),
            2 => Some(Weighting::Plmi),
            _ => None,
        }
    }
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Raw => "raw",
            Weighting::Ppmi => "ppmi",
            Weighting::Plmi => "plmi",
        })
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error(
        "no pairs survive the frequency thresholds \
         (min_target_freq={min_target_freq}, min_context_freq={min_context_freq})"
    )]
    EmptyMatrix { min_target_freq: u64, min_context_freq: u64 },
    #[error(
        "no triples survive the frequency thresholds \
         (min_verb_freq={min_verb_freq}, min_filler_freq={min_filler_freq})"
    )]
    EmptyTensor { min_verb_freq: u64, min_filler_freq: u64 },
}

/// A sparse vector over context ids, sorted by id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseVector {
    /// Builds a vector from unsorted entries; duplicate ids are summed.
    pub fn from_entries(mut entries: Vec<(u32, f64)>) -> Self {
        entries.sort_unstable_by_key(|&(i, _)| i);
        let mut out = SparseVector::default();
        for (i, v) in entries {
            if out.indices.last() == Some(&i) {
                *out.values.last_mut().unwrap() += v;
            } else {
                out.indices.push(i);
                out.values.push(v);
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: u32) -> Option<f64> {
        self.indices.binary_search(&index).ok().map(|p| self.values[p])
    }
}

/// A borrowed matrix row.
#[derive(Debug, Clone, Copy)]
pub struct RowView<'a> {
    pub indices: &'a [u32],
    pub values: &'a [f64],
}

impl<'a> RowView<'a> {
    const EMPTY: RowView<'static> = RowView { indices: &[], values: &[] };

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + 'a {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn to_vector(&self) -> SparseVector {
        SparseVector { indices: self.indices.to_vec(), values: self.values.to_vec() }
    }
}

/// The distributional word-context matrix, stored row-compressed.
#[derive(Debug, Clone, PartialEq)]
pub struct CoocMatrix {
    pub(crate) targets: Vocab,
    pub(crate) contexts: Vocab,
    pub(crate) row_ptr: Vec<usize>,
    pub(crate) cols: Vec<u32>,
    pub(crate) values: Vec<f64>,
    pub(crate) target_marginals: Vec<u64>,
    pub(crate) context_marginals: Vec<u64>,
    pub(crate) total: u64,
    pub(crate) weighting: Weighting,
}

impl Default for CoocMatrix {
    fn default() -> Self {
        Self {
            targets: Vocab::default(),
            contexts: Vocab::default(),
            row_ptr: vec![0],
            cols: Vec::new(),
            values: Vec::new(),
            target_marginals: Vec::new(),
            context_marginals: Vec::new(),
            total: 0,
            weighting: Weighting::Raw,
        }
    }
}

impl CoocMatrix {
    pub fn targets(&self) -> &Vocab {
        &self.targets
    }

    pub fn contexts(&self) -> &Vocab {
        &self.contexts
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    /// Grand total `D` of the retained raw counts.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn target_marginal(&self, target: &str) -> u64 {
        self.targets.id(target).map_or(0, |t| self.target_marginals[t as usize])
    }

    pub fn context_marginal(&self, context: &str) -> u64 {
        self.contexts.id(context).map_or(0, |c| self.context_marginals[c as usize])
    }

    pub fn target_marginals(&self) -> &[u64] {
        &self.target_marginals
    }

    pub fn context_marginals(&self) -> &[u64] {
        &self.context_marginals
    }

    pub fn row_by_id(&self, target: u32) -> RowView<'_> {
        let (lo, hi) = (self.row_ptr[target as usize], self.row_ptr[target as usize + 1]);
        RowView { indices: &self.cols[lo..hi], values: &self.values[lo..hi] }
    }

    /// The stored row of `target`; out-of-vocabulary targets give an empty row.
    pub fn row(&self, target: &str) -> RowView<'_> {
        match self.targets.id(target) {
            Some(t) => self.row_by_id(t),
            None => RowView::EMPTY,
        }
    }

    pub fn get(&self, target: &str, context: &str) -> Option<f64> {
        let c = self.contexts.id(context)?;
        let row = self.row(target);
        row.indices.binary_search(&c).ok().map(|p| row.values[p])
    }

    /// All cells as `(target, context, value)`, in row-major id order.
    pub fn cells(&self) -> impl Iterator<Item = (u32, u32, f64)> + '_ {
        (0..self.targets.len() as u32).flat_map(move |t| self.row_by_id(t).iter().map(move |(c, v)| (t, c, v)))
    }

    /// Rebuilds the cell arrays from `f(target, context, value)`, dropping
    /// cells mapped to zero or below.
    pub(crate) fn map_cells<F>(&self, weighting: Weighting, mut f: F) -> CoocMatrix
    where
        F: FnMut(u32, u32, f64) -> f64,
    {
        let mut row_ptr = Vec::with_capacity(self.row_ptr.len());
        let mut cols = Vec::with_capacity(self.cols.len());
        let mut values = Vec::with_capacity(self.values.len());
        row_ptr.push(0);
        for t in 0..self.targets.len() as u32 {
            for (c, v) in self.row_by_id(t).iter() {
                let w = f(t, c, v);
                if w > 0.0 {
                    cols.push(c);
                    values.push(w);
                }
            }
            row_ptr.push(cols.len());
        }
        CoocMatrix {
            targets: self.targets.clone(),
            contexts: self.contexts.clone(),
            row_ptr,
            cols,
            values,
            target_marginals: self.target_marginals.clone(),
            context_marginals: self.context_marginals.clone(),
            total: self.total,
            weighting,
        }
    }

    /// Writes `target<TAB>context<TAB>value` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (t, c, v) in self.cells() {
            writeln!(w, "{}\t{}\t{}", self.targets.name(t), self.contexts.name(c), v)?;
        }
        w.flush()
    }
}

/// Accumulates raw word-context counts. Builders over disjoint shards can be
/// merged in any order.
#[derive(Debug, Default, Clone)]
pub struct MatrixBuilder {
    targets: Interner,
    contexts: Interner,
    cells: FxHashMap<(u32, u32), u64>,
}

#[derive(Debug, Default, Clone)]
struct Interner {
    ids: FxHashMap<String, u32>,
    names: Vec<String>,
}

impl Interner {
    fn intern(&mut self, s: &str) -> u32 {
        if let Some(&id) = self.ids.get(s) {
            return id;
        }
        let id = self.names.len() as u32;
        self.ids.insert(s.to_string(), id);
        self.names.push(s.to_string());
        id
    }
}

impl MatrixBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, target: &str, context: &str, count: u64) {
        if count == 0 {
            return;
        }
        let t = self.targets.intern(target);
        let c = self.contexts.intern(context);
        *self.cells.entry((t, c)).or_default() += count;
    }

    pub fn merge(&mut self, other: MatrixBuilder) {
        let tmap: Vec<u32> = other.targets.names.iter().map(|s| self.targets.intern(s)).collect();
        let cmap: Vec<u32> = other.contexts.names.iter().map(|s| self.contexts.intern(s)).collect();
        for ((t, c), n) in other.cells {
            *self.cells.entry((tmap[t as usize], cmap[c as usize])).or_default() += n;
        }
    }

    /// Number of distinct `(target, context)` pairs seen so far.
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Applies the frequency thresholds and freezes the vocabularies.
    ///
    /// A target (context) survives when its total count over all pairs is at
    /// least `min_target_freq` (`min_context_freq`). Marginals and the grand
    /// total are computed over the surviving pairs only.
    pub fn finish(self, min_target_freq: u64, min_context_freq: u64) -> Result<CoocMatrix, BuildError> {
        if self.cells.is_empty() {
            return Ok(CoocMatrix::default());
        }
        let mut tfreq = vec![0u64; self.targets.names.len()];
        let mut cfreq = vec![0u64; self.contexts.names.len()];
        for (&(t, c), &n) in &self.cells {
            tfreq[t as usize] += n;
            cfreq[c as usize] += n;
        }
        let kept: Vec<((u32, u32), u64)> = self
            .cells
            .into_iter()
            .filter(|&((t, c), _)| tfreq[t as usize] >= min_target_freq && cfreq[c as usize] >= min_context_freq)
            .collect();
        if kept.is_empty() {
            return Err(BuildError::EmptyMatrix { min_target_freq, min_context_freq });
        }

        let (tvocab, tremap) = freeze(&self.targets.names, kept.iter().map(|&((t, _), _)| t));
        let (cvocab, cremap) = freeze(&self.contexts.names, kept.iter().map(|&((_, c), _)| c));
        let mut cells: Vec<(u32, u32, u64)> = kept
            .into_iter()
            .map(|((t, c), n)| (tremap[t as usize], cremap[c as usize], n))
            .collect();
        cells.sort_unstable_by_key(|&(t, c, _)| (t, c));

        let mut target_marginals = vec![0u64; tvocab.len()];
        let mut context_marginals = vec![0u64; cvocab.len()];
        let mut row_ptr = vec![0usize; tvocab.len() + 1];
        let mut cols = Vec::with_capacity(cells.len());
        let mut values = Vec::with_capacity(cells.len());
        for &(t, c, n) in &cells {
            target_marginals[t as usize] += n;
            context_marginals[c as usize] += n;
            row_ptr[t as usize + 1] += 1;
            cols.push(c);
            values.push(n as f64);
        }
        for i in 1..row_ptr.len() {
            row_ptr[i] += row_ptr[i - 1];
        }
        let total = target_marginals.iter().sum();
        Ok(CoocMatrix {
            targets: tvocab,
            contexts: cvocab,
            row_ptr,
            cols,
            values,
            target_marginals,
            context_marginals,
            total,
            weighting: Weighting::Raw,
        })
    }
}

/// Builds the sorted vocabulary of the ids in `used` and a remap from
/// interned id to vocabulary id (`u32::MAX` for unused ids).
fn freeze(names: &[String], used: impl Iterator<Item = u32>) -> (Vocab, Vec<u32>) {
    let mut seen = vec![false; names.len()];
    for id in used {
        seen[id as usize] = true;
    }
    let mut order: Vec<u32> = (0..names.len() as u32).filter(|&i| seen[i as usize]).collect();
    order.sort_unstable_by(|&a, &b| names[a as usize].cmp(&names[b as usize]));
    let mut remap = vec![u32::MAX; names.len()];
    for (new, &old) in order.iter().enumerate() {
        remap[old as usize] = new as u32;
    }
    let vocab = Vocab::from_sorted(order.iter().map(|&i| names[i as usize].clone()).collect())
        .expect("interned names are unique");
    (vocab, remap)
}

/// Builds a raw matrix from `(target, context, multiplicity)` pairs.
pub fn build_matrix<I, S, T>(pairs: I, min_target_freq: u64, min_context_freq: u64) -> Result<CoocMatrix, BuildError>
where
    I: IntoIterator<Item = (S, T, u64)>,
    S: AsRef<str>,
    T: AsRef<str>,
{
    let mut b = MatrixBuilder::new();
    for (t, c, n) in pairs {
        b.add(t.as_ref(), c.as_ref(), n);
    }
    b.finish(min_target_freq, min_context_freq)
}

/// One `(verb, relation, filler)` cell of the role tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorEntry {
    pub verb: u32,
    pub relation: u32,
    pub filler: u32,
    pub value: f64,
}

/// Sparse verb-relation-filler store, entries sorted by `(verb, relation, filler)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoleTensor {
    pub(crate) verbs: Vocab,
    pub(crate) relations: Vocab,
    pub(crate) fillers: Vocab,
    pub(crate) entries: Vec<TensorEntry>,
    pub(crate) verb_marginals: Vec<u64>,
    pub(crate) relation_marginals: Vec<u64>,
    pub(crate) filler_marginals: Vec<u64>,
    pub(crate) total: u64,
    pub(crate) weighting: Weighting,
}

impl Default for RoleTensor {
    fn default() -> Self {
        Self {
            verbs: Vocab::default(),
            relations: Vocab::default(),
            fillers: Vocab::default(),
            entries: Vec::new(),
            verb_marginals: Vec::new(),
            relation_marginals: Vec::new(),
            filler_marginals: Vec::new(),
            total: 0,
            weighting: Weighting::Raw,
        }
    }
}

impl RoleTensor {
    pub fn verbs(&self) -> &Vocab {
        &self.verbs
    }

    pub fn relations(&self) -> &Vocab {
        &self.relations
    }

    pub fn fillers(&self) -> &Vocab {
        &self.fillers
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn entries(&self) -> &[TensorEntry] {
        &self.entries
    }

    pub fn verb_marginals(&self) -> &[u64] {
        &self.verb_marginals
    }

    pub fn relation_marginals(&self) -> &[u64] {
        &self.relation_marginals
    }

    pub fn filler_marginals(&self) -> &[u64] {
        &self.filler_marginals
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The contiguous slice of entries whose verb is `verb`.
    pub fn verb_entries(&self, verb: &str) -> &[TensorEntry] {
        let Some(v) = self.verbs.id(verb) else { return &[] };
        let lo = self.entries.partition_point(|e| e.verb < v);
        let hi = self.entries.partition_point(|e| e.verb <= v);
        &self.entries[lo..hi]
    }

    pub fn get(&self, verb: &str, relation: &str, filler: &str) -> Option<f64> {
        let r = self.relations.id(relation)?;
        let f = self.fillers.id(filler)?;
        let es = self.verb_entries(verb);
        es.binary_search_by(|e| (e.relation, e.filler).cmp(&(r, f))).ok().map(|i| es[i].value)
    }

    pub(crate) fn map_entries<F>(&self, weighting: Weighting, mut f: F) -> RoleTensor
    where
        F: FnMut(&TensorEntry) -> f64,
    {
        let entries = self
            .entries
            .iter()
            .filter_map(|e| {
                let value = f(e);
                (value > 0.0).then_some(TensorEntry { value, ..*e })
            })
            .collect();
        RoleTensor { entries, weighting, ..self.clone_without_entries() }
    }

    fn clone_without_entries(&self) -> RoleTensor {
        RoleTensor {
            verbs: self.verbs.clone(),
            relations: self.relations.clone(),
            fillers: self.fillers.clone(),
            entries: Vec::new(),
            verb_marginals: self.verb_marginals.clone(),
            relation_marginals: self.relation_marginals.clone(),
            filler_marginals: self.filler_marginals.clone(),
            total: self.total,
            weighting: self.weighting,
        }
    }

    /// Writes `verb<TAB>relation<TAB>filler<TAB>value` lines.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.entries {
            writeln!(
                w,
                "{}\t{}\t{}\t{}",
                self.verbs.name(e.verb),
                self.relations.name(e.relation),
                self.fillers.name(e.filler),
                e.value
            )?;
        }
        w.flush()
    }
}

/// Accumulates raw `(verb, relation, filler)` counts.
#[derive(Debug, Default, Clone)]
pub struct TensorBuilder {
    verbs: Interner,
    relations: Interner,
    fillers: Interner,
    cells: FxHashMap<(u32, u32, u32), u64>,
}

impl TensorBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, verb: &str, relation: &str, filler: &str, count: u64) {
        if count == 0 {
            return;
        }
        let key = (self.verbs.intern(verb), self.relations.intern(relation), self.fillers.intern(filler));
        *self.cells.entry(key).or_default() += count;
    }

    pub fn merge(&mut self, other: TensorBuilder) {
        let vmap: Vec<u32> = other.verbs.names.iter().map(|s| self.verbs.intern(s)).collect();
        let rmap: Vec<u32> = other.relations.names.iter().map(|s| self.relations.intern(s)).collect();
        let fmap: Vec<u32> = other.fillers.names.iter().map(|s| self.fillers.intern(s)).collect();
        for ((v, r, f), n) in other.cells {
            let key = (vmap[v as usize], rmap[r as usize], fmap[f as usize]);
            *self.cells.entry(key).or_default() += n;
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Freezes the tensor. Verbs (fillers) whose total count is below the
    /// given minimum are dropped; pass 0 to keep everything.
    pub fn finish(self, min_verb_freq: u64, min_filler_freq: u64) -> Result<RoleTensor, BuildError> {
        if self.cells.is_empty() {
            return Ok(RoleTensor::default());
        }
        let mut vfreq = vec![0u64; self.verbs.names.len()];
        let mut ffreq = vec![0u64; self.fillers.names.len()];
        for (&(v, _, f), &n) in &self.cells {
            vfreq[v as usize] += n;
            ffreq[f as usize] += n;
        }
        let kept: Vec<((u32, u32, u32), u64)> = self
            .cells
            .into_iter()
            .filter(|&((v, _, f), _)| vfreq[v as usize] >= min_verb_freq && ffreq[f as usize] >= min_filler_freq)
            .collect();
        if kept.is_empty() {
            return Err(BuildError::EmptyTensor { min_verb_freq, min_filler_freq });
        }
        let (verbs, vremap) = freeze(&self.verbs.names, kept.iter().map(|&((v, _, _), _)| v));
        let (relations, rremap) = freeze(&self.relations.names, kept.iter().map(|&((_, r, _), _)| r));
        let (fillers, fremap) = freeze(&self.fillers.names, kept.iter().map(|&((_, _, f), _)| f));
        let mut cells: Vec<(u32, u32, u32, u64)> = kept
            .into_iter()
            .map(|((v, r, f), n)| (vremap[v as usize], rremap[r as usize], fremap[f as usize], n))
            .collect();
        cells.sort_unstable_by_key(|&(v, r, f, _)| (v, r, f));

        let mut verb_marginals = vec![0u64; verbs.len()];
        let mut relation_marginals = vec![0u64; relations.len()];
        let mut filler_marginals = vec![0u64; fillers.len()];
        let entries = cells
            .iter()
            .map(|&(v, r, f, n)| {
                verb_marginals[v as usize] += n;
                relation_marginals[r as usize] += n;
                filler_marginals[f as usize] += n;
                TensorEntry { verb: v, relation: r, filler: f, value: n as f64 }
            })
            .collect();
        let total = verb_marginals.iter().sum();
        Ok(RoleTensor {
            verbs,
            relations,
            fillers,
            entries,
            verb_marginals,
            relation_marginals,
            filler_marginals,
            total,
            weighting: Weighting::Raw,
        })
    }
}

/// Builds a raw tensor without thresholds.
pub fn build_tensor<I, A, B, C>(triples: I) -> RoleTensor
where
    I: IntoIterator<Item = (A, B, C, u64)>,
    A: AsRef<str>,
    B: AsRef<str>,
    C: AsRef<str>,
{
    let mut b = TensorBuilder::new();
    for (v, r, f, n) in triples {
        b.add(v.as_ref(), r.as_ref(), f.as_ref(), n);
    }
    b.finish(0, 0).expect("no thresholds, cannot empty out")
}
