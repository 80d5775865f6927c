//! Role prototypes built from second-order contexts.
//!
//! A verb-specific role (say the patient of `eat-v`) is characterised by its
//! typical fillers, the lexemes with the highest PLMI in the tensor under the
//! role's relations. Their DSM vectors are summed, restricted to the contexts
//! allowed by a [`ContextFilter`], and sorted by weight. The resulting
//! [`RankedVector`] is what candidate fillers are compared against.

use std::fmt;
use std::io::{self, Write};

use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::config::FillerMerge;
use crate::store::{CoocMatrix, RoleTensor, SparseVector, Weighting};
use crate::vocab::Vocab;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PrototypeError {
    #[error("the role tensor must be PLMI-weighted, found {0}")]
    TensorNotWeighted(Weighting),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("none of the {} fillers is in the DSM vocabulary: {}", .oov.len(), .oov.join(", "))]
    AllFillersOov { oov: Vec<String> },
    #[error("invalid role spec `{0}` (expected a role name or name=rel1,rel2)")]
    BadRoleSpec(String),
}

/// A thematic role expressed as the dependency relations that realise it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RoleSpec {
    pub name: String,
    pub relations: Vec<String>,
}

impl RoleSpec {
    pub fn new(name: impl Into<String>, relations: &[&str]) -> Self {
        Self { name: name.into(), relations: relations.iter().map(|r| r.to_string()).collect() }
    }

    pub fn agent() -> Self {
        Self::new("agent", &["sbj"])
    }

    pub fn patient() -> Self {
        Self::new("patient", &["obj"])
    }

    pub fn instrument() -> Self {
        Self::new("instrument", &["with"])
    }

    pub fn location() -> Self {
        Self::new("location", &["on", "at", "in"])
    }

    /// Resolves `agent`, `patient`, `instrument`, `location`, or a custom
    /// `name=rel1,rel2` spec.
    pub fn parse(spec: &str) -> Result<Self, PrototypeError> {
        match spec.trim().to_ascii_lowercase().as_str() {
            "agent" => return Ok(Self::agent()),
            "patient" => return Ok(Self::patient()),
            "instrument" => return Ok(Self::instrument()),
            "location" => return Ok(Self::location()),
            _ => {}
        }
        let bad = || PrototypeError::BadRoleSpec(spec.to_string());
        let (name, rels) = spec.split_once('=').ok_or_else(bad)?;
        let relations: Vec<String> =
            rels.split(',').map(str::trim).filter(|r| !r.is_empty()).map(String::from).collect();
        if name.trim().is_empty() || relations.is_empty() {
            return Err(bad());
        }
        Ok(Self { name: name.trim().to_string(), relations })
    }
}

impl fmt::Display for RoleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Syntactic restriction on the contexts that take part in a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextFilter {
    All,
    /// Subject/object contexts: `sbj`, `sbj-1`, `obj`, `obj-1`.
    So,
    /// Prepositional contexts: `at`, `in`, `on`, `with` and their inverses.
    Prep,
}

const SO_RELATIONS: [&str; 4] = ["sbj", "sbj-1", "obj", "obj-1"];
const PREP_RELATIONS: [&str; 8] = ["at-1", "in-1", "on-1", "with-1", "at", "in", "on", "with"];

impl ContextFilter {
    /// Whether a `relation:lexeme` context passes the filter.
    pub fn admits(self, context: &str) -> bool {
        let relation = context.split_once(':').map_or(context, |(r, _)| r);
        match self {
            ContextFilter::All => true,
            ContextFilter::So => SO_RELATIONS.contains(&relation),
            ContextFilter::Prep => PREP_RELATIONS.contains(&relation),
        }
    }

    /// Per-context admission flags for a whole vocabulary.
    pub fn mask(self, contexts: &Vocab) -> Vec<bool> {
        contexts.iter().map(|c| self.admits(c)).collect()
    }
}

/// One context of a ranked vector. Its rank is its position plus one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedItem {
    pub context: u32,
    pub weight: f64,
}

/// Contexts sorted by descending weight, ties broken by ascending context
/// string. Ranks are ordinal, 1..=len.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RankedVector {
    pub owner: String,
    items: Vec<RankedItem>,
}

impl RankedVector {
    /// Sorts arbitrary `(context id, weight)` entries. Context ids must come
    /// from a [`Vocab`], whose id order is the string order.
    pub fn from_entries(owner: impl Into<String>, entries: impl IntoIterator<Item = (u32, f64)>) -> Self {
        let mut items: Vec<RankedItem> =
            entries.into_iter().map(|(context, weight)| RankedItem { context, weight }).collect();
        items.sort_unstable_by(|a, b| b.weight.total_cmp(&a.weight).then(a.context.cmp(&b.context)));
        Self { owner: owner.into(), items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[RankedItem] {
        &self.items
    }

    /// `(rank, context, weight)` triples in rank order.
    pub fn ranked(&self) -> impl Iterator<Item = (usize, u32, f64)> + '_ {
        self.items.iter().enumerate().map(|(i, it)| (i + 1, it.context, it.weight))
    }

    pub fn top(&self, n: usize) -> &[RankedItem] {
        &self.items[..n.min(self.items.len())]
    }

    pub fn rank_of(&self, context: u32) -> Option<usize> {
        self.items.iter().position(|it| it.context == context).map(|p| p + 1)
    }

    pub fn to_sparse(&self) -> SparseVector {
        SparseVector::from_entries(self.items.iter().map(|it| (it.context, it.weight)).collect())
    }
}

/// The filtered, ranked row of `lexeme`. Out-of-vocabulary gives an empty vector.
pub fn rank_vector(matrix: &CoocMatrix, lexeme: &str, filter: ContextFilter) -> RankedVector {
    let contexts = matrix.contexts();
    let entries = matrix.row(lexeme).iter().filter(|&(c, _)| filter.admits(contexts.name(c)));
    RankedVector::from_entries(lexeme, entries)
}

/// Like [`rank_vector`] with a precomputed [`ContextFilter::mask`].
pub fn rank_vector_masked(matrix: &CoocMatrix, lexeme: &str, mask: &[bool]) -> RankedVector {
    let entries = matrix.row(lexeme).iter().filter(|&(c, _)| mask[c as usize]);
    RankedVector::from_entries(lexeme, entries)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFiller {
    /// The filler lexeme, `rel:lexeme` under [`FillerMerge::Qualified`].
    pub filler: String,
    pub score: f64,
}

impl ScoredFiller {
    /// The lexeme to look up in the DSM, without any relation qualifier.
    pub fn lexeme(&self) -> &str {
        bare_lexeme(&self.filler)
    }
}

fn bare_lexeme(filler: &str) -> &str {
    filler.split_once(':').map_or(filler, |(_, lex)| lex)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FillerSelection {
    pub verb_found: bool,
    pub fillers: Vec<ScoredFiller>,
}

/// The `k` fillers of `role` for `verb` with the highest PLMI.
pub fn top_fillers(
    tensor: &RoleTensor,
    verb: &str,
    role: &RoleSpec,
    k: usize,
    merge: FillerMerge,
) -> Result<FillerSelection, PrototypeError> {
    if tensor.weighting() != Weighting::Plmi {
        return Err(PrototypeError::TensorNotWeighted(tensor.weighting()));
    }
    if k == 0 {
        return Err(PrototypeError::ZeroK);
    }
    let verb_found = tensor.verbs().id(verb).is_some();
    let rel_ids: Vec<u32> = role.relations.iter().filter_map(|r| tensor.relations().id(r)).collect();

    let mut scores: FxHashMap<String, f64> = FxHashMap::default();
    for e in tensor.verb_entries(verb).iter().filter(|e| rel_ids.contains(&e.relation)) {
        let filler = tensor.fillers().name(e.filler);
        match merge {
            FillerMerge::Max => {
                let s = scores.entry(filler.to_string()).or_insert(0.0);
                *s = s.max(e.value);
            }
            FillerMerge::Sum => *scores.entry(filler.to_string()).or_insert(0.0) += e.value,
            FillerMerge::Qualified => {
                let key = format!("{}:{filler}", tensor.relations().name(e.relation));
                scores.insert(key, e.value);
            }
        }
    }
    let mut fillers: Vec<ScoredFiller> =
        scores.into_iter().map(|(filler, score)| ScoredFiller { filler, score }).collect();
    fillers.sort_unstable_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.filler.cmp(&b.filler)));
    fillers.truncate(k);
    Ok(FillerSelection { verb_found, fillers })
}

/// A role prototype: the filtered, ranked sum of its fillers' DSM vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Prototype {
    pub verb: Option<String>,
    pub role: Option<RoleSpec>,
    pub k_requested: usize,
    pub fillers_used: Vec<String>,
    pub fillers_oov: Vec<String>,
    pub filter: ContextFilter,
    pub ranked: RankedVector,
}

/// Sums the filtered rows of `fillers`. Fillers absent from the matrix are
/// recorded and skipped; if none is present the prototype cannot be built.
///
/// Fillers may be relation-qualified (`in:park-n`); the bare lexeme is used
/// for the lookup, so a lexeme listed twice contributes twice.
pub fn build_prototype<S: AsRef<str>>(
    matrix: &CoocMatrix,
    fillers: &[S],
    filter: ContextFilter,
) -> Result<Prototype, PrototypeError> {
    let mask = filter.mask(matrix.contexts());
    build_prototype_masked(matrix, fillers, filter, &mask)
}

pub(crate) fn build_prototype_masked<S: AsRef<str>>(
    matrix: &CoocMatrix,
    fillers: &[S],
    filter: ContextFilter,
    mask: &[bool],
) -> Result<Prototype, PrototypeError> {
    let mut used = Vec::new();
    let mut oov = Vec::new();
    let mut sums: FxHashMap<u32, f64> = FxHashMap::default();
    for filler in fillers {
        let filler = filler.as_ref();
        let Some(t) = matrix.targets().id(bare_lexeme(filler)) else {
            oov.push(filler.to_string());
            continue;
        };
        used.push(filler.to_string());
        for (c, v) in matrix.row_by_id(t).iter().filter(|&(c, _)| mask[c as usize]) {
            *sums.entry(c).or_insert(0.0) += v;
        }
    }
    if used.is_empty() {
        return Err(PrototypeError::AllFillersOov { oov });
    }
    Ok(Prototype {
        verb: None,
        role: None,
        k_requested: fillers.len(),
        fillers_used: used,
        fillers_oov: oov,
        filter,
        ranked: RankedVector::from_entries("prototype", sums),
    })
}

/// Selects the top-`k` fillers of `(verb, role)` and builds their prototype.
pub fn role_prototype(
    tensor: &RoleTensor,
    matrix: &CoocMatrix,
    verb: &str,
    role: &RoleSpec,
    k: usize,
    merge: FillerMerge,
    filter: ContextFilter,
) -> Result<Prototype, PrototypeError> {
    let selection = top_fillers(tensor, verb, role, k, merge)?;
    let fillers: Vec<&str> = selection.fillers.iter().map(|f| f.filler.as_str()).collect();
    let mut proto = build_prototype(matrix, &fillers, filter)?;
    proto.verb = Some(verb.to_string());
    proto.role = Some(role.clone());
    proto.k_requested = k;
    proto.ranked.owner = format!("{verb}/{}", role.name);
    Ok(proto)
}

/// Writes a `# key=value` header line followed by `rank<TAB>context<TAB>weight`
/// rows, at most `limit` of them.
pub fn write_prototype_tsv<W: Write>(
    mut w: W,
    proto: &Prototype,
    matrix: &CoocMatrix,
    limit: Option<usize>,
) -> io::Result<()> {
    writeln!(
        w,
        "# verb={}\trole={}\tfilter={}\tk={}\tfillers_used={}\tfillers={}",
        proto.verb.as_deref().unwrap_or("-"),
        proto.role.as_ref().map_or("-", |r| r.name.as_str()),
        proto.filter,
        proto.k_requested,
        proto.fillers_used.len(),
        proto.fillers_used.join(","),
    )?;
    let n = limit.unwrap_or(usize::MAX);
    for (rank, c, weight) in proto.ranked.ranked().take(n) {
        writeln!(w, "{rank}\t{}\t{weight}", matrix.contexts().name(c))?;
    }
    w.flush()
}
