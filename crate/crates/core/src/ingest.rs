//! Dependency-annotation ingestion.
//!
//! Two input formats are understood:
//!
//! * CoNLL-U (10 tab-separated columns, blank-line sentence separators,
//!   `#` comments). Parser labels are mapped onto the relation inventory by a
//!   [`LabelMap`]; prepositional attachments are collapsed so that
//!   `verb -obl-> noun -case-> with` becomes the edge `(verb, with, noun)`.
//! * A triple TSV, `head<TAB>relation<TAB>dependent[<TAB>count]`, for
//!   pre-extracted data.
//!
//! Both readers report malformed lines through an [`IngestReport`] instead of
//! failing: the offending line is skipped and counted.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{self, BufRead};

use rustc_hash::FxHashMap;
use thiserror::Error;

/// Marker appended to a relation to form its inverse (`obj` -> `obj-1`).
pub const INVERSE_SUFFIX: &str = "-1";

/// Mapping target that requests PP collapsing instead of a fixed relation.
pub const PREPOSITION_MARKER: &str = "@prep";

/// Only the first this-many line errors are kept verbatim in a report.
const MAX_KEPT_ERRORS: usize = 100;

/// A typed dependency arc between two POS-suffixed lemmas.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DepEdge {
    pub head: String,
    pub relation: String,
    pub dep: String,
    pub sentence_id: String,
}

impl DepEdge {
    pub fn new(head: impl Into<String>, relation: impl Into<String>, dep: impl Into<String>) -> Self {
        Self {
            head: head.into(),
            relation: relation.into(),
            dep: dep.into(),
            sentence_id: String::new(),
        }
    }

    /// The aggregation key, ignoring the sentence id.
    pub fn key(&self) -> (String, String, String) {
        (self.head.clone(), self.relation.clone(), self.dep.clone())
    }
}

/// Maps a CoNLL-U UPOS tag onto the lemma suffix used throughout the models.
pub fn pos_suffix(upos: &str) -> Option<&'static str> {
    match upos {
        "NOUN" | "PROPN" => Some("-n"),
        "VERB" => Some("-v"),
        "ADJ" => Some("-j"),
        _ => None,
    }
}

/// The set of relation labels that may appear in DSM contexts.
///
/// Entries are context relations: a plain label `r` means the head receives
/// the context `r:dep`, and `r-1` means the dependent receives `r-1:head`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationInventory {
    contexts: BTreeSet<String>,
    inverse_suffix: String,
}

impl Default for RelationInventory {
    fn default() -> Self {
        Self::standard()
    }
}

impl RelationInventory {
    pub const STANDARD: [&'static str; 8] =
        ["sbj", "sbj-1", "obj", "obj-1", "at-1", "in-1", "on-1", "with-1"];

    pub const PREPOSITIONS: [&'static str; 4] = ["at", "in", "on", "with"];

    /// `sbj, sbj-1, obj, obj-1, at-1, in-1, on-1, with-1`.
    pub fn standard() -> Self {
        Self::from_labels(Self::STANDARD)
    }

    pub fn from_labels<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            contexts: labels.into_iter().map(Into::into).collect(),
            inverse_suffix: INVERSE_SUFFIX.to_string(),
        }
    }

    /// Adds the direct prepositional relations (`with:knife-n` as a context
    /// of the verb) next to their inverses.
    pub fn with_direct_prepositions(mut self) -> Self {
        self.contexts
            .extend(Self::PREPOSITIONS.iter().map(|p| p.to_string()));
        self
    }

    pub fn inverse_suffix(&self) -> &str {
        &self.inverse_suffix
    }

    pub fn inverse(&self, relation: &str) -> String {
        format!("{relation}{}", self.inverse_suffix)
    }

    pub fn emits_direct(&self, relation: &str) -> bool {
        self.contexts.contains(relation)
    }

    pub fn emits_inverse(&self, relation: &str) -> bool {
        self.contexts.contains(&self.inverse(relation))
    }

    /// True when an edge labeled `relation` produces at least one context.
    pub fn accepts(&self, relation: &str) -> bool {
        self.emits_direct(relation) || self.emits_inverse(relation)
    }

    /// Number of contexts one edge with this relation produces (0, 1 or 2).
    pub fn directions(&self, relation: &str) -> u64 {
        u64::from(self.emits_direct(relation)) + u64::from(self.emits_inverse(relation))
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.contexts.iter().map(String::as_str)
    }

    /// Expands an edge into `(target, context, multiplicity)` DSM pairs.
    pub fn dsm_pairs(&self, edge: &DepEdge, multiplicity: u64) -> Vec<DsmPair> {
        let mut out = Vec::with_capacity(2);
        if multiplicity == 0 {
            return out;
        }
        if self.emits_direct(&edge.relation) {
            out.push(DsmPair {
                target: edge.head.clone(),
                context: format!("{}:{}", edge.relation, edge.dep),
                count: multiplicity,
            });
        }
        if self.emits_inverse(&edge.relation) {
            out.push(DsmPair {
                target: edge.dep.clone(),
                context: format!("{}{}:{}", edge.relation, self.inverse_suffix, edge.head),
                count: multiplicity,
            });
        }
        out
    }
}

/// One weighted word-context observation.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DsmPair {
    pub target: String,
    pub context: String,
    pub count: u64,
}

/// What a parser label maps onto.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MappedRelation {
    Relation(String),
    /// Collapse the attachment through its preposition.
    Preposition,
}

#[derive(Debug, Error)]
pub enum MappingError {
    #[error("mapping line {line}: expected `parser_label<TAB>relation`, got {content:?}")]
    Malformed { line: usize, content: String },
    #[error("mapping line {line}: label `{label}` mapped twice")]
    Duplicate { line: usize, label: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parser-label to relation mapping.
///
/// Lookups try the full label first, then the part before the first `:`, so
/// `obl:tmod` falls back to `obl`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    map: FxHashMap<String, MappedRelation>,
}

impl Default for LabelMap {
    fn default() -> Self {
        Self::universal_dependencies()
    }
}

impl LabelMap {
    /// Defaults for Universal Dependencies, plus the Stanford `prep`/`pobj`
    /// style still produced by some converters.
    pub fn universal_dependencies() -> Self {
        let entries = [
            ("nsubj", "sbj"),
            ("nsubj:pass", "obj"),
            ("nsubjpass", "obj"),
            ("obj", "obj"),
            ("dobj", "obj"),
            ("obl", PREPOSITION_MARKER),
            ("nmod", PREPOSITION_MARKER),
            ("prep", PREPOSITION_MARKER),
        ];
        Self {
            map: entries
                .iter()
                .map(|(l, r)| (l.to_string(), Self::target(r)))
                .collect(),
        }
    }

    fn target(relation: &str) -> MappedRelation {
        if relation == PREPOSITION_MARKER {
            MappedRelation::Preposition
        } else {
            MappedRelation::Relation(relation.to_string())
        }
    }

    /// Reads a `parser_label<TAB>relation` file. Blank lines and `#` comments
    /// are ignored.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, MappingError> {
        let mut map = FxHashMap::default();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split('\t');
            let (Some(label), Some(rel), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(MappingError::Malformed { line: i + 1, content: line.to_string() });
            };
            let (label, rel) = (label.trim(), rel.trim());
            if label.is_empty() || rel.is_empty() {
                return Err(MappingError::Malformed { line: i + 1, content: line.to_string() });
            }
            if map.insert(label.to_string(), Self::target(rel)).is_some() {
                return Err(MappingError::Duplicate { line: i + 1, label: label.to_string() });
            }
        }
        Ok(Self { map })
    }

    pub fn get(&self, label: &str) -> Option<&MappedRelation> {
        self.map.get(label).or_else(|| {
            let base = label.split(':').next()?;
            self.map.get(base)
        })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LineErrorKind {
    ColumnCount { expected: &'static str, found: usize },
    InvalidUtf8,
    BadField { column: &'static str, value: String },
}

/// A recoverable per-line problem; the line was skipped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line: u64,
    pub kind: LineErrorKind,
}

impl fmt::Display for LineError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: ", self.line)?;
        match &self.kind {
            LineErrorKind::ColumnCount { expected, found } => {
                write!(f, "expected {expected} columns, found {found}")
            }
            LineErrorKind::InvalidUtf8 => f.write_str("invalid UTF-8"),
            LineErrorKind::BadField { column, value } => write!(f, "bad {column} {value:?}"),
        }
    }
}

/// Counters collected while reading an input stream.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestReport {
    pub lines: u64,
    pub sentences: u64,
    pub edges: u64,
    /// Total multiplicity of the emitted edges.
    pub multiplicity: u64,
    pub skipped_lines: u64,
    /// The first few skipped lines, in input order.
    pub errors: Vec<LineError>,
}

impl IngestReport {
    fn skip(&mut self, line: u64, kind: LineErrorKind) {
        self.skipped_lines += 1;
        if self.errors.len() < MAX_KEPT_ERRORS {
            self.errors.push(LineError { line, kind });
        }
    }

    pub fn merge(&mut self, other: &IngestReport) {
        self.lines += other.lines;
        self.sentences += other.sentences;
        self.edges += other.edges;
        self.multiplicity += other.multiplicity;
        self.skipped_lines += other.skipped_lines;
        let room = MAX_KEPT_ERRORS.saturating_sub(self.errors.len());
        self.errors.extend(other.errors.iter().take(room).cloned());
    }
}

/// Reads one `\n`-terminated line into `buf`, without the terminator or a
/// trailing `\r`. Returns `false` at end of input.
fn next_line<R: BufRead>(reader: &mut R, buf: &mut Vec<u8>) -> io::Result<bool> {
    buf.clear();
    if reader.read_until(b'\n', buf)? == 0 {
        return Ok(false);
    }
    if buf.last() == Some(&b'\n') {
        buf.pop();
    }
    if buf.last() == Some(&b'\r') {
        buf.pop();
    }
    Ok(true)
}

#[derive(Debug)]
struct Token {
    id: u32,
    /// Lemma with POS suffix, when the UPOS is one we model.
    lexeme: Option<String>,
    lemma: String,
    upos: String,
    head: u32,
    deprel: String,
}

/// Streaming CoNLL-U reader yielding in-inventory [`DepEdge`]s.
pub struct ConlluReader<'a, R> {
    reader: R,
    labels: &'a LabelMap,
    inventory: &'a RelationInventory,
    buf: Vec<u8>,
    line_no: u64,
    sentence: Vec<Token>,
    sentence_id: Option<String>,
    pending: std::vec::IntoIter<DepEdge>,
    done: bool,
    report: IngestReport,
}

impl<'a, R: BufRead> ConlluReader<'a, R> {
    pub fn new(reader: R, labels: &'a LabelMap, inventory: &'a RelationInventory) -> Self {
        Self {
            reader,
            labels,
            inventory,
            buf: Vec::new(),
            line_no: 0,
            sentence: Vec::new(),
            sentence_id: None,
            pending: Vec::new().into_iter(),
            done: false,
            report: IngestReport::default(),
        }
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }

    fn parse_token(&mut self) {
        let line = self.line_no;
        let Ok(text) = std::str::from_utf8(&self.buf) else {
            self.report.skip(line, LineErrorKind::InvalidUtf8);
            return;
        };
        let cols: Vec<&str> = text.split('\t').collect();
        if cols.len() != 10 {
            self.report.skip(
                line,
                LineErrorKind::ColumnCount { expected: "10", found: cols.len() },
            );
            return;
        }
        // Multiword ranges (1-2) and empty nodes (3.1) carry no basic arcs.
        if cols[0].contains('-') || cols[0].contains('.') {
            return;
        }
        let id = match cols[0].parse::<u32>() {
            Ok(id) if id > 0 => id,
            _ => {
                let kind = LineErrorKind::BadField { column: "ID", value: cols[0].to_string() };
                self.report.skip(line, kind);
                return;
            }
        };
        let Ok(head) = cols[6].parse::<u32>() else {
            let kind = LineErrorKind::BadField { column: "HEAD", value: cols[6].to_string() };
            self.report.skip(line, kind);
            return;
        };
        let (lemma, upos) = (cols[2], cols[3]);
        let lexeme = match pos_suffix(upos) {
            Some(sfx) if !lemma.is_empty() && lemma != "_" => Some(format!("{lemma}{sfx}")),
            _ => None,
        };
        self.sentence.push(Token {
            id,
            lexeme,
            lemma: lemma.to_string(),
            upos: upos.to_string(),
            head,
            deprel: cols[7].to_string(),
        });
    }

    fn flush_sentence(&mut self) -> Vec<DepEdge> {
        if self.sentence.is_empty() {
            self.sentence_id = None;
            return Vec::new();
        }
        self.report.sentences += 1;
        let sentence_id = self
            .sentence_id
            .take()
            .unwrap_or_else(|| self.report.sentences.to_string());
        let tokens = std::mem::take(&mut self.sentence);
        let edges = sentence_edges(&tokens, self.labels, self.inventory, &sentence_id);
        self.report.edges += edges.len() as u64;
        self.report.multiplicity += edges.len() as u64;
        edges
    }
}

fn sentence_edges(
    tokens: &[Token],
    labels: &LabelMap,
    inventory: &RelationInventory,
    sentence_id: &str,
) -> Vec<DepEdge> {
    let by_id: FxHashMap<u32, usize> = tokens.iter().enumerate().map(|(i, t)| (t.id, i)).collect();
    let mut children: FxHashMap<u32, Vec<usize>> = FxHashMap::default();
    for (i, t) in tokens.iter().enumerate() {
        children.entry(t.head).or_default().push(i);
    }
    let child_with = |parent: u32, label: &str| -> Option<&Token> {
        children
            .get(&parent)?
            .iter()
            .map(|&i| &tokens[i])
            .find(|t| t.deprel.split(':').next() == Some(label))
    };

    let mut edges = Vec::new();
    let mut push = |head: &Token, relation: &str, dep: &Token| {
        if let (Some(h), Some(d)) = (&head.lexeme, &dep.lexeme) {
            if inventory.accepts(relation) {
                edges.push(DepEdge {
                    head: h.clone(),
                    relation: relation.to_string(),
                    dep: d.clone(),
                    sentence_id: sentence_id.to_string(),
                });
            }
        }
    };

    for dep in tokens {
        if dep.head == 0 {
            continue;
        }
        let Some(&head_idx) = by_id.get(&dep.head) else { continue };
        let head = &tokens[head_idx];
        match labels.get(&dep.deprel) {
            Some(MappedRelation::Relation(rel)) => push(head, rel, dep),
            Some(MappedRelation::Preposition) => {
                if let Some(case) = child_with(dep.id, "case") {
                    push(head, &case.lemma.to_lowercase(), dep);
                } else if dep.upos == "ADP" {
                    if let Some(object) = child_with(dep.id, "pobj") {
                        push(head, &dep.lemma.to_lowercase(), object);
                    }
                }
            }
            None => {}
        }
    }
    edges
}

impl<R: BufRead> Iterator for ConlluReader<'_, R> {
    type Item = io::Result<DepEdge>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(edge) = self.pending.next() {
                return Some(Ok(edge));
            }
            if self.done {
                return None;
            }
            match next_line(&mut self.reader, &mut self.buf) {
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Ok(false) => {
                    self.done = true;
                    self.pending = self.flush_sentence().into_iter();
                }
                Ok(true) => {
                    self.line_no += 1;
                    self.report.lines += 1;
                    if self.buf.iter().all(u8::is_ascii_whitespace) {
                        self.pending = self.flush_sentence().into_iter();
                    } else if self.buf.first() == Some(&b'#') {
                        if let Ok(text) = std::str::from_utf8(&self.buf) {
                            if let Some(id) = text.strip_prefix("# sent_id") {
                                let id = id.trim_start().trim_start_matches('=').trim();
                                self.sentence_id = Some(id.to_string());
                            }
                        }
                    } else {
                        self.parse_token();
                    }
                }
            }
        }
    }
}

/// Streaming reader for `head<TAB>relation<TAB>dep[<TAB>count]` lines.
///
/// Yields each edge once together with its multiplicity.
pub struct TriplesReader<R> {
    reader: R,
    buf: Vec<u8>,
    line_no: u64,
    done: bool,
    report: IngestReport,
}

impl<R: BufRead> TriplesReader<R> {
    pub fn new(reader: R) -> Self {
        Self { reader, buf: Vec::new(), line_no: 0, done: false, report: IngestReport::default() }
    }

    pub fn report(&self) -> &IngestReport {
        &self.report
    }

    pub fn into_report(self) -> IngestReport {
        self.report
    }

    fn parse_line(&mut self) -> Option<(DepEdge, u64)> {
        let line = self.line_no;
        let Ok(text) = std::str::from_utf8(&self.buf) else {
            self.report.skip(line, LineErrorKind::InvalidUtf8);
            return None;
        };
        if text.trim().is_empty() || text.starts_with('#') {
            return None;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if !(3..=4).contains(&fields.len()) || fields[..3].iter().any(|f| f.is_empty()) {
            let kind = LineErrorKind::ColumnCount { expected: "3 or 4", found: fields.len() };
            self.report.skip(line, kind);
            return None;
        }
        let count = match fields.get(3) {
            None => 1,
            Some(raw) => match raw.trim().parse::<u64>() {
                Ok(c) if c > 0 => c,
                _ => {
                    let kind = LineErrorKind::BadField { column: "count", value: raw.to_string() };
                    self.report.skip(line, kind);
                    return None;
                }
            },
        };
        let edge = DepEdge {
            head: fields[0].to_string(),
            relation: fields[1].to_string(),
            dep: fields[2].to_string(),
            sentence_id: line.to_string(),
        };
        self.report.edges += 1;
        self.report.multiplicity += count;
        Some((edge, count))
    }
}

impl<R: BufRead> Iterator for TriplesReader<R> {
    type Item = io::Result<(DepEdge, u64)>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            match next_line(&mut self.reader, &mut self.buf) {
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
                Ok(false) => self.done = true,
                Ok(true) => {
                    self.line_no += 1;
                    self.report.lines += 1;
                    if let Some(item) = self.parse_line() {
                        return Some(Ok(item));
                    }
                }
            }
        }
        None
    }
}

/// Reads a whole CoNLL-U stream into memory.
pub fn read_conllu<R: BufRead>(
    reader: R,
    labels: &LabelMap,
    inventory: &RelationInventory,
) -> io::Result<(Vec<DepEdge>, IngestReport)> {
    let mut it = ConlluReader::new(reader, labels, inventory);
    let edges = it.by_ref().collect::<io::Result<Vec<_>>>()?;
    Ok((edges, it.into_report()))
}

/// Reads a whole triple stream into memory.
pub fn read_triples<R: BufRead>(reader: R) -> io::Result<(Vec<(DepEdge, u64)>, IngestReport)> {
    let mut it = TriplesReader::new(reader);
    let edges = it.by_ref().collect::<io::Result<Vec<_>>>()?;
    Ok((edges, it.into_report()))
}

/// Aggregated multiplicities keyed by `(head, relation, dep)`.
pub type EdgeCounts = BTreeMap<(String, String, String), u64>;

pub fn aggregate_edges<I>(edges: I) -> EdgeCounts
where
    I: IntoIterator<Item = (DepEdge, u64)>,
{
    let mut counts = EdgeCounts::new();
    for (edge, n) in edges {
        if n > 0 {
            *counts.entry(edge.key()).or_default() += n;
        }
    }
    counts
}
