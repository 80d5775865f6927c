//! Thematic fit scores.
//!
//! Weighted Overlap sums, over the contexts shared by the top `n` of two
//! ranked vectors, the inverse of the average of their two ranks:
//!
//! ```text
//! WO(x, y) = sum over f in top_n(x) ∩ top_n(y) of 2 / (rank_x(f) + rank_y(f))
//! ```
//!
//! Ranks are positions in the full ranked vectors; `n` only decides which
//! contexts are eligible. Identical vectors with `m` contexts score the
//! harmonic number `H_min(n, m)`.

use std::io::{self, BufRead, Write};

use crate::config::Metric;
use crate::ingest::{IngestReport, LineError, LineErrorKind};
use crate::prototype::{rank_vector, Prototype, RankedVector};
use crate::store::{CoocMatrix, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitScore {
    pub value: f64,
    pub metric: Metric,
    /// The top-n cutoff, for Weighted Overlap.
    pub n_used: Option<usize>,
    pub shared_features: usize,
    /// False when the candidate (or the prototype) could not be represented.
    pub covered: bool,
}

impl FitScore {
    pub fn uncovered(metric: Metric, n: Option<usize>) -> Self {
        Self { value: 0.0, metric, n_used: n, shared_features: 0, covered: false }
    }
}

/// The top-n contexts of a ranked vector as `(context, rank)` pairs sorted by
/// context id. Building it once per prototype makes repeated scoring cheap.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TopView {
    entries: Vec<(u32, u32)>,
    n: usize,
}

impl TopView {
    pub fn new(v: &RankedVector, n: usize) -> Self {
        let mut entries: Vec<(u32, u32)> =
            v.top(n).iter().enumerate().map(|(i, it)| (it.context, i as u32 + 1)).collect();
        entries.sort_unstable_by_key(|&(c, _)| c);
        Self { entries, n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Weighted Overlap of two precomputed views. Both must use the same `n`.
pub fn weighted_overlap_views(x: &TopView, y: &TopView) -> FitScore {
    let (mut i, mut j) = (0, 0);
    let (mut value, mut shared) = (0.0, 0);
    while i < x.entries.len() && j < y.entries.len() {
        let (cx, rx) = x.entries[i];
        let (cy, ry) = y.entries[j];
        match cx.cmp(&cy) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                value += 2.0 / f64::from(rx + ry);
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    FitScore { value, metric: Metric::Wo, n_used: Some(x.n.min(y.n)), shared_features: shared, covered: true }
}

pub fn weighted_overlap(x: &RankedVector, y: &RankedVector, n: usize) -> FitScore {
    weighted_overlap_views(&TopView::new(x, n), &TopView::new(y, n))
}

/// `dot(u, v) / (|u| |v|)`, 0 when either vector is zero.
pub fn cosine(u: &SparseVector, v: &SparseVector) -> FitScore {
    let (mut i, mut j) = (0, 0);
    let (mut dot, mut shared) = (0.0, 0);
    while i < u.indices.len() && j < v.indices.len() {
        match u.indices[i].cmp(&v.indices[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot += u.values[i] * v.values[j];
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    let nu: f64 = u.values.iter().map(|x| x * x).sum();
    let nv: f64 = v.values.iter().map(|x| x * x).sum();
    let denom = (nu * nv).sqrt();
    let value = if denom == 0.0 || dot == 0.0 { 0.0 } else { (dot / denom).clamp(-1.0, 1.0) };
    FitScore { value, metric: Metric::Cosine, n_used: None, shared_features: shared, covered: true }
}

/// Scores `candidate` against `prototype`, ranking the candidate's row under
/// the prototype's own context filter.
pub fn thematic_fit(matrix: &CoocMatrix, prototype: &Prototype, candidate: &str, n: usize, metric: Metric) -> FitScore {
    let n_used = (metric == Metric::Wo).then_some(n);
    if matrix.targets().id(candidate).is_none() {
        return FitScore::uncovered(metric, n_used);
    }
    let cand = rank_vector(matrix, candidate, prototype.filter);
    match metric {
        Metric::Wo => weighted_overlap(&prototype.ranked, &cand, n),
        Metric::Cosine => cosine(&prototype.ranked.to_sparse(), &cand.to_sparse()),
    }
}

/// One line of a batch scoring request.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FitRequest {
    pub verb: String,
    pub role: String,
    pub candidate: String,
}

/// Parses `verb<TAB>role<TAB>candidate` lines. Blank and `#` lines are skipped
/// silently; malformed lines are skipped and reported.
pub fn parse_fit_requests<R: BufRead>(mut reader: R) -> io::Result<(Vec<FitRequest>, IngestReport)> {
    let mut report = IngestReport::default();
    let mut out = Vec::new();
    let mut buf = Vec::new();
    loop {
        buf.clear();
        if reader.read_until(b'\n', &mut buf)? == 0 {
            break;
        }
        report.lines += 1;
        let line = report.lines;
        let Ok(text) = std::str::from_utf8(&buf) else {
            report.skipped_lines += 1;
            if report.errors.len() < 100 {
                report.errors.push(LineError { line, kind: LineErrorKind::InvalidUtf8 });
            }
            continue;
        };
        let text = text.trim_end_matches(['\n', '\r']);
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 3 || fields.iter().any(|f| f.is_empty()) {
            report.skipped_lines += 1;
            if report.errors.len() < 100 {
                let kind = LineErrorKind::ColumnCount { expected: "3", found: fields.len() };
                report.errors.push(LineError { line, kind });
            }
            continue;
        }
        out.push(FitRequest { verb: fields[0].into(), role: fields[1].into(), candidate: fields[2].into() });
        report.edges += 1;
    }
    Ok((out, report))
}

/// Writes `verb<TAB>role<TAB>candidate<TAB>score<TAB>covered` lines.
pub fn write_fit_results<W: Write>(mut w: W, results: &[(FitRequest, FitScore)]) -> io::Result<()> {
    for (req, score) in results {
        writeln!(w, "{}\t{}\t{}\t{}\t{}", req.verb, req.role, req.candidate, score.value, score.covered)?;
    }
    w.flush()
}
