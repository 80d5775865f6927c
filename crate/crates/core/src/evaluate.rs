//! Correlation with human plausibility ratings.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use serde::Serialize;
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::config::Settings;
use crate::fit::FitScore;
use crate::ingest::{IngestReport, LineError, LineErrorKind};

/// Above this share of unparsable lines a gold file is rejected outright.
pub const MAX_BAD_LINE_FRACTION: f64 = 0.10;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{bad} of {total} gold lines are malformed (more than 10%), first: {first}")]
    TooManyBadLines { bad: u64, total: u64, first: String },
    #[error("duplicate gold triples: {}", .0.join("; "))]
    DuplicateTriples(Vec<String>),
    #[error("correlation needs paired lists, got {0} and {1} values")]
    LengthMismatch(usize, usize),
    #[error("correlation needs at least 2 items, got {0}")]
    TooFewItems(usize),
    #[error("Fisher r-to-z needs |r| < 1 and n > 3 (r={r}, n={n})")]
    FisherDomain { r: f64, n: usize },
    #[error("reports cover different items: {}", .0.join("; "))]
    CoverageMismatch(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldRecord {
    pub verb: String,
    pub role: String,
    pub filler: String,
    pub rating: f64,
}

impl GoldRecord {
    fn key(&self) -> (&str, &str, &str) {
        (&self.verb, &self.role, &self.filler)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldDataset {
    pub name: String,
    pub records: Vec<GoldRecord>,
    pub report: IngestReport,
}

impl GoldDataset {
    /// Parses `verb<TAB>role<TAB>filler<TAB>rating` lines.
    ///
    /// Lines with a bad rating or column count are skipped and counted; if
    /// more than 10% of the non-blank lines are bad the whole file is
    /// rejected. Duplicate `(verb, role, filler)` triples are an error.
    pub fn parse<R: BufRead>(name: impl Into<String>, mut reader: R) -> Result<Self, EvalError> {
        let mut report = IngestReport::default();
        let mut records = Vec::new();
        let mut content_lines = 0u64;
        let mut buf = Vec::new();
        loop {
            buf.clear();
            if reader.read_until(b'\n', &mut buf)? == 0 {
                break;
            }
            report.lines += 1;
            let line = report.lines;
            let mut skip = |kind| {
                report.skipped_lines += 1;
                if report.errors.len() < 100 {
                    report.errors.push(LineError { line, kind });
                }
            };
            let Ok(text) = std::str::from_utf8(&buf) else {
                content_lines += 1;
                skip(LineErrorKind::InvalidUtf8);
                continue;
            };
            let text = text.trim_end_matches(['\n', '\r']);
            if text.trim().is_empty() || text.starts_with('#') {
                continue;
            }
            content_lines += 1;
            let fields: Vec<&str> = text.split('\t').collect();
            if fields.len() != 4 || fields[..3].iter().any(|f| f.trim().is_empty()) {
                skip(LineErrorKind::ColumnCount { expected: "4", found: fields.len() });
                continue;
            }
            match fields[3].trim().parse::<f64>() {
                Ok(rating) if rating.is_finite() => records.push(GoldRecord {
                    verb: fields[0].trim().into(),
                    role: fields[1].trim().into(),
                    filler: fields[2].trim().into(),
                    rating,
                }),
                _ => skip(LineErrorKind::BadField { column: "rating", value: fields[3].to_string() }),
            }
        }
        report.edges = records.len() as u64;
        if content_lines > 0 && report.skipped_lines as f64 > MAX_BAD_LINE_FRACTION * content_lines as f64 {
            return Err(EvalError::TooManyBadLines {
                bad: report.skipped_lines,
                total: content_lines,
                first: report.errors.first().map(|e| e.to_string()).unwrap_or_default(),
            });
        }
        let mut seen = HashSet::new();
        let mut dups = BTreeSet::new();
        for r in &records {
            if !seen.insert(r.key()) {
                dups.insert(format!("{}/{}/{}", r.verb, r.role, r.filler));
            }
        }
        if !dups.is_empty() {
            return Err(EvalError::DuplicateTriples(dups.into_iter().collect()));
        }
        Ok(Self { name: name.into(), records, report })
    }

    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self, EvalError> {
        let path = path.as_ref();
        let name = path.file_stem().map_or_else(|| "gold".to_string(), |s| s.to_string_lossy().into_owned());
        let file = std::fs::File::open(path)?;
        Self::parse(name, io::BufReader::new(file))
    }

    /// Keeps only the records whose role is in `roles` (case-insensitive).
    pub fn with_roles(&self, roles: &[String]) -> Self {
        let records = self
            .records
            .iter()
            .filter(|r| roles.iter().any(|x| x.eq_ignore_ascii_case(&r.role)))
            .cloned()
            .collect();
        Self { name: self.name.clone(), records, report: self.report.clone() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Average (fractional) ranks, 1-based; ties share the mean of their positions.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && xs[order[j]] == xs[order[i]] {
            j += 1;
        }
        // positions i+1 ..= j
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        i = j;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Correlation {
    pub rho: f64,
    /// Set when one of the inputs has zero variance; `rho` is then 0.
    pub degenerate: bool,
}

fn pearson(xs: &[f64], ys: &[f64]) -> Correlation {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Correlation { rho: 0.0, degenerate: true };
    }
    Correlation { rho: (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0), degenerate: false }
}

/// Spearman's rho: Pearson correlation of the average-ranked data.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<Correlation, EvalError> {
    if xs.len() != ys.len() {
        return Err(EvalError::LengthMismatch(xs.len(), ys.len()));
    }
    if xs.len() < 2 {
        return Err(EvalError::TooFewItems(xs.len()));
    }
    Ok(pearson(&average_ranks(xs), &average_ranks(ys)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherTest {
    pub z: f64,
    pub p_two_sided: f64,
}

/// Tests `r1 != r2` for correlations measured on independent samples.
pub fn fisher_rz(r1: f64, n1: usize, r2: f64, n2: usize) -> Result<FisherTest, EvalError> {
    for (r, n) in [(r1, n1), (r2, n2)] {
        if !(r.abs() < 1.0) || n <= 3 {
            return Err(EvalError::FisherDomain { r, n });
        }
    }
    let se = (1.0 / (n1 - 3) as f64 + 1.0 / (n2 - 3) as f64).sqrt();
    let z = (r1.atanh() - r2.atanh()) / se;
    Ok(FisherTest { z, p_two_sided: erfc(z.abs() / std::f64::consts::SQRT_2) })
}

/// One scored gold item.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRecord {
    pub verb: String,
    pub role: String,
    pub filler: String,
    pub gold: f64,
    pub score: f64,
    pub covered: bool,
    /// Average ranks among the covered items; 0 for uncovered ones.
    pub gold_rank: f64,
    pub score_rank: f64,
}

impl EvalRecord {
    pub fn displacement(&self) -> f64 {
        (self.gold_rank - self.score_rank).abs()
    }

    fn key(&self) -> (&str, &str, &str) {
        (&self.verb, &self.role, &self.filler)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub spearman_rho: f64,
    pub degenerate: bool,
    pub n_covered: usize,
    pub n_total: usize,
    pub coverage_pct: f64,
    pub settings: Settings,
    /// Covered items by ascending displacement, then uncovered items.
    pub per_item: Vec<EvalRecord>,
}

/// Scores every gold item and correlates over the covered ones.
pub fn evaluate_dataset<F>(gold: &GoldDataset, mut scorer: F, settings: Settings) -> Result<EvalReport, EvalError>
where
    F: FnMut(&GoldRecord) -> FitScore,
{
    let scores: Vec<FitScore> = gold.records.iter().map(&mut scorer).collect();
    report_from_scores(gold, &scores, settings)
}

/// Builds a report from precomputed scores, parallel to `gold.records`.
pub fn report_from_scores(gold: &GoldDataset, scores: &[FitScore], settings: Settings) -> Result<EvalReport, EvalError> {
    if scores.len() != gold.records.len() {
        return Err(EvalError::LengthMismatch(gold.records.len(), scores.len()));
    }
    let covered: Vec<usize> = (0..scores.len()).filter(|&i| scores[i].covered).collect();
    if covered.len() < 2 {
        return Err(EvalError::TooFewItems(covered.len()));
    }
    let gold_vals: Vec<f64> = covered.iter().map(|&i| gold.records[i].rating).collect();
    let score_vals: Vec<f64> = covered.iter().map(|&i| scores[i].value).collect();
    let gold_ranks = average_ranks(&gold_vals);
    let score_ranks = average_ranks(&score_vals);
    let corr = pearson(&gold_ranks, &score_ranks);

    let mut cov_items: Vec<EvalRecord> = covered
        .iter()
        .enumerate()
        .map(|(j, &i)| record(&gold.records[i], &scores[i], gold_ranks[j], score_ranks[j]))
        .collect();
    cov_items.sort_by(|a, b| a.displacement().total_cmp(&b.displacement()).then_with(|| a.key().cmp(&b.key())));
    let mut uncovered: Vec<EvalRecord> = (0..scores.len())
        .filter(|&i| !scores[i].covered)
        .map(|i| record(&gold.records[i], &scores[i], 0.0, 0.0))
        .collect();
    uncovered.sort_by(|a, b| a.key().cmp(&b.key()));
    cov_items.extend(uncovered);

    let n_total = gold.records.len();
    Ok(EvalReport {
        dataset: gold.name.clone(),
        spearman_rho: corr.rho,
        degenerate: corr.degenerate,
        n_covered: covered.len(),
        n_total,
        coverage_pct: 100.0 * covered.len() as f64 / n_total as f64,
        settings,
        per_item: cov_items,
    })
}

fn record(g: &GoldRecord, s: &FitScore, gold_rank: f64, score_rank: f64) -> EvalRecord {
    EvalRecord {
        verb: g.verb.clone(),
        role: g.role.clone(),
        filler: g.filler.clone(),
        gold: g.rating,
        score: s.value,
        covered: s.covered,
        gold_rank,
        score_rank,
    }
}

impl EvalReport {
    pub fn covered_items(&self) -> impl Iterator<Item = &EvalRecord> {
        self.per_item.iter().filter(|r| r.covered)
    }

    /// Human-readable summary; coverage is printed with one decimal.
    pub fn summary(&self) -> String {
        format!(
            "dataset: {}\nsettings: {}\nspearman_rho: {:.4}{}\ncovered: {}/{}\ncoverage_pct: {:.1}\n",
            self.dataset,
            self.settings,
            self.spearman_rho,
            if self.degenerate { " (degenerate input)" } else { "" },
            self.n_covered,
            self.n_total,
            self.coverage_pct,
        )
    }

    /// Per-item TSV with a header row.
    pub fn write_items_tsv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "verb\trole\tfiller\tgold\tscore\tcovered\tgold_rank\tscore_rank\tdisplacement")?;
        for r in &self.per_item {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.verb,
                r.role,
                r.filler,
                r.gold,
                r.score,
                r.covered,
                r.gold_rank,
                r.score_rank,
                r.displacement()
            )?;
        }
        w.flush()
    }
}

/// Spearman correlation between the scores of two systems on the same items.
pub fn metric_agreement(a: &EvalReport, b: &EvalReport) -> Result<f64, EvalError> {
    let index = |r: &EvalReport| -> BTreeMap<(String, String, String), f64> {
        r.covered_items().map(|x| ((x.verb.clone(), x.role.clone(), x.filler.clone()), x.score)).collect()
    };
    let (ia, ib) = (index(a), index(b));
    let ka: BTreeSet<_> = ia.keys().collect();
    let kb: BTreeSet<_> = ib.keys().collect();
    if ka != kb {
        let diff = ka.symmetric_difference(&kb).map(|(v, r, f)| format!("{v}/{r}/{f}")).collect();
        return Err(EvalError::CoverageMismatch(diff));
    }
    let xs: Vec<f64> = ia.values().copied().collect();
    let ys: Vec<f64> = ib.values().copied().collect();
    Ok(spearman(&xs, &ys)?.rho)
}

/// How items are ordered for the best/worst breakdown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Displacement {
    /// `|rank(gold) - rank(score)|`.
    #[default]
    RankDifference,
    /// Absolute residual of the score ranks regressed on the gold ranks.
    ResidualFromLinearFit,
}

impl FromStr for Displacement {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "displacement" => Ok(Self::RankDifference),
            "residual-from-linear-fit" => Ok(Self::ResidualFromLinearFit),
            _ => Err(format!("unknown displacement criterion `{s}`")),
        }
    }
}

impl fmt::Display for Displacement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::RankDifference => "displacement",
            Self::ResidualFromLinearFit => "residual-from-linear-fit",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItemGroup {
    pub items: Vec<EvalRecord>,
    pub avg_gold: f64,
    pub role_counts: BTreeMap<String, usize>,
}

impl ItemGroup {
    fn new(items: Vec<EvalRecord>) -> Self {
        let avg_gold =
            if items.is_empty() { 0.0 } else { items.iter().map(|r| r.gold).sum::<f64>() / items.len() as f64 };
        let mut role_counts = BTreeMap::new();
        for r in &items {
            *role_counts.entry(r.role.clone()).or_default() += 1;
        }
        Self { items, avg_gold, role_counts }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestWorst {
    pub best: ItemGroup,
    pub worst: ItemGroup,
}

/// The `m` covered items that agree most and least with the gold ranking.
pub fn best_worst(report: &EvalReport, m: usize, criterion: Displacement) -> BestWorst {
    let mut items: Vec<EvalRecord> = report.covered_items().cloned().collect();
    items.sort_by(|a, b| a.key().cmp(&b.key()));
    let dist: Vec<f64> = match criterion {
        Displacement::RankDifference => items.iter().map(EvalRecord::displacement).collect(),
        Displacement::ResidualFromLinearFit => {
            let xs: Vec<f64> = items.iter().map(|r| r.gold_rank).collect();
            let ys: Vec<f64> = items.iter().map(|r| r.score_rank).collect();
            let n = xs.len() as f64;
            let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
            let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
            let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
            let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
            xs.iter().zip(&ys).map(|(x, y)| (y - (my + slope * (x - mx))).abs()).collect()
        }
    };
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| dist[a].total_cmp(&dist[b]));
    let best = order.iter().take(m).map(|&i| items[i].clone()).collect();
    order.sort_by(|&a, &b| dist[b].total_cmp(&dist[a]));
    let worst = order.iter().take(m).map(|&i| items[i].clone()).collect();
    BestWorst { best: ItemGroup::new(best), worst: ItemGroup::new(worst) }
}
