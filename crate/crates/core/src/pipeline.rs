//! End-to-end scoring over loaded stores: dataset evaluation and grids.

use std::io::{self, Write};

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::config::{FillerMerge, Metric, Settings, WeightScheme};
use crate::evaluate::{report_from_scores, EvalError, EvalReport, GoldDataset};
use crate::fit::{self, FitScore, TopView};
use crate::prototype::{self, ContextFilter, Prototype, PrototypeError, RankedVector, RoleSpec};
use crate::store::{CoocMatrix, RoleTensor, Weighting};
use crate::weighting::{self, WeightingError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("matrix is {found}-weighted but {wanted} was requested")]
    WeightMismatch { found: Weighting, wanted: WeightScheme },
    #[error("role tensor is {0}-weighted; expected raw or plmi")]
    BadTensorWeighting(Weighting),
    #[error(transparent)]
    Weighting(#[from] WeightingError),
    #[error(transparent)]
    Prototype(#[from] PrototypeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// A weighted DSM together with a PLMI-weighted role tensor.
#[derive(Debug, Clone)]
pub struct Model {
    pub matrix: CoocMatrix,
    pub tensor: RoleTensor,
}

/// Applies `weight` to a raw matrix or checks that a weighted one matches.
pub fn prepare_matrix(matrix: CoocMatrix, weight: WeightScheme) -> Result<CoocMatrix, PipelineError> {
    match (matrix.weighting(), weight) {
        (Weighting::Raw, WeightScheme::Ppmi) => Ok(weighting::ppmi(matrix)?),
        (Weighting::Raw, WeightScheme::Plmi) => Ok(weighting::plmi_matrix(matrix)?),
        (Weighting::Ppmi, WeightScheme::Ppmi) | (Weighting::Plmi, WeightScheme::Plmi) => Ok(matrix),
        (found, wanted) => Err(PipelineError::WeightMismatch { found, wanted }),
    }
}

pub fn prepare_tensor(tensor: RoleTensor) -> Result<RoleTensor, PipelineError> {
    match tensor.weighting() {
        Weighting::Raw => Ok(weighting::plmi_tensor(tensor)?),
        Weighting::Plmi => Ok(tensor),
        other => Err(PipelineError::BadTensorWeighting(other)),
    }
}

impl Model {
    pub fn new(matrix: CoocMatrix, tensor: RoleTensor, weight: WeightScheme) -> Result<Self, PipelineError> {
        Ok(Self { matrix: prepare_matrix(matrix, weight)?, tensor: prepare_tensor(tensor)? })
    }

    pub fn prototype(
        &self,
        verb: &str,
        role: &RoleSpec,
        k: usize,
        merge: FillerMerge,
        filter: ContextFilter,
    ) -> Result<Prototype, PrototypeError> {
        prototype::role_prototype(&self.tensor, &self.matrix, verb, role, k, merge, filter)
    }

    /// Scores one item; unknown roles and unbuildable prototypes are uncovered.
    pub fn fit(&self, verb: &str, role: &str, candidate: &str, settings: &Settings) -> FitScore {
        let n_used = (settings.metric == Metric::Wo).then_some(settings.n);
        let Ok(role) = RoleSpec::parse(role) else {
            return FitScore::uncovered(settings.metric, n_used);
        };
        match self.prototype(verb, &role, settings.k, settings.merge, settings.filter) {
            Ok(p) => fit::thematic_fit(&self.matrix, &p, candidate, settings.n, settings.metric),
            Err(_) => FitScore::uncovered(settings.metric, n_used),
        }
    }
}

/// Prototypes and candidate vectors for every item of a dataset under one
/// `(k, filter, merge)` setting, reusable across `n` and metrics.
pub struct ItemScorer {
    prototypes: Vec<Option<Prototype>>,
    candidates: Vec<Option<RankedVector>>,
    /// Per item: (prototype index, candidate index).
    items: Vec<(usize, usize)>,
}

impl ItemScorer {
    pub fn new(model: &Model, gold: &GoldDataset, k: usize, filter: ContextFilter, merge: FillerMerge) -> Self {
        let mask = filter.mask(model.matrix.contexts());
        let mut proto_ids: FxHashMap<(String, String), usize> = FxHashMap::default();
        let mut cand_ids: FxHashMap<String, usize> = FxHashMap::default();
        let mut prototypes = Vec::new();
        let mut candidates = Vec::new();
        let mut items = Vec::with_capacity(gold.records.len());
        for r in &gold.records {
            let p = *proto_ids.entry((r.verb.clone(), r.role.to_ascii_lowercase())).or_insert_with(|| {
                let built = RoleSpec::parse(&r.role).ok().and_then(|role| {
                    let sel = prototype::top_fillers(&model.tensor, &r.verb, &role, k, merge).ok()?;
                    let fillers: Vec<&str> = sel.fillers.iter().map(|f| f.filler.as_str()).collect();
                    let mut proto = prototype::build_prototype_masked(&model.matrix, &fillers, filter, &mask).ok()?;
                    proto.verb = Some(r.verb.clone());
                    proto.role = Some(role);
                    proto.k_requested = k;
                    Some(proto)
                });
                prototypes.push(built);
                prototypes.len() - 1
            });
            let c = *cand_ids.entry(r.filler.clone()).or_insert_with(|| {
                let v = model
                    .matrix
                    .targets()
                    .id(&r.filler)
                    .map(|_| prototype::rank_vector_masked(&model.matrix, &r.filler, &mask));
                candidates.push(v);
                candidates.len() - 1
            });
            items.push((p, c));
        }
        Self { prototypes, candidates, items }
    }

    /// One score per item, in dataset order.
    pub fn scores(&self, n: usize, metric: Metric) -> Vec<FitScore> {
        let n_used = (metric == Metric::Wo).then_some(n);
        match metric {
            Metric::Wo => {
                let pviews: Vec<Option<TopView>> =
                    self.prototypes.iter().map(|p| p.as_ref().map(|p| TopView::new(&p.ranked, n))).collect();
                let cviews: Vec<Option<TopView>> =
                    self.candidates.iter().map(|c| c.as_ref().map(|c| TopView::new(c, n))).collect();
                self.items
                    .iter()
                    .map(|&(p, c)| match (&pviews[p], &cviews[c]) {
                        (Some(pv), Some(cv)) => fit::weighted_overlap_views(pv, cv),
                        _ => FitScore::uncovered(metric, n_used),
                    })
                    .collect()
            }
            Metric::Cosine => {
                let pvecs: Vec<_> = self.prototypes.iter().map(|p| p.as_ref().map(|p| p.ranked.to_sparse())).collect();
                let cvecs: Vec<_> = self.candidates.iter().map(|c| c.as_ref().map(RankedVector::to_sparse)).collect();
                self.items
                    .iter()
                    .map(|&(p, c)| match (&pvecs[p], &cvecs[c]) {
                        (Some(pv), Some(cv)) => fit::cosine(pv, cv),
                        _ => FitScore::uncovered(metric, n_used),
                    })
                    .collect()
            }
        }
    }
}

pub fn evaluate(model: &Model, gold: &GoldDataset, settings: Settings) -> Result<EvalReport, PipelineError> {
    let scorer = ItemScorer::new(model, gold, settings.k, settings.filter, settings.merge);
    Ok(report_from_scores(gold, &scorer.scores(settings.n, settings.metric), settings)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    pub ks: Vec<usize>,
    pub ns: Vec<usize>,
    pub filters: Vec<ContextFilter>,
    pub metrics: Vec<Metric>,
    pub merge: FillerMerge,
    pub weight: WeightScheme,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            ks: vec![10, 30, 50],
            ns: vec![500, 1000, 1500, 2000],
            filters: ContextFilter::ALL.to_vec(),
            metrics: Metric::ALL.to_vec(),
            merge: FillerMerge::Max,
            weight: WeightScheme::Ppmi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridRow {
    pub dataset: String,
    pub settings: Settings,
    /// `None` when fewer than two items were covered.
    pub rho: Option<f64>,
    pub n_covered: usize,
    pub n_total: usize,
    pub coverage_pct: f64,
}

/// Evaluates every grid cell on every dataset. Rows are ordered by dataset,
/// metric, filter, k and n, whatever the thread count.
pub fn run_grid(model: &Model, datasets: &[GoldDataset], spec: &GridSpec) -> Vec<GridRow> {
    let groups: Vec<(usize, ContextFilter, usize)> = (0..datasets.len())
        .flat_map(|d| spec.filters.iter().flat_map(move |&f| spec.ks.iter().map(move |&k| (d, f, k))))
        .collect();
    let mut rows: Vec<GridRow> = groups
        .par_iter()
        .flat_map_iter(|&(d, filter, k)| {
            let gold = &datasets[d];
            let scorer = ItemScorer::new(model, gold, k, filter, spec.merge);
            let mut out = Vec::new();
            for &metric in &spec.metrics {
                for &n in &spec.ns {
                    let settings = Settings { k, n, filter, merge: spec.merge, weight: spec.weight, metric };
                    let scores = scorer.scores(n, metric);
                    let n_covered = scores.iter().filter(|s| s.covered).count();
                    let rho = report_from_scores(gold, &scores, settings).ok().map(|r| r.spearman_rho);
                    out.push(GridRow {
                        dataset: gold.name.clone(),
                        settings,
                        rho,
                        n_covered,
                        n_total: gold.len(),
                        coverage_pct: if gold.is_empty() { 0.0 } else { 100.0 * n_covered as f64 / gold.len() as f64 },
                    });
                }
            }
            out
        })
        .collect();
    let pos = |xs: &[ContextFilter], x| xs.iter().position(|&y| y == x);
    let dataset_pos: FxHashMap<&str, usize> =
        datasets.iter().enumerate().map(|(i, d)| (d.name.as_str(), i)).collect();
    rows.sort_by_key(|r| {
        (
            dataset_pos[r.dataset.as_str()],
            spec.metrics.iter().position(|&m| m == r.settings.metric),
            pos(&spec.filters, r.settings.filter),
            spec.ks.iter().position(|&k| k == r.settings.k),
            spec.ns.iter().position(|&n| n == r.settings.n),
        )
    });
    rows
}

pub const GRID_HEADER: &str = "dataset\tmetric\tfilter\tk\tn\tweight\tmerge\trho\tn_covered\tn_total\tcoverage_pct";

/// Long-format grid TSV, one row per (dataset, setting).
pub fn write_grid_tsv<W: Write>(mut w: W, rows: &[GridRow]) -> io::Result<()> {
    writeln!(w, "{GRID_HEADER}")?;
    for r in rows {
        let s = &r.settings;
        let rho = r.rho.map_or_else(|| "NA".to_string(), |x| x.to_string());
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{:.1}",
            r.dataset, s.metric, s.filter, s.k, s.n, s.weight, s.merge, rho, r.n_covered, r.n_total, r.coverage_pct
        )?;
    }
    w.flush()
}
