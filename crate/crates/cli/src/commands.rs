use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde_json::json;
use thematic_fit::evaluate::{self, BestWorst, EvalError, EvalReport, GoldDataset, ItemGroup};
use thematic_fit::fit::{self, FitRequest, FitScore};
use thematic_fit::ingest::{ConlluReader, DepEdge, IngestReport, LabelMap, RelationInventory, TriplesReader};
use thematic_fit::pipeline::{self, GridSpec, Model, PipelineError};
use thematic_fit::prototype::{self, Prototype, RoleSpec};
use thematic_fit::store::LoadError;
use thematic_fit::store::{CoocMatrix, MatrixBuilder, RoleTensor, TensorBuilder};
use thematic_fit::{Metric, Settings};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::manifest::{sidecar_path, InputSummary, Manifest};
use crate::{BuildArgs, BuildTensorArgs, EvalArgs, FitArgs, GridArgs, InputFormat, PrototypeArgs, RoleArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Conllu,
    Triples,
}

impl Format {
    fn resolve(requested: InputFormat, path: &Path) -> Self {
        match requested {
            InputFormat::Conllu => Format::Conllu,
            InputFormat::Triples => Format::Triples,
            InputFormat::Auto => {
                if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("conllu")) {
                    Format::Conllu
                } else {
                    Format::Triples
                }
            }
        }
    }

    fn name(self) -> &'static str {
        match self {
            Format::Conllu => "conllu",
            Format::Triples => "triples",
        }
    }
}

struct Ingested<B> {
    path: PathBuf,
    format: Format,
    builder: B,
    report: IngestReport,
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path).map(|f| BufReader::with_capacity(1 << 16, f)).map_err(|e| CliError::io(path, e))
}

/// Reads every input in parallel, feeding each edge into a per-file builder.
fn ingest<B, F>(args: &BuildArgs, sink: F) -> Result<Vec<Ingested<B>>, CliError>
where
    B: Default + Send,
    F: Fn(&mut B, &DepEdge, u64) + Sync,
{
    let labels = match &args.mapping {
        Some(path) => LabelMap::parse(open(path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        None => LabelMap::default(),
    };
    let inventory = inventory(args);
    args.inputs
        .par_iter()
        .map(|path| {
            let format = Format::resolve(args.format, path);
            let reader = open(path)?;
            let mut builder = B::default();
            let report = match format {
                Format::Conllu => {
                    let mut it = ConlluReader::new(reader, &labels, &inventory);
                    for edge in it.by_ref() {
                        sink(&mut builder, &edge.map_err(|e| CliError::io(path, e))?, 1);
                    }
                    it.into_report()
                }
                Format::Triples => {
                    let mut it = TriplesReader::new(reader);
                    for item in it.by_ref() {
                        let (edge, n) = item.map_err(|e| CliError::io(path, e))?;
                        sink(&mut builder, &edge, n);
                    }
                    it.into_report()
                }
            };
            if report.skipped_lines > 0 {
                log::warn!("{}: skipped {} malformed lines", path.display(), report.skipped_lines);
            }
            Ok(Ingested { path: path.clone(), format, builder, report })
        })
        .collect()
}

fn inventory(args: &BuildArgs) -> RelationInventory {
    let inv = RelationInventory::standard();
    if args.direct_preps {
        inv.with_direct_prepositions()
    } else {
        inv
    }
}

fn summarize<B>(parts: &[Ingested<B>]) -> (Vec<InputSummary>, IngestReport) {
    let mut total = IngestReport::default();
    let summaries = parts
        .iter()
        .map(|p| {
            total.merge(&p.report);
            InputSummary::new(&p.path, p.format.name(), &p.report)
        })
        .collect();
    (summaries, total)
}

fn prepare_out(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e)),
        _ => Ok(()),
    }
}

fn no_edges(total: &IngestReport) -> CliError {
    CliError::Data(format!(
        "input produced no usable edges ({} lines read, {} skipped)",
        total.lines, total.skipped_lines
    ))
}

pub fn build_matrix(cfg: &RunConfig, args: &BuildArgs) -> Result<(), CliError> {
    let inv = inventory(args);
    let parts = ingest(args, |b: &mut MatrixBuilder, edge, n| {
        for pair in inv.dsm_pairs(edge, n) {
            b.add(&pair.target, &pair.context, pair.count);
        }
    })?;
    let (inputs, total) = summarize(&parts);
    let mut builder = MatrixBuilder::new();
    for part in parts {
        builder.merge(part.builder);
    }
    if builder.is_empty() {
        return Err(no_edges(&total));
    }
    let raw = builder.finish(cfg.min_target_freq, cfg.min_context_freq).map_err(CliError::data)?;
    let raw_nnz = raw.nnz();
    let matrix = if args.raw { raw } else { pipeline::prepare_matrix(raw, cfg.weight).map_err(CliError::data)? };

    let out = args.out.clone().unwrap_or_else(|| cfg.matrix.clone());
    prepare_out(&out)?;
    matrix.save(&out).map_err(|e| CliError::io(&out, e))?;
    let mut manifest = Manifest::new("build-matrix", cfg);
    manifest.inputs = inputs;
    manifest.output = json!({
        "store": out.display().to_string(),
        "weighting": matrix.weighting().to_string(),
        "targets": matrix.targets().len(),
        "contexts": matrix.contexts().len(),
        "raw_cells": raw_nnz,
        "cells": matrix.nnz(),
        "total": matrix.total(),
        "min_target_freq": cfg.min_target_freq,
        "min_context_freq": cfg.min_context_freq,
        "direct_preps": args.direct_preps,
        "skipped_lines": total.skipped_lines,
    });
    manifest.write(&sidecar_path(&out))?;
    eprintln!(
        "wrote {} ({} targets, {} contexts, {} cells)",
        out.display(),
        matrix.targets().len(),
        matrix.contexts().len(),
        matrix.nnz()
    );
    Ok(())
}

pub fn build_tensor(cfg: &RunConfig, args: &BuildTensorArgs) -> Result<(), CliError> {
    let all_heads = args.all_heads;
    let parts = ingest(&args.build, |b: &mut TensorBuilder, edge, n| {
        if all_heads || edge.head.ends_with("-v") {
            b.add(&edge.head, &edge.relation, &edge.dep, n);
        }
    })?;
    let (inputs, total) = summarize(&parts);
    let mut builder = TensorBuilder::new();
    for part in parts {
        builder.merge(part.builder);
    }
    if builder.is_empty() {
        return Err(no_edges(&total));
    }
    let raw = builder.finish(cfg.min_target_freq, cfg.min_context_freq).map_err(CliError::data)?;
    let raw_len = raw.len();
    let tensor = if args.build.raw { raw } else { pipeline::prepare_tensor(raw).map_err(CliError::data)? };

    let out = args.build.out.clone().unwrap_or_else(|| cfg.tensor.clone());
    prepare_out(&out)?;
    tensor.save(&out).map_err(|e| CliError::io(&out, e))?;
    let mut manifest = Manifest::new("build-tensor", cfg);
    manifest.inputs = inputs;
    manifest.output = json!({
        "store": out.display().to_string(),
        "weighting": tensor.weighting().to_string(),
        "verbs": tensor.verbs().len(),
        "relations": tensor.relations().iter().collect::<Vec<_>>(),
        "fillers": tensor.fillers().len(),
        "raw_entries": raw_len,
        "entries": tensor.len(),
        "total": tensor.total(),
        "min_verb_freq": cfg.min_target_freq,
        "min_filler_freq": cfg.min_context_freq,
        "all_heads": all_heads,
        "skipped_lines": total.skipped_lines,
    });
    manifest.write(&sidecar_path(&out))?;
    eprintln!("wrote {} ({} verbs, {} entries)", out.display(), tensor.verbs().len(), tensor.len());
    Ok(())
}

fn load_error(kind: &str, path: &Path, e: LoadError) -> CliError {
    match e {
        LoadError::Io(io) if io.kind() == io::ErrorKind::NotFound => CliError::Io {
            path: path.display().to_string(),
            source: io::Error::new(
                io::ErrorKind::NotFound,
                format!("{kind} store not found (expected at this path; set --{kind}, --data-dir or TFK_DATA_DIR)"),
            ),
        },
        LoadError::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other}", path.display())),
    }
}

fn load_matrix(path: &Path) -> Result<CoocMatrix, CliError> {
    CoocMatrix::load(path).map_err(|e| load_error("matrix", path, e))
}

fn load_tensor(path: &Path) -> Result<RoleTensor, CliError> {
    RoleTensor::load(path).map_err(|e| load_error("tensor", path, e))
}

fn load_model(cfg: &RunConfig) -> Result<Model, CliError> {
    let tensor = load_tensor(&cfg.tensor)?;
    let matrix = load_matrix(&cfg.matrix)?;
    Model::new(matrix, tensor, cfg.weight).map_err(CliError::data)
}

fn parse_role(spec: &str) -> Result<RoleSpec, CliError> {
    RoleSpec::parse(spec).map_err(|e| CliError::Config(e.to_string()))
}

fn stdout() -> BufWriter<io::StdoutLock<'static>> {
    BufWriter::new(io::stdout().lock())
}

fn stdout_err(e: io::Error) -> CliError {
    CliError::io(Path::new("<stdout>"), e)
}

pub fn top_fillers(cfg: &RunConfig, args: &RoleArgs) -> Result<(), CliError> {
    let role = parse_role(&args.role)?;
    let tensor = pipeline::prepare_tensor(load_tensor(&cfg.tensor)?).map_err(CliError::data)?;
    let sel = prototype::top_fillers(&tensor, &args.verb, &role, cfg.k, cfg.merge).map_err(CliError::data)?;
    if !sel.verb_found {
        log::warn!("verb {} is not in the tensor", args.verb);
    }
    let mut w = stdout();
    let write = |w: &mut BufWriter<_>| -> io::Result<()> {
        writeln!(
            w,
            "# verb={}\trole={}\tk={}\tmerge={}\tverb_found={}",
            args.verb, role.name, cfg.k, cfg.merge, sel.verb_found
        )?;
        for (i, f) in sel.fillers.iter().enumerate() {
            writeln!(w, "{}\t{}\t{}", i + 1, f.filler, f.score)?;
        }
        w.flush()
    };
    write(&mut w).map_err(stdout_err)
}

pub fn prototype(cfg: &RunConfig, args: &PrototypeArgs) -> Result<(), CliError> {
    let role = parse_role(&args.role.role)?;
    let model = load_model(cfg)?;
    let proto = model
        .prototype(&args.role.verb, &role, cfg.k, cfg.merge, cfg.filter)
        .map_err(|e| CliError::Data(format!("{}/{}: {e}", args.role.verb, role.name)))?;
    if !proto.fillers_oov.is_empty() {
        log::warn!("{} fillers missing from the matrix: {}", proto.fillers_oov.len(), proto.fillers_oov.join(","));
    }
    prototype::write_prototype_tsv(stdout(), &proto, &model.matrix, args.limit).map_err(stdout_err)
}

/// Scores requests in parallel, building each `(verb, role)` prototype once.
fn score_requests(model: &Model, requests: &[FitRequest], settings: &Settings) -> Vec<FitScore> {
    let n_used = (settings.metric == Metric::Wo).then_some(settings.n);
    let keys: BTreeSet<(String, String)> =
        requests.iter().map(|r| (r.verb.clone(), r.role.to_ascii_lowercase())).collect();
    let prototypes: FxHashMap<(String, String), Option<Prototype>> = keys
        .into_par_iter()
        .map(|key| {
            let proto = RoleSpec::parse(&key.1)
                .ok()
                .and_then(|role| model.prototype(&key.0, &role, settings.k, settings.merge, settings.filter).ok());
            (key, proto)
        })
        .collect();
    requests
        .par_iter()
        .map(|r| match &prototypes[&(r.verb.clone(), r.role.to_ascii_lowercase())] {
            Some(p) => fit::thematic_fit(&model.matrix, p, &r.candidate, settings.n, settings.metric),
            None => FitScore::uncovered(settings.metric, n_used),
        })
        .collect()
}

pub fn fit(cfg: &RunConfig, args: &FitArgs) -> Result<(), CliError> {
    let requests = match &args.batch {
        Some(path) => {
            let (requests, report) = fit::parse_fit_requests(open(path)?).map_err(|e| CliError::io(path, e))?;
            if report.skipped_lines > 0 {
                log::warn!("{}: skipped {} malformed lines", path.display(), report.skipped_lines);
            }
            requests
        }
        None => {
            let [verb, role, candidates @ ..] = args.args.as_slice() else {
                return Err(CliError::Config("fit needs VERB ROLE CANDIDATE... or --batch FILE".into()));
            };
            if candidates.is_empty() {
                return Err(CliError::Config("fit needs at least one candidate".into()));
            }
            parse_role(role)?;
            candidates
                .iter()
                .map(|c| FitRequest { verb: verb.clone(), role: role.clone(), candidate: c.clone() })
                .collect()
        }
    };
    let model = load_model(cfg)?;
    let scores = score_requests(&model, &requests, &cfg.settings());
    let results: Vec<(FitRequest, FitScore)> = requests.into_iter().zip(scores).collect();
    let mut w = stdout();
    writeln!(w, "verb\trole\tcandidate\tscore\tcovered").map_err(stdout_err)?;
    fit::write_fit_results(w, &results).map_err(stdout_err)
}

fn load_gold(path: &Path, cfg: &RunConfig) -> Result<GoldDataset, CliError> {
    let gold = GoldDataset::load(path).map_err(|e| match e {
        EvalError::Io(io) => CliError::io(path, io),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })?;
    if gold.report.skipped_lines > 0 {
        log::warn!("{}: skipped {} malformed lines", path.display(), gold.report.skipped_lines);
    }
    let gold = if cfg.role_filter.is_empty() { gold } else { gold.with_roles(&cfg.role_filter) };
    if gold.is_empty() {
        return Err(CliError::Data(format!("{}: no gold items left after filtering", path.display())));
    }
    Ok(gold)
}

fn load_golds(paths: &[PathBuf], cfg: &RunConfig) -> Result<Vec<GoldDataset>, CliError> {
    let golds = paths.iter().map(|p| load_gold(p, cfg)).collect::<Result<Vec<_>, _>>()?;
    let mut seen = BTreeSet::new();
    for g in &golds {
        if !seen.insert(g.name.as_str()) {
            return Err(CliError::Config(format!("two gold files share the dataset name `{}`", g.name)));
        }
    }
    Ok(golds)
}

fn gold_inputs(paths: &[PathBuf], golds: &[GoldDataset]) -> Vec<InputSummary> {
    paths.iter().zip(golds).map(|(p, g)| InputSummary::new(p, "gold", &g.report)).collect()
}

fn eval_error(gold: &GoldDataset, e: PipelineError) -> CliError {
    CliError::Data(format!("{}: {e}", gold.name))
}

fn write_group(out: &mut String, title: &str, group: &ItemGroup) {
    let _ = writeln!(out, "{title}: {} items, avg_gold {:.4}", group.items.len(), group.avg_gold);
    for (role, n) in &group.role_counts {
        let _ = writeln!(out, "  role {role}: {n}");
    }
    for r in &group.items {
        let _ = writeln!(
            out,
            "  {}\t{}\t{}\tgold={}\tscore={}\tdisplacement={}",
            r.verb,
            r.role,
            r.filler,
            r.gold,
            r.score,
            r.displacement()
        );
    }
}

fn best_worst_text(bw: &BestWorst, criterion: evaluate::Displacement) -> String {
    let mut s = format!("best_worst_criterion: {criterion}\n");
    write_group(&mut s, "best", &bw.best);
    write_group(&mut s, "worst", &bw.worst);
    s
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), CliError> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|()| w.flush()).map_err(|e| CliError::io(path, e))
}

pub fn eval(cfg: &RunConfig, args: &EvalArgs) -> Result<(), CliError> {
    let golds = load_golds(&args.gold, cfg)?;
    let model = load_model(cfg)?;
    let settings = cfg.settings();
    let reports: Vec<(EvalReport, String)> = golds
        .par_iter()
        .map(|gold| {
            let report = pipeline::evaluate(&model, gold, settings).map_err(|e| eval_error(gold, e))?;
            let mut text = report.summary();
            if args.compare_metrics {
                let other_metric = if settings.metric == Metric::Wo { Metric::Cosine } else { Metric::Wo };
                let other = pipeline::evaluate(&model, gold, Settings { metric: other_metric, ..settings })
                    .map_err(|e| eval_error(gold, e))?;
                let agreement = evaluate::metric_agreement(&report, &other)
                    .map_err(|e| CliError::Data(format!("{}: {e}", gold.name)))?;
                let _ = writeln!(text, "spearman_rho_{other_metric}: {:.4}", other.spearman_rho);
                let _ = writeln!(text, "metric_agreement_{}_{other_metric}: {agreement:.4}", settings.metric);
            }
            if let Some(m) = args.best_worst {
                text.push_str(&best_worst_text(&evaluate::best_worst(&report, m, args.criterion), args.criterion));
            }
            Ok((report, text))
        })
        .collect::<Result<_, CliError>>()?;

    let mut w = stdout();
    for (i, (_, text)) in reports.iter().enumerate() {
        if i > 0 {
            writeln!(w).map_err(stdout_err)?;
        }
        w.write_all(text.as_bytes()).map_err(stdout_err)?;
    }
    w.flush().map_err(stdout_err)?;

    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let mut datasets = Vec::new();
        for (report, text) in &reports {
            let items = dir.join(format!("{}.items.tsv", report.dataset));
            write_file(&items, |w| report.write_items_tsv(w))?;
            let summary = dir.join(format!("{}.summary.txt", report.dataset));
            write_file(&summary, |w| w.write_all(text.as_bytes()))?;
            datasets.push(json!({
                "dataset": report.dataset,
                "spearman_rho": report.spearman_rho,
                "degenerate": report.degenerate,
                "n_covered": report.n_covered,
                "n_total": report.n_total,
                "coverage_pct": (report.coverage_pct * 10.0).round() / 10.0,
                "items": items.display().to_string(),
                "summary": summary.display().to_string(),
            }));
        }
        let mut manifest = Manifest::new("eval", cfg);
        manifest.inputs = gold_inputs(&args.gold, &golds);
        manifest.output = json!({ "datasets": datasets });
        manifest.write(&dir.join("manifest.json"))?;
    }
    Ok(())
}

pub fn grid(cfg: &RunConfig, args: &GridArgs) -> Result<(), CliError> {
    if args.ks.is_empty() || args.ns.is_empty() || args.filters.is_empty() || args.metrics.is_empty() {
        return Err(CliError::Config("every grid axis needs at least one value".into()));
    }
    if args.ks.contains(&0) || args.ns.contains(&0) {
        return Err(CliError::Config("grid values for k and n must be at least 1".into()));
    }
    let spec = GridSpec {
        ks: dedup(&args.ks),
        ns: dedup(&args.ns),
        filters: dedup(&args.filters),
        metrics: dedup(&args.metrics),
        merge: cfg.merge,
        weight: cfg.weight,
    };
    let golds = load_golds(&args.gold, cfg)?;
    let model = load_model(cfg)?;
    let rows = pipeline::run_grid(&model, &golds, &spec);
    match &args.out {
        Some(path) => {
            prepare_out(path)?;
            write_file(path, |w| pipeline::write_grid_tsv(w, &rows))?;
            let mut manifest = Manifest::new("grid", cfg);
            manifest.inputs = gold_inputs(&args.gold, &golds);
            manifest.output = json!({
                "grid": spec,
                "rows": rows.len(),
                "na_rows": rows.iter().filter(|r| r.rho.is_none()).count(),
                "table": path.display().to_string(),
            });
            manifest.write(&sidecar_path(path))?;
        }
        None => pipeline::write_grid_tsv(stdout(), &rows).map_err(stdout_err)?,
    }
    Ok(())
}

fn dedup<T: Copy + PartialEq>(xs: &[T]) -> Vec<T> {
    let mut out = Vec::with_capacity(xs.len());
    for &x in xs {
        if !out.contains(&x) {
            out.push(x);
        }
    }
    out
}
