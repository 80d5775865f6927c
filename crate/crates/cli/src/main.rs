//! `tfk`: build distributional stores, inspect role prototypes, score
//! candidate fillers and evaluate against plausibility ratings.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thematic_fit::evaluate::Displacement;
use thematic_fit::{ContextFilter, FillerMerge, Metric, WeightScheme};

use crate::config::{FileConfig, FlagConfig, DATA_DIR_ENV};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "tfk", version, about = "Thematic fit with syntax-based distributional models")]
struct Cli {
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

/// Settings shared by every subcommand. Each may also come from `--config`.
#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML file with default settings; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory holding matrix.tfk and tensor.tfk.
    #[arg(long, global = true, env = DATA_DIR_ENV, value_name = "DIR")]
    data_dir: Option<PathBuf>,
    /// Matrix store path (overrides the data directory).
    #[arg(long, global = true, value_name = "FILE")]
    matrix: Option<PathBuf>,
    /// Tensor store path (overrides the data directory).
    #[arg(long, global = true, value_name = "FILE")]
    tensor: Option<PathBuf>,
    /// DSM weighting.
    #[arg(long, global = true)]
    weight: Option<WeightScheme>,
    /// Number of typical fillers per prototype.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Number of top-ranked contexts compared by Weighted Overlap.
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Context filter: all, so or prep.
    #[arg(long, global = true)]
    filter: Option<ContextFilter>,
    /// Filler merge mode for multi-relation roles: max, sum or qualified.
    #[arg(long, global = true)]
    merge: Option<FillerMerge>,
    /// Similarity metric: wo or cosine.
    #[arg(long, global = true)]
    metric: Option<Metric>,
    /// Drop targets (or verbs) seen fewer times than this.
    #[arg(long, global = true, value_name = "COUNT")]
    min_target_freq: Option<u64>,
    /// Drop contexts (or fillers) seen fewer times than this.
    #[arg(long, global = true, value_name = "COUNT")]
    min_context_freq: Option<u64>,
    /// Restrict gold items to these roles (comma separated).
    #[arg(long, global = true, value_delimiter = ',', value_name = "ROLES")]
    role_filter: Option<Vec<String>>,
    /// Worker threads; 0 uses every core.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    /// `.conllu` files are CoNLL-U, everything else is a triple TSV.
    Auto,
    Conllu,
    Triples,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    /// Input files (CoNLL-U or `head<TAB>relation<TAB>dep[<TAB>count]`).
    #[arg(required = true, value_name = "INPUT")]
    pub inputs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = InputFormat::Auto)]
    pub format: InputFormat,
    /// Parser label mapping, `parser_label<TAB>relation` per line.
    #[arg(long, value_name = "FILE")]
    pub mapping: Option<PathBuf>,
    /// Also emit direct prepositional contexts (`with:knife-n` on the verb).
    #[arg(long)]
    pub direct_preps: bool,
    /// Keep raw counts instead of storing association weights.
    #[arg(long)]
    pub raw: bool,
    /// Output store path; a `.manifest.json` is written next to it.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BuildTensorArgs {
    #[command(flatten)]
    pub build: BuildArgs,
    /// Keep edges whose head is not a verb (`-v` suffix).
    #[arg(long)]
    pub all_heads: bool,
}

#[derive(Debug, Args)]
pub struct RoleArgs {
    pub verb: String,
    /// agent, patient, instrument, location, or `name=rel1,rel2`.
    pub role: String,
}

#[derive(Debug, Args)]
pub struct PrototypeArgs {
    #[command(flatten)]
    pub role: RoleArgs,
    /// Print at most this many contexts.
    #[arg(long)]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// `VERB ROLE CANDIDATE...`, or nothing when `--batch` is given.
    #[arg(value_name = "ARGS")]
    pub args: Vec<String>,
    /// File of `verb<TAB>role<TAB>candidate` lines.
    #[arg(long, value_name = "FILE", conflicts_with = "args")]
    pub batch: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Gold files with `verb<TAB>role<TAB>filler<TAB>rating` lines.
    #[arg(required = true, value_name = "GOLD")]
    pub gold: Vec<PathBuf>,
    /// Directory for per-item tables, summaries and the manifest.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Report the M best and worst predicted items.
    #[arg(long, value_name = "M")]
    pub best_worst: Option<usize>,
    /// How best and worst items are chosen.
    #[arg(long, default_value_t = Displacement::RankDifference, value_name = "CRITERION")]
    pub criterion: Displacement,
    /// Also score with the other metric and report the agreement.
    #[arg(long)]
    pub compare_metrics: bool,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(required = true, value_name = "GOLD")]
    pub gold: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_values_t = [10usize, 30, 50])]
    pub ks: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [500usize, 1000, 1500, 2000])]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = ContextFilter::ALL.to_vec())]
    pub filters: Vec<ContextFilter>,
    #[arg(long, value_delimiter = ',', default_values_t = Metric::ALL.to_vec())]
    pub metrics: Vec<Metric>,
    /// Output TSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build the word-context matrix.
    BuildMatrix(BuildArgs),
    /// Build the verb-relation-filler tensor.
    BuildTensor(BuildTensorArgs),
    /// List the top-k PLMI fillers of a verb role.
    TopFillers(RoleArgs),
    /// Print the ranked contexts of a role prototype.
    Prototype(PrototypeArgs),
    /// Score candidate fillers.
    Fit(FitArgs),
    /// Evaluate against gold ratings.
    Eval(EvalArgs),
    /// Sweep k, n, filter and metric over gold datasets.
    Grid(GridArgs),
}

impl CommonArgs {
    fn flags(&self) -> FlagConfig {
        FlagConfig {
            weight: self.weight,
            k: self.k,
            n: self.n,
            filter: self.filter,
            merge: self.merge,
            metric: self.metric,
            min_target_freq: self.min_target_freq,
            min_context_freq: self.min_context_freq,
            role_filter: self.role_filter.clone(),
            jobs: self.jobs,
            data_dir: self.data_dir.clone(),
            matrix: self.matrix.clone(),
            tensor: self.tensor.clone(),
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let file = match &cli.common.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let cfg = config::resolve(cli.common.flags(), file, None)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} worker threads: {e}", cfg.jobs)))?;
    pool.install(|| match cli.command {
        Command::BuildMatrix(args) => commands::build_matrix(&cfg, &args),
        Command::BuildTensor(args) => commands::build_tensor(&cfg, &args),
        Command::TopFillers(args) => commands::top_fillers(&cfg, &args),
        Command::Prototype(args) => commands::prototype(&cfg, &args),
        Command::Fit(args) => commands::fit(&cfg, &args),
        Command::Eval(args) => commands::eval(&cfg, &args),
        Command::Grid(args) => commands::grid(&cfg, &args),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tfk: {e}");
            e.exit_code()
        }
    }
}
