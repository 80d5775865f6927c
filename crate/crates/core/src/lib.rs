//! Syntax-based distributional semantic models and thematic fit estimation.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`ingest`] turns dependency-parsed text (CoNLL-U or a plain triple TSV)
//!    into `(head, relation, dependent)` edges and expands them into
//!    `relation:lexeme` contexts, including inverse relations.
//! 2. [`store`] accumulates the word-context matrix ([`CoocMatrix`]) and the
//!    verb-relation-filler tensor ([`RoleTensor`]), applies frequency cutoffs
//!    and persists both in a checksummed binary container.
//! 3. [`weighting`] converts raw counts into PPMI / PLMI association scores.
//! 4. [`prototype`] picks the typical fillers of a verb-specific role from the
//!    PLMI tensor, sums their PPMI vectors, filters the contexts syntactically
//!    and ranks them by salience.
//! 5. [`fit`] scores candidate fillers against a prototype with Weighted
//!    Overlap (or the cosine baseline), and [`evaluate`] correlates the scores
//!    with human plausibility ratings.
//!
//! [`pipeline`] ties the stages together for dataset evaluation and
//! parameter sweeps.

pub mod config;
pub mod evaluate;
pub mod fit;
pub mod ingest;
pub mod pipeline;
pub mod prototype;
pub mod store;
pub mod vocab;
pub mod weighting;

pub use config::{FillerMerge, Metric, Settings, WeightScheme};
pub use evaluate::{EvalRecord, EvalReport, GoldDataset, GoldRecord};
pub use fit::FitScore;
pub use ingest::{DepEdge, LabelMap, RelationInventory};
pub use prototype::{ContextFilter, Prototype, RankedVector, RoleSpec};
pub use store::{CoocMatrix, RoleTensor, SparseVector, Weighting};
