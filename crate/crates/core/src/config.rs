//! Run settings shared by prototype construction, scoring and evaluation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::prototype::ContextFilter;

pub const DEFAULT_K: usize = 50;
pub const DEFAULT_N: usize = 2000;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("invalid {what} `{value}` (expected one of: {expected})")]
pub struct ParseSettingError {
    pub what: &'static str,
    pub value: String,
    pub expected: &'static str,
}

macro_rules! string_enum {
    ($ty:ident, $what:literal, { $($variant:ident => $name:literal),+ $(,)? }) => {
        impl $ty {
            pub const ALL: &'static [$ty] = &[$($ty::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($ty::$variant => $name),+
                }
            }
        }

        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $ty {
            type Err = ParseSettingError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.to_ascii_lowercase().as_str() {
                    $($name => Ok($ty::$variant),)+
                    _ => Err(ParseSettingError {
                        what: $what,
                        value: s.to_string(),
                        expected: concat!($($name, " "),+),
                    }),
                }
            }
        }
    };
}

/// DSM weighting used for prototypes and candidate vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    Ppmi,
    Plmi,
}

string_enum!(WeightScheme, "weight", { Ppmi => "ppmi", Plmi => "plmi" });

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    /// Weighted Overlap over the top-n ranked contexts.
    Wo,
    /// Vector cosine over full (filtered) vectors.
    Cosine,
}

string_enum!(Metric, "metric", { Wo => "wo", Cosine => "cosine" });

/// How fillers found under several relations of one role are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FillerMerge {
    /// A filler's score is its best PLMI over the role's relations.
    Max,
    /// A filler's score is the sum of its PLMI over the role's relations.
    Sum,
    /// Each (relation, filler) pair competes on its own, named `rel:filler`.
    Qualified,
}

string_enum!(FillerMerge, "merge mode", { Max => "max", Sum => "sum", Qualified => "qualified" });

string_enum!(ContextFilter, "filter", { All => "all", So => "so", Prep => "prep" });

/// The knobs that determine a single score for a (verb, role, filler) item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Settings {
    pub k: usize,
    pub n: usize,
    pub filter: ContextFilter,
    pub merge: FillerMerge,
    pub weight: WeightScheme,
    pub metric: Metric,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            n: DEFAULT_N,
            filter: ContextFilter::All,
            merge: FillerMerge::Max,
            weight: WeightScheme::Ppmi,
            metric: Metric::Wo,
        }
    }
}

impl fmt::Display for Settings {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "k={} n={} filter={} merge={} weight={} metric={}",
            self.k, self.n, self.filter, self.merge, self.weight, self.metric
        )
    }
}
