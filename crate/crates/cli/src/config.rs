use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thematic_fit::config::{DEFAULT_K, DEFAULT_N};
use thematic_fit::{ContextFilter, FillerMerge, Metric, Settings, WeightScheme};

use crate::error::CliError;

pub const DATA_DIR_ENV: &str = "TFK_DATA_DIR";
pub const MATRIX_FILE: &str = "matrix.tfk";
pub const TENSOR_FILE: &str = "tensor.tfk";

/// Values accepted from a TOML config file; every key is optional.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub weight: Option<WeightScheme>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub filter: Option<ContextFilter>,
    pub merge: Option<FillerMerge>,
    pub metric: Option<Metric>,
    pub min_target_freq: Option<u64>,
    pub min_context_freq: Option<u64>,
    pub role_filter: Option<Vec<String>>,
    pub jobs: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub tensor: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

/// The effective configuration after flags, config file and defaults.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub weight: WeightScheme,
    pub k: usize,
    pub n: usize,
    pub filter: ContextFilter,
    pub merge: FillerMerge,
    pub metric: Metric,
    pub min_target_freq: u64,
    pub min_context_freq: u64,
    pub role_filter: Vec<String>,
    pub jobs: usize,
    pub matrix: PathBuf,
    pub tensor: PathBuf,
}

impl RunConfig {
    pub fn settings(&self) -> Settings {
        Settings { k: self.k, n: self.n, filter: self.filter, merge: self.merge, weight: self.weight, metric: self.metric }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == 0 {
            return Err(CliError::Config("--k must be at least 1".into()));
        }
        if self.n == 0 {
            return Err(CliError::Config("--n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Overrides collected from the command line.
#[derive(Debug, Default, Clone)]
pub struct FlagConfig {
    pub weight: Option<WeightScheme>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub filter: Option<ContextFilter>,
    pub merge: Option<FillerMerge>,
    pub metric: Option<Metric>,
    pub min_target_freq: Option<u64>,
    pub min_context_freq: Option<u64>,
    pub role_filter: Option<Vec<String>>,
    pub jobs: Option<usize>,
    pub data_dir: Option<PathBuf>,
    pub matrix: Option<PathBuf>,
    pub tensor: Option<PathBuf>,
}

/// Flags win over the config file, which wins over the defaults. The data
/// directory falls back to `TFK_DATA_DIR`, then to the working directory.
pub fn resolve(flags: FlagConfig, file: FileConfig, env_data_dir: Option<PathBuf>) -> Result<RunConfig, CliError> {
    let data_dir = flags.data_dir.or(file.data_dir).or(env_data_dir).unwrap_or_else(|| PathBuf::from("."));
    let cfg = RunConfig {
        weight: flags.weight.or(file.weight).unwrap_or(WeightScheme::Ppmi),
        k: flags.k.or(file.k).unwrap_or(DEFAULT_K),
        n: flags.n.or(file.n).unwrap_or(DEFAULT_N),
        filter: flags.filter.or(file.filter).unwrap_or(ContextFilter::All),
        merge: flags.merge.or(file.merge).unwrap_or(FillerMerge::Max),
        metric: flags.metric.or(file.metric).unwrap_or(Metric::Wo),
        min_target_freq: flags.min_target_freq.or(file.min_target_freq).unwrap_or(1),
        min_context_freq: flags.min_context_freq.or(file.min_context_freq).unwrap_or(1),
        role_filter: flags.role_filter.or(file.role_filter).unwrap_or_default(),
        jobs: flags.jobs.or(file.jobs).unwrap_or(0),
        matrix: flags.matrix.or(file.matrix).unwrap_or_else(|| data_dir.join(MATRIX_FILE)),
        tensor: flags.tensor.or(file.tensor).unwrap_or_else(|| data_dir.join(TENSOR_FILE)),
    };
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_flags_file_defaults() {
        let file: FileConfig = toml::from_str("k = 30\nn = 1000\nfilter = \"so\"\n").unwrap();
        let flags = FlagConfig { k: Some(10), ..FlagConfig::default() };
        let cfg = resolve(flags, file, None).unwrap();
        assert_eq!(cfg.k, 10);
        assert_eq!(cfg.n, 1000);
        assert_eq!(cfg.filter, ContextFilter::So);
        assert_eq!(cfg.metric, Metric::Wo);
        assert_eq!(cfg.matrix, PathBuf::from("./matrix.tfk"));
    }

    #[test]
    fn env_data_dir_sets_store_paths() {
        let cfg = resolve(FlagConfig::default(), FileConfig::default(), Some("/data".into())).unwrap();
        assert_eq!(cfg.tensor, PathBuf::from("/data/tensor.tfk"));
    }

    #[test]
    fn unknown_keys_and_zero_k_are_rejected() {
        assert!(toml::from_str::<FileConfig>("kk = 3").is_err());
        let flags = FlagConfig { k: Some(0), ..FlagConfig::default() };
        assert!(matches!(resolve(flags, FileConfig::default(), None), Err(CliError::Config(_))));
    }
}
