//! `key = value` configuration files and the resolved run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lmg_gmc::criticality_scan::{FssConfig, OrderSpec, UniformGrid};

use crate::error::{CliError, Result};

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "LMG_GMC_CACHE_DIR";
pub const DEFAULT_CACHE_DIR: &str = ".lmg-gmc-cache";

const KNOWN_KEYS: &[&str] = &[
    "n",
    "gamma",
    "h",
    "lambda",
    "k",
    "max_n",
    "drop_below",
    "refine",
    "out",
    "plot",
    "cache_dir",
    "jobs",
];

/// Parsed configuration file. Blank lines and `#` comments are ignored;
/// unknown keys are rejected.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigFile {
    path: PathBuf,
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn parse(text: &str, path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| CliError::Config {
                path: path.clone(),
                line: line_no,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(err(format!("unknown key `{key}`")));
            }
            if value.is_empty() {
                return Err(err(format!("empty value for `{key}`")));
            }
            if entries.insert(key.clone(), (line_no, value.to_string())).is_some() {
                return Err(err(format!("duplicate key `{key}`")));
            }
        }
        Ok(Self { path, entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    /// Typed lookup; parse failures point at the offending line.
    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v.parse().map(Some).map_err(|_| CliError::Config {
                path: self.path.clone(),
                line: *line,
                message: format!("invalid value `{v}` for `{key}`"),
            }),
        }
    }
}

/// Everything a subcommand needs, after merging flags over the config file
/// over defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n_spins: Option<usize>,
    pub gamma: f64,
    pub coupling: f64,
    pub field: Option<f64>,
    pub h_range: Option<UniformGrid>,
    pub orders: Vec<OrderSpec>,
    pub max_n: Option<usize>,
    pub drop_below: usize,
    pub refine: usize,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n_spins: None,
            gamma: 0.5,
            coupling: 1.0,
            field: None,
            h_range: None,
            orders: Vec::new(),
            max_n: None,
            drop_below: FssConfig::DEFAULT_DROP_BELOW,
            refine: FssConfig::DEFAULT_REFINE,
            out: None,
            plot: None,
            cache_dir: Some(PathBuf::from(DEFAULT_CACHE_DIR)),
            jobs: None,
        }
    }
}

impl RunConfig {
    pub fn require_n(&self) -> Result<usize> {
        self.n_spins
            .ok_or_else(|| CliError::Usage("missing --n".into()))
    }

    pub fn require_field(&self) -> Result<f64> {
        self.field
            .ok_or_else(|| CliError::Usage("missing --h (a single field value)".into()))
    }

    pub fn require_range(&self) -> Result<UniformGrid> {
        self.h_range
            .ok_or_else(|| CliError::Usage("missing --h (start:stop:step)".into()))
    }

    pub fn require_orders(&self) -> Result<&[OrderSpec]> {
        if self.orders.is_empty() {
            return Err(CliError::Usage("missing --k".into()));
        }
        Ok(&self.orders)
    }
}

/// First of flag, config-file entry; `None` if neither is set.
pub fn pick<T: FromStr>(flag: Option<T>, file: &ConfigFile, key: &str) -> Result<Option<T>> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.get(key),
    }
}
