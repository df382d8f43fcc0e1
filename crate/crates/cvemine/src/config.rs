//! Run configuration: an INI file (section `[cvemine]`, or no section at
//! all) provides the keys, `CVEMINE_*` environment variables override
//! them, and built-in defaults fill the rest.
//!
//! Recognized keys (file key / environment variable):
//!
//! | key               | env                      | default           |
//! |-------------------|--------------------------|-------------------|
//! | `database_path`   | `CVEMINE_DATABASE_PATH`  | `cvemine.db`      |
//! | `sample_limit`    | `CVEMINE_SAMPLE_LIMIT`   | `0` (unlimited)   |
//! | `github_username` | `CVEMINE_GITHUB_USERNAME`| unset             |
//! | `github_token`    | `CVEMINE_GITHUB_TOKEN`   | unset             |
//! | `cache_dir`       | `CVEMINE_CACHE_DIR`      | `.cvemine/cache`  |
//! | `workdir`         | `CVEMINE_WORKDIR`        | `.cvemine/work`   |
//! | `worker_count`    | `CVEMINE_WORKER_COUNT`   | `4`               |
//! | `years`           | `CVEMINE_YEARS`          | unset (see below) |
//! | `offline`         | `CVEMINE_OFFLINE`        | `false`           |
//! | `mirror_dir`      | `CVEMINE_MIRROR_DIR`     | unset             |
//! | `keep_clones`     | `CVEMINE_KEEP_CLONES`    | `false`           |
//! | `cwe_csv`         | `CVEMINE_CWE_CSV`        | unset (built-in)  |
//!
//! `years` is a single year (`2020`) or an inclusive range (`2018-2021`).
//! When unset, collection falls back to every cached feed year in offline
//! mode, or 2002 through the current year online.

use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("invalid value for {key}: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub database_path: PathBuf,
    /// 0 means unlimited.
    pub sample_limit: u64,
    pub github_username: Option<String>,
    pub github_token: Option<String>,
    pub cache_dir: PathBuf,
    pub workdir: PathBuf,
    pub worker_count: usize,
    /// Inclusive feed-year range; `None` defers to the collection-time
    /// fallback.
    pub years: Option<(u16, u16)>,
    /// Never touch the network: feeds and API responses come from the
    /// cache, repositories from `mirror_dir` or existing clones.
    pub offline: bool,
    /// Directory of local repository mirrors laid out as
    /// `<host>/<owner>/<repo>`, tried before cloning.
    pub mirror_dir: Option<PathBuf>,
    /// Keep cloned working repositories instead of deleting them after
    /// their last fix commit is extracted.
    pub keep_clones: bool,
    /// CWE catalog snapshot CSV; the built-in snapshot is used when unset.
    pub cwe_csv: Option<PathBuf>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            database_path: PathBuf::from("cvemine.db"),
            sample_limit: 0,
            github_username: None,
            github_token: None,
            cache_dir: PathBuf::from(".cvemine/cache"),
            workdir: PathBuf::from(".cvemine/work"),
            worker_count: 4,
            years: None,
            offline: false,
            mirror_dir: None,
            keep_clones: false,
            cwe_csv: None,
        }
    }
}

impl Config {
    /// Defaults, then the INI file (if given), then `CVEMINE_*` process
    /// environment variables, then validation.
    pub fn load(path: Option<&Path>) -> Result<Config, ConfigError> {
        Self::load_with_env(path, |key| std::env::var(key).ok())
    }

    /// [`load`](Self::load) with an injectable environment, so overrides
    /// are testable without mutating process state.
    pub fn load_with_env(
        path: Option<&Path>,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Config, ConfigError> {
        let mut config = Config::default();
        if let Some(path) = path {
            config.apply_file(path)?;
        }
        config.apply_env(env)?;
        config.validate()?;
        Ok(config)
    }

    fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let mut ini = configparser::ini::Ini::new();
        ini.load(path).map_err(|reason| ConfigError::Unreadable {
            path: path.to_path_buf(),
            reason,
        })?;
        // Keys in a `[cvemine]` section win over bare (sectionless) keys,
        // which configparser files under "default".
        let lookup = |key: &str| ini.get("cvemine", key).or_else(|| ini.get("default", key));
        self.apply_values(lookup)
    }

    fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        self.apply_values(|key| env(&format!("CVEMINE_{}", key.to_uppercase())))
    }

    fn apply_values(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(value) = lookup("database_path") {
            self.database_path = PathBuf::from(value);
        }
        if let Some(value) = lookup("sample_limit") {
            self.sample_limit = parse_number("sample_limit", &value)?;
        }
        if let Some(value) = lookup("github_username") {
            self.github_username = non_empty(value);
        }
        if let Some(value) = lookup("github_token") {
            self.github_token = non_empty(value);
        }
        if let Some(value) = lookup("cache_dir") {
            self.cache_dir = PathBuf::from(value);
        }
        if let Some(value) = lookup("workdir") {
            self.workdir = PathBuf::from(value);
        }
        if let Some(value) = lookup("worker_count") {
            self.worker_count = parse_number("worker_count", &value)? as usize;
        }
        if let Some(value) = lookup("years") {
            self.years = parse_years(&value)?;
        }
        if let Some(value) = lookup("offline") {
            self.offline = parse_bool("offline", &value)?;
        }
        if let Some(value) = lookup("mirror_dir") {
            self.mirror_dir = non_empty(value).map(PathBuf::from);
        }
        if let Some(value) = lookup("keep_clones") {
            self.keep_clones = parse_bool("keep_clones", &value)?;
        }
        if let Some(value) = lookup("cwe_csv") {
            self.cwe_csv = non_empty(value).map(PathBuf::from);
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.worker_count == 0 {
            return Err(ConfigError::Invalid {
                key: "worker_count".to_string(),
                reason: "must be at least 1".to_string(),
            });
        }
        if let Some((start, end)) = self.years {
            if start > end {
                return Err(ConfigError::Invalid {
                    key: "years".to_string(),
                    reason: format!("range {start}-{end} runs backwards"),
                });
            }
            if start < 1999 {
                return Err(ConfigError::Invalid {
                    key: "years".to_string(),
                    reason: format!("{start} predates the CVE feed era (1999)"),
                });
            }
        }
        Ok(())
    }
}

fn non_empty(value: String) -> Option<String> {
    let trimmed = value.trim();
    if trimmed.is_empty() {
        None
    } else {
        Some(trimmed.to_string())
    }
}

fn parse_number(key: &str, value: &str) -> Result<u64, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::Invalid {
        key: key.to_string(),
        reason: format!("{value:?} is not a non-negative integer"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::Invalid {
            key: key.to_string(),
            reason: format!("{value:?} is not a boolean"),
        }),
    }
}

/// Parse a year selection: `2020` or `2018-2021` (inclusive). An empty
/// value clears the range.
pub fn parse_years(value: &str) -> Result<Option<(u16, u16)>, ConfigError> {
    let value = value.trim();
    if value.is_empty() {
        return Ok(None);
    }
    let bad = |reason: String| ConfigError::Invalid {
        key: "years".to_string(),
        reason,
    };
    let parse_year = |s: &str| {
        s.trim()
            .parse::<u16>()
            .map_err(|_| bad(format!("{s:?} is not a year")))
    };
    match value.split_once('-') {
        Some((start, end)) => Ok(Some((parse_year(start)?, parse_year(end)?))),
        None => {
            let year = parse_year(value)?;
            Ok(Some((year, year)))
        }
    }
}
