//! Layered `key = value` settings.
//!
//! Precedence, lowest first: environment (`PCGA_<KEY>`), configuration
//! file, command line. Every command-line flag has a key of the same name
//! with dashes turned into underscores.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use thiserror::Error;

use super::sweep::SweepSpec;
use crate::benchmarks::Benchmark;
use crate::cga::{CgaError, CgaParams};
use crate::sim::SimConfig;

pub const ENV_PREFIX: &str = "PCGA_";

/// Every recognized key.
pub const KNOWN_KEYS: &[&str] = &[
    "benchmark",
    "bind",
    "checkpoint",
    "checkpoint_every",
    "csv",
    "include_unsolved",
    "length",
    "m",
    "manager",
    "max_evaluations",
    "out",
    "parallel",
    "pop_size",
    "repetitions",
    "seed",
    "selection",
    "sync_interval",
    "sync_intervals",
    "workers",
];

/// Keys a sweep cannot run without.
pub const SWEEP_REQUIRED: &[&str] = &[
    "benchmark",
    "pop_size",
    "repetitions",
    "selection",
    "sync_intervals",
    "workers",
];

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_MAX_EVALUATIONS: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("cannot read {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("unknown key `{0}`")]
    UnknownSetting(String),
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("`{key}` ({origin}): {message}")]
    Invalid {
        key: String,
        origin: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Env,
    File { line: usize },
    Cli,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Env => f.write_str("environment"),
            Origin::File { line } => write!(f, "line {line}"),
            Origin::Cli => f.write_str("command line"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    values: BTreeMap<String, (String, Origin)>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses configuration text. Blank lines and `#` comments are skipped;
    /// a `#` after a value starts a trailing comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut settings = Settings::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected `key = value`, got `{content}`"),
            })?;
            let key = key.trim().replace('-', "_");
            let value = value.trim();
            if key.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    message: "empty key".into(),
                });
            }
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { line, key });
            }
            if value.is_empty() {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("`{key}` has no value"),
                });
            }
            if settings.values.contains_key(&key) {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("`{key}` is set twice"),
                });
            }
            settings
                .values
                .insert(key, (value.to_string(), Origin::File { line }));
        }
        Ok(settings)
    }

    /// Reads known keys from `PCGA_<KEY>` variables.
    pub fn from_env() -> Self {
        Self::from_vars(std::env::vars())
    }

    pub fn from_vars<I: IntoIterator<Item = (String, String)>>(vars: I) -> Self {
        let mut settings = Settings::new();
        for (name, value) in vars {
            let Some(key) = name.strip_prefix(ENV_PREFIX) else {
                continue;
            };
            let key = key.to_ascii_lowercase();
            if KNOWN_KEYS.contains(&key.as_str()) {
                settings.values.insert(key, (value, Origin::Env));
            }
        }
        settings
    }

    /// Sets a key from the command line.
    pub fn set_cli(&mut self, key: &str, value: impl ToString) -> Result<(), ConfigError> {
        let key = key.replace('-', "_");
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::UnknownSetting(key));
        }
        self.values.insert(key, (value.to_string(), Origin::Cli));
        Ok(())
    }

    /// Values in `over` replace values here.
    pub fn overlay(mut self, over: Settings) -> Self {
        self.values.extend(over.values);
        self
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    pub fn contains(&self, key: &str) -> bool {
        self.values.contains_key(key)
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let origin = self
            .values
            .get(key)
            .map(|(_, o)| o.to_string())
            .unwrap_or_else(|| "default".into());
        ConfigError::Invalid {
            key: key.to_string(),
            origin,
            message: message.into(),
        }
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.raw(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| self.invalid(key, format!("cannot parse `{raw}`: {e}"))),
        }
    }

    pub fn require<T: FromStr>(&self, key: &str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?
            .ok_or_else(|| ConfigError::Missing(vec![key.to_string()]))
    }

    /// Comma-separated list.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        let Some(raw) = self.raw(key) else {
            return Ok(None);
        };
        let items = raw
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|e| self.invalid(key, format!("cannot parse `{s}`: {e}")))
            })
            .collect::<Result<Vec<T>, _>>()?;
        if items.is_empty() {
            return Err(self.invalid(key, "list is empty"));
        }
        Ok(Some(items))
    }

    pub fn get_bool(&self, key: &str) -> Result<Option<bool>, ConfigError> {
        match self.raw(key).map(str::to_ascii_lowercase).as_deref() {
            None => Ok(None),
            Some("true" | "yes" | "1" | "on") => Ok(Some(true)),
            Some("false" | "no" | "0" | "off") => Ok(Some(false)),
            Some(other) => Err(self.invalid(key, format!("`{other}` is not a boolean"))),
        }
    }

    pub fn get_duration_secs(&self, key: &str) -> Result<Option<Duration>, ConfigError> {
        match self.get::<f64>(key)? {
            None => Ok(None),
            Some(secs) if secs.is_finite() && secs > 0.0 => Ok(Some(Duration::from_secs_f64(secs))),
            Some(_) => Err(self.invalid(key, "must be a positive number of seconds")),
        }
    }

    pub fn missing(&self, keys: &[&str]) -> Result<(), ConfigError> {
        let missing: Vec<String> = keys
            .iter()
            .filter(|k| !self.contains(k))
            .map(|k| k.to_string())
            .collect();
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Missing(missing))
        }
    }

    /// Population size, selection rate and seed, with the range rules applied.
    pub fn cga_params(&self) -> Result<CgaParams, ConfigError> {
        let n: u64 = self.require("pop_size")?;
        let s: usize = self.require("selection")?;
        let seed = self.get("seed")?.unwrap_or(DEFAULT_SEED);
        CgaParams::new(n, s, seed).map_err(|e| match e {
            CgaError::InvalidPopulationSize(_) => self.invalid(
                "pop_size",
                format!("{n} is invalid: the population size must be even and at least 2"),
            ),
            CgaError::InvalidSelectionRate(_) => {
                self.invalid("selection", format!("{s} is invalid: must be at least 2"))
            }
            other => self.invalid("pop_size", other.to_string()),
        })
    }

    pub fn benchmark(&self) -> Result<Benchmark, ConfigError> {
        let name: String = self.require("benchmark")?;
        let length = self.get("length")?;
        Benchmark::parse(&name, length).map_err(|e| self.invalid("benchmark", e.to_string()))
    }

    /// A single simulation; `workers` and `sync_interval` must hold one value.
    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        self.missing(&["benchmark", "pop_size", "selection", "workers"])?;
        let workers: usize = self.require("workers")?;
        let sync_interval: u64 = match self.get("sync_interval")? {
            Some(m) => m,
            None => self.require("sync_intervals")?,
        };
        let config = SimConfig {
            workers,
            sync_interval,
            cga: self.cga_params()?,
            benchmark: self.benchmark()?,
            max_total_evaluations: self
                .get("max_evaluations")?
                .unwrap_or(DEFAULT_MAX_EVALUATIONS),
        };
        config
            .validate()
            .map_err(|e| self.invalid("workers", e.to_string()))?;
        Ok(config)
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec, ConfigError> {
        self.missing(SWEEP_REQUIRED)?;
        let workers: Vec<usize> = self.get_list("workers")?.unwrap_or_default();
        if workers.contains(&0) {
            return Err(self.invalid("workers", "every worker count must be at least 1"));
        }
        let sync_intervals: Vec<u64> = self.get_list("sync_intervals")?.unwrap_or_default();
        if sync_intervals.contains(&0) {
            return Err(self.invalid("sync_intervals", "every interval must be at least 1"));
        }
        let repetitions: usize = self.require("repetitions")?;
        if repetitions == 0 {
            return Err(self.invalid("repetitions", "must be at least 1"));
        }
        let max_total_evaluations = self
            .get("max_evaluations")?
            .unwrap_or(DEFAULT_MAX_EVALUATIONS);
        if max_total_evaluations == 0 {
            return Err(self.invalid("max_evaluations", "must be at least 1"));
        }
        let parallel = self.get("parallel")?.unwrap_or(1);
        if parallel == 0 {
            return Err(self.invalid("parallel", "must be at least 1"));
        }
        Ok(SweepSpec {
            base: SimConfig {
                workers: workers[0],
                sync_interval: sync_intervals[0],
                cga: self.cga_params()?,
                benchmark: self.benchmark()?,
                max_total_evaluations,
            },
            workers,
            sync_intervals,
            repetitions,
            output: self.get::<PathBuf>("out")?,
            parallel,
            include_unsolved: self.get_bool("include_unsolved")?.unwrap_or(false),
        })
    }
}

/// Reads a configuration file.
pub fn load_config(path: &Path) -> Result<Settings, ConfigError> {
    let text = fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Settings::parse(&text)
}

/// Reads a sweep from a configuration file alone.
pub fn load_sweep_spec(path: &Path) -> Result<SweepSpec, ConfigError> {
    load_config(path)?.sweep_spec()
}
