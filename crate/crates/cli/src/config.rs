//! `key=value` configuration files, command-line overrides, and typed
//! parameter access with unknown-key rejection.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Keys handled by the runner itself rather than by an experiment.
const RESERVED: [&str; 4] = ["experiment", "seed", "out", "format"];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(err(format!("unknown format '{s}' (expected csv or jsonl)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub params: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Format,
}

/// Parses `key=value` lines. Blank lines and `#` comments are skipped.
pub fn parse_lines(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_pair(line).map_err(|e| err(format!("line {}: {e}", no + 1)))?);
    }
    Ok(out)
}

pub fn parse_pair(s: &str) -> Result<(String, String), ConfigError> {
    let (k, v) = s.split_once('=').ok_or_else(|| err(format!("expected key=value, got '{s}'")))?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() {
        return Err(err(format!("empty key in '{s}'")));
    }
    Ok((k.to_string(), v.to_string()))
}

/// Command-line values; each `Some` wins over the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub experiment: Option<String>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub params: Vec<(String, String)>,
}

impl ExperimentConfig {
    pub fn build(file: Option<&Path>, cli: Overrides) -> Result<Self, ConfigError> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| err(format!("{}: {e}", path.display())))?;
            map.extend(parse_lines(&text)?);
        }
        map.extend(cli.params);
        let experiment = cli
            .experiment
            .or_else(|| map.remove("experiment"))
            .ok_or_else(|| err("no experiment given (use --experiment or experiment= in the config)"))?;
        map.remove("experiment");
        let file_seed = map.remove("seed").map(|s| s.parse::<u64>().map_err(|_| err(format!("invalid seed '{s}'"))));
        let seed = match cli.seed {
            Some(s) => Some(s),
            None => file_seed.transpose()?,
        };
        let file_out = map.remove("out").map(PathBuf::from);
        let file_format = map.remove("format").map(|f| f.parse::<Format>()).transpose()?;
        Ok(ExperimentConfig {
            experiment,
            params: map,
            seed,
            out: cli.out.or(file_out),
            format: cli.format.or(file_format).unwrap_or(Format::Csv),
        })
    }
}

/// Parameter view for one experiment: declared keys with defaults.
#[derive(Debug)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    /// Rejects keys not in `declared`; fills in the defaults.
    pub fn new(given: &BTreeMap<String, String>, declared: &[(&str, &str)]) -> Result<Self, ConfigError> {
        let known: BTreeSet<&str> = declared.iter().map(|(k, _)| *k).collect();
        if let Some(bad) = given.keys().find(|k| !known.contains(k.as_str())) {
            let list: Vec<&str> = known.iter().copied().collect();
            let list = if list.is_empty() { "(none)".to_string() } else { list.join(", ") };
            let hint = if RESERVED.contains(&bad.as_str()) { " (reserved)" } else { "" };
            return Err(err(format!("unknown parameter '{bad}'{hint}; accepted: {list}")));
        }
        let mut values: BTreeMap<String, String> =
            declared.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
        values.extend(given.iter().map(|(k, v)| (k.clone(), v.clone())));
        Ok(Params { values })
    }

    pub fn all(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T, ConfigError> {
        let raw = self.values.get(key).ok_or_else(|| err(format!("missing parameter '{key}'")))?;
        raw.parse::<T>().map_err(|_| err(format!("invalid value '{raw}' for '{key}'")))
    }

    pub fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let raw = self.values.get(key).ok_or_else(|| err(format!("missing parameter '{key}'")))?;
        raw.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| err(format!("invalid list entry '{s}' for '{key}'"))))
            .collect()
    }

    pub fn choice<'a>(&self, key: &str, options: &[&'a str]) -> Result<&'a str, ConfigError> {
        let raw = self.values.get(key).ok_or_else(|| err(format!("missing parameter '{key}'")))?;
        options
            .iter()
            .find(|o| **o == raw)
            .copied()
            .ok_or_else(|| err(format!("'{key}' must be one of {}, got '{raw}'", options.join("|"))))
    }
}
