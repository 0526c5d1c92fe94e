//! Flat `key = value` configuration with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{HResult, HarnessError};
use crate::registry::Experiment;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_OUT: &str = "results";

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub seed: u64,
    pub out: PathBuf,
    /// Experiment parameters as given; defaults are filled in by [`Params`].
    pub params: BTreeMap<String, String>,
}

impl ExperimentConfig {
    pub fn new(experiment: &str) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed: DEFAULT_SEED,
            out: PathBuf::from(DEFAULT_OUT),
            params: BTreeMap::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, &value.to_string()).expect("valid key");
        self
    }

    /// Sets a parameter, routing the reserved keys `experiment`, `seed` and `out`.
    pub fn set(&mut self, key: &str, value: &str) -> HResult<()> {
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_') {
            return Err(HarnessError::Config(format!("malformed key '{key}'")));
        }
        match key {
            "experiment" => self.experiment = value.to_string(),
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| HarnessError::Config(format!("seed '{value}' is not a 64-bit integer")))?
            }
            "out" => self.out = PathBuf::from(value),
            _ => {
                self.params.insert(key.to_string(), value.to_string());
            }
        }
        Ok(())
    }

    pub fn merge_file(&mut self, path: &Path) -> HResult<()> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        for (k, v) in parse_kv(&text)? {
            self.set(&k, &v)?;
        }
        Ok(())
    }
}

/// Parses `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_kv(text: &str) -> HResult<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| HarnessError::Config(format!("line {}: expected key = value", no + 1)))?;
        let k = k.trim().to_string();
        if out.iter().any(|(seen, _)| *seen == k) {
            return Err(HarnessError::Config(format!("line {}: duplicate key '{k}'", no + 1)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Resolved parameters of one experiment: every declared key with its value.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn resolve(exp: &Experiment, given: &BTreeMap<String, String>) -> HResult<Self> {
        let mut values: BTreeMap<String, String> =
            exp.params.iter().map(|p| (p.key.to_string(), p.default.to_string())).collect();
        for (k, v) in given {
            match values.get_mut(k) {
                Some(slot) => *slot = v.clone(),
                None => {
                    let known: Vec<&str> = exp.params.iter().map(|p| p.key).collect();
                    return Err(HarnessError::Config(format!(
                        "'{}' has no parameter '{k}' (known: {})",
                        exp.name,
                        known.join(", ")
                    )));
                }
            }
        }
        Ok(Self { values })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    pub fn str(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or_else(|| panic!("undeclared parameter {key}"))
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, raw: &str) -> HResult<T> {
        raw.trim()
            .parse()
            .map_err(|_| HarnessError::Config(format!("{key} = '{raw}' does not parse")))
    }

    pub fn f64(&self, key: &str) -> HResult<f64> {
        let v: f64 = self.parse(key, self.str(key))?;
        if !v.is_finite() {
            return Err(HarnessError::Config(format!("{key} must be finite")));
        }
        Ok(v)
    }

    pub fn usize(&self, key: &str) -> HResult<usize> {
        self.parse(key, self.str(key))
    }

    pub fn f64_list(&self, key: &str) -> HResult<Vec<f64>> {
        self.list(key)
    }

    pub fn usize_list(&self, key: &str) -> HResult<Vec<usize>> {
        self.list(key)
    }

    fn list<T: std::str::FromStr>(&self, key: &str) -> HResult<Vec<T>> {
        let raw = self.str(key);
        if raw.trim().is_empty() {
            return Ok(Vec::new());
        }
        raw.split(',').map(|s| self.parse(key, s)).collect()
    }

    /// `f64` in the closed range `[lo, hi]`.
    pub fn f64_in(&self, key: &str, lo: f64, hi: f64) -> HResult<f64> {
        let v = self.f64(key)?;
        check_range(key, v, lo, hi)?;
        Ok(v)
    }

    pub fn usize_in(&self, key: &str, lo: usize, hi: usize) -> HResult<usize> {
        let v = self.usize(key)?;
        check_range(key, v as f64, lo as f64, hi as f64)?;
        Ok(v)
    }
}

fn check_range(key: &str, v: f64, lo: f64, hi: f64) -> HResult<()> {
    if v < lo || v > hi {
        return Err(HarnessError::Config(format!("{key} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}
