//! Result records, metrics and data artifacts.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::config::Params;
use crate::error::{HResult, HarnessError};

/// Version tag written into every output file.
pub const SCHEMA: &str = "gaussfield-result/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    ReportOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    /// `None` when the statistic is undefined (e.g. a fit with no data).
    pub value: Option<f64>,
    pub ci_lo: Option<f64>,
    pub ci_hi: Option<f64>,
    pub target: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
}

impl Metric {
    fn new(name: &str, value: f64, status: Status) -> Self {
        Self {
            name: name.to_string(),
            value: value.is_finite().then_some(value),
            ci_lo: None,
            ci_hi: None,
            target: None,
            tolerance: None,
            status,
        }
    }

    pub fn ci(&mut self, lo: f64, hi: f64) -> &mut Self {
        self.ci_lo = lo.is_finite().then_some(lo);
        self.ci_hi = hi.is_finite().then_some(hi);
        self
    }

    pub fn target(&mut self, target: f64) -> &mut Self {
        self.target = target.is_finite().then_some(target);
        self
    }

    pub fn tolerance(&mut self, tol: f64) -> &mut Self {
        self.tolerance = tol.is_finite().then_some(tol);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema: String,
    pub experiment: String,
    pub criterion: u8,
    pub anchor: String,
    /// Every parameter plus seed, RNG method and crate version.
    pub config: BTreeMap<String, String>,
    pub metrics: Vec<Metric>,
    /// Kept out of `record.json` so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_time_s: f64,
}

impl ResultRecord {
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.status != Status::Fail)
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.metric(name).and_then(|m| m.value)
    }
}

/// A file produced by an experiment, written only after the run succeeds.
#[derive(Clone, Debug)]
pub struct Artifact {
    pub file: String,
    pub contents: String,
}

/// What an experiment sees: its parameters and the sinks for its results.
pub struct Ctx {
    pub seed: u64,
    pub params: Params,
    pub metrics: Vec<Metric>,
    pub artifacts: Vec<Artifact>,
    config: BTreeMap<String, String>,
}

impl Ctx {
    pub fn new(experiment: &str, seed: u64, params: Params) -> Self {
        let mut config: BTreeMap<String, String> = params.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
        config.insert("experiment".into(), experiment.into());
        config.insert("seed".into(), seed.to_string());
        config.insert("normal_method".into(), gaussfield::randomness::NORMAL_METHOD.into());
        config.insert("version".into(), env!("CARGO_PKG_VERSION").into());
        Self {
            seed,
            params,
            metrics: Vec::new(),
            artifacts: Vec::new(),
            config,
        }
    }

    pub fn config(&self) -> &BTreeMap<String, String> {
        &self.config
    }

    /// An assertable metric.
    pub fn check(&mut self, name: &str, value: f64, pass: bool) -> &mut Metric {
        let status = if pass && value.is_finite() { Status::Pass } else { Status::Fail };
        self.metrics.push(Metric::new(name, value, status));
        self.metrics.last_mut().unwrap()
    }

    /// `|value − target| ≤ tolerance`.
    pub fn check_near(&mut self, name: &str, value: f64, target: f64, tolerance: f64) -> &mut Metric {
        let pass = (value - target).abs() <= tolerance;
        self.check(name, value, pass).target(target).tolerance(tolerance)
    }

    pub fn report(&mut self, name: &str, value: f64) -> &mut Metric {
        self.metrics.push(Metric::new(name, value, Status::ReportOnly));
        self.metrics.last_mut().unwrap()
    }

    /// First line of every CSV file.
    pub fn csv_header(&self) -> String {
        let mut h = format!("# schema={SCHEMA}");
        for (k, v) in &self.config {
            h.push_str(&format!(" {k}={v}"));
        }
        h
    }

    pub fn csv(&mut self, file: &str, columns: &str, rows: impl IntoIterator<Item = String>) -> HResult<()> {
        let mut s = self.csv_header();
        s.push('\n');
        s.push_str(columns);
        s.push('\n');
        for r in rows {
            s.push_str(&r);
            s.push('\n');
        }
        self.add(file, s)
    }

    pub fn json(&mut self, file: &str, value: &impl Serialize) -> HResult<()> {
        let body = serde_json::json!({ "schema": SCHEMA, "config": self.config, "data": value });
        let s = serde_json::to_string_pretty(&body).map_err(|e| HarnessError::Numerical(e.to_string()))?;
        self.add(file, s + "\n")
    }

    fn add(&mut self, file: &str, contents: String) -> HResult<()> {
        let ok = !file.is_empty()
            && file.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.' || c == '-')
            && !file.starts_with('.')
            && file != "record.json"
            && file != "timing.json";
        if !ok {
            return Err(HarnessError::Config(format!("artifact name '{file}' is not a plain file name")));
        }
        self.artifacts.push(Artifact {
            file: file.to_string(),
            contents,
        });
        Ok(())
    }

    pub fn finish(self, experiment: &str, criterion: u8, anchor: &str, wall_time_s: f64) -> (ResultRecord, Vec<Artifact>) {
        (
            ResultRecord {
                schema: SCHEMA.to_string(),
                experiment: experiment.to_string(),
                criterion,
                anchor: anchor.to_string(),
                config: self.config,
                metrics: self.metrics,
                wall_time_s,
            },
            self.artifacts,
        )
    }
}
