//! Executing one experiment and persisting its outputs.

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{ExperimentConfig, Params};
use crate::error::{HResult, HarnessError};
use crate::record::{Ctx, ResultRecord};
use crate::registry::find;

pub struct RunOutcome {
    pub record: ResultRecord,
    pub dir: PathBuf,
}

/// Runs the experiment and writes `<out>/<experiment>/`. Nothing is written
/// unless the run completes.
pub fn run(cfg: &ExperimentConfig) -> HResult<RunOutcome> {
    let exp = find(&cfg.experiment).ok_or_else(|| HarnessError::UnknownExperiment(cfg.experiment.clone()))?;
    let params = Params::resolve(exp, &cfg.params)?;
    let mut ctx = Ctx::new(exp.name, cfg.seed, params);
    let start = Instant::now();
    (exp.run)(&mut ctx)?;
    let (record, artifacts) = ctx.finish(exp.name, exp.criterion, exp.anchor, start.elapsed().as_secs_f64());
    let dir = cfg.out.join(exp.name);
    std::fs::create_dir_all(&dir)?;
    for a in &artifacts {
        write(&dir, &a.file, &a.contents)?;
    }
    let json = serde_json::to_string_pretty(&record).map_err(|e| HarnessError::Numerical(e.to_string()))?;
    write(&dir, "record.json", &(json + "\n"))?;
    let timing = serde_json::json!({ "schema": crate::record::SCHEMA, "wall_time_s": record.wall_time_s });
    write(&dir, "timing.json", &(timing.to_string() + "\n"))?;
    Ok(RunOutcome { record, dir })
}

fn write(dir: &Path, file: &str, contents: &str) -> HResult<()> {
    std::fs::write(dir.join(file), contents)?;
    Ok(())
}

/// One line per metric.
pub fn summary(r: &ResultRecord) -> String {
    let mut s = format!("{} (criterion {}) in {:.1} s\n", r.experiment, r.criterion, r.wall_time_s);
    for m in &r.metrics {
        s.push_str(&format!("  {:<11} {}\n", status_label(m.status), describe_metric(m)));
    }
    s
}

pub fn status_label(s: crate::record::Status) -> &'static str {
    match s {
        crate::record::Status::Pass => "PASS",
        crate::record::Status::Fail => "FAIL",
        crate::record::Status::ReportOnly => "report",
    }
}

pub fn describe_metric(m: &crate::record::Metric) -> String {
    let f = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6}"));
    let mut s = format!("{} = {}", m.name, f(m.value));
    if m.ci_lo.is_some() || m.ci_hi.is_some() {
        s.push_str(&format!(" [{}, {}]", f(m.ci_lo), f(m.ci_hi)));
    }
    if let Some(t) = m.target {
        s.push_str(&format!(" target {t:.6}"));
    }
    if let Some(t) = m.tolerance {
        s.push_str(&format!(" tol {t:.6}"));
    }
    s
}
