//! Aggregating stored records into one table.

use std::path::Path;

use crate::error::{HResult, HarnessError};
use crate::record::{ResultRecord, Status, SCHEMA};
use crate::run::{describe_metric, status_label};

/// Reads every `*/record.json` below `dir` (one level), sorted by criterion.
pub fn load_records(dir: &Path) -> HResult<Vec<ResultRecord>> {
    let mut out = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| HarnessError::Config(format!("{}: {e}", dir.display())))?;
    for entry in entries {
        let path = entry?.path().join("record.json");
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path)?;
        let rec: ResultRecord = serde_json::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        if rec.schema != SCHEMA {
            return Err(HarnessError::Config(format!(
                "{} has schema {}, expected {SCHEMA}",
                path.display(),
                rec.schema
            )));
        }
        out.push(rec);
    }
    out.sort_by_key(|r| (r.criterion, r.experiment.clone()));
    Ok(out)
}

/// Text table of all metrics; also written to `<dir>/summary.csv`.
pub fn report(dir: &Path) -> HResult<(String, bool)> {
    let recs = load_records(dir)?;
    if recs.is_empty() {
        return Err(HarnessError::Config(format!("no records under {}", dir.display())));
    }
    let mut text = String::new();
    let mut csv = format!("# schema={SCHEMA}\ncriterion,experiment,metric,value,ci_lo,ci_hi,target,tolerance,status\n");
    let cell = |x: Option<f64>| x.map_or(String::new(), |v| v.to_string());
    for r in &recs {
        let verdict = if r.passed() { "PASS" } else { "FAIL" };
        text.push_str(&format!("{:>2} {:<22} {verdict}\n", r.criterion, r.experiment));
        for m in &r.metrics {
            text.push_str(&format!("     {:<7} {}\n", status_label(m.status), describe_metric(m)));
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.criterion,
                r.experiment,
                m.name,
                cell(m.value),
                cell(m.ci_lo),
                cell(m.ci_hi),
                cell(m.target),
                cell(m.tolerance),
                match m.status {
                    Status::Pass => "pass",
                    Status::Fail => "fail",
                    Status::ReportOnly => "report_only",
                }
            ));
        }
    }
    std::fs::write(dir.join("summary.csv"), csv)?;
    Ok((text, recs.iter().all(|r| r.passed())))
}
