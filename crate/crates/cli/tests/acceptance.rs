//! Runs every acceptance criterion at its full scale and prints one verdict
//! line per criterion. Slow: over an hour on a single core.
//!
//! `ACCEPTANCE_ONLY=1,5,18` restricts the run; `ACCEPTANCE_OUT=dir` keeps the
//! records (otherwise a temporary directory is used).

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use gaussfield_cli::registry::by_criterion;
use gaussfield_cli::run::{describe_metric, status_label};
use gaussfield_cli::{run, ExperimentConfig, ResultRecord, Status};

const SEED: u64 = 20_240_601;

/// Criteria that fail at the prescribed parameters for mathematical reasons,
/// documented in the README. They are still run and printed as FAIL.
const KNOWN_UNATTAINABLE: &[u8] = &[6, 16, 17];

/// Run order: the comparison table of 18 consumes the means of 16, and 15
/// aggregates the no-violation checks of 14, 16 and 19.
const ORDER: &[u8] = &[1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 16, 19, 15, 17, 18];

enum Outcome {
    Ran(ResultRecord),
    Error(String),
}

fn selected() -> Vec<u8> {
    match std::env::var("ACCEPTANCE_ONLY") {
        Ok(s) if !s.trim().is_empty() => {
            let want: Vec<u8> = s.split(',').map(|x| x.trim().parse().expect("ACCEPTANCE_ONLY: integers")).collect();
            ORDER.iter().copied().filter(|c| want.contains(c)).collect()
        }
        _ => ORDER.to_vec(),
    }
}

fn main() -> ExitCode {
    // libtest-style flags from `cargo test -- ...` are ignored
    let tmp = tempfile::tempdir().expect("temporary directory");
    let out: PathBuf = std::env::var_os("ACCEPTANCE_OUT").map(PathBuf::from).unwrap_or_else(|| tmp.path().into());
    let mut results: BTreeMap<u8, (Outcome, f64)> = BTreeMap::new();

    for c in selected() {
        let exp = by_criterion(c).expect("every criterion has an experiment");
        let mut cfg = ExperimentConfig::new(exp.name).with("seed", SEED).with("out", out.display());
        if c == 18 {
            if let Some((Outcome::Ran(r16), _)) = results.get(&16) {
                let means: Vec<String> = r16
                    .metrics
                    .iter()
                    .filter_map(|m| Some(format!("{}:{}", m.name.strip_prefix("mean_n")?, m.value?)))
                    .collect();
                cfg = cfg.with("nodal_means", means.join(","));
            }
        }
        let start = Instant::now();
        let outcome = match run(&cfg) {
            Ok(o) => Outcome::Ran(o.record),
            Err(e) => Outcome::Error(e.to_string()),
        };
        let wall = start.elapsed().as_secs_f64();
        match &outcome {
            Outcome::Ran(r) => {
                eprintln!("[{c:>2}] {} finished in {wall:.0} s", exp.name);
                for m in &r.metrics {
                    eprintln!("       {:<7} {}", status_label(m.status), describe_metric(m));
                }
            }
            Outcome::Error(e) => eprintln!("[{c:>2}] {} error: {e}", exp.name),
        }
        results.insert(c, (outcome, wall));
    }

    // criterion 15 also requires every census elsewhere to respect N ≤ n²
    let courant_elsewhere: Vec<(u8, bool)> = [14u8, 16, 19]
        .iter()
        .filter_map(|c| match results.get(c) {
            Some((Outcome::Ran(r), _)) => Some((*c, r.metric("courant_violations").is_some_and(|m| m.status == Status::Pass))),
            _ => None,
        })
        .collect();

    let mut unexpected = Vec::new();
    println!("acceptance results (seed {SEED})");
    for (c, (outcome, wall)) in &results {
        let name = by_criterion(*c).unwrap().name;
        let (pass, detail) = match outcome {
            Outcome::Error(e) => (false, format!("error: {e}")),
            Outcome::Ran(r) => {
                let failed: Vec<&str> =
                    r.metrics.iter().filter(|m| m.status == Status::Fail).map(|m| m.name.as_str()).collect();
                let mut pass = failed.is_empty();
                let mut detail = if pass { String::new() } else { format!("failed: {}", failed.join(", ")) };
                if *c == 15 {
                    let bad: Vec<String> =
                        courant_elsewhere.iter().filter(|(_, ok)| !ok).map(|(k, _)| k.to_string()).collect();
                    if !bad.is_empty() {
                        pass = false;
                        detail = format!("{detail} violations in criteria {}", bad.join(","));
                    }
                }
                (pass, detail)
            }
        };
        let known = KNOWN_UNATTAINABLE.contains(c);
        let label = match (pass, known) {
            (true, _) => "PASS",
            (false, true) => "FAIL (known)",
            (false, false) => "FAIL",
        };
        println!("criterion {c:>2} {name:<22} {label:<12} {wall:>7.1} s  {detail}");
        if !pass && !known {
            unexpected.push(*c);
        }
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
