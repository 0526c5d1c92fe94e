use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use gaussfield_cli::error::{EXIT_CONFIG, EXIT_FAIL, EXIT_PASS};
use gaussfield_cli::{registry, report, run, ExperimentConfig, HarnessError};

#[derive(Parser)]
#[command(name = "gaussfield", version, about = "Monte Carlo experiments on Gaussian zeros and nodal sets")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment: `run <name> [--config FILE] [--key value ...]`.
    Run {
        experiment: String,
        /// `--key value` pairs, including `--seed`, `--out` and `--config FILE`.
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        args: Vec<String>,
    },
    /// List experiments, or show the parameters of one.
    List { experiment: Option<String> },
    /// Summarize all records stored under a directory.
    Report { dir: PathBuf },
}

fn parse_overrides(experiment: &str, args: &[String]) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::new(experiment);
    let mut pairs = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| HarnessError::Config(format!("expected --key, got '{a}'")))?;
        let (k, v) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it
                    .next()
                    .ok_or_else(|| HarnessError::Config(format!("--{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        if k == "config" {
            cfg.merge_file(std::path::Path::new(&v))?;
        } else {
            pairs.push((k.replace('-', "_"), v));
        }
    }
    // command-line values win over the file
    for (k, v) in pairs {
        cfg.set(&k, &v)?;
    }
    if cfg.experiment != experiment {
        return Err(HarnessError::Config(format!(
            "config file names experiment '{}' but '{experiment}' was requested",
            cfg.experiment
        )));
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let code = match cli.command {
        Command::List { experiment: None } => {
            print!("{}", registry::list_table());
            EXIT_PASS
        }
        Command::List { experiment: Some(name) } => match registry::find(&name) {
            Some(e) => {
                print!("{}", registry::describe(e));
                EXIT_PASS
            }
            None => {
                eprintln!("error: {}", HarnessError::UnknownExperiment(name));
                EXIT_CONFIG
            }
        },
        Command::Run { experiment, args } => match parse_overrides(&experiment, &args).and_then(|c| run(&c)) {
            Ok(out) => {
                print!("{}", gaussfield_cli::run::summary(&out.record));
                println!("wrote {}", out.dir.display());
                if out.record.passed() {
                    EXIT_PASS
                } else {
                    EXIT_FAIL
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
        Command::Report { dir } => match report::report(&dir) {
            Ok((text, all_pass)) => {
                print!("{text}");
                if all_pass {
                    EXIT_PASS
                } else {
                    EXIT_FAIL
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                e.exit_code()
            }
        },
    };
    ExitCode::from(code as u8)
}
