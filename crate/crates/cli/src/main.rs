//! `extrack` — experiment runner and self-check harness for the clipped
//! multiplicative learners in `extrack-core`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 a checked guarantee or
//! numeric invariant failed, 64 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use extrack_core::harness::{run_experiment, ExperimentConfig, ExperimentOutcome};
use extrack_core::projection::kl_project_clipped;
use extrack_core::Error;

mod checks;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_INVARIANT: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(
    name = "extrack",
    version,
    about = "Track-the-best-expert learners: run experiments, certify guarantees, inspect projections"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment a JSON config describes: one CSV trace per
    /// repetition plus a JSON report in the output directory
    Run {
        /// Experiment config (JSON)
        config: PathBuf,
        /// Override the config's output directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Check every recorded trajectory against its guarantee
        #[arg(long)]
        verify: bool,
        /// Override the environment seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Self-check battery: projections vs oracles, update-form equivalence,
    /// segmentation DP vs enumeration, inequality fuzzing, end-to-end
    /// certification
    Verify {
        /// Base seed for the generated instances
        #[arg(long, default_value_t = 987)]
        seed: u64,
        /// Shrink instance counts and horizons for a fast smoke pass
        #[arg(long)]
        quick: bool,
    },
    /// Run a config with certification on and print a per-learner
    /// regret-vs-bound table
    Compare {
        /// Experiment config (JSON)
        config: PathBuf,
        /// Override the config's output directory
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Override the environment seed
        #[arg(long)]
        seed: Option<u64>,
        /// Table format
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Project a positive point onto the floored simplex and print the result
    Project {
        /// Coordinates of the unnormalized input point
        #[arg(required = true)]
        p: Vec<f64>,
        /// Per-coordinate floor of the target set
        #[arg(long)]
        floor: f64,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let code = match cli.cmd {
        Cmd::Run {
            config,
            out,
            verify,
            seed,
        } => cmd_run(&config, out, verify, seed),
        Cmd::Verify { seed, quick } => cmd_verify(seed, quick),
        Cmd::Compare {
            config,
            out,
            seed,
            format,
        } => cmd_compare(&config, out, seed, format),
        Cmd::Project { p, floor } => cmd_project(&p, floor),
    };
    ExitCode::from(code)
}

/// Errors raised while loading or validating a config are operator mistakes;
/// everything else means the math itself misbehaved.
fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Json(_) | Error::Io(_) => EXIT_CONFIG,
        _ => EXIT_INVARIANT,
    }
}

fn load_config(
    path: &PathBuf,
    out: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<ExperimentConfig, u8> {
    let mut cfg = ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        EXIT_CONFIG
    })?;
    if let Some(dir) = out {
        cfg.output_dir = dir;
    }
    if let Some(s) = seed {
        cfg.environment.seed = s;
    }
    Ok(cfg)
}

fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome, u8> {
    run_experiment(cfg).map_err(|e| {
        eprintln!("error: {e}");
        exit_code_for(&e)
    })
}

fn cmd_run(config: &PathBuf, out: Option<PathBuf>, verify: bool, seed: Option<u64>) -> u8 {
    let mut cfg = match load_config(config, out, seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    if verify {
        cfg.verification = true;
    }
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(code) => return code,
    };

    for rep in &outcome.report.repetitions {
        println!(
            "rep seed={}: comparator loss {:.6} ({} switches)",
            rep.seed, rep.comparator.total_loss, rep.comparator.switches
        );
        for l in &rep.learners {
            let eta = match l.eta {
                Some(e) => format!("{e:.6} ({})", l.eta_source),
                None => l.eta_source.clone(),
            };
            match &l.verdict {
                Some(v) => {
                    let status = if v.pass() { "certified" } else { "FAILED" };
                    match &v.report {
                        Some(r) => println!(
                            "  {:<20} eta {} regret {:.6} bound {:.6} slack {:.6} {}",
                            l.name, eta, l.regret, r.bound, r.slack, status
                        ),
                        None => println!(
                            "  {:<20} eta {} regret {:.6} (no closed-form bound) {}",
                            l.name, eta, l.regret, status
                        ),
                    }
                }
                None => {
                    let note = l
                        .skipped_verification
                        .as_deref()
                        .map(|s| format!(" [skipped: {s}]"))
                        .unwrap_or_default();
                    println!(
                        "  {:<20} eta {} regret {:.6}{}",
                        l.name, eta, l.regret, note
                    );
                }
            }
        }
    }
    for p in &outcome.trace_paths {
        println!("wrote {}", p.display());
    }
    println!("wrote {}", outcome.report_path.display());

    if outcome.all_pass() {
        EXIT_OK
    } else {
        eprintln!("error: at least one certified guarantee failed");
        EXIT_INVARIANT
    }
}

fn cmd_verify(seed: u64, quick: bool) -> u8 {
    let results = checks::run_battery(seed, quick);
    let mut failed = 0usize;
    for c in &results {
        if c.pass {
            println!("ok   {:<42} {}", c.name, c.detail);
        } else {
            failed += 1;
            println!("FAIL {:<42} {}", c.name, c.detail);
        }
    }
    println!(
        "{} checks, {} passed, {} failed",
        results.len(),
        results.len() - failed,
        failed
    );
    if failed == 0 {
        EXIT_OK
    } else {
        EXIT_INVARIANT
    }
}

fn cmd_compare(config: &PathBuf, out: Option<PathBuf>, seed: Option<u64>, format: Format) -> u8 {
    let mut cfg = match load_config(config, out, seed) {
        Ok(c) => c,
        Err(code) => return code,
    };
    cfg.verification = true; // the table is meaningless without the bounds
    let outcome = match execute(&cfg) {
        Ok(o) => o,
        Err(code) => return code,
    };

    let many = outcome.report.repetitions.len() > 1;
    match format {
        Format::Csv => {
            println!("learner,regret,bound,slack");
            for rep in &outcome.report.repetitions {
                if many {
                    println!("# seed={}", rep.seed);
                }
                for l in &rep.learners {
                    let (bound, slack) = match l.verdict.as_ref().and_then(|v| v.report.as_ref()) {
                        Some(r) => (format!("{}", r.bound), format!("{}", r.slack)),
                        None => (String::new(), String::new()),
                    };
                    println!("{},{},{},{}", l.name, l.regret, bound, slack);
                }
            }
        }
        Format::Json => {
            let rows: Vec<serde_json::Value> = outcome
                .report
                .repetitions
                .iter()
                .flat_map(|rep| {
                    rep.learners.iter().map(|l| {
                        let report = l.verdict.as_ref().and_then(|v| v.report.as_ref());
                        serde_json::json!({
                            "seed": rep.seed,
                            "learner": l.name,
                            "regret": l.regret,
                            "bound": report.map(|r| r.bound),
                            "slack": report.map(|r| r.slack),
                            "pass": l.verdict.as_ref().map(|v| v.pass()),
                        })
                    })
                })
                .collect();
            match serde_json::to_string_pretty(&rows) {
                Ok(s) => println!("{s}"),
                Err(e) => {
                    eprintln!("error: {e}");
                    return EXIT_INVARIANT;
                }
            }
        }
    }

    if outcome.all_pass() {
        EXIT_OK
    } else {
        eprintln!("error: at least one certified guarantee failed");
        EXIT_INVARIANT
    }
}

fn cmd_project(p: &[f64], floor: f64) -> u8 {
    match kl_project_clipped(p, floor) {
        Ok(r) => {
            let coords: Vec<String> = r
                .point
                .weights()
                .iter()
                .map(|x| {
                    let s = format!("{x:.6}");
                    let s = s.trim_end_matches('0').trim_end_matches('.');
                    s.to_string()
                })
                .collect();
            println!("({})", coords.join(", "));
            EXIT_OK
        }
        Err(e) => {
            // bad coordinates or floor are command-line mistakes
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}
