use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use log::info;
use vtf_harness::checks;
use vtf_harness::config::ExperimentConfig;
use vtf_harness::experiment::{run_experiment, run_experiment_with_jobs, write_datasets};
use vtf_harness::report::{read_records, summaries_by_rule, write_derived, write_outputs};

#[derive(Parser)]
#[command(
    name = "vtf-rlbfgs",
    version,
    about = "Riemannian LBFGS experiments on Gaussian mixtures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment grid and write records, summaries and traces.
    Run {
        /// JSON or TOML experiment config; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, env = "VTF_OUT")]
        out: Option<PathBuf>,
        /// Overrides the base seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 0 or unset uses every core.
        #[arg(long, env = "VTF_JOBS")]
        jobs: Option<usize>,
    },
    /// Rebuild summaries and traces from `records.json`.
    Summarize {
        #[arg(long)]
        records: PathBuf,
    },
    /// Run the invariant checks and print one line per check.
    Check,
}

fn run(config: Option<PathBuf>, out: Option<PathBuf>, seed: Option<u64>, jobs: Option<usize>) -> Result<()> {
    let mut config = match config {
        Some(path) => ExperimentConfig::load(&path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let out = out
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results"));
    let started = Instant::now();
    let records = match jobs {
        Some(j) if j > 0 => run_experiment_with_jobs(&config, j)?,
        _ => run_experiment(&config)?,
    };
    info!("{} records in {:.2?}", records.len(), started.elapsed());
    write_outputs(&out, &config, &records).with_context(|| format!("writing {}", out.display()))?;
    if config.save_datasets {
        write_datasets(&out, &config)?;
    }
    for (name, csv) in summaries_by_rule(&records) {
        println!("== {name}");
        print!("{csv}");
    }
    let failed = records.iter().filter(|r| r.failed()).count();
    if failed > 0 {
        println!("{failed} run(s) failed and are excluded from the averages");
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn summarize(dir: PathBuf) -> Result<()> {
    let file = read_records(&dir)?;
    write_derived(&dir, &file.records)?;
    for (name, csv) in summaries_by_rule(&file.records) {
        println!("== {name}");
        print!("{csv}");
    }
    Ok(())
}

fn check() -> bool {
    let mut all = true;
    for c in checks::suite() {
        let started = Instant::now();
        let outcome = (c.run)();
        let secs = started.elapsed().as_secs_f64();
        let ok = outcome.passed && secs <= c.budget;
        all &= ok;
        println!(
            "{} [{:>2}] {} ({:.2}s / {}s): {}",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            secs,
            c.budget,
            outcome.detail
        );
    }
    all
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
        } => run(config, out, seed, jobs),
        Command::Summarize { records } => summarize(records),
        Command::Check => {
            return if check() { ExitCode::SUCCESS } else { ExitCode::FAILURE };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
