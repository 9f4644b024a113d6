use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use fredholm_cli::config::Sampling;
use fredholm_cli::{check_problem, parse_config, reproduce_example, run_problem, ProblemConfig, RunError};

#[derive(Parser)]
#[command(
    name = "fredholm",
    version,
    about = "Solve and check stochastic second-kind Fredholm problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file over its parameter sweep.
    Solve {
        config: PathBuf,
        /// Write the per-sample table as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Solve even when the hypotheses fail.
        #[arg(long)]
        force: bool,
        /// Override the seed of a random sweep.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the known-answer check of a worked example.
    Reproduce { name: String },
    /// Check the hypotheses of a problem file without solving.
    Check { config: PathBuf },
}

const USAGE_ERROR: u8 = 2;

fn load(path: &PathBuf) -> Result<ProblemConfig, ExitCode> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return Err(ExitCode::from(USAGE_ERROR));
        }
    };
    parse_config(&text).map_err(|e| {
        eprintln!("error: {}: {e}", path.display());
        ExitCode::from(USAGE_ERROR)
    })
}

fn solve(config: PathBuf, out: Option<PathBuf>, force: bool, seed: Option<u64>) -> anyhow::Result<ExitCode> {
    let mut cfg = match load(&config) {
        Ok(c) => c,
        Err(code) => return Ok(code),
    };
    cfg.force |= force;
    if let (Some(s), Sampling::Random { seed, .. }) = (seed, &mut cfg.parameter.sampling) {
        *seed = s;
    }
    let report = match run_problem(&cfg) {
        Ok(r) => r,
        Err(e @ RunError::ConditionViolated(_)) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::FAILURE);
        }
        Err(e) => return Err(e.into()),
    };
    print!("{}", report.render_table());
    if let Some(path) = out {
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        report.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(if report.all_pass() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(USAGE_ERROR)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Solve {
            config,
            out,
            force,
            seed,
        } => solve(config, out, force, seed),
        Command::Reproduce { name } => match reproduce_example(&name) {
            Ok(table) => {
                print!("{}", table.render());
                Ok(if table.all_pass() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::FAILURE
                })
            }
            Err(e @ fredholm_cli::reproduce::ReproduceError::UnknownExample(_)) => {
                eprintln!("error: {e}");
                Ok(ExitCode::from(USAGE_ERROR))
            }
            Err(e) => Err(e.into()),
        },
        Command::Check { config } => match load(&config) {
            Err(code) => Ok(code),
            Ok(cfg) => check_problem(&cfg).map_err(Into::into).map(|d| {
                println!("kernel norm        {:.16e}", d.kernel_norm);
                println!("covering constant  {:.16e}", d.covering_constant);
                match d.admissible_alpha {
                    Some((lo, hi)) => println!("admissible alpha   ({lo:.16e}, {hi:.16e})"),
                    None => println!("admissible alpha   none"),
                }
                if d.passes {
                    println!("conditions pass");
                    ExitCode::SUCCESS
                } else {
                    println!("conditions FAIL: {}", d.reason_text());
                    ExitCode::FAILURE
                }
            }),
        },
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}
