//! `dephasing`: run parameter sweeps and property checks from JSON configs.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod bundled;
mod config;
mod output;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ConfigError, Plan};
use crate::verify::CheckKind;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_PROPERTY: u8 = 4;

#[derive(Parser)]
#[command(
    name = "dephasing",
    version,
    about = "Pure-dephasing rate sweeps for ultrastrongly coupled systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Config file, or the name of a bundled config (see list-configs).
    config: String,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the config's grid and write CSV plus provenance JSON.
    Run {
        #[command(flatten)]
        common: Common,
        /// Write results even if some points did not converge.
        #[arg(long)]
        allow_partial: bool,
    },
    /// Check gauge invariance, normalisation and oracle agreement at the
    /// config's parameters and write a pass/fail JSON report.
    Verify {
        #[command(flatten)]
        common: Common,
    },
    /// List the bundled configs.
    ListConfigs,
}

fn prepare(common: &Common) -> Result<(String, Plan), ConfigError> {
    if let Some(jobs) = common.jobs {
        if jobs == 0 {
            return Err(ConfigError("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| ConfigError(format!("cannot start {jobs} worker threads: {e}")))?;
    }
    let (source, text) = config::load(&common.config)?;
    let plan = config::parse(&text, common.seed)?;
    Ok((source, plan))
}

fn run(common: &Common, allow_partial: bool) -> Result<ExitCode, ConfigError> {
    let (source, plan) = prepare(common)?;
    log::info!(
        "running {} ({} couplings)",
        plan.config.name,
        plan.couplings.len()
    );
    let output = run::execute(&plan)?;
    if !output.failures.is_empty() {
        for f in &output.failures {
            log::error!(
                "point {} ({}) [{}]: {}",
                f.index,
                f.coordinates,
                f.mode,
                f.error
            );
        }
        if !allow_partial {
            eprintln!(
                "{} point(s) failed; nothing written (use --allow-partial to keep the rest)",
                output.failures.len()
            );
            let code = if output.has_convergence_failure() {
                EXIT_CONVERGENCE
            } else {
                EXIT_PROPERTY
            };
            return Ok(ExitCode::from(code));
        }
    }
    let io =
        |e: std::io::Error| ConfigError(format!("cannot write to {}: {e}", common.out.display()));
    let csv = output::write_atomic(&common.out, &plan.csv_name(), &output::render_csv(&output))
        .map_err(io)?;
    let provenance = output::provenance(&plan, &source, &output);
    let json = output::write_atomic(
        &common.out,
        &plan.provenance_name(),
        &output::to_json(&provenance),
    )
    .map_err(io)?;
    println!("{}", csv.display());
    println!("{}", json.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(common: &Common) -> Result<ExitCode, ConfigError> {
    let (_, plan) = prepare(common)?;
    let report = verify::verify(&plan);
    let bytes = output::to_json(&report);
    output::write_atomic(&common.out, &plan.verify_name(), &bytes)
        .map_err(|e| ConfigError(format!("cannot write to {}: {e}", common.out.display())))?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(if report.has_failed(CheckKind::Convergence) {
        ExitCode::from(EXIT_CONVERGENCE)
    } else if report.has_failed(CheckKind::Property) {
        ExitCode::from(EXIT_PROPERTY)
    } else {
        ExitCode::SUCCESS
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run {
            common,
            allow_partial,
        } => run(common, *allow_partial),
        Command::Verify { common } => verify(common),
        Command::ListConfigs => {
            for (name, text) in bundled::ALL {
                let description = config::parse(text, None)
                    .map(|p| p.config.description)
                    .unwrap_or_default();
                println!("{name:<16} {description}");
            }
            Ok(ExitCode::SUCCESS)
        }
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_VALIDATION)
    })
}
