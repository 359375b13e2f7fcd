//! `fint` — command-line front end for the filter-integration laboratory.
//!
//! Exit codes: 0 = pass / verified / converged, 1 = fail / not Cauchy,
//! 2 = unknown / inconclusive, 64 = usage or configuration error.
//! A JSON report is always written to the output directory.

mod commands;
mod config;
mod report;
mod suite;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::commands::Outcome;

#[derive(Parser)]
#[command(
    name = "fint",
    version,
    about = "Exact-arithmetic experiments on filter integration over tagged partitions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Default, Clone)]
struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,
    /// Output directory for report.json and tables/.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    /// Cap on worker threads (0 = default). Output never depends on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Add lossy decimal columns for human reading.
    #[arg(long, global = true)]
    approx: bool,
    /// Deterministic seed; required (here or in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Grid denominator bound for samplers.
    #[arg(long, global = true)]
    denominator_bound: Option<u32>,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the filter limit of an integrand over a base.
    Integrate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        function: Option<String>,
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<String>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Exact distance between two partition files.
    Rho {
        #[command(flatten)]
        common: CommonArgs,
        file_a: std::path::PathBuf,
        file_b: std::path::PathBuf,
    },
    /// Check the metric axioms on a seeded random sample of partitions.
    CheckMetric {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        max_cells: Option<u32>,
    },
    /// Certify that the filter of `--finer` contains the filter of `--coarser`.
    Subset {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        coarser: Option<String>,
        #[arg(long)]
        finer: Option<String>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Certify that `--dominating` rho-dominates `--dominated` at scale epsilon.
    Dominance {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        dominated: Option<String>,
        #[arg(long)]
        dominating: Option<String>,
        #[arg(long)]
        epsilon: Option<String>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
        /// `identity` or `tag-perturb`.
        #[arg(long)]
        projector: Option<String>,
    },
    /// Restrict a partition file to [alpha, beta] and print it with its trace.
    Restrict {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        partition: Option<std::path::PathBuf>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
    },
    /// Estimate the filter limit over the restriction of a base to [alpha, beta].
    SubsegmentIntegrate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        function: Option<String>,
        #[arg(long)]
        base: Option<String>,
        #[arg(long)]
        alpha: Option<String>,
        #[arg(long)]
        beta: Option<String>,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<String>,
        #[arg(long)]
        pairs: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
    },
    /// Run the full theorem manifest and summarize pass/fail/unknown.
    TheoremSuite {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        samples: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version are not usage errors.
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(cli.command) {
        Ok(Outcome::Pass) => ExitCode::from(0),
        Ok(Outcome::Fail) => ExitCode::from(1),
        Ok(Outcome::Unknown) => ExitCode::from(2),
        Err(err) => {
            if err.downcast_ref::<config::UsageError>().is_some() {
                eprintln!("usage error: {err}");
                ExitCode::from(64)
            } else {
                eprintln!("error: {err}");
                ExitCode::from(1)
            }
        }
    }
}
