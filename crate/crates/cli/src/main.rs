//! `dismet` binary: metric evaluation, scenario oracles, sweeps, selection,
//! heatmaps, synthetic data generation, and probes.
//!
//! Exit codes: 0 success, 2 input/usage errors, 3 metric computation
//! errors, 4 oracle mismatches.

mod args;
mod commands;

use clap::Parser;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Metric(String),
    Oracle(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Metric(_) => 3,
            CliError::Oracle(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Metric(m) | CliError::Oracle(m) => m,
        }
    }
}

fn thread_count(flag: Option<usize>) -> Option<usize> {
    flag.or_else(|| {
        std::env::var("DISMET_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
}

fn main() {
    let cli = args::Cli::parse();
    if let Some(threads) = thread_count(cli.threads) {
        if threads == 0 {
            eprintln!("error: thread count must be >= 1");
            std::process::exit(2);
        }
        // Thread count affects wall time only; every parallel merge in the
        // library is index-ordered.
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot configure {threads} threads: {e}");
            std::process::exit(2);
        }
    }

    let result = match &cli.command {
        args::Command::Eval(cmd) => commands::eval(cli.threads, cmd),
        args::Command::Scenario(cmd) => commands::scenario(cmd),
        args::Command::Sweep(cmd) => commands::sweep(cmd),
        args::Command::Topk(cmd) => commands::topk(cmd),
        args::Command::Cooccur(cmd) => commands::cooccur(cmd),
        args::Command::Heatmap(cmd) => commands::heatmap(cmd),
        args::Command::Gen(cmd) => commands::gen(cmd),
        args::Command::Probe(cmd) => commands::probe(cmd),
    };
    if let Err(err) = result {
        eprintln!("error: {}", err.message());
        std::process::exit(err.exit_code());
    }
}
