//! `scalent` — experiment harness for scaling-entropy computations.
//!
//! Exit codes: 0 success, 1 verification failure, 2 configuration error,
//! 3 runtime error.

mod config;
mod run;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{bundled, ExperimentConfig, BUNDLED};

#[derive(Parser)]
#[command(
    name = "scalent",
    version,
    about = "Scaling entropy of measure-preserving systems: run benchmark experiments, \
             verify the numerics, list the catalog"
)]
struct Cli {
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,

    /// Worker threads for parallel sections (default: available cores).
    #[arg(long, global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config and persist the results.
    Run {
        /// Path to a TOML config, or the name of a bundled benchmark
        /// (see `scalent list configs`).
        #[arg(long)]
        config: String,

        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,

        /// Override the config's root seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the cross-module verification suites.
    Verify {
        /// Inject a deliberately broken metric; the axiom suite must
        /// flag it (the command then exits nonzero by design).
        #[arg(long)]
        fixture: Option<Fixture>,
    },
    /// Print the catalog.
    List {
        #[arg(value_enum)]
        kind: ListKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Fixture {
    BrokenMetric,
}

#[derive(Clone, Copy, ValueEnum)]
enum ListKind {
    Systems,
    Metrics,
    Configs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    if let Some(workers) = cli.workers {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
        {
            eprintln!("error: cannot configure {workers} workers: {e}");
            return ExitCode::from(3);
        }
    }

    match cli.command {
        Command::Run { config, out, seed } => cmd_run(&config, &out, seed, cli.quiet),
        Command::Verify { fixture } => cmd_verify(fixture, cli.quiet),
        Command::List { kind } => {
            cmd_list(kind);
            ExitCode::SUCCESS
        }
    }
}

fn cmd_run(config_arg: &str, out: &std::path::Path, seed: Option<u64>, quiet: bool) -> ExitCode {
    let text = if let Some(bundled_text) = bundled(config_arg) {
        bundled_text.to_string()
    } else {
        match std::fs::read_to_string(config_arg) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("error: cannot read config {config_arg}: {e}");
                eprintln!("hint: bundled names are {}", bundled_names().join(", "));
                return ExitCode::from(2);
            }
        }
    };

    let mut parsed = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = seed {
        parsed.seed = seed;
    }
    let resolved = match parsed.resolve() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    match run::run(&resolved, out, quiet) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}

fn cmd_verify(fixture: Option<Fixture>, quiet: bool) -> ExitCode {
    let inject = matches!(fixture, Some(Fixture::BrokenMetric));
    let results = verify::run_all(inject);
    let mut all_passed = true;
    for suite in &results {
        let status = if suite.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {:<26} {}", suite.name, suite.detail);
        all_passed &= suite.passed;
    }
    if all_passed {
        if !quiet {
            println!("all verification suites passed");
        }
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

fn cmd_list(kind: ListKind) {
    match kind {
        ListKind::Systems => {
            println!("rotation         circle rotation x -> x + alpha (mod 1); Lebesgue measure");
            println!("bernoulli_shift  coordinate shift on binary words; Bernoulli(p) measure");
            println!("pascal           Pascal adic transformation 1^i 0^j 1 -> 0^(j-1) 1^(i+1) 0; Bernoulli(p) measure");
        }
        ListKind::Metrics => {
            println!("cut              0/1 semimetric of a finite partition (circle arcs or word prefix)");
            println!("indicator        |chi_A(x) - chi_A(y)| for an arc A");
            println!("arc              geodesic distance on the circle");
            println!("dyadic           2^-n at the first differing symbol");
            println!("hamming_window   normalized Hamming distance on the first k symbols");
            println!("constant         distance 1 between distinct points (non-admissible fixture)");
        }
        ListKind::Configs => {
            for (name, text) in BUNDLED {
                let headline = text
                    .lines()
                    .find(|l| l.starts_with('#'))
                    .map(|l| l.trim_start_matches('#').trim())
                    .unwrap_or("");
                println!("{name:<20} {headline}");
            }
        }
    }
}
