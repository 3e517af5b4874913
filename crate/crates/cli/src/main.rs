use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use objectify_cli::{bundled, default_seed, load_scenario, run, suite, LoadOptions, RunOptions, SuiteConfig, BUNDLED};

/// Energetics of quantum measurement: run scenarios and the invariant suite.
#[derive(Parser)]
#[command(name = "objectify", version)]
struct Cli {
    /// Tolerance for scenario validation and the checks reported by `run`.
    #[arg(long, global = true, default_value_t = objectify::matrix::DEFAULT_TOL)]
    tol: f64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a scenario file.
    Validate { file: PathBuf },
    /// Compute energetics, heat variance and information transfer for a scenario.
    Run {
        file: PathBuf,
        /// Skew-information exponent in (0, 1); repeatable, replaces the scenario list.
        #[arg(long = "alpha")]
        alpha: Vec<f64>,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Record wall-clock time in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Check every invariant on randomised instances.
    Suite {
        /// Defaults to $OBJECTIFY_SEED, else 0.
        #[arg(long)]
        seed: Option<u64>,
        /// System and apparatus dimensions to sample.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        dims: Vec<usize>,
        #[arg(long, default_value_t = SuiteConfig::default().schemes)]
        schemes: usize,
        #[arg(long, default_value_t = SuiteConfig::default().block_states)]
        block_states: usize,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
        /// Print the summary as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Print a bundled scenario.
    Example {
        name: Option<String>,
        /// List bundled scenarios.
        #[arg(long)]
        list: bool,
    },
}

const EXIT_INVALID: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_SUITE: u8 = 3;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = match default_seed() {
        Ok(seed) => seed,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(EXIT_INVALID);
        }
    };
    let load = LoadOptions {
        tol: cli.tol,
        default_seed: seed,
    };
    match cli.command {
        Command::Validate { file } => match load_scenario(&file, &load) {
            Ok(sc) => {
                println!("{}: valid (sha256 {})", sc.name, sc.sha256);
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
        Command::Run {
            file,
            alpha,
            out,
            timing,
        } => {
            let report = match load_scenario(&file, &load).and_then(|sc| run(&sc, &RunOptions { alphas: alpha, timing })) {
                Ok(report) => report,
                Err(e) => return fail(e),
            };
            let json = serde_json::to_string_pretty(&report).expect("report serialises") + "\n";
            match out {
                Some(path) => {
                    if let Err(e) = fs::write(&path, json) {
                        eprintln!("error: cannot write {}: {e}", path.display());
                        return ExitCode::from(EXIT_RUNTIME);
                    }
                }
                None => print!("{json}"),
            }
            ExitCode::SUCCESS
        }
        Command::Suite {
            seed: explicit,
            dims,
            schemes,
            block_states,
            threads,
            json,
        } => {
            if dims.is_empty() || dims.contains(&0) || dims.contains(&1) {
                eprintln!("error: --dims must list dimensions of at least 2");
                return ExitCode::from(EXIT_INVALID);
            }
            let summary = suite(&SuiteConfig {
                seed: explicit.unwrap_or(seed),
                dims,
                schemes,
                block_states,
                threads,
            });
            if json {
                println!("{}", serde_json::to_string_pretty(&summary).expect("summary serialises"));
            } else {
                print!("{}", summary.render());
            }
            if summary.passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_SUITE)
            }
        }
        Command::Example { name, list } => {
            if list || name.is_none() {
                for b in BUNDLED {
                    println!("{:<28} {}", b.name, b.summary);
                }
                return ExitCode::SUCCESS;
            }
            let name = name.expect("checked above");
            match bundled(&name) {
                Some(b) => {
                    print!("{}", b.json);
                    ExitCode::SUCCESS
                }
                None => fail(objectify_cli::CliError::UnknownExample(name)),
            }
        }
    }
}

fn fail(e: objectify_cli::CliError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
