use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use obstacle_lab::config::ExperimentConfig;
use obstacle_lab::harness::{self, RunReport, Stages};
use obstacle_lab::suite::{self, SuiteOptions};
use obstacle_lab::{output_dir, LabError};

#[derive(Parser)]
#[command(name = "obstacle-lab", version, about = "Obstacle problem experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve and write the solution and free boundary.
    Solve(RunArgs),
    /// Solve, then write energy traces and blow-up fits per center.
    Trace(RunArgs),
    /// Solve, then classify blow-ups and measure nondegeneracy.
    Classify(RunArgs),
    /// Run the epiperimetric batch.
    Epi(RunArgs),
    /// Run every stage and check.
    Run(RunArgs),
    /// Run the acceptance suite.
    Suite(SuiteArgs),
    /// Validate a configuration and print its hash.
    ValidateConfig(ConfigArg),
}

#[derive(Args)]
struct ConfigArg {
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Nodes per axis, overriding grid.nodes.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Skip the second pass and the determinism criterion.
    #[arg(long)]
    no_rerun: bool,
    #[arg(long)]
    quiet: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode, LabError> {
    let (args, stages) = match command {
        Command::Solve(a) => (a, Stages::SOLVE),
        Command::Trace(a) => (a, Stages::TRACE),
        Command::Classify(a) => (a, Stages::CLASSIFY),
        Command::Epi(a) => (a, Stages::EPI),
        Command::Run(a) => (a, Stages::ALL),
        Command::ValidateConfig(a) => {
            let config = ExperimentConfig::load(&a.config)?;
            config.validate()?;
            println!("{}", config.hash());
            return Ok(ExitCode::SUCCESS);
        }
        Command::Suite(a) => {
            let options = SuiteOptions {
                out: output_dir(a.out),
                seed: a.seed,
                rerun: !a.no_rerun,
                verbose: !a.quiet,
            };
            let report = suite::run_suite(&options)?;
            if !a.quiet {
                println!(
                    "{} of {} criteria passed; results in {}",
                    report.criteria.iter().filter(|c| c.passed).count(),
                    report.criteria.len(),
                    options.out.display()
                );
            }
            return Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE });
        }
    };
    let mut config = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(nodes) = args.grid {
        config.grid.nodes = nodes;
    }
    let out = output_dir(args.out.or_else(|| config.output.dir.clone()));
    let report = harness::run(&config, &out, stages)?;
    if !args.quiet {
        print_report(&report);
    }
    Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn print_report(report: &RunReport) {
    for s in report.failed_stages() {
        println!("stage {} failed: {}", s.stage, s.error.as_deref().unwrap_or(""));
    }
    for c in &report.checks {
        let measured = c.measured.map_or_else(|| "-".to_string(), |m| format!("{m:.6e}"));
        println!(
            "{} {:<24} {measured:>14} (threshold {:e}) {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.threshold,
            c.detail
        );
    }
    println!(
        "{} [{}] {} -> {}",
        report.name,
        report.config_hash,
        if report.passed { "passed" } else { "failed" },
        report.dir.display()
    );
}
