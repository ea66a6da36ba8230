use std::path::PathBuf;
use std::process::ExitCode;

use bursty_cli::{execute, help, verify, CliResult, Command, RunConfig};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bursty", version, about = "Simulate and analyze bursty nonlinear SDE signals", after_help = help::exit_codes())]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration
    #[arg(short, long)]
    config: PathBuf,
    /// Output directory (created if missing)
    #[arg(short, long)]
    out: PathBuf,
    /// Re-run into a scratch directory afterwards and compare checksums
    #[arg(long)]
    verify: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate SDE realizations and store their paths
    #[command(after_long_help = help::simulate())]
    Simulate(RunArgs),
    /// Burst statistics, fits, spectrum and analytic overlay
    #[command(after_long_help = help::analyze())]
    Analyze(RunArgs),
    /// Tabulate the analytic burst-duration densities
    #[command(after_long_help = help::fpt())]
    Fpt(RunArgs),
    /// Simulate modulated returns and their filtered bursts
    #[command(after_long_help = help::returns())]
    Returns(RunArgs),
    /// Re-run an output directory's config and compare every checksum
    Verify {
        /// Directory written by an earlier run
        dir: PathBuf,
    },
}

fn run_command(command: Command, args: &RunArgs) -> CliResult<()> {
    let base = args.config.parent().map(PathBuf::from).unwrap_or_default();
    let cfg = RunConfig::load(&args.config)?.resolve(command, &base)?;
    let manifest = execute(&cfg, &args.out)?;
    println!("wrote {} files to {} (config {})", manifest.files.len(), args.out.display(), manifest.config_hash);
    if args.verify {
        report(verify(&args.out)?);
    }
    Ok(())
}

fn report(v: bursty_cli::Verification) {
    println!("verified {} files (config {})", v.files, v.config_hash);
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.cmd {
        Cmd::Simulate(a) => run_command(Command::Simulate, a),
        Cmd::Analyze(a) => run_command(Command::Analyze, a),
        Cmd::Fpt(a) => run_command(Command::Fpt, a),
        Cmd::Returns(a) => run_command(Command::Returns, a),
        Cmd::Verify { dir } => {
            report(verify(dir)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
