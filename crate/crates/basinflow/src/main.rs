//! Thin command-line front end; all logic lives in the library.

use clap::{Args, Parser, Subcommand};

use basinflow::cli::{self, CliArgs};

#[derive(Parser)]
#[command(
    name = "basinflow",
    version,
    about = "Semilinear heat flow with a saturating nonlocal diffusion coefficient: \
             simulation, blow-up classification, threshold search, steady states"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evolve the flow and dump trace + field snapshots
    Simulate(RunFlags),
    /// Decide decay / blow-up / undecided for the configured datum
    Classify(RunFlags),
    /// Locate the basin-boundary scalar along the initial direction
    Threshold(RunFlags),
    /// Full pipeline: bracket, bisect, extract the plateau, Newton-refine
    Steady(RunFlags),
    /// Audit the structural hypotheses of the configured model
    #[command(name = "verify-conditions")]
    VerifyConditions(RunFlags),
    /// Compare the integrator against the spectral mild-solution oracle
    #[command(name = "oracle-check")]
    OracleCheck(RunFlags),
}

#[derive(Args)]
struct RunFlags {
    /// Flat `key = value` config file
    #[arg(long, value_name = "PATH")]
    config: Option<std::path::PathBuf>,
    /// Problem preset: example1, example2, heat, cubic
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,
    /// Override one config key, e.g. --set grid.nx=64 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory for artifacts and the manifest
    #[arg(long, value_name = "DIR")]
    out: Option<std::path::PathBuf>,
    /// Seed for the certificate's randomized restarts
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

impl RunFlags {
    fn into_args(self) -> CliArgs {
        CliArgs {
            config: self.config,
            preset: self.preset,
            set: self.set,
            out: self.out,
            seed: self.seed,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    let (sub, flags) = match cli.cmd {
        Cmd::Simulate(f) => (cli::Subcommand::Simulate, f),
        Cmd::Classify(f) => (cli::Subcommand::Classify, f),
        Cmd::Threshold(f) => (cli::Subcommand::Threshold, f),
        Cmd::Steady(f) => (cli::Subcommand::Steady, f),
        Cmd::VerifyConditions(f) => (cli::Subcommand::VerifyConditions, f),
        Cmd::OracleCheck(f) => (cli::Subcommand::OracleCheck, f),
    };
    std::process::exit(cli::run(sub, &flags.into_args()));
}
