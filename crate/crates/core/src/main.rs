use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use entropy_decay::experiment::{run_and_write, ExperimentConfig, RunReport, Verb, EXIT_CONFIG};

#[derive(Parser, Debug)]
#[command(name = "entropy-decay", version, about = "Decay experiments for multidimensional scalar conservation laws")]
struct Cli {
    /// Scenario file (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed stored in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Divides the cell width by this factor.
    #[arg(long, global = true)]
    resolution_scale: Option<f64>,
    /// Prints only the summary line.
    #[arg(long, short, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Localized decay of the X-norm on the whole space.
    Decay,
    /// Decay towards the mean on a torus.
    PeriodicDecay,
    /// Traveling wave for a flux that is affine on an interval.
    Counterexample,
    /// Periodic upper and lower solutions bounding the localized one.
    Pipeline,
    /// Checks the nonlinearity condition of the flux.
    CheckGn,
    /// Draws or certifies a lattice avoiding the flux's affine subspaces.
    LatticeCert,
}

impl From<Command> for Verb {
    fn from(c: Command) -> Verb {
        match c {
            Command::Decay => Verb::Decay,
            Command::PeriodicDecay => Verb::PeriodicDecay,
            Command::Counterexample => Verb::Counterexample,
            Command::Pipeline => Verb::Pipeline,
            Command::CheckGn => Verb::CheckGn,
            Command::LatticeCert => Verb::LatticeCert,
        }
    }
}

fn print_report(report: &RunReport, quiet: bool) {
    if !quiet {
        for note in &report.notes {
            println!("note: {note}");
        }
        for v in &report.verdicts {
            let tag = if v.passed { "PASS" } else { "FAIL" };
            println!("{tag} {}: {}", v.name, v.detail);
        }
    }
    let failed = report.verdicts.iter().filter(|v| !v.passed).count();
    println!(
        "{}: {} verdicts, {} failed",
        report.command,
        report.verdicts.len(),
        failed
    );
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Some(path) = cli.config.as_ref() else {
        eprintln!("error: --config is required");
        return ExitCode::from(EXIT_CONFIG as u8);
    };
    let config = match ExperimentConfig::from_path(path).and_then(|c| c.with_overrides(cli.seed, cli.resolution_scale)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let verb = Verb::from(cli.command);
    match run_and_write(verb, &config, &cli.out_dir) {
        Ok((report, code)) => {
            print_report(&report, cli.quiet);
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
