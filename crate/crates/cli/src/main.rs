use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use smms::identities::IDENTITY_IDS;
use smms::models::MODEL_NAMES;
use smms::spectral::{BASIS_KINDS, PROBE_HYPOTHESES};
use smms::weighted::DENSITY_KINDS;
use smms_cli::output::{render, Format};
use smms_cli::scenario::{BOUNDARY_CHECKS, DERIVATIVE_MODES};
use smms_cli::{run, Mode, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "smms", version, about = "Verify identities and solve kernel problems on smooth metric measure spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the identity, boundary and variation checks.
    Verify(RunArgs),
    /// Compute drift-Laplacian spectra and adjoint kernels.
    Solve(RunArgs),
    /// Run the resolution-ladder nonexistence probe.
    Probe(RunArgs),
    /// Everything the scenario asks for.
    Run(RunArgs),
    /// Print the registered models, densities, identities and bases.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    #[arg(required_unless_present = "scenario")]
    path: Option<PathBuf>,
    /// Scenario file, as a flag.
    #[arg(long, conflicts_with = "path")]
    scenario: Option<PathBuf>,
    /// Sample nodes per axis; also the basis size of the solver.
    #[arg(long)]
    resolution: Option<usize>,
    /// Identity tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Record wall-clock time in the report.
    #[arg(long)]
    timing: bool,
}

fn list() {
    let sections: [(&str, &[&str]); 7] = [
        ("models", &MODEL_NAMES),
        ("densities", &DENSITY_KINDS),
        ("identities", &IDENTITY_IDS),
        ("boundary checks", &BOUNDARY_CHECKS),
        ("derivatives", &DERIVATIVE_MODES),
        ("bases", &BASIS_KINDS),
        ("probe hypotheses", &PROBE_HYPOTHESES),
    ];
    for (name, items) in sections {
        println!("{name}:");
        for i in items {
            println!("  {i}");
        }
    }
}

fn execute(mode: Mode, args: RunArgs) -> ExitCode {
    let start = Instant::now();
    let overrides = Overrides {
        resolution: args.resolution,
        tolerance: args.tolerance,
        seed: args.seed,
    };
    let path = args.path.as_ref().or(args.scenario.as_ref()).expect("clap requires a scenario");
    let report = Scenario::load(path).and_then(|mut s| {
        overrides.apply(&mut s)?;
        run(&s, mode)
    });
    let mut report = match report {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if args.timing {
        report.wall_ms = Some(start.elapsed().as_millis() as u64);
    }
    let rendered = render(&report, args.format);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, rendered) {
                eprintln!("error: {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
        None => print!("{rendered}"),
    }
    ExitCode::from(report.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Verify(a) => execute(Mode::Verify, a),
        Command::Solve(a) => execute(Mode::Solve, a),
        Command::Probe(a) => execute(Mode::Probe, a),
        Command::Run(a) => execute(Mode::Run, a),
        Command::List => {
            list();
            ExitCode::SUCCESS
        }
    }
}
