use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rydlat::config::{parse_config, parse_override};
use rydlat::error::{CliError, EXIT_USAGE};
use rydlat::{run, Command};

#[derive(Parser)]
#[command(name = "rydlat", version, about = "Sub-wavelength lattice potentials from Rydberg-dressed pairs")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// Scenario JSON file.
    #[arg(long)]
    config: PathBuf,
    /// Override a scenario value by dotted path, e.g. `params.omega1_over_2pi_hz=2e4`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory; overrides `output_dir` in the scenario.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Subcommand)]
enum Sub {
    /// Interaction versus Ω₂(x₂) and versus position near a node.
    PotentialScan(Common),
    /// Lorentzian fits of the numeric trap for several Ω₂sw.
    LorentzianFit(Common),
    /// Double-excitation eigenvalues versus Ω₂(x₂).
    Spectrum(Common),
    /// Two-atom motional ground state on a trap surface.
    GroundState(Common),
    /// Ω₁ calibrated to a loss target across Ω₂c.
    LossBudget(Common),
    /// Black-body survival time budget.
    Bbr(Common),
    /// Blockade leakage versus distance.
    Blockade(Common),
    /// Resonance-offset field around a node pair.
    ResonanceMap(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::PotentialScan(c) => (Command::PotentialScan, c),
            Sub::LorentzianFit(c) => (Command::LorentzianFit, c),
            Sub::Spectrum(c) => (Command::Spectrum, c),
            Sub::GroundState(c) => (Command::GroundState, c),
            Sub::LossBudget(c) => (Command::LossBudget, c),
            Sub::Bbr(c) => (Command::Bbr, c),
            Sub::Blockade(c) => (Command::Blockade, c),
            Sub::ResonanceMap(c) => (Command::ResonanceMap, c),
        }
    }
}

fn execute(cmd: Command, common: Common) -> Result<PathBuf, CliError> {
    let overrides = common.set.iter().map(|s| parse_override(s)).collect::<Result<Vec<_>, _>>()?;
    let mut scenario = parse_config(&common.config, &overrides)?;
    if let Some(out) = common.out {
        scenario.output_dir = out;
    }
    run(cmd, &scenario, common.threads.map(usize::from))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { 0 });
        }
    };
    let (cmd, common) = cli.command.split();
    match execute(cmd, common) {
        Ok(manifest) => {
            log::info!("wrote {}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("rydlat {}: {e}", cmd.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
