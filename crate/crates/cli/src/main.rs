use clap::{Args, Parser, Subcommand};
use mimosim::experiment::{load_config, run, ExperimentConfig, ExperimentError, ExperimentKind};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

/// Seeded massive-MIMO CSI experiments with CSV output.
#[derive(Parser)]
#[command(name = "mimosim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Power ratio of the K strongest coefficients in DFT and eigen bases.
    PowerRatio(RunArgs),
    /// Channel-estimation MSE with fixed and hopping cyclic shifts.
    SrsMse(RunArgs),
    /// Per-UE SINR for single-TRP and coherent joint transmission.
    CjtSinr(RunArgs),
    /// Predicted versus stale CSI NMSE.
    Predict(RunArgs),
    /// Beam tracking with DCI and MAC-CE indication.
    BeamSim(RunArgs),
    /// User perceived throughput per drop.
    Upt(RunArgs),
    /// DMRS OCC leakage against delay spread.
    Occ(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; defaults are used when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Output CSV path; standard output when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Overrides the configured number of drops.
    #[arg(long, value_name = "N")]
    drops: Option<usize>,
}

impl Command {
    fn split(self) -> (ExperimentKind, RunArgs) {
        match self {
            Command::PowerRatio(a) => (ExperimentKind::PowerRatio, a),
            Command::SrsMse(a) => (ExperimentKind::SrsMse, a),
            Command::CjtSinr(a) => (ExperimentKind::CjtSinr, a),
            Command::Predict(a) => (ExperimentKind::Predict, a),
            Command::BeamSim(a) => (ExperimentKind::BeamSim, a),
            Command::Upt(a) => (ExperimentKind::Upt, a),
            Command::Occ(a) => (ExperimentKind::Occ, a),
        }
    }
}

fn execute(kind: ExperimentKind, args: RunArgs) -> Result<(), ExperimentError> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::new(kind),
    };
    if cfg.experiment != kind {
        return Err(ExperimentError::Config {
            key: "experiment".into(),
            message: format!("config is for `{}` but `{kind}` was requested", cfg.experiment),
        });
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(drops) = args.drops {
        cfg.drops = drops;
    }
    let table = run(&cfg)?;
    match &args.out {
        Some(path) => table.write_to_path(path),
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            table.write_csv(&mut lock)?;
            lock.flush().map_err(|source| ExperimentError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (kind, args) = cli.command.split();
    match execute(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
