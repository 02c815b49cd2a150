mod commands;
mod output;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use daqc_core::signmatrix::Protocol;
use daqc_core::simulator::SimulationMode;
use daqc_core::DaqcError;

#[derive(Parser)]
#[command(
    name = "daqc",
    version,
    about = "Digital-analog schedule compiler for two-body Hamiltonians"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a target Hamiltonian into a schedule of analog blocks.
    Compile(CompileArgs),
    /// Simulate a schedule and compare it with the target evolution.
    Verify(VerifyArgs),
    /// Optimize a layered digital-analog circuit.
    Optimize(OptimizeArgs),
    /// Trotter baseline costs for the XY chain on a cross-resonance source.
    Baseline(BaselineArgs),
    /// Regenerate the data behind a published figure as CSV.
    Repro(ReproArgs),
    /// Print a sign matrix and optionally check its structure.
    Matrix(MatrixArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProtocolArg {
    General,
    Zz,
}

impl From<ProtocolArg> for Protocol {
    fn from(p: ProtocolArg) -> Self {
        match p {
            ProtocolArg::General => Protocol::General,
            ProtocolArg::Zz => Protocol::Zz,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Exact,
    #[value(name = "pairwise-trotter", alias = "pairwise_trotter")]
    PairwiseTrotter,
}

impl From<ModeArg> for SimulationMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Exact => SimulationMode::Exact,
            ModeArg::PairwiseTrotter => SimulationMode::PairwiseTrotter,
        }
    }
}

#[derive(Args)]
pub struct CompileArgs {
    /// Source Hamiltonian file.
    pub source: PathBuf,
    /// Target Hamiltonian file.
    pub target: PathBuf,
    /// Target evolution time T.
    #[arg(long = "time", short = 't')]
    pub time: f64,
    /// Solve for non-negative times over the full gate pool.
    #[arg(long)]
    pub positive: bool,
    /// Protocol used without --positive.
    #[arg(long, value_enum, default_value = "general")]
    pub protocol: ProtocolArg,
    #[arg(long, default_value_t = 1)]
    pub trotter_steps: usize,
    /// Single-qubit gate time, for the block-length metric.
    #[arg(long)]
    pub gate_time: Option<f64>,
    /// Schedule output file.
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct VerifyArgs {
    /// Schedule file.
    pub schedule: PathBuf,
    /// Source Hamiltonian the schedule was compiled for.
    #[arg(long)]
    pub source: PathBuf,
    /// Target Hamiltonian file.
    #[arg(long)]
    pub target: PathBuf,
    #[arg(long, value_enum, default_value = "exact")]
    pub mode: ModeArg,
    /// Comma-separated Trotter step counts to sweep.
    #[arg(long, value_delimiter = ',')]
    pub sweep: Vec<usize>,
    /// Sweep CSV output; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Fail with exit code 4 when the distance exceeds this.
    #[arg(long)]
    pub tolerance: Option<f64>,
}

#[derive(Args)]
pub struct OptimizeArgs {
    /// Source Hamiltonian file.
    pub source: PathBuf,
    /// Target Hamiltonian file.
    pub target: PathBuf,
    #[arg(long = "time", short = 't')]
    pub time: f64,
    /// Number of analog blocks K.
    #[arg(long, short = 'k')]
    pub blocks: usize,
    /// Base configuration file (TOML); flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, conflicts_with = "free_time")]
    pub fixed_time: bool,
    #[arg(long)]
    pub free_time: bool,
    /// Cost model used during optimization.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long)]
    pub bayes_steps: Option<usize>,
    #[arg(long)]
    pub gd_max_iters: Option<usize>,
    /// Trotter steps of the reference baseline.
    #[arg(long)]
    pub baseline_trotter_steps: Option<usize>,
    /// Fail with exit code 4 when the best exact cost exceeds this.
    #[arg(long)]
    pub max_cost: Option<f64>,
    /// Result output file (TOML).
    #[arg(long, short = 'o')]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct BaselineArgs {
    #[arg(long, short = 'n', default_value_t = 6)]
    pub qubits: usize,
    /// Coupling g of the source and the XY target.
    #[arg(long, default_value_t = 1.0)]
    pub coupling: f64,
    #[arg(long = "time", short = 't')]
    pub time: f64,
    #[arg(long, default_value_t = 19)]
    pub max_trotter_steps: usize,
    /// Draw an inhomogeneous source with this standard deviation.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Args)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    #[arg(long = "time", short = 't')]
    pub time: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, short = 'n', default_value_t = 6)]
    pub qubits: usize,
    #[arg(long, default_value_t = 8)]
    pub max_blocks: usize,
    #[arg(long, default_value_t = 19)]
    pub max_trotter_steps: usize,
    #[arg(long, default_value_t = 20)]
    pub runs: usize,
    #[arg(long, default_value_t = 10)]
    pub bayes_steps: usize,
    #[arg(long, default_value_t = 300)]
    pub gd_max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.175)]
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Figure {
    Fig3,
}

#[derive(Args)]
pub struct MatrixArgs {
    /// Number of qubits.
    pub n: usize,
    #[arg(long, value_enum, default_value = "general")]
    pub protocol: ProtocolArg,
    /// Run the structural checks; exits with code 3 when the matrix is singular.
    #[arg(long)]
    pub check: bool,
    /// CSV output; standard output when omitted.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// A failure with an explicit exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Failure {}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_UNSIMULABLE: u8 = 2;
pub const EXIT_SINGULAR: u8 = 3;
pub const EXIT_TOLERANCE: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(f) = err.downcast_ref::<Failure>() {
        return f.code;
    }
    match err.chain().find_map(|e| e.downcast_ref::<DaqcError>()) {
        Some(
            DaqcError::Unsimulable(_)
            | DaqcError::ProtocolMismatch { .. }
            | DaqcError::QubitCapExceeded { .. },
        ) => EXIT_UNSIMULABLE,
        Some(DaqcError::SingularSystem { .. }) => EXIT_SINGULAR,
        Some(
            DaqcError::NegativeTimes { .. }
            | DaqcError::ResidualTooLarge { .. }
            | DaqcError::NegativeDuration { .. },
        ) => EXIT_TOLERANCE,
        _ => EXIT_USAGE,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Compile(a) => commands::compile(&a),
        Command::Verify(a) => commands::verify(&a),
        Command::Optimize(a) => commands::optimize(&a),
        Command::Baseline(a) => commands::baseline(&a),
        Command::Repro(a) => commands::repro(&a),
        Command::Matrix(a) => commands::matrix(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
