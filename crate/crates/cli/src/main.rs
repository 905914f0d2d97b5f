//! `oatsim`: Q-function snapshots, GHZ parity experiments and the oracle
//! suite, each writing a manifest with content hashes next to its outputs.

mod commands;
mod manifest;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Failure classes, each with its own exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Flag(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    NonConvergence(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Flag(_) => 2,
            Self::Validation(_) => 3,
            Self::NonConvergence(_) => 4,
            Self::Io(_) | Self::Json(_) => 1,
        }
    }
}

impl From<oatsim_core::Error> for CliError {
    fn from(e: oatsim_core::Error) -> Self {
        use oatsim_core::Error as E;
        match e {
            E::NonConvergence(_) => Self::NonConvergence(e.to_string()),
            E::Config(_) | E::SingularConfusion(_) => Self::Validation(e.to_string()),
            E::Io(io) => Self::Io(io),
            E::Json(j) => Self::Json(j),
            other => Self::Flag(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "oatsim", version, about = "One-axis-twisting simulator for bus-coupled qubit arrays")]
struct Cli {
    /// Cap on worker threads (default: one per core).
    #[arg(long, global = true, env = "OATSIM_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Q-function grids at a list of times.
    Qfunc(QfuncArgs),
    /// GHZ preparation, parity scan, fidelity and witness.
    Ghz(GhzArgs),
    /// Cross-path oracle suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    H1,
    H2,
    Oat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Frame {
    Exchange,
    Quadratic,
    Aligned,
}

impl From<Frame> for oatsim_core::OatFrame {
    fn from(f: Frame) -> Self {
        match f {
            Frame::Exchange => Self::Exchange,
            Frame::Quadratic => Self::Quadratic,
            Frame::Aligned => Self::Aligned,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Switch {
    On,
    Off,
}

impl Switch {
    pub fn is_on(self) -> bool {
        self == Self::On
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LevelArg {
    Fast,
    Full,
}

/// Device, register and dynamics flags shared by qfunc and ghz.
#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// Device JSON (default: the bundled 20-qubit device table).
    #[arg(long, env = "OATSIM_DEVICE")]
    pub device: Option<PathBuf>,

    /// Number of qubits, taken from the start of the device list.
    #[arg(long, env = "OATSIM_N", value_parser = clap::value_parser!(u16).range(1..=20))]
    pub n: u16,

    #[arg(long, env = "OATSIM_MODEL", value_enum, default_value = "oat")]
    pub model: ModelKind,

    /// Qubit-bus detuning Δ = ω_q − ω_B in MHz.
    #[arg(long, env = "OATSIM_DETUNING_MHZ", default_value_t = -470.0, allow_negative_numbers = true)]
    pub detuning_mhz: f64,

    /// Twisting strength λ̄ in MHz for the oat model (default: mean g_j g_k / Δ).
    #[arg(long, env = "OATSIM_LAMBDA_MHZ", allow_negative_numbers = true)]
    pub lambda_mhz: Option<f64>,

    /// Replace every bus coupling by this value (MHz).
    #[arg(long, env = "OATSIM_UNIFORM_G")]
    pub uniform_g: Option<f64>,

    /// Nearest-neighbour ring crosstalk in the h1 and h2 models.
    #[arg(long, env = "OATSIM_CROSSTALK", value_enum, default_value = "off")]
    pub crosstalk: Switch,

    /// Photon-number cutoff of the h1 model.
    #[arg(long, env = "OATSIM_N_MAX", default_value_t = 2)]
    pub n_max: usize,

    /// Permit the h1 model above 14 qubits.
    #[arg(long, env = "OATSIM_ALLOW_LARGE_H1")]
    pub allow_large_h1: bool,

    /// Propagation tolerance.
    #[arg(long, env = "OATSIM_TOL", default_value_t = oatsim_core::DEFAULT_TOL)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct QfuncArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// Linear and constant part of the oat model.
    #[arg(long, env = "OATSIM_OAT_FRAME", value_enum, default_value = "exchange")]
    pub oat_frame: Frame,

    /// Comma-separated times in ns, or cat:m1,m2,... for t = π/(m|λ̄|).
    #[arg(long, env = "OATSIM_TIMES")]
    pub times: String,

    /// Grid size as THETAxPHI.
    #[arg(long, env = "OATSIM_GRID", default_value = "61x121")]
    pub grid: String,

    /// Uniform frame phase (rad) applied to every snapshot.
    #[arg(long, env = "OATSIM_FRAME_PHASE", allow_negative_numbers = true)]
    pub frame_phase: Option<f64>,

    #[arg(long, env = "OATSIM_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct GhzArgs {
    #[command(flatten)]
    pub system: SystemArgs,

    /// Linear and constant part of the oat model.
    #[arg(long, env = "OATSIM_OAT_FRAME", value_enum, default_value = "aligned")]
    pub oat_frame: Frame,

    /// Twisting time in ns (default π/(2|λ̄|)).
    #[arg(long, env = "OATSIM_DURATION_NS")]
    pub duration_ns: Option<f64>,

    /// Shots per analysis setting (default 30·2^N).
    #[arg(long, env = "OATSIM_SHOTS", conflicts_with = "exact", value_parser = clap::value_parser!(u64).range(1..))]
    pub shots: Option<u64>,

    /// Use exact outcome probabilities instead of shots.
    #[arg(long, env = "OATSIM_EXACT")]
    pub exact: bool,

    #[arg(long, env = "OATSIM_SEED", default_value_t = 0)]
    pub seed: u64,

    /// Number of γ points over [−π/2, π/2].
    #[arg(long, env = "OATSIM_GAMMA_POINTS", default_value_t = 41, value_parser = clap::value_parser!(u64).range(1..))]
    pub gamma_points: u64,

    /// Readout confusion from the device fidelities, undone in processing.
    #[arg(long, env = "OATSIM_CONFUSION", value_enum, default_value = "on")]
    pub confusion: Switch,

    /// Uniform frame phase (rad) applied after twisting.
    #[arg(long, env = "OATSIM_FRAME_PHASE", allow_negative_numbers = true)]
    pub frame_phase: Option<f64>,

    #[arg(long, env = "OATSIM_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ValidateArgs {
    #[arg(long, env = "OATSIM_LEVEL", value_enum, default_value = "fast")]
    pub level: LevelArg,

    /// Device JSON (default: the bundled 20-qubit device table).
    #[arg(long, env = "OATSIM_DEVICE")]
    pub device: Option<PathBuf>,

    /// Also write the table as JSON with a manifest.
    #[arg(long, env = "OATSIM_OUT")]
    pub out: Option<PathBuf>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(usize::from(t))
            .build_global()
            .map_err(|e| CliError::Flag(e.to_string()))?;
    }
    let threads = cli.threads;
    match cli.command {
        Command::Qfunc(args) => commands::qfunc(&args, threads),
        Command::Ghz(args) => commands::ghz(&args, threads),
        Command::Validate(args) => commands::validate(&args, threads),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oatsim: {e}");
            ExitCode::from(e.code())
        }
    }
}
