//! `bellsim`: run the simulators from the command line.
//!
//! Exit status: 0 on success, 2 on an argument error, 1 when a check
//! subcommand fails or the run itself fails.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;
mod parse;

use output::Format;
use parse::{AngleSpec, GridSpec};

#[derive(Debug, Parser)]
#[command(
    name = "bellsim",
    version,
    about = "Simulators for two-station polarization experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample trials from one model.
    Simulate(SimulateArgs),
    /// Correlator against separation Δ, with a = 0 and b = Δ.
    Sweep(SweepArgs),
    /// Evaluate the three-setting inequality.
    Bell1964(Bell1964Args),
    /// Evaluate the four-setting CHSH expression.
    Chsh(ChshArgs),
    /// Scan one station's marginal against the other station's setting.
    Nosignal(NosignalArgs),
    /// How well λ, or the right outcome alone, reveals the left setting.
    Leak(LeakArgs),
    /// Compare the retro-causal model with its non-local rewrite exactly.
    TranslateCheck(TranslateArgs),
    /// The message-passing harness.
    #[command(subcommand)]
    Wire(WireCommand),
    /// Print the built-in model ids.
    ListModels,
}

fn model_id(s: &str) -> Result<String, String> {
    bellsim::models::by_id(s)
        .map(|_| s.to_owned())
        .map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
struct ModelArg {
    /// Model id; see `list-models`.
    #[arg(long, value_parser = model_id)]
    model: String,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct JsonOutput {
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Either a fixed pair repeated `--trials` times or a schedule file.
#[derive(Debug, Args)]
struct SettingsArgs {
    /// Left setting.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "schedule")]
    a: Option<AngleSpec>,
    /// Right setting.
    #[arg(long, allow_hyphen_values = true, required_unless_present = "schedule")]
    b: Option<AngleSpec>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), required_unless_present = "schedule")]
    trials: Option<u64>,
    /// File of `a,b` lines, one per trial.
    #[arg(long, conflicts_with_all = ["a", "b", "trials"])]
    schedule: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    model: ModelArg,
    #[command(flatten)]
    settings: SettingsArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Add the hidden variable as a `lambda` column.
    #[arg(long)]
    record_lambda: bool,
    /// Worker threads; the output does not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArg,
    /// Separations as start:end:count, inside [0, π/2].
    #[arg(long)]
    grid: GridSpec,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct Bell1964Args {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "search")]
    a: Option<AngleSpec>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "search")]
    b: Option<AngleSpec>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "search")]
    c: Option<AngleSpec>,
    /// Estimate each correlator from this many trials instead of the exact law.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "search")]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Search a grid with this many points per quarter turn for the largest violation.
    #[arg(long, conflicts_with_all = ["a", "b", "c"])]
    search: Option<usize>,
    #[command(flatten)]
    out: JsonOutput,
}

#[derive(Debug, Args)]
struct ChshArgs {
    #[command(flatten)]
    model: ModelArg,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "search")]
    a: Option<AngleSpec>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "search")]
    a2: Option<AngleSpec>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "search")]
    b: Option<AngleSpec>,
    #[arg(long, allow_hyphen_values = true, required_unless_present = "search")]
    b2: Option<AngleSpec>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), conflicts_with = "search")]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, conflicts_with_all = ["a", "a2", "b", "b2"])]
    search: Option<usize>,
    #[command(flatten)]
    out: JsonOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SideArg {
    Left,
    Right,
}

#[derive(Debug, Args)]
struct NosignalArgs {
    #[command(flatten)]
    model: ModelArg,
    /// The station whose marginal is watched.
    #[arg(long, value_enum, default_value_t = SideArg::Right)]
    fix: SideArg,
    /// Setting of the watched station.
    #[arg(long, allow_hyphen_values = true, default_value = "0")]
    at: AngleSpec,
    /// Settings of the other station, as start:end:count.
    #[arg(long, default_value = "0:7*pi/8:8")]
    scan: GridSpec,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Fail when any |z| reaches this.
    #[arg(long, default_value_t = 5.0)]
    threshold: f64,
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Symmetric,
    Asymmetric,
}

#[derive(Debug, Args)]
struct LeakArgs {
    #[arg(long, allow_hyphen_values = true)]
    a0: AngleSpec,
    #[arg(long, allow_hyphen_values = true)]
    a1: AngleSpec,
    #[arg(long, allow_hyphen_values = true)]
    b: AngleSpec,
    #[arg(long, value_enum, default_value_t = VariantArg::Symmetric)]
    variant: VariantArg,
    #[command(flatten)]
    out: JsonOutput,
}

#[derive(Debug, Args)]
struct TranslateArgs {
    /// Settings checked on both sides, as start:end:count.
    #[arg(long, default_value = "0:4*pi/5:5")]
    grid: GridSpec,
    /// Fail when the total variation exceeds this.
    #[arg(long, default_value_t = 1e-12)]
    tolerance: f64,
    #[command(flatten)]
    out: JsonOutput,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WiringArg {
    Causal,
    Retro,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SourceArg {
    /// λ uniform on [0, π), settings-independent.
    Uniform,
    /// Four equally weighted branches built from both settings.
    Retro,
    /// The left-first sequential variant.
    RetroSeq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StationArg {
    Malus,
    Sign,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StationRole {
    Left,
    Right,
}

#[derive(Debug, Subcommand)]
enum WireCommand {
    /// Run all four parties in this process over loopback TCP.
    Run(WireRunArgs),
    /// Serve as the coordinator and wait for the three endpoints.
    Coordinator(CoordinatorArgs),
    /// Serve as the source.
    Source(SourceArgs),
    /// Serve as a station.
    Station(StationArgs),
    /// Re-derive the wiring of a recorded transcript.
    Audit(AuditArgs),
}

#[derive(Debug, Args)]
struct WireRunArgs {
    #[arg(long, value_enum)]
    wiring: WiringArg,
    /// Source law; defaults to `uniform` under CAUSAL and `retro` under RETRO.
    #[arg(long, value_enum)]
    source: Option<SourceArg>,
    #[arg(long, value_enum, default_value_t = StationArg::Malus)]
    station: StationArg,
    #[command(flatten)]
    settings: SettingsArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    record_lambda: bool,
    /// Save the transcript as newline-delimited JSON.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct CoordinatorArgs {
    #[arg(long, default_value = "127.0.0.1:7878")]
    listen: String,
    #[arg(long, value_enum)]
    wiring: WiringArg,
    #[command(flatten)]
    settings: SettingsArgs,
    #[arg(long)]
    record_lambda: bool,
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SourceArgs {
    #[arg(long)]
    connect: String,
    #[arg(long, value_enum, default_value_t = SourceArg::Uniform)]
    source: SourceArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct StationArgs {
    #[arg(long)]
    connect: String,
    #[arg(long, value_enum)]
    role: StationRole,
    #[arg(long, value_enum, default_value_t = StationArg::Malus)]
    station: StationArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Args)]
struct AuditArgs {
    #[arg(long)]
    transcript: PathBuf,
    #[arg(long, value_enum)]
    declared: WiringArg,
    #[command(flatten)]
    out: JsonOutput,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(cli.command) {
        Ok(commands::Status::Passed) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed) => ExitCode::from(1),
        Err(commands::Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(commands::Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
