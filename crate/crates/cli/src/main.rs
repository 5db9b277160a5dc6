mod commands;
mod output;

use basisgate::Error;
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

/// Basis-gate selection for parametric conversion/gain couplers.
#[derive(Parser, Debug)]
#[command(name = "basisgate", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Gate-count and duration tables for the six standard bases.
    Scores(ScoresArgs),
    /// Build the coverage set of one basis and dump its hulls.
    Coverage(CoverageArgs),
    /// Best basis over the (θc, θg) plane for one metric.
    Sweep(SweepArgs),
    /// Transpile circuits with and without parallel drives.
    Transpile(TranspileArgs),
    /// Decoherence fidelity of a pulse-level circuit or a fixed duration.
    Fidelity(FidelityArgs),
}

#[derive(Args, Debug, Clone)]
struct BuildArgs {
    /// Master seed for every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Random template draws per coverage level [default: 3000, 800 with --quick].
    #[arg(long)]
    n: Option<usize>,
    /// Largest number of basis applications tried [default: 8].
    #[arg(long)]
    kmax: Option<usize>,
    /// Lighter optimizer budgets (faster, slightly smaller hulls).
    #[arg(long)]
    quick: bool,
    /// Directory for cached coverage sets.
    #[arg(long, default_value = ".basisgate-cache")]
    cache_dir: PathBuf,
    /// Rebuild coverage sets even when a cached copy exists.
    #[arg(long)]
    no_cache: bool,
}

#[derive(Args, Debug, Clone)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Defaults to CSV for tables and JSON for reports.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ScoresArgs {
    /// Speed limit: `linear`, `squared` or a CSV file with header `g_c,g_g`.
    #[arg(long, default_value = "linear")]
    slf: String,
    /// Single-qubit gate duration in units of a full iSWAP pulse.
    #[arg(long, default_value_t = 0.25)]
    d1q: f64,
    /// Weight of CNOT against SWAP in the W score.
    #[arg(long, default_value_t = basisgate::costs::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Haar samples for expected costs.
    #[arg(long, default_value_t = 100_000)]
    haar: usize,
    /// Score driven coverage and the joint full/fractional families.
    #[arg(long)]
    parallel: bool,
    #[command(flatten)]
    build: BuildArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CoverageArgs {
    /// One of iswap, sqiswap, cnot, sqcnot, b, sqb.
    #[arg(long)]
    basis: String,
    /// Allow parallel single-qubit drives during the pulse.
    #[arg(long)]
    parallel: bool,
    /// Haar samples for the reported volumes.
    #[arg(long, default_value_t = 20_000)]
    haar: usize,
    #[command(flatten)]
    build: BuildArgs,
    /// Directory receiving `<basis>.json` and `<basis>-vertices.csv`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Haar,
    Cnot,
    Swap,
    W,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_enum, default_value_t = MetricArg::Haar)]
    metric: MetricArg,
    #[arg(long, default_value = "linear")]
    slf: String,
    #[arg(long, default_value_t = 0.25)]
    d1q: f64,
    /// Weight used by the `w` metric.
    #[arg(long, default_value_t = basisgate::costs::DEFAULT_LAMBDA)]
    lambda: f64,
    /// Rays and steps per ray of the grid.
    #[arg(long, default_value_t = 64)]
    grid: usize,
    /// Interpolate counts from the six standard bases instead of building
    /// coverage for every cell.
    #[arg(long)]
    fast: bool,
    #[arg(long, default_value_t = 20_000)]
    haar: usize,
    #[command(flatten)]
    build: BuildArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
struct FidelityParamArgs {
    /// Full iSWAP pulse length, ns.
    #[arg(long, default_value_t = 100.0)]
    d_iswap: f64,
    /// Single-qubit gate length, ns.
    #[arg(long, default_value_t = 25.0)]
    d_1q: f64,
    /// Qubit lifetime, µs.
    #[arg(long, default_value_t = 100.0)]
    t1: f64,
}

#[derive(Args, Debug)]
struct TranspileArgs {
    /// Circuit JSON files.
    #[arg(required = true)]
    circuits: Vec<PathBuf>,
    /// Seeded runs per strategy; the shortest result is kept.
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Directory receiving the transpiled circuits.
    #[arg(long)]
    emit: Option<PathBuf>,
    #[command(flatten)]
    fidelity: FidelityParamArgs,
    #[command(flatten)]
    build: BuildArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FidelityArgs {
    /// Pulse-level circuit JSON, e.g. one written by `transpile --emit`.
    circuit: Option<PathBuf>,
    /// Score a bare duration instead of a circuit.
    #[arg(long, conflicts_with = "circuit")]
    duration_ns: Option<f64>,
    /// Qubit count used with `--duration-ns`.
    #[arg(long, default_value_t = 2)]
    qubits: usize,
    #[command(flatten)]
    fidelity: FidelityParamArgs,
    #[command(flatten)]
    output: OutputArgs,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Schema { .. }
        | Error::InvalidSpeedLimit(_)
        | Error::InvalidParameter(_)
        | Error::UnknownBasis(_)
        | Error::IncompatibleBases(_)
        | Error::Io(_)
        | Error::Json(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Scores(a) => commands::scores(&a),
        Command::Coverage(a) => commands::coverage(&a),
        Command::Sweep(a) => commands::sweep(&a),
        Command::Transpile(a) => commands::transpile(&a),
        Command::Fidelity(a) => commands::fidelity(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
