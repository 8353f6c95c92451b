//! `rnss`: spectra, spectral separation, C/N0 degradation reports, aggregation
//! gain and baseband ramp simulations from the command line.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_COMPUTE: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "rnss", version, about = "RNSS compatibility analysis toolkit")]
pub struct Cli {
    /// Signal catalog (JSON file, or the built-in `paper-2025`).
    #[arg(long, global = true, env = "RNSS_CATALOG", default_value = rnss_compat::catalog::BUILTIN_CATALOG)]
    pub catalog: PathBuf,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write the unit-power PSD of one signal as CSV.
    Psd(PsdArgs),
    /// Spectral separation coefficient of an interferer into a victim.
    Ssc(SscArgs),
    /// I_alt and C/N0 degradation report for one interferer.
    Degrade(DegradeArgs),
    /// Aggregation gain of a constellation scenario.
    Aggregate(AggregateArgs),
    /// Baseband C/N0 ramp simulation.
    Simulate(SimulateArgs),
    /// Catalog utilities.
    #[command(subcommand)]
    Catalog(CatalogCommand),
    /// Re-run the command recorded in a manifest.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Analytic,
    Numeric,
}

#[derive(Debug, Args)]
pub struct PsdArgs {
    #[arg(long)]
    pub signal: String,
    /// Half-span of the output grid.
    #[arg(long = "span", value_name = "HZ", default_value_t = rnss_compat::spectrum::DEFAULT_GRID_HALF_SPAN_HZ)]
    pub span_hz: f64,
    #[arg(long = "step", value_name = "HZ", default_value_t = rnss_compat::spectrum::DEFAULT_GRID_SPACING_HZ)]
    pub step_hz: f64,
    #[arg(long, value_enum, default_value_t = Method::Numeric)]
    pub method: Method,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SscArgs {
    #[arg(long)]
    pub victim: String,
    #[arg(long)]
    pub interferer: String,
    #[arg(long, value_enum, default_value_t = Method::Numeric)]
    pub method: Method,
    #[arg(long = "step", value_name = "HZ", default_value_t = rnss_compat::spectrum::DEFAULT_GRID_SPACING_HZ)]
    pub step_hz: f64,
    /// Optional JSON result file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SscSourceArg {
    Fixed,
    Analytic,
    Numeric,
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long)]
    pub interferer: String,
    /// `paper` for every tabulated victim of the interferer, or a
    /// comma-separated list of signal ids.
    #[arg(long, default_value = "paper")]
    pub victims: String,
    #[arg(long, value_enum, default_value_t = SscSourceArg::Fixed)]
    pub ssc_source: SscSourceArg,
    /// Override the single-satellite RIP; `-inf` switches the interferer off.
    #[arg(long, allow_hyphen_values = true)]
    pub rip_dbw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub g_agg_db: Option<f64>,
    /// Catalog file supplying the noise environments (defaults to --catalog).
    #[arg(long)]
    pub env: Option<PathBuf>,
    /// CSV report; the JSON report goes next to it with a `.json` extension.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AggregateArgs {
    /// Named scenario in the catalog.
    #[arg(long, default_value = "pulsar-like-placeholder", conflicts_with = "scenario_file")]
    pub scenario: String,
    /// Scenario JSON file instead of a catalog entry.
    #[arg(long)]
    pub scenario_file: Option<PathBuf>,
    /// Carrier frequency of this signal sets the path loss.
    #[arg(long, default_value = "X1")]
    pub signal: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioArg {
    /// GPS L5-class victim against X5.
    L5X5,
    /// GPS L1 C/A victim against X1.
    L1caX1,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ScenarioArg::L5X5)]
    pub scenario: ScenarioArg,
    /// `default` for the standard ladder, or a RampProfile JSON file.
    #[arg(long, default_value = "default")]
    pub profile: String,
    /// Dwell per stage for the default ladder.
    #[arg(long = "dwell", value_name = "S", default_value_t = rnss_compat::basebandsim::DEFAULT_DWELL_S)]
    pub dwell_s: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_name = "HZ")]
    pub sample_rate: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub victim_power_dbw: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub noise_density_dbw_hz: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum CatalogCommand {
    /// Check a catalog against every invariant and report all violations.
    Validate {
        /// Catalog to check (defaults to --catalog).
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Write the outputs here instead of the recorded path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<rnss_compat::Error>() {
            return if e.is_config_error() { EXIT_CONFIG } else { EXIT_COMPUTE };
        }
    }
    // argument, I/O and serialization failures
    EXIT_CONFIG
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
