//! Command line surface and the run configuration echoed into every report.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use hslab_core::acceptance::DEFAULT_SEED;

pub const OUT_ENV: &str = "HSLAB_OUT";
pub const DEFAULT_OUT: &str = "hslab-out";

#[derive(Debug, Parser)]
#[command(name = "hslab", version, about = "Hardy-Sobolev stability experiments on the cylinder")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    /// Output directory; defaults to $HSLAB_OUT, then ./hslab-out.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Comma-separated report formats.
    #[arg(long, global = true, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<Format>,
    /// Seed for randomized draws.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Problem {
    #[arg(long = "N", default_value_t = 4)]
    #[serde(rename = "N")]
    pub dim: usize,
    #[arg(long, default_value_t = 0.75)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Args, Serialize, Default)]
pub struct GridArgs {
    /// Half width of the t-interval.
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub half_width: Option<f64>,
    /// Number of grid points (odd).
    #[arg(long = "n")]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Closed-form constants, thresholds and critical levels.
    Constants(Problem),
    /// Numeric spectral gap against the closed form over a γ-grid.
    Spectrum(SpectrumArgs),
    /// Evaluate the stability quotient on a field file.
    Quotient(QuotientArgs),
    /// Expansion residuals of the two-peak family.
    TwoPeak(TwoPeakArgs),
    /// Translated Aubin-Talenti bubble against the hidden level.
    HiddenLevel(HiddenArgs),
    /// Bubble interaction rates on the cylinder and on R^N.
    Interactions(InteractionArgs),
    /// Descent on the radial quotient.
    RadialMin(RadialArgs),
    /// γ₀ from the radial constant.
    Gamma0(Gamma0Args),
    /// Run the acceptance checks and print PASS/FAIL per criterion.
    VerifyAll(VerifyArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SpectrumArgs {
    #[arg(long = "N", default_value_t = 4)]
    #[serde(rename = "N")]
    pub dim: usize,
    /// Number of interior points of (0, (N−2)²/4); ignored when --gamma is given.
    #[arg(long, default_value_t = 10)]
    pub gamma_grid: usize,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub kmax: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuotientArgs {
    /// Field file in the cylinder CSV format.
    #[arg(long)]
    pub field: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TwoPeakArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: Problem,
    /// Shifts s; defaults to {8, 10, 12, 14, 16}/θ.
    #[arg(long, value_delimiter = ',')]
    pub s_ladder: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HiddenArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: Problem,
    #[arg(long = "z", value_delimiter = ',', default_value = "10,20,50")]
    #[serde(rename = "z_list")]
    pub z: Vec<f64>,
    /// Relative tolerance to the hidden level at the largest z.
    #[arg(long, default_value_t = 0.05)]
    pub tol: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct InteractionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: Problem,
    /// Exponents η₁ (η₂ = 2* − η₁); defaults to 1, (1 + 2*/2)/2, 2*/2.
    #[arg(long, value_delimiter = ',')]
    pub eta1: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub s_ladder: Option<Vec<f64>>,
    /// Dilations λ ∈ (0, 1]; defaults to 10^{-1}, 10^{-1.25}, …, 10^{-3}.
    #[arg(long, value_delimiter = ',')]
    pub lambda: Option<Vec<f64>>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RadialArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub problem: Problem,
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    /// Relative quotient change at which descent stops.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Weight of the third radial eigenfunction in the start; both signs of 0.2 when absent.
    #[arg(long, allow_hyphen_values = true)]
    pub init_weight: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Gamma0Args {
    #[arg(long = "N", default_value_t = 4)]
    #[serde(rename = "N")]
    pub dim: usize,
    /// Estimate of the radial constant; required for N ≥ 4.
    #[arg(long)]
    pub c_rad: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct VerifyArgs {
    /// Recorded in the report; each criterion fixes its own dimensions.
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub dim: Option<usize>,
    /// Subset of criteria to run, e.g. 1,4,9.
    #[arg(long, value_delimiter = ',')]
    pub criteria: Option<Vec<u8>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub command: Command,
    pub out: PathBuf,
    pub format: Vec<Format>,
    pub seed: u64,
}

impl RunConfig {
    pub fn new(cli: Cli, env_out: Option<PathBuf>) -> Self {
        let out = cli
            .output
            .out
            .or(env_out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
        let mut format = cli.output.format;
        format.dedup();
        RunConfig {
            command: cli.command,
            out,
            format,
            seed: cli.output.seed,
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.format.contains(&f)
    }
}
