#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod error;
mod geometry;
mod output;

/// Staged constrained Langevin sampling of repressilator parameters, the
/// ensemble baseline and chain diagnostics.
#[derive(Debug, Parser)]
#[command(name = "clangevin", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate noisy observations of exp(y₀).
    GenerateData(GenerateArgs),
    /// Run constrained Langevin chains on one manifold.
    Sample(SampleArgs),
    /// Run the affine-invariant ensemble sampler on the forward-integrated posterior.
    Baseline(BaselineArgs),
    /// ESS, R̂ and optional KL for sample files.
    Diagnose(DiagnoseArgs),
    /// Append manifold curvature weights for a coordinate projection.
    Reweight(ReweightArgs),
}

#[derive(Debug, clap::Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 3)]
    pub species: usize,
    #[arg(long, default_value_t = clangevin::models::BUNDLED_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = clangevin::models::DEFAULT_POINTS)]
    pub points: usize,
    #[arg(long, default_value_t = clangevin::models::DEFAULT_T_TOTAL)]
    pub t_total: f64,
    #[arg(long, default_value_t = clangevin::models::DEFAULT_NOISE_VAR)]
    pub noise_var: f64,
    /// Packed (k0, k1, n), comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub params: Option<Vec<f64>>,
    /// Initial log-concentrations, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y0: Option<Vec<f64>>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    FixedPoint,
    Hopf,
    LimitCycle,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::FixedPoint => "fixed-point",
            Mode::Hopf => "hopf",
            Mode::LimitCycle => "limit-cycle",
        }
    }
}

#[derive(Debug, clap::Args)]
pub struct SampleArgs {
    #[arg(long, value_enum)]
    pub mode: Mode,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Upstream sample files: fixed points for `hopf`, Hopf points for `limit-cycle`.
    #[arg(long, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Dataset CSV for `limit-cycle` (overrides `data.path`).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub metropolis: Option<bool>,
}

#[derive(Debug, clap::Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, clap::Args)]
pub struct DiagnoseArgs {
    /// One file per chain, sharing a header.
    #[arg(long, num_args = 1.., required = true)]
    pub samples: Vec<PathBuf>,
    #[arg(long)]
    pub report: PathBuf,
    /// Columns to analyse; defaults to the model parameter columns when
    /// present, else all columns.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    /// Sampler steps between rows; defaults to the stride in a sibling
    /// manifest, else 1.
    #[arg(long)]
    pub stride: Option<usize>,
    /// Samples of a second distribution for a KL estimate against the first.
    #[arg(long, num_args = 1..)]
    pub reference: Vec<PathBuf>,
    /// Rows kept (evenly thinned) per distribution for the KL density estimates.
    #[arg(long, default_value_t = 2000)]
    pub kl_max_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Manifold {
    /// Unit sphere in the dimension of the sample rows.
    Sphere,
    /// The hyperplane where the last coordinate vanishes.
    Plane,
}

#[derive(Debug, clap::Args)]
pub struct ReweightArgs {
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, value_delimiter = ',', required = true)]
    pub coords: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
    /// Run manifest describing the constraint; defaults to the one next to
    /// the samples.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Use a built-in geometric manifold instead of a manifest.
    #[arg(long, value_enum, conflicts_with = "manifest")]
    pub manifold: Option<Manifold>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::GenerateData(a) => commands::generate_data(&a),
        Command::Sample(a) => commands::sample(&a),
        Command::Baseline(a) => commands::baseline(&a),
        Command::Diagnose(a) => commands::diagnose(&a),
        Command::Reweight(a) => commands::reweight(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("clangevin: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
