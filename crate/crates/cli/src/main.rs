//! `longarm`: batch front end for one-arm estimation, exact oracles and fits.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "longarm", version, about = "One-arm probabilities of long-range branching random walk and percolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Monte Carlo one-arm probabilities of the branching random walk.
    BrwGamma(JobArgs),
    /// Monte Carlo one-arm probabilities of long-range percolation.
    LrpGamma(JobArgs),
    /// Critical intensity from the cluster-size tail slope.
    EstimatePc(PcArgs),
    /// Windowed Green's function along the first axis.
    Green(GreenArgs),
    /// Total-progeny distribution of the Galton-Watson tree.
    Progeny(ProgenyArgs),
    /// Exact probability of an event on a small graph.
    Enumerate(InputArgs),
    /// Exact disjoint-occurrence check for two increasing events.
    BkCheck(InputArgs),
    /// Exponents for a decay exponent alpha.
    Exponents {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Beta interval and constraint chains.
    CheckBeta {
        #[arg(long, allow_hyphen_values = true)]
        alpha: String,
        /// Defaults to the midpoint of the admissible interval.
        #[arg(long, allow_hyphen_values = true)]
        beta: Option<f64>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Log-log fit of a CSV table.
    Fit(FitArgs),
}

/// Where results go.
#[derive(Args, Debug, Clone, Default)]
pub struct RunArgs {
    /// Worker threads; defaults to LONGARM_WORKERS, then the CPU count. Never changes results.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Result file; stdout when absent. Metadata goes to `<output>.meta.json`.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Metadata file, overriding the default location.
    #[arg(long)]
    pub meta: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct KernelArgs {
    #[arg(long)]
    pub d: Option<usize>,
    /// Number or `infinite`.
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// canonical, bounded-uniform or exponential.
    #[arg(long)]
    pub shape: Option<String>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub tab_radius: Option<i64>,
}

/// Flags mirroring the job configuration. Values in `--config` take precedence.
#[derive(Args, Debug, Clone)]
pub struct JobArgs {
    /// JSON job file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// `binary`, `geometric-half` or comma-separated probabilities p_0,p_1,...
    #[arg(long)]
    pub offspring: Option<String>,
    /// Edge intensity or `auto-pc`.
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub radii: Option<Vec<i64>>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Tree cap `ceil(k r^{2 rho})`.
    #[arg(long, conflicts_with = "cap_fixed")]
    pub cap_k: Option<f64>,
    /// Fixed tree cap.
    #[arg(long)]
    pub cap_fixed: Option<u64>,
    #[arg(long)]
    pub vertex_cap: Option<usize>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone)]
pub struct PcArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub kernel: KernelArgs,
    #[arg(long)]
    pub window: Option<i64>,
    #[arg(long, value_delimiter = ',')]
    pub n_grid: Option<Vec<u64>>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub bisection_steps: Option<usize>,
    /// `lo,hi`
    #[arg(long, value_delimiter = ',', num_args = 1)]
    pub bracket: Option<Vec<f64>>,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone)]
pub struct GreenArgs {
    #[command(flatten)]
    pub kernel: KernelArgs,
    /// Number of convolution steps N.
    #[arg(long, default_value_t = 2048)]
    pub steps: usize,
    /// Window radius R.
    #[arg(long, default_value_t = 256)]
    pub radius: i64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone)]
pub struct ProgenyArgs {
    #[arg(long, default_value = "binary")]
    pub offspring: String,
    #[arg(long, default_value_t = 1000)]
    pub n_max: usize,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    /// JSON instance file.
    pub input: PathBuf,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Args, Debug, Clone)]
pub struct FitArgs {
    /// CSV with an `r` column.
    pub input: PathBuf,
    /// Column fitted against `r`.
    #[arg(long, default_value = "gamma_hat")]
    pub column: String,
    /// Rows with a `hits` column below this are dropped.
    #[arg(long, default_value_t = longarm_core::analysis::MIN_FIT_HITS)]
    pub min_hits: u64,
    #[command(flatten)]
    pub run: RunArgs,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
