use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "lmg-gmc", version, about = "Genuine multipartite correlations in the LMG ground state")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Ground-state cache directory (also LMG_GMC_CACHE_DIR).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,

    /// Solve everything afresh and leave the cache alone.
    #[arg(long, global = true)]
    pub no_cache: bool,

    /// Maximum number of concurrent solves [default: available cores].
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Anisotropy [default: 0.5].
    #[arg(long)]
    pub gamma: Option<f64>,

    /// Coupling strength [default: 1].
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct OutputArgs {
    /// Output file [default: stdout].
    #[arg(long, short)]
    pub out: Option<PathBuf>,

    /// Also write an SVG chart here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Ground state at one parameter point, as a record.
    Solve {
        /// Number of spins.
        #[arg(long)]
        n: Option<usize>,
        /// Field value.
        #[arg(long)]
        h: Option<String>,
        #[command(flatten)]
        model: ModelArgs,
        /// Output file [default: stdout].
        #[arg(long, short)]
        out: Option<PathBuf>,
    },

    /// Correlation curves over a field range, as CSV.
    Sweep {
        /// Number of spins.
        #[arg(long)]
        n: Option<usize>,
        /// Field range start:stop:step.
        #[arg(long)]
        h: Option<String>,
        /// Orders, e.g. `1,2,3,N/2` (1 is the total correlation).
        #[arg(long)]
        k: Option<String>,
        /// Add dS/dh columns.
        #[arg(long)]
        derivative: bool,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Correlation hierarchy over all block sizes at one field value.
    Spectrum {
        /// Number of spins.
        #[arg(long)]
        n: Option<usize>,
        /// Field value.
        #[arg(long)]
        h: Option<String>,
        /// Only block sizes dividing N.
        #[arg(long)]
        divisors_only: bool,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Finite-size scaling of the derivative minimum, as a JSON report.
    Fss {
        /// Orders to fit, e.g. `1` or `2,3,N`.
        #[arg(long)]
        k: Option<String>,
        /// Largest system size.
        #[arg(long)]
        max_n: Option<usize>,
        /// Coarse field grid start:stop:step [default: 0.5:1.2:0.005].
        #[arg(long)]
        h: Option<String>,
        /// Sizes below this are left out [default: 24].
        #[arg(long)]
        drop_below: Option<usize>,
        /// Local refinement factor of the grid step; 1 disables [default: 40].
        #[arg(long)]
        refine: Option<usize>,
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },

    /// Compares the symmetric-subspace results with full Hilbert-space
    /// diagonalisation.
    OracleCheck {
        /// Largest size checked (10 with correlations, 12 energies only).
        #[arg(long, default_value_t = 10)]
        max_n: usize,
        /// Compare ground energies only.
        #[arg(long)]
        energies_only: bool,
        /// Shift the symmetric-subspace values by this amount.
        #[arg(long, hide = true)]
        perturb: Option<f64>,
    },
}
