//! `eghwt` command-line driver.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 1 | unclassified failure |
//! | 2 | bad arguments or configuration |
//! | 3 | I/O error |
//! | 4 | unreadable or inconsistent input data |
//! | 5 | graph is not connected |
//! | 6 | partition tree fails validation |
//! | 7 | eigensolver did not converge |
//! | 8 | internal consistency check failed (dominance or oracle) |
//! | 9 | other library error, e.g. a problem too large for the oracle |

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "eghwt", version, about = "Haar-Walsh wavelet packet best bases on graphs and images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build (or validate) a partition tree and write it as JSON.
    Partition(PartitionArgs),
    /// Compare the Haar, Walsh, c2f, f2c and eGHWT bases of one signal.
    Bestbasis(BestBasisArgs),
    /// Best-k approximation curves, reconstructions and PSNR.
    Approximate(ApproximateArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TreeKind {
    Spectral,
    Midpoint,
    Ptv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    Rows,
    Columns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CostKind {
    Lp,
    L0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum BasisName {
    Haar,
    Walsh,
    C2f,
    F2c,
    Eghwt,
}

impl BasisName {
    pub const ALL: [BasisName; 5] = [BasisName::Haar, BasisName::Walsh, BasisName::C2f, BasisName::F2c, BasisName::Eghwt];

    pub fn name(self) -> &'static str {
        match self {
            BasisName::Haar => "haar",
            BasisName::Walsh => "walsh",
            BasisName::C2f => "c2f",
            BasisName::F2c => "f2c",
            BasisName::Eghwt => "eghwt",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct TreeArgs {
    /// Tree builder.
    #[arg(long, value_enum, default_value_t = TreeKind::Spectral)]
    pub tree: TreeKind,
    /// Use a previously written tree JSON instead of building one.
    #[arg(long, conflicts_with = "tree")]
    pub tree_file: Option<PathBuf>,
    /// Graph as an edge-list CSV (`src,dst[,weight]`) or a MatrixMarket `.mtx` file.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Node ids in the edge list start at 1.
    #[arg(long)]
    pub one_based: bool,
    /// Node count for an edge list, so isolated or trailing nodes are kept.
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Exponent of the size penalty in the PTV cut criterion.
    #[arg(long, default_value_t = 1.0)]
    pub ptv_p: f64,
    /// Seed of the Lanczos starting vector.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug, Clone)]
pub struct CostArgs {
    /// Additive cost: sum of |x|^p, or the count of |x| above a threshold.
    #[arg(long, value_enum, default_value_t = CostKind::Lp)]
    pub cost: CostKind,
    /// Exponent of the l^p cost, in (0, 2).
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Magnitude threshold of the l0 cost.
    #[arg(long, default_value_t = 0.0)]
    pub threshold: f64,
}

#[derive(Args, Debug)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub tree: TreeArgs,
    /// Node count for the midpoint tree when no graph is given.
    #[arg(long)]
    pub n: Option<usize>,
    /// Image or CSV matrix for the PTV tree.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Image axis the PTV tree partitions.
    #[arg(long, value_enum, default_value_t = AxisArg::Rows)]
    pub axis: AxisArg,
    /// Scale images to [0, 1] by the format maximum (CSV matrices by their largest magnitude).
    #[arg(long)]
    pub normalize: bool,
    /// Only validate this tree JSON.
    #[arg(long, conflicts_with_all = ["n", "image", "graph", "tree_file"])]
    pub validate: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct BestBasisArgs {
    #[command(flatten)]
    pub tree: TreeArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Signal CSV, one value per line in node order.
    #[arg(long)]
    pub signal: PathBuf,
    /// Also run the exhaustive search and require it to agree with eGHWT.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ApproximateArgs {
    #[command(flatten)]
    pub tree: TreeArgs,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Graph signal CSV (needs a graph, a tree file or the midpoint tree).
    #[arg(long, conflicts_with = "image")]
    pub signal: Option<PathBuf>,
    /// Image (PGM, PNG, ...) or CSV matrix. Midpoint and PTV trees run the 2D
    /// transform; the spectral tree runs on the pixel graph.
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Scale images to [0, 1] by the format maximum (CSV matrices by their largest magnitude).
    #[arg(long)]
    pub normalize: bool,
    /// Fractions of coefficients kept for the reconstructions.
    #[arg(long, value_delimiter = ',', default_value = "0.03125")]
    pub fraction: Vec<f64>,
    /// Spacing of the error-curve grid.
    #[arg(long, default_value_t = 0.01)]
    pub grid_step: f64,
    /// Bases to compare.
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = BasisName::ALL)]
    pub bases: Vec<BasisName>,
    /// Pixel-graph neighborhood radius (strict).
    #[arg(long, default_value_t = 1.5)]
    pub radius: f64,
    /// Pixel-graph spatial bandwidth; `inf` drops the spatial factor.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub sigma_x: f64,
    /// Pixel-graph feature bandwidth.
    #[arg(long, default_value_t = 0.07)]
    pub sigma_f: f64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

/// Failures the CLI raises itself, as opposed to library errors.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    InvalidTree(String),
    Check(String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::InvalidTree(m) | Failure::Check(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

fn exit_code(e: &anyhow::Error) -> u8 {
    use eghwt::Error as E;
    if let Some(f) = e.downcast_ref::<Failure>() {
        return match f {
            Failure::Usage(_) => 2,
            Failure::InvalidTree(_) => 6,
            Failure::Check(_) => 8,
        };
    }
    if let Some(err) = e.downcast_ref::<E>() {
        return match err {
            E::InvalidConfig(_) | E::InvalidCost(_) => 2,
            E::Io(_) => 3,
            E::Parse { .. } | E::Json(_) | E::Csv(_) | E::Image(_) => 4,
            E::InvalidGraph(_) | E::LengthMismatch { .. } | E::SizeMismatch(_) => 4,
            E::NotConnected { .. } => 5,
            E::MalformedTree(_) => 6,
            E::ConvergenceFailure { .. } => 7,
            _ => 9,
        };
    }
    if e.downcast_ref::<std::io::Error>().is_some() {
        return 3;
    }
    1
}

fn init_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("EGHWT_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Usage(format!("EGHWT_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match cli.command {
        Command::Partition(a) => commands::partition(&a),
        Command::Bestbasis(a) => commands::bestbasis(&a),
        Command::Approximate(a) => commands::approximate(&a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
