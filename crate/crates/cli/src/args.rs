//! Flag grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

const GRAMMAR: &str = "\
MANIFOLD STRINGS:
  name[:key=value]...      e.g. flat:n=3, sphere:r=2:rep=chart, poincare, paraboloid:a=0.5
  Run `l2geom list-manifolds` for every name, key and representation.

FILE FORMATS (JSON):
  field        {\"domain\": {\"weights\": [...]}, \"manifold\": \"<registry string>\",
                \"values\": [[...], ...], \"vecs\": [[...], ...]}   (vecs optional)
  path         {\"times\": [...], \"maps\": [<field>...], \"velocities\": [<field>...]}
  measure      {\"atoms\": [[...], ...], \"masses\": [...]}
  permutation  [σ(0), σ(1), ...]

CONFIG FILE (TOML, --config):
  Flat keys: manifold, steps, snapshots, steps_per_snapshot, seed, instances,
  max_iterations, tolerance, threads. Command-line flags override file values;
  unknown keys are rejected.

ENVIRONMENT:
  L2GEOM_THREADS           default worker cap (overridden by the config file and --threads)

EXIT CODES:
  0 success, 1 a check failed or a computation did not succeed, 2 usage or input error";

/// Riemannian geometry of the L² metric on discretized mapping spaces.
#[derive(Debug, Parser)]
#[command(name = "l2geom", version, arg_required_else_help = true, after_long_help = GRAMMAR)]
pub struct Cli {
    /// Cap on worker threads (default: hardware parallelism).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// TOML file with default option values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List registry manifolds and their parameters.
    ListManifolds,
    /// Integrate the L² geodesic with initial velocity given by a field file.
    Geodesic(GeodesicArgs),
    /// Exponential map of a tangent field.
    Exp(ExpArgs),
    /// Log map between two map fields (per-sample shooting).
    Log(LogArgs),
    /// Geodesic L² distance between two map fields.
    Distance(LogArgs),
    /// Riemann curvature R(h,k)l and sectional curvature at a point.
    Curvature(CurvatureArgs),
    /// Run the oracle and connector-axiom checks on a registry manifold.
    Verify(VerifyArgs),
    /// Metric invariance and equivariance under a sample permutation.
    Reparam(ReparamArgs),
    /// Wasserstein-2 costs between measures, or the submersion check.
    Transport(TransportArgs),
}

#[derive(Debug, Args)]
pub struct OutputArg {
    /// Write the primary result here instead of standard output.
    #[arg(long, short, value_name = "FILE")]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GeodesicArgs {
    /// Tangent field file (values = q0, vecs = h0).
    #[arg(long, value_name = "FILE")]
    pub field: PathBuf,
    /// Number of snapshots T ≥ 2 (default 11).
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub snapshots: Option<u64>,
    /// RK4 steps between snapshots (default 100).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps_per_snapshot: Option<u64>,
    /// Path file (JSON) with maps and velocities.
    #[command(flatten)]
    pub out: OutputArg,
    /// GeodesicReport as JSON.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// GeodesicReport as CSV (time, energy, residual, drift).
    #[arg(long, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExpArgs {
    /// Tangent field file.
    #[arg(long, value_name = "FILE")]
    pub field: PathBuf,
    /// RK4 steps over unit time (default 1000).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: Option<u64>,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct LogArgs {
    /// Field file of the start map q0.
    #[arg(long, value_name = "FILE")]
    pub from: PathBuf,
    /// Field file of the end map q1.
    #[arg(long, value_name = "FILE")]
    pub to: PathBuf,
    /// RK4 steps per exponential evaluation (default 1000).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: Option<u64>,
    /// Newton iterations per sample (default 50).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub max_iterations: Option<u64>,
    /// Endpoint residual tolerance (default 1e-10).
    #[arg(long, value_parser = positive_f64)]
    pub tolerance: Option<f64>,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    /// Registry manifold string.
    #[arg(long)]
    pub manifold: Option<String>,
    /// Base point, comma-separated coordinates.
    #[arg(long, allow_hyphen_values = true, value_parser = vector)]
    pub point: Coords,
    /// First tangent vector.
    #[arg(long, allow_hyphen_values = true, value_parser = vector)]
    pub h: Coords,
    /// Second tangent vector.
    #[arg(long, allow_hyphen_values = true, value_parser = vector)]
    pub k: Coords,
    /// Third tangent vector (default: k, giving R(h,k)k).
    #[arg(long, allow_hyphen_values = true, value_parser = vector)]
    pub l: Option<Coords>,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Registry manifold string.
    #[arg(long)]
    pub manifold: Option<String>,
    /// Seed of the instance generator (default 0).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Random instances per check (default 100).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub instances: Option<u64>,
    /// OracleReport list as JSON.
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct ReparamArgs {
    /// Tangent field file providing q and h.
    #[arg(long, value_name = "FILE")]
    pub field: PathBuf,
    /// Optional second tangent field k at the same map (default: h).
    #[arg(long, value_name = "FILE")]
    pub other: Option<PathBuf>,
    /// Permutation file (JSON array).
    #[arg(long, value_name = "FILE")]
    pub perm: PathBuf,
    /// RK4 steps for the exp equivariance check (default 1000).
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: Option<u64>,
    #[command(flatten)]
    pub out: OutputArg,
}

#[derive(Debug, Args)]
pub struct TransportArgs {
    /// Source measure file.
    #[arg(long, value_name = "FILE", requires = "target", conflicts_with_all = ["base", "rearranged"])]
    pub source: Option<PathBuf>,
    /// Target measure file.
    #[arg(long, value_name = "FILE", requires = "source")]
    pub target: Option<PathBuf>,
    /// Field file of the base configuration (submersion check).
    #[arg(long, value_name = "FILE", requires = "rearranged")]
    pub base: Option<PathBuf>,
    /// Field file of the rearranged configuration φ (submersion check).
    #[arg(long, value_name = "FILE", requires = "base")]
    pub rearranged: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArg,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("must be positive, got {v}")),
        Err(e) => Err(e.to_string()),
    }
}

/// Comma-separated coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Coords(pub Vec<f64>);

fn vector(s: &str) -> Result<Coords, String> {
    s.split(',')
        .map(|c| c.trim().parse::<f64>().map_err(|e| format!("`{c}`: {e}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Coords)
}
