use std::fmt::Display;
use std::path::PathBuf;

use bootperc::montecarlo::{ExponentKind, Horizon, PC_STAR};
use bootperc::BoundaryCondition;
use clap::{Args, Parser, Subcommand};
use serde::{Serialize, Serializer};

#[derive(Parser, Debug)]
#[command(name = "bootperc", version, about = "Threshold-3 bootstrap percolation experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Flip-time tail Pi(n) of the origin, with a log-linear decay fit.
    #[command(args_override_self = true)]
    PiDecay(PiDecayArgs),
    /// Covariance of fixed-point states at distance d.
    #[command(args_override_self = true)]
    Correlations(CorrelationArgs),
    /// Open vertical *-crossing of rectangles at time 0 and at the horizon.
    #[command(args_override_self = true)]
    CrossingScan(CrossingArgs),
    /// Probability that the origin's fixed point depends on the halo of a radius-r window.
    #[command(args_override_self = true)]
    DependenceTail(DependenceArgs),
    /// Ring-connection proxy for the percolation probability, over a grid of p.
    #[command(args_override_self = true)]
    ThetaScan(ThetaArgs),
    /// Two-point open *-connectivity along the horizontal axis.
    #[command(args_override_self = true)]
    TauCurve(TauArgs),
    /// Mean open *-cluster size of the origin, over a grid of p.
    #[command(args_override_self = true)]
    ChiScan(ChiArgs),
    /// Tail of closed partial clusters containing no protected site.
    #[command(args_override_self = true)]
    UnprotectedTail(UnprotectedArgs),
    /// Paired exponent fits on time-0 and evolved configurations.
    #[command(args_override_self = true)]
    Exponents(ExponentArgs),
    /// Structural property suite with counterexample witnesses.
    #[command(args_override_self = true)]
    StabilityCheck(StabilityArgs),
    /// Bisection for the point where the square crossing probability is one half.
    #[command(name = "find-pcstar", args_override_self = true)]
    FindPcstar(PcStarArgs),
    /// Exact expectation by enumerating every configuration of a small window.
    #[command(args_override_self = true)]
    Enumerate(EnumerateArgs),
}

fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn probability(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("probability must lie in [0, 1], got {p}"))
    }
}

fn positive_u64(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(v) => Ok(v),
        Err(_) => Err(format!("`{s}` is not a positive integer")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a positive number")),
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct Common {
    /// Master seed. A seed is generated and recorded in the manifest when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, env = "BOOTPERC_THREADS")]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Flat `key = value` file of flag defaults; explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PiDecayArgs {
    #[arg(long, value_parser = probability)]
    pub p: f64,
    #[arg(long, default_value_t = 12)]
    pub n_max: u32,
    #[arg(long, default_value_t = 100_000, value_parser = positive_u64)]
    pub trials: u64,
    /// Window side; defaults to 2 (n_max + 2) + 1.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    /// Fit window lower end.
    #[arg(long, default_value_t = 3)]
    pub fit_min: u32,
    /// Fit window upper end; defaults to n_max.
    #[arg(long)]
    pub fit_max: Option<u32>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CorrelationArgs {
    #[arg(long, value_parser = probability, default_value_t = PC_STAR)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 3, 4, 5, 6, 7, 8])]
    pub distances: Vec<u32>,
    #[arg(long, default_value_t = 1_000_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value_t = 41)]
    pub size: usize,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    /// Points count as above the noise floor while |cov| exceeds this many stderrs.
    #[arg(long, default_value_t = 2.0)]
    pub noise_k: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CrossingArgs {
    #[arg(long, value_parser = probability, default_value_t = PC_STAR)]
    pub p: f64,
    /// Aspect ratio W / H.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    pub rho: f64,
    /// Rectangle heights H.
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 64, 128, 256])]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 10_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value = "fixed-point")]
    #[serde(serialize_with = "display")]
    pub horizon: Horizon,
    #[arg(long, default_value_t = bootperc::montecarlo::DEFAULT_CROSSING_MARGIN)]
    pub margin: usize,
    #[arg(long, default_value = "periodic")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct DependenceArgs {
    #[arg(long, value_parser = probability, default_value_t = PC_STAR)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12])]
    pub radii: Vec<usize>,
    #[arg(long, default_value_t = 100_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value_t = 41)]
    pub size: usize,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ThetaArgs {
    #[arg(long, value_delimiter = ',', value_parser = probability, required = true)]
    pub p_values: Vec<f64>,
    #[arg(long, default_value_t = 32)]
    pub radius: usize,
    /// Window side; defaults to 2 radius + 1.
    #[arg(long)]
    pub size: Option<usize>,
    #[arg(long, default_value_t = 10_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value = "fixed-point")]
    #[serde(serialize_with = "display")]
    pub horizon: Horizon,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct TauArgs {
    #[arg(long, value_parser = probability, default_value_t = PC_STAR)]
    pub p: f64,
    /// Horizontal offsets of the target site from the origin.
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 4, 8, 16])]
    pub xs: Vec<u32>,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = bootperc::montecarlo::DEFAULT_TAU_MARGIN)]
    pub margin: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value = "fixed-point")]
    #[serde(serialize_with = "display")]
    pub horizon: Horizon,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ChiArgs {
    #[arg(long, value_delimiter = ',', value_parser = probability, required = true)]
    pub p_values: Vec<f64>,
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value = "fixed-point")]
    #[serde(serialize_with = "display")]
    pub horizon: Horizon,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct UnprotectedArgs {
    #[arg(long, value_parser = probability, default_value_t = PC_STAR)]
    pub p: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [4u32, 8, 12, 16, 20, 24, 28, 32, 36, 40])]
    pub lengths: Vec<u32>,
    #[arg(long, default_value_t = 100_000, value_parser = positive_u64)]
    pub trials: u64,
    /// L-infinity radius of the explored region; defaults to 4 max(lengths).
    #[arg(long)]
    pub search_radius: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct ExponentArgs {
    /// beta, eta, nu or gamma.
    #[arg(long)]
    #[serde(serialize_with = "display")]
    pub which: ExponentKind,
    /// Density for the eta protocol.
    #[arg(long, value_parser = probability, default_value_t = PC_STAR)]
    pub p: f64,
    /// Density grid for beta, gamma and nu; gamma and nu default to 0.30, 0.31, ..., 0.39.
    #[arg(long, value_delimiter = ',', value_parser = probability)]
    pub p_values: Vec<f64>,
    /// Explicit distance grid for eta and nu; overrides --xmin/--xmax.
    #[arg(long, value_delimiter = ',')]
    pub xs: Vec<u32>,
    #[arg(long, default_value_t = 4)]
    pub xmin: u32,
    #[arg(long, default_value_t = 32)]
    pub xmax: u32,
    /// Window side.
    #[arg(long = "L", default_value_t = 256)]
    pub size: usize,
    /// Ring radius for beta; defaults to size / 2 - 1.
    #[arg(long)]
    pub radius: Option<usize>,
    #[arg(long, default_value_t = 200_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value_t = 10)]
    pub batches: u32,
    #[arg(long, default_value = "fixed-point")]
    #[serde(serialize_with = "display")]
    pub horizon: Horizon,
    #[arg(long, default_value_t = PC_STAR, value_parser = probability)]
    pub pc: f64,
    #[arg(long, default_value_t = 2.0)]
    pub agreement_k: f64,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct StabilityArgs {
    /// Check every configuration of a width x height window.
    #[arg(long)]
    pub exhaustive: bool,
    /// Defaults to 3 with --exhaustive, 15 otherwise.
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    /// Random windows per density.
    #[arg(long, default_value_t = 1000, value_parser = positive_u64)]
    pub count: u64,
    #[arg(long, value_delimiter = ',', value_parser = probability, default_values_t = [0.2, PC_STAR, 0.6])]
    pub p_values: Vec<f64>,
    /// Boundary conditions to check; all three by default.
    #[arg(long, value_delimiter = ',')]
    #[serde(serialize_with = "display_list")]
    pub boundary: Vec<BoundaryCondition>,
    /// Test hook: replace the bootstrap threshold.
    #[arg(long, hide = true)]
    pub mutant_threshold: Option<u8>,
    /// Maximum number of witnesses printed.
    #[arg(long, default_value_t = 5)]
    pub max_witnesses: usize,
    #[command(flatten)]
    pub common: Common,
}

fn display_list<T: Display, S: Serializer>(v: &[T], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| x.to_string()))
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct PcStarArgs {
    #[arg(long = "L", default_value_t = 256)]
    pub size: usize,
    #[arg(long, default_value_t = 10_000, value_parser = positive_u64)]
    pub trials: u64,
    #[arg(long, default_value_t = 0.002, value_parser = positive_f64)]
    pub tol: f64,
    #[arg(long, default_value = "0")]
    #[serde(serialize_with = "display")]
    pub horizon: Horizon,
    #[arg(long, default_value_t = 0.0, value_parser = probability)]
    pub lo: f64,
    #[arg(long, default_value_t = 1.0, value_parser = probability)]
    pub hi: f64,
    #[arg(long, default_value_t = bootperc::montecarlo::DEFAULT_CROSSING_MARGIN)]
    pub margin: usize,
    #[arg(long, default_value = "periodic")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[command(flatten)]
    pub common: Common,
}

#[derive(clap::ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// Center open.
    OriginOpen,
    /// Size of the center's open *-cluster.
    ClusterSize,
    /// Open vertical *-crossing of the whole window.
    Crossing,
    /// Center and the site `--x` to its right in one open *-cluster.
    Tau,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnumerateArgs {
    #[arg(long, default_value_t = 3)]
    pub width: usize,
    #[arg(long, default_value_t = 3)]
    pub height: usize,
    #[arg(long, value_parser = probability)]
    pub p: f64,
    #[arg(long, default_value = "fixed-point")]
    #[serde(serialize_with = "display")]
    pub horizon: Horizon,
    #[arg(long, default_value = "open-halo")]
    #[serde(serialize_with = "display")]
    pub boundary: BoundaryCondition,
    #[arg(long, value_enum, default_value = "origin-open")]
    pub observable: Observable,
    /// Horizontal offset for the tau observable.
    #[arg(long, default_value_t = 1)]
    pub x: i32,
    #[command(flatten)]
    pub common: Common,
}
