use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// `a,b` as two floats.
fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected two comma-separated numbers, got `{s}`"))?;
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((num(a)?, num(b)?))
}

#[derive(Debug, Parser)]
#[command(name = "overlapkit", version, about = "Singular-vector overlaps of truncated noisy matrices")]
pub struct Cli {
    /// Worker threads for Monte Carlo trials (default: all cores).
    #[arg(long, global = true, env = "OVERLAPKIT_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Limiting spectral densities and Hilbert transforms on a grid.
    Density(DensityArgs),
    /// Limiting rescaled overlaps on a quantile grid or at given points.
    Theory(TheoryArgs),
    /// Monte Carlo estimates of the rescaled overlaps.
    Simulate(SimulateArgs),
    /// Monte Carlo against theory with a 3-standard-error acceptance test.
    Compare(CompareArgs),
    /// Empirical Stieltjes transforms from the eigenvalue SDE and from direct
    /// sampling against the implicit-equation solution.
    BurgersCheck(BurgersArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Closed forms for `A = 0`.
    Mp,
    /// Implicit solver and resolvent propagation for general `A`.
    General,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spectrum {
    /// `ρ`, eigenvalues of `XᵀX`.
    Full,
    /// `ρ̃`, non-zero eigenvalues of `X̃ᵀX̃`.
    Truncated,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct RatioArgs {
    /// N/M.
    #[arg(long, default_value_t = 0.9)]
    pub q: f64,
    /// n/N.
    #[arg(long, default_value_t = 0.4)]
    pub alpha: f64,
    /// m/M.
    #[arg(long, default_value_t = 0.8)]
    pub beta: f64,
    /// Time (noise variance scale).
    #[arg(long, default_value_t = 3.0)]
    pub t: f64,
}

#[derive(Debug, Clone, Args)]
pub struct MatrixArgs {
    /// Row count M; N, n and m follow from the ratios.
    #[arg(long = "M")]
    pub rows: Option<usize>,
    /// Initial matrix A from a file (CSV with an `M,N` header, or binary).
    #[arg(long, conflicts_with = "a_diag")]
    pub a_file: Option<PathBuf>,
    /// Initial matrix A with the given diagonal (length N).
    #[arg(long, value_delimiter = ',')]
    pub a_diag: Option<Vec<f64>>,
}

impl MatrixArgs {
    pub fn has_matrix(&self) -> bool {
        self.a_file.is_some() || self.a_diag.is_some()
    }
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct DensityArgs {
    #[command(flatten)]
    pub ratios: RatioArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, value_enum, default_value_t = Mode::Mp)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Spectrum::Both)]
    pub spectrum: Spectrum,
    /// Number of interior grid points.
    #[arg(long, default_value_t = 101)]
    pub grid: usize,
    /// Grid interval `lo,hi` (default: the support, or `[0, scale]` in
    /// general mode); points are interior.
    #[arg(long, value_parser = parse_pair)]
    pub range: Option<(f64, f64)>,
    /// Also emit rows at the two support edges (mp mode).
    #[arg(long)]
    pub edges: bool,
    /// Decreasing factors `ε_k / scale` for boundary limits in general mode
    /// (default: polished limit).
    #[arg(long, value_delimiter = ',')]
    pub eps_schedule: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub ratios: RatioArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, value_enum, default_value_t = Mode::Mp)]
    pub mode: Mode,
    /// Quantile fractions x selecting μ = μ(x).
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub targets: Vec<f64>,
    /// Number of λ quantile fractions y, evenly spaced over `--y-range`;
    /// 0 together with `--at` evaluates only the given points.
    #[arg(long, default_value_t = 15)]
    pub grid: usize,
    #[arg(long, value_parser = parse_pair, default_value = "0.05,0.95")]
    pub y_range: (f64, f64),
    /// Extra points `mu,lambda` (repeatable).
    #[arg(long = "at", value_parser = parse_pair)]
    pub at: Vec<(f64, f64)>,
    /// Add the null-space overlaps `Ū(0, λ)`, `Ū(μ, 0)`, `Ū(0, 0)`.
    #[arg(long)]
    pub kernel: bool,
    /// Decreasing factors `ε_k / scale` for the ε-extrapolated inversion in
    /// general mode (default: exact boundary values).
    #[arg(long, value_delimiter = ',')]
    pub eps_schedule: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub ratios: RatioArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, default_value_t = 200)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Quantile fractions x of the truncated index.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub targets: Vec<f64>,
    /// Number of full-index fractions y, evenly spaced over `--y-range`.
    #[arg(long, default_value_t = 15)]
    pub grid: usize,
    #[arg(long, value_parser = parse_pair, default_value = "0.05,0.95")]
    pub y_range: (f64, f64),
    /// Half-width of the index window averaged around each target.
    #[arg(long, default_value_t = 0)]
    pub window: usize,
    /// Pick indices per trial by eigenvalue proximity to `μ(x)`, `λ(y)`
    /// instead of the fixed quantile indices.
    #[arg(long)]
    pub matched: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub mc: McArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub mc: McArgs,
    /// Theory mode (default: mp without an initial matrix, general with one).
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Fraction of channel-points that must lie within 3 standard errors.
    #[arg(long, default_value_t = 0.9)]
    pub min_fraction: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BurgersArgs {
    #[command(flatten)]
    pub ratios: RatioArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[arg(long, default_value_t = 2048)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of z points on `--z-range` shifted by `i·--z-imag`.
    #[arg(long, default_value_t = 10)]
    pub grid: usize,
    #[arg(long, value_parser = parse_pair, default_value = "0,5")]
    pub z_range: (f64, f64),
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub z_imag: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}
