use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(
    name = "bottleform",
    version,
    about = "Normal forms, formal integrals and surfaces of section for magnetic-bottle Hamiltonians",
    args_conflicts_with_subcommands = false
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    /// Re-run the command stored in a run_config.json (the subcommand is then omitted).
    #[arg(long, value_name = "FILE", global = true)]
    pub from_config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct GlobalOpts {
    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = "out", global = true)]
    pub out: PathBuf,

    /// Potential V(rho, z) as a polynomial expression file; the builtin
    /// bottle potential is used when absent.
    #[arg(long, value_name = "FILE", global = true)]
    pub potential: Option<PathBuf>,

    /// Worker threads for orbit batches and grid sampling.
    #[arg(long, value_name = "N", default_value_t = 1, global = true)]
    pub threads: usize,

    /// Seeds `(z, p_z)` on the section, one pair per line ("z pz" or "z,pz", # comments).
    #[arg(long, value_name = "FILE", global = true)]
    pub seed_file: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Compute the normal form, generators and remainder.
    Normalize(NormalizeArgs),
    /// Numerical section and theoretical level sets at one energy.
    Section(SectionArgs),
    /// Remainder norms, optimal orders and asymptotic fits.
    Asymptotics(AsymptoticsArgs),
    /// Bifurcation energies of resonant orbits from the central orbit.
    Bifurcation(BifurcationArgs),
    /// Stability threshold of the central orbit: monodromy and normal-form estimates.
    ChaosThreshold(ThresholdArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Nonres,
    Res,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ModeOpts {
    /// Normal form type.
    #[arg(long, value_enum, default_value_t = ModeArg::Nonres)]
    pub mode: ModeArg,
    /// Resonance m1 (gyration side) for --mode res.
    #[arg(long, default_value_t = 2)]
    pub m1: u32,
    /// Resonance m2 (mirror side) for --mode res.
    #[arg(long, default_value_t = 1)]
    pub m2: u32,
    /// Nonresonant order used to locate the resonance for --mode res.
    #[arg(long, default_value_t = 8)]
    pub bif_order: u32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct NormalizeArgs {
    #[command(flatten)]
    pub mode: ModeOpts,
    /// Number of normalization steps r_max.
    #[arg(long, default_value_t = 15)]
    pub order: u32,
    /// Truncation order r_trunc.
    #[arg(long, default_value_t = 20)]
    pub trunc: u32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct SectionArgs {
    #[command(flatten)]
    pub mode: ModeOpts,
    /// Energy E of the section.
    #[arg(long)]
    pub energy: f64,
    /// Normalization order of the formal integral.
    #[arg(long, default_value_t = 5)]
    pub order: u32,
    /// Truncation order (defaults to --order).
    #[arg(long)]
    pub trunc: Option<u32>,
    /// Crossings recorded per seed.
    #[arg(long, default_value_t = 500)]
    pub n_crossings: usize,
    /// Grid points per axis for the level-set field.
    #[arg(long, default_value_t = 400)]
    pub grid: usize,
    /// Half-width of the z window of the grid.
    #[arg(long, default_value_t = 1.5)]
    pub z_half_width: f64,
    /// Integrator tolerance.
    #[arg(long, default_value_t = 1e-12)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    pub mode: ModeOpts,
    /// Energy E.
    #[arg(long, default_value_t = 0.2)]
    pub energy: f64,
    /// Ratio parameter beta of the norm.
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Highest normalization order scanned.
    #[arg(long, default_value_t = 15)]
    pub r_max: u32,
    /// Truncation order; also the largest N of the norm.
    #[arg(long, default_value_t = 20)]
    pub trunc: u32,
    /// Smallest mirror energy of the logarithmic grid.
    #[arg(long, default_value_t = 1e-5)]
    pub de_min: f64,
    /// Largest mirror energy of the logarithmic grid.
    #[arg(long, default_value_t = 1e-1)]
    pub de_max: f64,
    /// Grid points per decade.
    #[arg(long, default_value_t = 5)]
    pub per_decade: u32,
    /// Explicit comma-separated mirror energies (replaces the grid).
    #[arg(long, value_delimiter = ',')]
    pub delta_e: Option<Vec<f64>>,
    /// Upper end of the power-law fit range.
    #[arg(long, default_value_t = 1e-3)]
    pub power_law_max: f64,
    /// Upper end of the exponential fit range.
    #[arg(long, default_value_t = 1e-3)]
    pub exponential_max: f64,
    /// Reference mirror energy of the exponential law.
    #[arg(long, default_value_t = 1e-3)]
    pub delta_e0: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct BifurcationArgs {
    /// Nonresonant normalization order.
    #[arg(long, default_value_t = 8)]
    pub order: u32,
    /// Resonances m1:m2, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4:1,3:1,2:1,1:1")]
    pub resonances: Vec<String>,
    /// Skip the numerical (monodromy) counterparts.
    #[arg(long)]
    pub no_numeric: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdArgs {
    /// Lowest normalization order of the table.
    #[arg(long, default_value_t = 2)]
    pub r_min: u32,
    /// Highest normalization order of the table.
    #[arg(long, default_value_t = 30)]
    pub r_max: u32,
    /// Reference threshold; defaults to the monodromy result.
    #[arg(long)]
    pub reference: Option<f64>,
    /// Energy resolution of the monodromy bisection.
    #[arg(long, default_value_t = 1e-8)]
    pub e_tol: f64,
}
