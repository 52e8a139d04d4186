use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sfoliate::chart_core::Sampler;

#[derive(Debug, Parser)]
#[command(
    name = "sfoliate",
    version,
    about = "Verify almost S-structure identities, curvature, warps and soliton residuals"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub options: Options,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Run the structure axioms and the full identity suite.
    Verify,
    /// Tabulate Ricci, scalar and sectional curvature and check the model's oracle.
    Curvature,
    /// Vertical warp by a basic function, or the canonical variation table.
    Warp,
    /// Least-squares fit of a soliton family.
    SolitonFit,
    /// Residuals along the potential-on-Reeb-fields soliton argument.
    Chain,
    /// Inputs of the Einstein non-existence argument for p >= 2.
    Witness,
    /// List the built-in model spaces.
    Catalog,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Curvature => "curvature",
            Command::Warp => "warp",
            Command::SolitonFit => "soliton-fit",
            Command::Chain => "chain",
            Command::Witness => "witness",
            Command::Catalog => "catalog",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StructureName {
    StandardS,
    FlatTorus,
    Sphere,
    Flat,
}

impl StructureName {
    pub fn name(self) -> &'static str {
        match self {
            StructureName::StandardS => "standard-s",
            StructureName::FlatTorus => "flat-torus",
            StructureName::Sphere => "sphere",
            StructureName::Flat => "flat",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyName {
    /// X = Σ cⁱ ξᵢ with constant coefficients.
    Reeb,
    /// X = a · position.
    Radial,
    /// X = 0, which fits an Einstein constant.
    Zero,
    /// Gradient form with the fixed potential from --potential-fn.
    Potential,
}

impl FamilyName {
    pub fn name(self) -> &'static str {
        match self {
            FamilyName::Reeb => "reeb",
            FamilyName::Radial => "radial",
            FamilyName::Zero => "zero",
            FamilyName::Potential => "potential",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct Options {
    #[arg(long, global = true, value_enum, default_value = "standard-s")]
    pub structure: StructureName,
    /// Horizontal half-dimension of the standard structure.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Number of Reeb fields.
    #[arg(long, global = true)]
    pub p: Option<usize>,
    /// Dimension of the sphere or flat chart.
    #[arg(long, global = true)]
    pub m: Option<usize>,
    #[arg(long, global = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub periodic: bool,
    #[arg(long, global = true, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Overrides every pass/fail tolerance of the subcommand.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub tol: Option<f64>,
    /// Jet order for curvature tables; 3 adds the contracted Bianchi check.
    #[arg(long, global = true, default_value_t = 2, value_parser = clap::value_parser!(u8).range(2..=3))]
    pub order: u8,
    #[arg(long = "warp-fn", global = true)]
    pub warp_fn: Option<String>,
    /// Scalar potential; repeat once per Reeb field for `chain`.
    #[arg(long = "potential-fn", global = true)]
    pub potential_fn: Vec<String>,
    /// Soliton constant for `chain`.
    #[arg(
        long,
        global = true,
        default_value_t = 0.0,
        allow_negative_numbers = true
    )]
    pub lambda: f64,
    #[arg(long, global = true, value_enum)]
    pub family: Option<FamilyName>,
    /// Grid points per axis for the exhaustive cross-check of `soliton-fit`.
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

impl Options {
    pub fn sampler(&self) -> Sampler {
        Sampler::new(self.samples, self.seed)
    }

    /// The `--tol` override, or the subcommand's own tolerance.
    pub fn tol_or(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }
}
