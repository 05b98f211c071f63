use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "capfield",
    version,
    about = "Weighted equilibrium measures on the unit sphere"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Newtonian capacity of the south cap {φ ≥ α}.
    Capacity {
        #[arg(long, value_parser = radians)]
        alpha: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Support cap {φ ≥ α₀} and Robin constant F_Q.
    Support {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum, default_value_t = SupportChoice::Auto)]
        method: SupportChoice,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Equilibrium density on a cap, with its potential, as a CSV table.
    Density {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        cap: CapArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// F-functional of the south cap {φ ≥ α}.
    Ffunctional {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_parser = radians)]
        alpha: f64,
        /// Evaluate by quadrature even when a closed form exists.
        #[arg(long)]
        numeric: bool,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Gauss variational inequalities for a density on a cap.
    Verify {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        cap: CapArgs,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        /// Restrict the measure to the south cap {φ ≥ CONDUCTOR}.
        #[arg(long, value_parser = radians)]
        conductor: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Closed-form-free ground truth.
    Oracle {
        #[command(flatten)]
        field: FieldArgs,
        #[arg(long, value_enum)]
        kind: OracleKind,
        /// Nyström nodes or energy rings.
        #[arg(long, default_value_t = 64)]
        n: usize,
        /// Cap for the Nyström solve (default: the support).
        #[arg(long, value_parser = radians)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 20_000)]
        iterations: usize,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Critical heights h₋ < h₊ of a point charge q.
    Gonchar {
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FieldChoice {
    Zero,
    PointCharge,
    Quadratic,
    Tabulated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SupportChoice {
    /// Support equation where one exists, else F-functional minimization.
    Auto,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DensityChoice {
    /// Closed form where one exists, else the Abel pipeline.
    Auto,
    Pipeline,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleKind {
    Nystrom,
    Energy,
}

#[derive(Debug, Args)]
pub struct FieldArgs {
    #[arg(long, value_enum, default_value_t = FieldChoice::Zero)]
    pub field: FieldChoice,
    /// Point-charge strength.
    #[arg(long, allow_negative_numbers = true)]
    pub q: Option<f64>,
    /// Point-charge height above the center.
    #[arg(long, allow_negative_numbers = true)]
    pub h: Option<f64>,
    /// Quadratic field a·x₃² + b·x₃ + c.
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub c: Option<f64>,
    /// CSV of (x₃, Q) samples.
    #[arg(long)]
    pub table: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CapArgs {
    /// South cap {φ ≥ ALPHA} (default: the support).
    #[arg(long, value_parser = radians)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 64)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = DensityChoice::Auto)]
    pub method: DensityChoice,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Also write the JSON summary here.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// CSV table output (density, verify and oracle).
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Write the summary as golden values.
    #[arg(long, conflicts_with = "check")]
    pub pin: Option<PathBuf>,
    /// Compare the summary against golden values; exit 1 on mismatch.
    #[arg(long)]
    pub check: Option<PathBuf>,
    /// Include wall-clock timings (makes output nondeterministic).
    #[arg(long)]
    pub timings: bool,
}

/// Polar angles are radians in `[0, π]`; anything that looks like degrees is
/// refused rather than converted.
pub fn radians(s: &str) -> Result<f64, String> {
    let t = s.trim();
    let lower = t.to_ascii_lowercase();
    if lower.ends_with("deg") || lower.ends_with('d') || t.ends_with('°') {
        return Err(format!(
            "'{s}': degrees are not accepted, give the angle in radians"
        ));
    }
    let v: f64 = t.parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() || !(0.0..=PI).contains(&v) {
        return Err(format!("'{s}' is outside [0, π]; angles are in radians"));
    }
    Ok(v)
}
