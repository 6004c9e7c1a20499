use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use vofrac::{Axis, FreezeRule, OperatorSide, OuterStencil, Sign, Which};

#[derive(Debug, Parser)]
#[command(name = "vofrac", version, about = "Variable-order fractional derivatives and integrals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an operator at one or more points.
    Differint(DifferintArgs),
    /// Compare a near-integer approximation with the direct operator.
    Compare(CompareArgs),
    /// Vary one parameter and evaluate the operator for each value.
    Sweep(SweepArgs),
    /// Fit the regularization parameter alpha on a window.
    Calibrate(CompareArgs),
    /// Solve an equation whose order depends on the solution.
    Solve(SolveArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SideArg {
    Left,
    Right,
    Sym,
}

impl From<SideArg> for OperatorSide {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::Left => OperatorSide::Left,
            SideArg::Right => OperatorSide::Right,
            SideArg::Sym => OperatorSide::Symmetric,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisArg {
    Time,
    Space,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::Time => Axis::Time,
            AxisArg::Space => Axis::Space,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StencilArg {
    Central2,
    Central4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezeArg {
    Midpoint,
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WhichArg {
    Below,
    Above,
}

impl From<WhichArg> for Which {
    fn from(w: WhichArg) -> Self {
        match w {
            WhichArg::Below => Which::Below,
            WhichArg::Above => Which::Above,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum VaryArg {
    T,
    EpsScale,
    NPoints,
}

fn parse_sign(s: &str) -> Result<Sign, String> {
    match s {
        "+1" | "1" | "+" => Ok(Sign::Plus),
        "-1" | "-" => Ok(Sign::Minus),
        _ => Err(format!("expected +1 or -1, got `{s}`")),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct QuadArgs {
    /// Grid points of the inner integral.
    #[arg(long = "n-points")]
    pub n_points: Option<usize>,
    #[arg(long, value_enum, default_value_t = StencilArg::Central2)]
    pub stencil: StencilArg,
    #[arg(long, value_enum, default_value_t = FreezeArg::Midpoint)]
    pub freeze: FreezeArg,
    /// Minimum distance of `n - d` from the gamma pole.
    #[arg(long, default_value_t = 1e-9)]
    pub delta: f64,
    /// Outer step as a multiple of the inner grid step.
    #[arg(long = "step-factor", default_value_t = 1.0)]
    pub step_factor: f64,
}

impl QuadArgs {
    pub fn config(&self, default_points: usize) -> vofrac::QuadratureConfig<f64> {
        vofrac::QuadratureConfig {
            n_points: self.n_points.unwrap_or(default_points),
            freeze_rule: match self.freeze {
                FreezeArg::Midpoint => FreezeRule::Midpoint,
                FreezeArg::Left => FreezeRule::Left,
            },
            outer_stencil: match self.stencil {
                StencilArg::Central2 => OuterStencil::Central2,
                StencilArg::Central4 => OuterStencil::Central4,
            },
            outer_step_factor: self.step_factor,
            pole_guard: self.delta,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutputArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PointArgs {
    #[arg(long = "t", allow_hyphen_values = true, conflicts_with = "t_range")]
    pub t: Option<f64>,
    #[arg(long = "t-range", num_args = 3, value_names = ["LO", "HI", "N"], allow_hyphen_values = true)]
    pub t_range: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DifferintArgs {
    /// Function: an expression in t (or x), or @file.csv.
    #[arg(long, allow_hyphen_values = true)]
    pub func: String,
    /// Order d(t): an expression or a constant.
    #[arg(long, allow_hyphen_values = true)]
    pub dim: String,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub points: PointArgs,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    #[arg(long, value_enum, default_value_t = AxisArg::Time)]
    pub axis: AxisArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub func: String,
    /// Order `1 - eps(t)` or `1 + eps(t)`.
    #[arg(long, allow_hyphen_values = true)]
    pub dim: String,
    #[arg(long, value_enum, default_value_t = WhichArg::Below)]
    pub which: WhichArg,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_hyphen_values = true, required = true)]
    pub window: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    /// Regularization sign a = +1 or -1 (default: -1 below one, +1 above).
    #[arg(long, value_parser = parse_sign, allow_hyphen_values = true)]
    pub sign: Option<Sign>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub func: String,
    #[arg(long, allow_hyphen_values = true)]
    pub dim: String,
    #[arg(long, allow_hyphen_values = true)]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub b: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub points: PointArgs,
    #[arg(long, value_enum, default_value_t = SideArg::Left)]
    pub side: SideArg,
    #[arg(long, value_enum, default_value_t = AxisArg::Time)]
    pub axis: AxisArg,
    /// Parameter to vary: `t` takes its values from --t-range, the others
    /// from --values at a single --t.
    #[arg(long, value_enum)]
    pub vary: VaryArg,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub values: Vec<f64>,
    /// Scaling centre for eps-scale: the order becomes `c + s (d(t) - c)`.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub center: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub quad: QuadArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    /// Right-hand side g: an expression in t, or @file.csv.
    #[arg(long, allow_hyphen_values = true)]
    pub func: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub d0: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub kappa: f64,
    #[arg(long, num_args = 2, value_names = ["LO", "HI"], default_values_t = [0.05, 0.95])]
    pub clamp: Vec<f64>,
    /// Initial guess (expression or @file.csv); zero when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub initial: Option<String>,
    #[arg(long, default_value_t = 0.5)]
    pub omega: f64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long = "max-iter", default_value_t = 100)]
    pub max_iter: usize,
    /// Grid points of the solver grid.
    #[arg(long = "n-points")]
    pub n_points: Option<usize>,
    #[arg(long, default_value_t = 1e-9)]
    pub delta: f64,
    /// Exit with status 3 when the iteration does not converge.
    #[arg(long)]
    pub strict: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}
