//! Variable-order fractional calculus.
//!
//! Left- and right-sided Riemann-Liouville operators whose order `d(t')` varies
//! along the integration variable, their symmetric mean, closed-form
//! approximations for orders near one, and a fixed-point solver for equations
//! whose order depends on the unknown.
//!
//! Everything is generic over [`Real`] (`f32` or `f64`); the `*64` aliases fix
//! the scalar to `f64`.
//!
//! ```
//! use vofrac::{rl_left, FunctionSpec, QuadratureConfig};
//!
//! let f = FunctionSpec::<f64>::power(1.0, 1.0);
//! let r = rl_left(&f, 0.5, 0.0, 1.0, &QuadratureConfig::default()).unwrap();
//! assert!((r.value - 1.128_379_167).abs() < 1e-3);
//! ```

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod dimension;
pub mod error;
pub mod expr;
pub mod function;
pub mod near_integer;
pub mod operators;
pub mod quadrature;
pub mod real;
pub mod solver;
pub mod special;

pub use dimension::{band_of, order_index, DimensionField, DimensionKind};
pub use error::{Error, Result};
pub use expr::{Expr, Variable};
pub use function::{Catalog, ExprField, FunctionSpec, GridFunction};
pub use near_integer::{
    approx_above_one, approx_below_one, approx_log_form, calibrate_alpha, calibrate_alpha_with, compare, covariant_form, ApproxComparison,
    Covariant, EpsilonField, LogForm, Sign, Which,
};
pub use operators::{
    evaluate, evaluate_many, gfd_left, gfd_right, gfd_spatial, gfd_symmetric, rl_left, rl_right, Axis, EvalResult,
    OperatorSide, OperatorSpec,
};
pub use quadrature::{
    fd_weights, kernel_moment, outer_derivative, singular_convolve, singular_convolve_right, Differentiated,
    FreezeRule, OuterStencil, QuadratureConfig, Trust,
};
pub use real::{linspace, Real};
pub use solver::{
    apply_forward, forward_linear, march_linear, solve_fixed_point, ModelProblem, OrderLaw, SolveReport,
};
pub use special::{digamma, gamma};

pub type FunctionSpec64 = FunctionSpec<f64>;
pub type GridFunction64 = GridFunction<f64>;
pub type DimensionField64 = DimensionField<f64>;
pub type QuadratureConfig64 = QuadratureConfig<f64>;
pub type OperatorSpec64 = OperatorSpec<f64>;
pub type EvalResult64 = EvalResult<f64>;
pub type EpsilonField64 = EpsilonField<f64>;
pub type ApproxComparison64 = ApproxComparison<f64>;
pub type ModelProblem64 = ModelProblem<f64>;
pub type SolveReport64 = SolveReport<f64>;
