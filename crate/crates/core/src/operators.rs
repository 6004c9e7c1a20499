//! Public operator surface: classical constant-order Riemann–Liouville
//! operators and their variable-order generalization, left, right and
//! symmetric, in time or along one spatial axis.
//!
//! Every fractional value is produced the same way: the inner integral is
//! evaluated by [`crate::quadrature`] on its own `n_points` grid at each
//! outer-stencil node, then differenced `n` times. The outer step is
//! `outer_step_factor` times the quadrature step of the evaluation point, so
//! a batched call is just the pointwise call repeated.

use rayon::prelude::*;
use serde::Serialize;

use crate::dimension::DimensionField;
use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::quadrature::{convolve, derivative_at, QuadratureConfig, Side, Trust};
use crate::real::Real;

/// Orders within this distance of a non-negative integer are dispatched to
/// the classical derivative.
const INTEGER_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorSide {
    Left,
    Right,
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Time,
    Space,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSpec<T> {
    pub side: OperatorSide,
    pub axis: Axis,
    pub a: T,
    pub b: T,
    pub d_field: DimensionField<T>,
    pub cfg: QuadratureConfig<T>,
}

impl<T: Real> OperatorSpec<T> {
    pub fn new(side: OperatorSide, axis: Axis, a: T, b: T, d_field: DimensionField<T>, cfg: QuadratureConfig<T>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!("operator interval [{a}, {b}] must be finite with a < b")));
        }
        cfg.validate()?;
        d_field.check_covers(a, b)?;
        Ok(Self { side, axis, a, b, d_field, cfg })
    }

    pub fn left(a: T, b: T, d_field: DimensionField<T>, cfg: QuadratureConfig<T>) -> Result<Self> {
        Self::new(OperatorSide::Left, Axis::Time, a, b, d_field, cfg)
    }

    pub fn right(a: T, b: T, d_field: DimensionField<T>, cfg: QuadratureConfig<T>) -> Result<Self> {
        Self::new(OperatorSide::Right, Axis::Time, a, b, d_field, cfg)
    }

    pub fn symmetric(a: T, b: T, d_field: DimensionField<T>, cfg: QuadratureConfig<T>) -> Result<Self> {
        Self::new(OperatorSide::Symmetric, Axis::Time, a, b, d_field, cfg)
    }

    pub fn with_side(&self, side: OperatorSide) -> Self {
        Self { side, ..self.clone() }
    }

    pub fn with_axis(&self, axis: Axis) -> Self {
        Self { axis, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult<T> {
    pub t: T,
    pub value: T,
    pub trust: Trust,
    pub scheme_id: String,
}

fn exact_integer<T: Real>(d: T) -> Option<usize> {
    let r = d.round();
    if r >= T::zero() && (d - r).abs() <= T::lit(INTEGER_TOL) {
        r.to_usize()
    } else {
        None
    }
}

fn scheme_name<T: Real>(cfg: &QuadratureConfig<T>) -> String {
    let freeze = match cfg.freeze_rule {
        crate::quadrature::FreezeRule::Midpoint => "midpoint",
        crate::quadrature::FreezeRule::Left => "left",
    };
    let stencil = match cfg.outer_stencil {
        crate::quadrature::OuterStencil::Central2 => "central2",
        crate::quadrature::OuterStencil::Central4 => "central4",
    };
    format!("product-{freeze}/{stencil}")
}

/// Classical `m`-th derivative, signed `(-1)^m` for the right side.
fn integer_order<T: Real>(
    f: &FunctionSpec<T>,
    m: usize,
    side: Side,
    t: T,
    bounds: (T, T),
    cfg: &QuadratureConfig<T>,
) -> Result<EvalResult<T>> {
    let accuracy = cfg.outer_stencil.accuracy();
    let (step, bounds) = match f.as_sampled() {
        Some(g) => {
            let lo = bounds.0.max(g.a());
            let hi = bounds.1.min(g.b());
            (g.step(), (lo, hi))
        }
        None => {
            // balances truncation against rounding for an order-p stencil
            let h = T::epsilon().powf(T::one() / T::from_count(m + accuracy)) * t.abs().max(T::one());
            (h, (T::neg_infinity(), T::infinity()))
        }
    };
    let (mut value, trust) = derivative_at(|s| f.eval(s), t, m, step, bounds, accuracy)?;
    if side == Side::Future && m % 2 == 1 {
        value = -value;
    }
    Ok(EvalResult { t, value, trust, scheme_id: format!("integer-order/{m}") })
}

/// Shared one-sided evaluation. `limit` is the far integration end; `other`
/// bounds the outer stencil on the opposite side (infinite when unbounded).
fn one_sided<T: Real>(
    f: &FunctionSpec<T>,
    d_field: &DimensionField<T>,
    side: Side,
    limit: T,
    other: T,
    t: T,
    cfg: &QuadratureConfig<T>,
) -> Result<EvalResult<T>> {
    cfg.validate()?;
    if let Some(d) = d_field.as_constant() {
        if let Some(m) = exact_integer(d) {
            let bounds = match side {
                Side::Past => (limit, other),
                Side::Future => (other, limit),
            };
            if m == 0 {
                return Ok(EvalResult { t, value: f.eval(t)?, trust: Trust::Interior, scheme_id: "identity".into() });
            }
            return integer_order(f, m, side, t, bounds, cfg);
        }
    }
    let n = d_field.band();
    let inside = match side {
        Side::Past => t > limit && t <= other,
        Side::Future => t < limit && t >= other,
    };
    if !inside {
        if t == limit {
            if n == 0 {
                return Ok(EvalResult { t, value: T::zero(), trust: Trust::Boundary, scheme_id: scheme_name(cfg) });
            }
            return Err(Error::EmptyInterval { t: t.as_f64(), order: d_field.d_max().as_f64() });
        }
        return Err(Error::InvalidInput(format!("evaluation point {t} lies outside the operator interval")));
    }
    let inner = |s: T| {
        if s == limit {
            Ok(T::zero())
        } else {
            convolve(f, d_field, side, s, limit, n, cfg)
        }
    };
    let (step, bounds) = match f.as_sampled() {
        Some(g) => {
            let stride = cfg.outer_step_factor.round().max(T::one());
            let (lo, hi) = match side {
                Side::Past => (limit, other.min(g.b())),
                Side::Future => (other.max(g.a()), limit),
            };
            (g.step() * stride, (lo, hi))
        }
        None => {
            let h = (t - limit).abs() / T::from_count(cfg.n_points - 1);
            let bounds = match side {
                Side::Past => (limit, other),
                Side::Future => (other, limit),
            };
            (h * cfg.outer_step_factor, bounds)
        }
    };
    let (mut value, trust) = derivative_at(inner, t, n, step, bounds, cfg.outer_stencil.accuracy())?;
    if side == Side::Future && n % 2 == 1 {
        value = -value;
    }
    Ok(EvalResult { t, value, trust, scheme_id: scheme_name(cfg) })
}

/// Constant-order left operator over `[a, t]` with no upper bound on the
/// outer stencil.
pub fn rl_left<T: Real>(f: &FunctionSpec<T>, d: T, a: T, t: T, cfg: &QuadratureConfig<T>) -> Result<EvalResult<T>> {
    let field = DimensionField::constant(d)?;
    one_sided(f, &field, Side::Past, a, T::infinity(), t, cfg)
}

/// Constant-order right operator over `[t, b]`, carrying the `(-1)^n` sign.
pub fn rl_right<T: Real>(f: &FunctionSpec<T>, d: T, b: T, t: T, cfg: &QuadratureConfig<T>) -> Result<EvalResult<T>> {
    let field = DimensionField::constant(d)?;
    one_sided(f, &field, Side::Future, b, T::neg_infinity(), t, cfg)
}

fn expect_side<T>(spec: &OperatorSpec<T>, side: OperatorSide, axis: Axis) -> Result<()> {
    if spec.side != side || spec.axis != axis {
        return Err(Error::InvalidInput(format!(
            "operator spec is {:?}/{:?}, expected {side:?}/{axis:?}",
            spec.side, spec.axis
        )));
    }
    Ok(())
}

fn left_unchecked<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, t: T) -> Result<EvalResult<T>> {
    one_sided(f, &spec.d_field, Side::Past, spec.a, spec.b, t, &spec.cfg)
}

fn right_unchecked<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, t: T) -> Result<EvalResult<T>> {
    one_sided(f, &spec.d_field, Side::Future, spec.b, spec.a, t, &spec.cfg)
}

fn symmetric_unchecked<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, t: T) -> Result<EvalResult<T>> {
    if !(t > spec.a && t < spec.b) {
        return Err(Error::InvalidInput(format!("symmetric operator needs {t} strictly inside ({}, {})", spec.a, spec.b)));
    }
    let left = left_unchecked(f, spec, t)?;
    let right = right_unchecked(f, spec, t)?;
    let trust = if left.trust == Trust::Interior && right.trust == Trust::Interior {
        Trust::Interior
    } else {
        Trust::Boundary
    };
    Ok(EvalResult { t, value: symmetric_mean(left.value, right.value), trust, scheme_id: left.scheme_id })
}

#[inline]
fn symmetric_mean<T: Real>(left: T, right: T) -> T {
    T::lit(0.5) * (left + right)
}

/// Variable-order left operator.
pub fn gfd_left<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, t: T) -> Result<EvalResult<T>> {
    expect_side(spec, OperatorSide::Left, Axis::Time)?;
    left_unchecked(f, spec, t)
}

/// Variable-order right operator.
pub fn gfd_right<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, t: T) -> Result<EvalResult<T>> {
    expect_side(spec, OperatorSide::Right, Axis::Time)?;
    right_unchecked(f, spec, t)
}

/// Mean of the left and right operators.
pub fn gfd_symmetric<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, t: T) -> Result<EvalResult<T>> {
    expect_side(spec, OperatorSide::Symmetric, Axis::Time)?;
    symmetric_unchecked(f, spec, t)
}

/// Any side, applied along a spatial coordinate `x`.
pub fn gfd_spatial<T: Real>(f_of_x: &FunctionSpec<T>, spec: &OperatorSpec<T>, x: T) -> Result<EvalResult<T>> {
    if spec.axis != Axis::Space {
        return Err(Error::InvalidInput("spatial operator needs a spec with axis = space".into()));
    }
    evaluate(f_of_x, spec, x)
}

/// Dispatches on `spec.side` regardless of axis.
pub fn evaluate<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, t: T) -> Result<EvalResult<T>> {
    match spec.side {
        OperatorSide::Left => left_unchecked(f, spec, t),
        OperatorSide::Right => right_unchecked(f, spec, t),
        OperatorSide::Symmetric => symmetric_unchecked(f, spec, t),
    }
}

/// Evaluates at many points in parallel; results are in input order and
/// identical to pointwise calls.
pub fn evaluate_many<T: Real>(f: &FunctionSpec<T>, spec: &OperatorSpec<T>, points: &[T]) -> Result<Vec<EvalResult<T>>> {
    points.par_iter().map(|&t| evaluate(f, spec, t)).collect()
}
