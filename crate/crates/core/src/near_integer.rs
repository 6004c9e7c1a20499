//! Closed-form approximations of the variable-order operator for orders
//! `d = 1 -+ eps(t)` with small `eps`, expressed through ordinary derivatives,
//! plus calibration of the regularization parameter `alpha` against the
//! direct operator.
//!
//! The correction term is built from `f~ = eps f / Gamma(1 + eps)` below one
//! and `eps f / Gamma(1 - eps)` above one. Every `d/dt` here is a centered
//! second-order difference.

use rayon::prelude::*;
use serde::Serialize;

use crate::dimension::DimensionField;
use crate::error::{Error, Result};
use crate::function::FunctionSpec;
use crate::operators::{evaluate, OperatorSide, OperatorSpec};
use crate::quadrature::{derivative_at, Trust};
use crate::real::{linspace, Real};
use crate::special::{digamma, gamma};

/// Points in the calibration grid.
pub const CALIBRATION_POINTS: usize = 33;

/// The `a = +-1` sign choice of the regularization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Sign {
    #[serde(rename = "+1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }
}

/// Which side of one the order sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Which {
    /// `d = 1 - eps`
    Below,
    /// `d = 1 + eps`
    Above,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonField<T> {
    pub eps: FunctionSpec<T>,
    pub sign_a: Sign,
    pub alpha: T,
}

impl<T: Real> EpsilonField<T> {
    /// Checks `sup |eps| < 1/2` on `interval`.
    pub fn new(eps: FunctionSpec<T>, sign_a: Sign, alpha: T, interval: (T, T)) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidInput("alpha must be finite".into()));
        }
        let nodes = match eps.as_sampled() {
            Some(g) => g.nodes(),
            None => linspace(interval.0, interval.1, 1001),
        };
        for s in nodes {
            let e = eps.eval(s)?;
            if !(e.abs() < T::lit(0.5)) {
                return Err(Error::InvalidInput(format!("|eps({s})| = {} is not below 1/2", e.abs())));
            }
        }
        Ok(Self { eps, sign_a, alpha })
    }

    pub fn constant(eps: T, sign_a: Sign, alpha: T) -> Result<Self> {
        Self::new(FunctionSpec::constant(eps), sign_a, alpha, (T::zero(), T::one()))
    }

    pub fn with_alpha(&self, alpha: T) -> Self {
        Self { alpha, ..self.clone() }
    }

    /// The order field `1 -+ eps(t)` on `domain`.
    pub fn order_field(&self, which: Which, domain: (T, T), n_points: usize) -> Result<DimensionField<T>> {
        let sign = match which {
            Which::Below => -T::one(),
            Which::Above => T::one(),
        };
        DimensionField::shifted(&self.eps, T::one(), sign, domain, n_points)
    }
}

/// Centered derivative of a composite built from `f` and `eps`. Sampled
/// inputs force their own grid spacing.
fn d_dt<T: Real>(
    f: &FunctionSpec<T>,
    eps: &FunctionSpec<T>,
    t: T,
    g: impl Fn(T) -> Result<T>,
) -> Result<T> {
    let sampled = f.as_sampled().or_else(|| eps.as_sampled());
    let (step, bounds) = match sampled {
        Some(grid) => (grid.step(), (grid.a(), grid.b())),
        None => {
            let h = T::epsilon().cbrt() * t.abs().max(T::one());
            (h, (T::neg_infinity(), T::infinity()))
        }
    };
    Ok(derivative_at(g, t, 1, step, bounds, 2)?.0)
}

fn derivative<T: Real>(f: &FunctionSpec<T>, eps: &FunctionSpec<T>, t: T) -> Result<T> {
    d_dt(f, eps, t, |s| f.eval(s))
}

/// Splits an approximation into `base + alpha * coef`.
fn affine_parts<T: Real>(f: &FunctionSpec<T>, eps: &EpsilonField<T>, which: Which, t: T) -> Result<(T, T)> {
    let e = &eps.eps;
    let sign = eps.sign_a.value::<T>();
    match which {
        Which::Below => {
            let base = derivative(f, e, t)?;
            let corr = d_dt(f, e, t, |s| {
                let ep = e.eval(s)?;
                Ok(ep * f.eval(s)? / gamma(T::one() + ep)?)
            })?;
            Ok((base, sign * corr))
        }
        Which::Above => {
            let base = d_dt(f, e, t, |s| Ok(f.eval(s)? / gamma(T::one() - e.eval(s)?)?))?;
            let corr = d_dt(f, e, t, |s| {
                let ep = e.eval(s)?;
                Ok(ep * f.eval(s)? / gamma(T::one() - ep)?)
            })?;
            Ok((base, sign * corr))
        }
    }
}

/// `f' -+ d/dt[alpha eps f / Gamma(1 + eps)]` for `d = 1 - eps`; the sign is
/// `eps.sign_a`.
pub fn approx_below_one<T: Real>(f: &FunctionSpec<T>, eps: &EpsilonField<T>, t: T) -> Result<T> {
    let (base, coef) = affine_parts(f, eps, Which::Below, t)?;
    Ok(base + eps.alpha * coef)
}

/// `d/dt[f / Gamma(1 - eps)] +- d/dt[alpha eps f / Gamma(1 - eps)]` for
/// `d = 1 + eps`.
pub fn approx_above_one<T: Real>(f: &FunctionSpec<T>, eps: &EpsilonField<T>, t: T) -> Result<T> {
    let (base, coef) = affine_parts(f, eps, Which::Above, t)?;
    Ok(base + eps.alpha * coef)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogForm<T> {
    pub value: T,
    pub alpha: T,
    /// Set when `t0 <= 1`, where `alpha = ln t0` is not positive.
    pub warning: Option<String>,
}

/// `f' + d/dt[alpha f~]` with `alpha = ln t0`, valid for `|t - t0| << t0`.
/// `eps.alpha` and `eps.sign_a` are ignored.
pub fn approx_log_form<T: Real>(f: &FunctionSpec<T>, eps: &EpsilonField<T>, t: T, t0: T) -> Result<LogForm<T>> {
    if !(t0 > T::zero()) {
        return Err(Error::Domain(format!("ln t0 undefined for t0 = {t0}")));
    }
    let alpha = t0.ln();
    let warning = (alpha <= T::zero()).then(|| format!("t0 = {t0} gives non-positive alpha = {alpha}"));
    let e = &eps.eps;
    let base = derivative(f, e, t)?;
    let corr = d_dt(f, e, t, |s| {
        let ep = e.eval(s)?;
        Ok(ep * f.eval(s)? / gamma(T::one() + ep)?)
    })?;
    Ok(LogForm { value: base + alpha * corr, alpha, warning })
}

/// Approximation against the direct operator on a window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproxComparison<T> {
    pub t_grid: Vec<T>,
    pub approx: Vec<T>,
    pub direct: Vec<T>,
    pub abs_err: Vec<T>,
    pub trust: Vec<Trust>,
    /// Maximum over interior points of `|approx - direct| / |direct|`.
    pub max_rel_err: T,
    pub alpha_used: T,
}

struct Samples<T> {
    t_grid: Vec<T>,
    base: Vec<T>,
    coef: Vec<T>,
    direct: Vec<T>,
    trust: Vec<Trust>,
}

fn sample_window<T: Real>(
    f: &FunctionSpec<T>,
    eps: &EpsilonField<T>,
    window: (T, T),
    which: Which,
    spec: &OperatorSpec<T>,
) -> Result<Samples<T>> {
    if spec.side != OperatorSide::Left {
        return Err(Error::InvalidInput("calibration compares against the left-sided operator".into()));
    }
    let (lo, hi) = window;
    if !(lo < hi && lo > spec.a && hi <= spec.b) {
        return Err(Error::InvalidInput(format!("window [{lo}, {hi}] must lie inside ({}, {}]", spec.a, spec.b)));
    }
    let field = eps.order_field(which, (spec.a, spec.b), spec.cfg.n_points)?;
    let direct_spec = OperatorSpec { d_field: field, ..spec.clone() };
    sample_against(f, eps, window, which, |t| {
        let r = evaluate(f, &direct_spec, t)?;
        Ok((r.value, r.trust))
    })
}

fn sample_against<T: Real>(
    f: &FunctionSpec<T>,
    eps: &EpsilonField<T>,
    window: (T, T),
    which: Which,
    reference: impl Fn(T) -> Result<(T, Trust)> + Sync,
) -> Result<Samples<T>> {
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("window [{lo}, {hi}] is empty")));
    }
    let t_grid = linspace(lo, hi, CALIBRATION_POINTS);
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let (base, coef) = affine_parts(f, eps, which, t)?;
            let (direct, trust) = reference(t)?;
            Ok((base, coef, direct, trust))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut s = Samples { t_grid, base: vec![], coef: vec![], direct: vec![], trust: vec![] };
    for (base, coef, direct, trust) in rows {
        s.base.push(base);
        s.coef.push(coef);
        s.direct.push(direct);
        s.trust.push(trust);
    }
    Ok(s)
}

fn report<T: Real>(s: Samples<T>, alpha: T) -> ApproxComparison<T> {
    let approx: Vec<T> = s.base.iter().zip(&s.coef).map(|(&b, &c)| b + alpha * c).collect();
    let abs_err: Vec<T> = approx.iter().zip(&s.direct).map(|(&a, &d)| (a - d).abs()).collect();
    let max_rel_err = abs_err
        .iter()
        .zip(&s.direct)
        .zip(&s.trust)
        .filter(|(_, &tr)| tr == Trust::Interior)
        .fold(T::zero(), |m, ((&e, &d), _)| m.max(e / d.abs()));
    ApproxComparison { t_grid: s.t_grid, approx, direct: s.direct, abs_err, trust: s.trust, max_rel_err, alpha_used: alpha }
}

/// Compares the approximation with a fixed `alpha` (`eps.alpha`) against the
/// direct left operator on `CALIBRATION_POINTS` points of `window`.
pub fn compare<T: Real>(
    f: &FunctionSpec<T>,
    eps: &EpsilonField<T>,
    window: (T, T),
    which: Which,
    spec: &OperatorSpec<T>,
) -> Result<ApproxComparison<T>> {
    Ok(report(sample_window(f, eps, window, which, spec)?, eps.alpha))
}

/// Least-squares `alpha` matching the approximation to the direct operator.
///
/// The approximation is affine in `alpha`, so the minimizer is closed form:
/// `alpha = sum c (direct - base) / sum c^2`.
pub fn calibrate_alpha<T: Real>(
    f: &FunctionSpec<T>,
    eps: &EpsilonField<T>,
    window: (T, T),
    which: Which,
    spec: &OperatorSpec<T>,
) -> Result<(T, ApproxComparison<T>)> {
    let s = sample_window(f, eps, window, which, spec)?;
    let alpha = least_squares_alpha(&s.base, &s.coef, &s.direct)?;
    Ok((alpha, report(s, alpha)))
}

/// As [`calibrate_alpha`], fitting against an arbitrary reference that
/// returns a value and its trust flag at each window point.
pub fn calibrate_alpha_with<T: Real>(
    f: &FunctionSpec<T>,
    eps: &EpsilonField<T>,
    window: (T, T),
    which: Which,
    reference: impl Fn(T) -> Result<(T, Trust)> + Sync,
) -> Result<(T, ApproxComparison<T>)> {
    let s = sample_against(f, eps, window, which, reference)?;
    let alpha = least_squares_alpha(&s.base, &s.coef, &s.direct)?;
    Ok((alpha, report(s, alpha)))
}

fn least_squares_alpha<T: Real>(base: &[T], coef: &[T], target: &[T]) -> Result<T> {
    let scale = base.iter().chain(target).fold(T::one(), |m, v| m.max(v.abs()));
    let coef_max = coef.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if coef_max <= T::lit(1e-12) * scale {
        return Err(Error::SingularCalibration);
    }
    let (num, den) = coef
        .iter()
        .zip(base.iter().zip(target))
        .fold((T::zero(), T::zero()), |(n, d), (&c, (&b, &y))| (n + c * (y - b), d + c * c));
    Ok(num / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Covariant<T> {
    #[serde(rename = "a")]
    pub a_coef: T,
    #[serde(rename = "b")]
    pub b_coef: T,
    pub value: T,
}

/// `A f' - B f` with `A = 1/Gamma(1 - eps) + a eps` and
/// `B = Gamma(1 - eps)^-2 (1 + a eps) dGamma(1 - eps)/dt - a deps/dt`,
/// where `dGamma(1 - eps)/dt = -Gamma(1 - eps) psi(1 - eps) deps/dt`.
pub fn covariant_form<T: Real>(f: &FunctionSpec<T>, eps: &EpsilonField<T>, t: T) -> Result<Covariant<T>> {
    let a = eps.sign_a.value::<T>();
    let e = &eps.eps;
    let ep = e.eval(t)?;
    let de = d_dt(f, e, t, |s| e.eval(s))?;
    let g = gamma(T::one() - ep)?;
    let dgamma = -g * digamma(T::one() - ep)? * de;
    let a_coef = g.recip() + a * ep;
    let b_coef = (g * g).recip() * (T::one() + a * ep) * dgamma - a * de;
    let value = a_coef * derivative(f, e, t)? - b_coef * f.eval(t)?;
    Ok(Covariant { a_coef, b_coef, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dimension::DimensionField;
    use crate::quadrature::QuadratureConfig;
    use approx::assert_relative_eq;

    fn eps_const(e: f64, sign: Sign, alpha: f64) -> EpsilonField<f64> {
        EpsilonField::constant(e, sign, alpha).unwrap()
    }

    fn left_spec(a: f64, b: f64) -> OperatorSpec<f64> {
        OperatorSpec::left(a, b, DimensionField::constant(0.5).unwrap(), QuadratureConfig::default()).unwrap()
    }

    #[test]
    fn zero_eps_reduces_to_derivative() {
        let f = FunctionSpec::parse("sin(t) + t^2").unwrap();
        let zero = eps_const(0.0, Sign::Minus, 1.7);
        let fprime = derivative(&f, &zero.eps, 1.3).unwrap();
        assert_eq!(approx_below_one(&f, &zero, 1.3).unwrap(), fprime);
        assert_eq!(approx_above_one(&f, &zero, 1.3).unwrap(), fprime);
        assert_eq!(approx_log_form(&f, &zero, 1.3, 5.0).unwrap().value, fprime);
        assert_relative_eq!(fprime, 1.3f64.cos() + 2.6, max_relative = 1e-9);
    }

    #[test]
    fn below_one_example() {
        let f = FunctionSpec::power(1.0, 1.0);
        let v = approx_below_one(&f, &eps_const(0.01, Sign::Minus, 1.0), 1.0).unwrap();
        assert_relative_eq!(v, 1.0 - 0.01 / gamma(1.01).unwrap(), max_relative = 1e-9);
        assert_relative_eq!(v, 0.989_942_8, max_relative = 1e-6);
    }

    #[test]
    fn below_one_error_shrinks_with_eps() {
        let f = FunctionSpec::power(1.0, 1.0);
        let spec = left_spec(0.0, 2.0);
        let err = |e: f64| {
            let eps = eps_const(e, Sign::Minus, 1.0);
            let direct = evaluate(&f, &OperatorSpec { d_field: DimensionField::constant(1.0 - e).unwrap(), ..spec.clone() }, 1.0)
                .unwrap()
                .value;
            (approx_below_one(&f, &eps, 1.0).unwrap() - direct).abs()
        };
        assert!(err(0.01) <= 5.0 * err(0.02));
    }

    #[test]
    fn above_one_example() {
        let f = FunctionSpec::power(1.0, 2.0);
        let v = approx_above_one(&f, &eps_const(0.02, Sign::Plus, 1.0), 1.0).unwrap();
        // 2 t (1 + 0.02) / Gamma(0.98) at t = 1
        let expected = 2.0 * 1.02 / 1.011_947_355_812_511_1;
        assert_relative_eq!(v, expected, max_relative = 1e-8);
    }

    #[test]
    fn above_one_error_halves_with_eps() {
        let f = FunctionSpec::power(1.0, 1.0);
        let spec = left_spec(0.0, 3.0);
        let max_err = |e: f64| compare(&f, &eps_const(e, Sign::Plus, 1.0), (1.0, 2.0), Which::Above, &spec).unwrap().max_rel_err;
        assert!(max_err(0.01) <= 0.5 * max_err(0.02));
    }

    #[test]
    fn log_form_examples() {
        let f = FunctionSpec::power(1.0, 1.0);
        let eps = eps_const(0.05, Sign::Minus, 0.0);
        let r = approx_log_form(&f, &eps, 1.0, std::f64::consts::E).unwrap();
        assert_eq!(r.alpha, 1.0);
        let r = approx_log_form(&f, &eps, 10.0, 10.0).unwrap();
        assert_relative_eq!(r.value, 1.0 + 10f64.ln() * 0.05 / 0.973_504_265_562_775_6, max_relative = 1e-9);
        assert!(r.warning.is_none());
        assert!(approx_log_form(&f, &eps, 1.0, 0.5).unwrap().warning.is_some());
        assert!(matches!(approx_log_form(&f, &eps, 1.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn calibration_recovers_planted_alpha() {
        let f = FunctionSpec::<f64>::parse("t^2 + sin(t)").unwrap();
        let eps = EpsilonField::new(FunctionSpec::parse("0.03 + 0.01*t").unwrap(), Sign::Minus, 0.0, (0.0, 3.0)).unwrap();
        let planted = eps.with_alpha(1.7);
        let (alpha, report) = calibrate_alpha_with(&f, &eps, (1.0, 2.0), Which::Below, |t| {
            Ok((approx_below_one(&f, &planted, t)?, Trust::Interior))
        })
        .unwrap();
        assert!((alpha - 1.7).abs() <= 1e-6, "{alpha}");
        assert!(report.max_rel_err <= 1e-12);
    }

    #[test]
    fn zero_eps_calibration_is_singular() {
        let f = FunctionSpec::power(1.0, 1.0);
        let r = calibrate_alpha(&f, &eps_const(0.0, Sign::Minus, 0.0), (1.0, 2.0), Which::Below, &left_spec(0.0, 3.0));
        assert!(matches!(r, Err(Error::SingularCalibration)));
    }

    #[test]
    fn covariant_examples() {
        let f = FunctionSpec::parse("t^2 + 1").unwrap();
        let c = covariant_form(&f, &eps_const(0.0, Sign::Plus, 0.0), 1.5).unwrap();
        assert_eq!((c.a_coef, c.b_coef), (1.0, 0.0));
        assert_relative_eq!(c.value, 3.0, max_relative = 1e-9);

        let c = covariant_form(&f, &eps_const(0.1, Sign::Plus, 0.0), 1.5).unwrap();
        assert_relative_eq!(c.a_coef, 1.0 / 1.068_628_702_119_319_3 + 0.1, max_relative = 1e-12);
        assert_eq!(c.b_coef, 0.0);

        let ramp = EpsilonField::new(FunctionSpec::parse("0.1*t").unwrap(), Sign::Plus, 0.0, (-1.0, 1.0)).unwrap();
        let c = covariant_form(&f, &ramp, 0.0).unwrap();
        assert_eq!(c.a_coef, 1.0);
        assert_relative_eq!(c.b_coef, 0.1 * 0.577_215_664_901_532_9 - 0.1, max_relative = 1e-9);
    }

    #[test]
    fn epsilon_bound_is_enforced() {
        assert!(EpsilonField::constant(0.6, Sign::Plus, 1.0).is_err());
        assert!(EpsilonField::new(FunctionSpec::parse("0.3*t").unwrap(), Sign::Plus, 1.0, (0.0, 2.0)).is_err());
    }
}
