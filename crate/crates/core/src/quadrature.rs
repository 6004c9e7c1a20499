//! Product integration of the weakly singular kernel and outer differencing.
//!
//! Inner integrals are discretized cell by cell. On each cell the power-law
//! weight `(t - t')^{-beta}` is integrated exactly, while the exponent, the
//! gamma factor and `f` are frozen at one representative node. The final cell
//! next to the evaluation point is handled by the same exact moment, so the
//! singular point itself is never sampled.

use serde::Serialize;

use crate::dimension::DimensionField;
use crate::error::{Error, Result};
use crate::function::{FunctionSpec, GridFunction};
use crate::real::{linspace, Real};
use crate::special::gamma;

/// Where exponent, gamma factor and `f` are frozen inside a cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FreezeRule {
    Midpoint,
    /// The cell end away from the evaluation point (the left end for
    /// left-sided operators, the right end for right-sided ones).
    Left,
}

/// Finite-difference family used for outer derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OuterStencil {
    Central2,
    Central4,
}

impl OuterStencil {
    pub fn accuracy(self) -> usize {
        match self {
            OuterStencil::Central2 => 2,
            OuterStencil::Central4 => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig<T> {
    pub n_points: usize,
    pub freeze_rule: FreezeRule,
    pub outer_stencil: OuterStencil,
    /// Outer step as a multiple of the quadrature step.
    pub outer_step_factor: T,
    /// Minimum allowed distance `n - d` from the gamma pole.
    pub pole_guard: T,
}

impl<T: Real> Default for QuadratureConfig<T> {
    fn default() -> Self {
        Self {
            n_points: 4097,
            freeze_rule: FreezeRule::Midpoint,
            outer_stencil: OuterStencil::Central2,
            outer_step_factor: T::one(),
            pole_guard: T::lit(1e-9),
        }
    }
}

impl<T: Real> QuadratureConfig<T> {
    pub fn with_points(n_points: usize) -> Self {
        Self { n_points, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_points < 9 {
            return Err(Error::InvalidInput(format!("n_points = {} is below the minimum of 9", self.n_points)));
        }
        if !(self.pole_guard > T::zero() && self.pole_guard < T::lit(0.5)) {
            return Err(Error::InvalidInput(format!("pole guard {} must lie in (0, 0.5)", self.pole_guard)));
        }
        if !(self.outer_step_factor > T::zero()) || !self.outer_step_factor.is_finite() {
            return Err(Error::InvalidInput("outer step factor must be positive".into()));
        }
        Ok(())
    }
}

/// Whether a value came from a full centered stencil.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trust {
    Interior,
    Boundary,
}

/// Integration side relative to the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Side {
    /// Integrate over `[a, t]`, singular at the upper end.
    Past,
    /// Integrate over `[t, b]`, singular at the lower end.
    Future,
}

/// Exact integral of `(t - t')^{-beta}` over `[lower, upper]`, `upper <= t`.
pub fn kernel_moment<T: Real>(t: T, lower: T, upper: T, beta: T) -> Result<T> {
    if !(beta < T::one()) {
        return Err(Error::Exponent { beta: beta.as_f64() });
    }
    if !(lower < upper && upper <= t) {
        return Err(Error::InvalidInput(format!(
            "kernel moment needs lower < upper <= t, got [{lower}, {upper}] with t = {t}"
        )));
    }
    Ok(moment_unchecked(t - lower, t - upper, T::one() - beta))
}

/// `(far^q - near^q) / q` with `far > near >= 0`, evaluated without
/// cancellation when the two distances are close.
#[inline]
fn moment_unchecked<T: Real>(far: T, near: T, q: T) -> T {
    if near <= T::zero() {
        return far.powf(q) / q;
    }
    near.powf(q) * (q * ((far - near) / near).ln_1p()).exp_m1() / q
}

fn check_band<T: Real>(d_field: &DimensionField<T>, n: usize) -> Result<()> {
    if d_field.band() != n {
        return Err(Error::InvalidInput(format!(
            "order field lies in band {} but {n} outer derivatives were requested",
            d_field.band()
        )));
    }
    Ok(())
}

/// Inner integral of the left-sided operator,
/// `int_a^t f(t') / (Gamma(n - d(t')) (t - t')^{d(t') - n + 1}) dt'`.
pub fn singular_convolve<T: Real>(
    f: &FunctionSpec<T>,
    d_field: &DimensionField<T>,
    a: T,
    t: T,
    n: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    check_band(d_field, n)?;
    convolve(f, d_field, Side::Past, t, a, n, cfg)
}

/// Inner integral of the right-sided operator over `[t, b]`.
pub fn singular_convolve_right<T: Real>(
    f: &FunctionSpec<T>,
    d_field: &DimensionField<T>,
    t: T,
    b: T,
    n: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    check_band(d_field, n)?;
    convolve(f, d_field, Side::Future, t, b, n, cfg)
}

/// Cell nodes between `t` and `far`, ordered from the far end towards `t`.
fn cell_nodes<T: Real>(f: &FunctionSpec<T>, side: Side, t: T, far: T, n_points: usize) -> Result<Vec<T>> {
    let (lo, hi) = match side {
        Side::Past => (far, t),
        Side::Future => (t, far),
    };
    let mut nodes = match f.as_sampled() {
        None => linspace(lo, hi, n_points),
        Some(g) => {
            let missing = |s: T| Error::Domain(format!("sampled function has no node at {s}"));
            let i = g.node_index(lo).ok_or_else(|| missing(lo))?;
            let j = g.node_index(hi).ok_or_else(|| missing(hi))?;
            (i..=j).map(|k| g.node(k)).collect()
        }
    };
    if side == Side::Future {
        nodes.reverse();
    }
    Ok(nodes)
}

pub(crate) fn convolve<T: Real>(
    f: &FunctionSpec<T>,
    d_field: &DimensionField<T>,
    side: Side,
    t: T,
    far: T,
    n: usize,
    cfg: &QuadratureConfig<T>,
) -> Result<T> {
    let empty = match side {
        Side::Past => !(far < t),
        Side::Future => !(t < far),
    };
    if empty {
        return Err(Error::InvalidInput(format!("integration interval between {far} and {t} is empty")));
    }
    let nodes = cell_nodes(f, side, t, far, cfg.n_points)?;
    let order_n = T::from_count(n);
    // Neumaier-compensated sum: the outer stencil divides by step^n
    let (mut sum, mut carry) = (T::zero(), T::zero());
    for w in nodes.windows(2) {
        // w[0] is the end away from t, w[1] the end towards t
        let (away, toward) = (w[0], w[1]);
        let star = match cfg.freeze_rule {
            FreezeRule::Midpoint => (away + toward) * T::lit(0.5),
            FreezeRule::Left => away,
        };
        let f_star = match (f, cfg.freeze_rule) {
            (FunctionSpec::Sampled(_), FreezeRule::Midpoint) => (f.eval(away)? + f.eval(toward)?) * T::lit(0.5),
            _ => f.eval(star)?,
        };
        let d_star = d_field.eval(star)?;
        let gap = order_n - d_star;
        if gap < cfg.pole_guard {
            return Err(Error::PoleGuard { order: d_star.as_f64(), pole: n as f64, guard: cfg.pole_guard.as_f64() });
        }
        // q = 1 - beta with beta = d - n + 1
        let weight = moment_unchecked((t - away).abs(), (t - toward).abs(), gap) / gamma(gap)?;
        let term = f_star * weight;
        let next = sum + term;
        carry = carry + if sum.abs() >= term.abs() { (sum - next) + term } else { (term - next) + sum };
        sum = next;
    }
    Ok(sum + carry)
}

/// Finite-difference weights for the `m`-th derivative at 0 on the given
/// offsets (unit spacing), by Fornberg's recursion.
pub fn fd_weights<T: Real>(offsets: &[T], m: usize) -> Vec<T> {
    let np = offsets.len();
    assert!(np > m, "need more than {m} points for derivative of order {m}");
    let mut c = vec![vec![T::zero(); m + 1]; np];
    c[0][0] = T::one();
    let mut c1 = T::one();
    let mut c4 = offsets[0];
    for i in 1..np {
        let mn = i.min(m);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 = c2 * c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (T::from_count(k) * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - T::from_count(k) * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

/// Offsets of the centered stencil for the `n`-th derivative at the given
/// accuracy order.
pub(crate) fn centered_offsets(n: usize, accuracy: usize) -> Vec<i64> {
    let npts = 2 * n.div_ceil(2) - 1 + accuracy;
    let half = (npts / 2) as i64;
    (-half..=half).collect()
}

/// Offsets of the one-sided stencil of matching accuracy, pointing forward
/// (`0, 1, ...`) or backward (`..., -1, 0`).
pub(crate) fn one_sided_offsets(n: usize, accuracy: usize, forward: bool) -> Vec<i64> {
    let npts = (n + accuracy) as i64;
    if forward {
        (0..npts).collect()
    } else {
        (-(npts - 1)..=0).collect()
    }
}

fn weights_for<T: Real>(offsets: &[i64], n: usize) -> Vec<T> {
    let xs: Vec<T> = offsets.iter().map(|&o| T::lit(o as f64)).collect();
    fd_weights(&xs, n)
}

/// `n`-th derivative at `t` of a function only known pointwise, with step
/// `step` and all stencil points kept inside `[lo, hi]`.
pub(crate) fn derivative_at<T: Real>(
    eval: impl Fn(T) -> Result<T>,
    t: T,
    n: usize,
    step: T,
    bounds: (T, T),
    accuracy: usize,
) -> Result<(T, Trust)> {
    if n == 0 {
        return Ok((eval(t)?, Trust::Interior));
    }
    let (lo, hi) = bounds;
    let centered = centered_offsets(n, accuracy);
    let half = T::lit(*centered.last().unwrap() as f64);
    let (offsets, trust) = if t - half * step >= lo && t + half * step <= hi {
        (centered, Trust::Interior)
    } else {
        let forward = t + half * step <= hi;
        let offsets = one_sided_offsets(n, accuracy, forward);
        let reach = T::lit((n + accuracy - 1) as f64) * step;
        let fits = if forward { t + reach <= hi } else { t - reach >= lo };
        if !fits {
            return Err(Error::Resolution(format!(
                "no stencil for derivative order {n} fits inside [{lo}, {hi}] at {t} with step {step}"
            )));
        }
        (offsets, Trust::Boundary)
    };
    let weights: Vec<T> = weights_for(&offsets, n);
    let mut acc = T::zero();
    for (&o, &w) in offsets.iter().zip(&weights) {
        if w == T::zero() {
            continue;
        }
        let s = if o == 0 { t } else { t + T::lit(o as f64) * step };
        acc = acc + w * eval(s)?;
    }
    Ok((acc / step.powi(n as i32), trust))
}

/// Grid derivative together with the index range where the centered stencil
/// had full support.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Differentiated<T> {
    pub grid: GridFunction<T>,
    pub trust: std::ops::Range<usize>,
}

impl<T: Real> Differentiated<T> {
    pub fn trusted_values(&self) -> &[T] {
        &self.grid.values()[self.trust.clone()]
    }
}

/// Applies `(d/dt)^n` to sampled data; boundary nodes use one-sided
/// stencils of the same accuracy order.
pub fn outer_derivative<T: Real>(g: &GridFunction<T>, n: usize, cfg: &QuadratureConfig<T>) -> Result<Differentiated<T>> {
    let len = g.n_points();
    if n == 0 {
        return Ok(Differentiated { grid: g.clone(), trust: 0..len });
    }
    let accuracy = cfg.outer_stencil.accuracy();
    let stride = cfg.outer_step_factor.round().to_usize().unwrap_or(1).max(1);
    let centered = centered_offsets(n, accuracy);
    let half = (centered.len() / 2) * stride;
    let min_len = (2 * n + 5).max((n + accuracy - 1) * stride + 1).max(2 * half + 1);
    if len < min_len {
        return Err(Error::Resolution(format!(
            "grid of {len} points is too small for derivative order {n} (needs {min_len})"
        )));
    }
    let step = g.step() * T::from_count(stride);
    let scale = step.powi(n as i32).recip();
    let forward_w: Vec<T> = weights_for(&one_sided_offsets(n, accuracy, true), n);
    let backward_w: Vec<T> = weights_for(&one_sided_offsets(n, accuracy, false), n);
    let centered_w: Vec<T> = weights_for(&centered, n);
    let values = g.values();
    let apply = |i: usize, offsets: &[i64], w: &[T]| {
        offsets
            .iter()
            .zip(w)
            .fold(T::zero(), |acc, (&o, &wk)| acc + wk * values[(i as i64 + o * stride as i64) as usize])
            * scale
    };
    let forward = one_sided_offsets(n, accuracy, true);
    let backward = one_sided_offsets(n, accuracy, false);
    let out = (0..len)
        .map(|i| {
            if i >= half && i + half < len {
                apply(i, &centered, &centered_w)
            } else if i < half {
                apply(i, &forward, &forward_w)
            } else {
                apply(i, &backward, &backward_w)
            }
        })
        .collect();
    Ok(Differentiated { grid: g.with_values(out)?, trust: half..len - half })
}
