//! Order fields `d(t)` and their band metadata.
//!
//! A field is only accepted if its whole range fits in one band
//! `n - 1 <= d < n` (with `n >= 1`), or is entirely negative (`n = 0`).
//! The band fixes how many outer derivatives the operators apply.

use crate::error::{Error, Result};
use crate::function::{ExprField, FunctionSpec};
use crate::real::{linspace, Real};

/// How the order is represented.
#[derive(Debug, Clone, PartialEq)]
pub enum DimensionKind<T> {
    Constant(T),
    Expression(ExprField<T>),
    /// Piecewise-linear through `(t, d)` pairs, clamped outside the abscissae.
    Tabulated { ts: Vec<T>, ds: Vec<T> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionField<T> {
    kind: DimensionKind<T>,
    /// Interval the band check covered; `None` means the whole real line.
    domain: Option<(T, T)>,
    band: usize,
    d_min: T,
    d_max: T,
}

/// Band index `n` of the range `[d_min, d_max]`.
pub fn band_of<T: Real>(d_min: T, d_max: T) -> Result<usize> {
    let crossing = || Error::BandCrossing { d_min: d_min.as_f64(), d_max: d_max.as_f64() };
    if !d_min.is_finite() || !d_max.is_finite() {
        return Err(crossing());
    }
    if d_max < T::zero() {
        return Ok(0);
    }
    if d_min < T::zero() {
        return Err(crossing());
    }
    let lo = d_min.floor();
    if d_max.floor() != lo {
        return Err(crossing());
    }
    lo.to_usize().map(|k| k + 1).ok_or_else(crossing)
}

impl<T: Real> DimensionField<T> {
    pub fn constant(d: T) -> Result<Self> {
        let band = band_of(d, d)?;
        Ok(Self { kind: DimensionKind::Constant(d), domain: None, band, d_min: d, d_max: d })
    }

    /// Expression field checked on `[lo, hi]` at `samples` equispaced points
    /// (endpoints included).
    pub fn expression(expr: ExprField<T>, domain: (T, T), samples: usize) -> Result<Self> {
        let (lo, hi) = domain;
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("order domain [{lo}, {hi}] is empty")));
        }
        if let Some(d) = expr.expr.constant_value() {
            return Self::constant(d);
        }
        let mut d_min = T::infinity();
        let mut d_max = T::neg_infinity();
        for s in linspace(lo, hi, samples.max(2)) {
            let d = expr.eval(s)?;
            d_min = d_min.min(d);
            d_max = d_max.max(d);
        }
        let band = band_of(d_min, d_max)?;
        Ok(Self { kind: DimensionKind::Expression(expr), domain: Some(domain), band, d_min, d_max })
    }

    /// Expression field sampled at `10 * n_points` points over `domain`.
    pub fn expression_for_grid(expr: ExprField<T>, domain: (T, T), n_points: usize) -> Result<Self> {
        Self::expression(expr, domain, 10 * n_points)
    }

    pub fn parse(src: &str, domain: (T, T), n_points: usize) -> Result<Self> {
        Self::expression_for_grid(ExprField::parse(src)?, domain, n_points)
    }

    pub fn tabulated(ts: Vec<T>, ds: Vec<T>) -> Result<Self> {
        if ts.len() != ds.len() || ts.is_empty() {
            return Err(Error::InvalidInput("tabulated order needs matching, non-empty columns".into()));
        }
        if ts.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("tabulated abscissae must be strictly increasing".into()));
        }
        // clamped linear interpolation never leaves the hull of the nodes
        let d_min = ds.iter().fold(T::infinity(), |m, &d| m.min(d));
        let d_max = ds.iter().fold(T::neg_infinity(), |m, &d| m.max(d));
        let band = band_of(d_min, d_max)?;
        Ok(Self { kind: DimensionKind::Tabulated { ts, ds }, domain: None, band, d_min, d_max })
    }

    /// `offset + sign * eps(t)` for a closed-form or sampled `eps`.
    pub fn shifted(eps: &FunctionSpec<T>, offset: T, sign: T, domain: (T, T), n_points: usize) -> Result<Self> {
        use crate::expr::{BinOp, Expr};
        if let Some(field) = eps.to_expr() {
            let scaled = Expr::Bin(BinOp::Mul, Box::new(Expr::Num(sign)), Box::new(field.expr));
            let expr = Expr::Bin(BinOp::Add, Box::new(Expr::Num(offset)), Box::new(scaled));
            let field = ExprField { expr, ..field };
            return Self::expression_for_grid(field, domain, n_points);
        }
        let g = eps.as_sampled().expect("non-expression function is sampled");
        let ds = g.values().iter().map(|&e| offset + sign * e).collect();
        Self::tabulated(g.nodes(), ds)
    }

    pub fn kind(&self) -> &DimensionKind<T> {
        &self.kind
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn d_min(&self) -> T {
        self.d_min
    }

    pub fn d_max(&self) -> T {
        self.d_max
    }

    pub fn as_constant(&self) -> Option<T> {
        match self.kind {
            DimensionKind::Constant(d) => Some(d),
            _ => None,
        }
    }

    /// Errors if `[a, b]` is not inside the interval the band was checked on.
    pub fn check_covers(&self, a: T, b: T) -> Result<()> {
        match self.domain {
            Some((lo, hi)) if a < lo || b > hi => Err(Error::InvalidInput(format!(
                "order field was validated on [{lo}, {hi}], operator needs [{a}, {b}]"
            ))),
            _ => Ok(()),
        }
    }

    pub fn eval(&self, t: T) -> Result<T> {
        match &self.kind {
            DimensionKind::Constant(d) => Ok(*d),
            DimensionKind::Expression(e) => e.eval(t),
            DimensionKind::Tabulated { ts, ds } => Ok(interpolate_clamped(ts, ds, t)),
        }
    }
}

/// Band index `n` of a field: `n - 1 <= d(t) < n`, or `0` for negative orders.
pub fn order_index<T: Real>(field: &DimensionField<T>) -> Result<usize> {
    band_of(field.d_min(), field.d_max())
}

pub(crate) fn interpolate_clamped<T: Real>(ts: &[T], ds: &[T], t: T) -> T {
    let last = ts.len() - 1;
    if t <= ts[0] {
        return ds[0];
    }
    if t >= ts[last] {
        return ds[last];
    }
    let i = ts.partition_point(|&x| x <= t) - 1;
    let w = (t - ts[i]) / (ts[i + 1] - ts[i]);
    ds[i] + w * (ds[i + 1] - ds[i])
}
