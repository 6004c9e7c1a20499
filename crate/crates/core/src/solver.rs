//! Fixed-point solver for `D^{d(f)}_{+,t} f = g`, where the order depends on
//! the unknown through a clamped law `d = clamp(law(f))`.
//!
//! On a uniform grid `x_0 < ... < x_{N-1}` the inner integral is discretized
//! by product trapezoid weights: `f` is linear on each cell, while the kernel
//! exponent and the gamma factor are frozen at the cell midpoint. The outer
//! derivative is the backward difference BDF2 (backward Euler on the first
//! cell). Both pieces are causal, so the discrete operator is lower
//! triangular and a linear solve is a forward substitution.
//!
//! The left boundary value is anchored at `u(a) = 0`. The equation carries no
//! boundary data of its own; functions passed to the forward operator should
//! vanish at `a` for the two directions to be exact inverses.

use rayon::prelude::*;
use serde::Serialize;

use crate::dimension::{band_of, interpolate_clamped, DimensionField};
use crate::error::{Error, Result};
use crate::function::{FunctionSpec, GridFunction};
use crate::quadrature::Differentiated;
use crate::real::Real;
use crate::special::gamma;

/// Nodes at the start of the grid where the forward operator is not yet
/// accurate: the backward stencil and the weak singularity at `a` both
/// degrade the first few values.
pub const STARTUP_LAYER: usize = 16;

/// How the order depends on the current solution value.
#[derive(Debug, Clone, PartialEq)]
pub enum OrderLaw<T> {
    /// `d = d0 + kappa * f`
    Affine { d0: T, kappa: T },
    /// Piecewise-linear in `f` through `(f, d)` pairs, clamped outside.
    Tabulated { fs: Vec<T>, ds: Vec<T> },
}

impl<T: Real> OrderLaw<T> {
    fn validate(&self) -> Result<()> {
        match self {
            OrderLaw::Affine { d0, kappa } => {
                if !d0.is_finite() || !kappa.is_finite() {
                    return Err(Error::InvalidInput("order law coefficients must be finite".into()));
                }
            }
            OrderLaw::Tabulated { fs, ds } => {
                if fs.is_empty() || fs.len() != ds.len() {
                    return Err(Error::InvalidInput("tabulated order law needs matching, non-empty columns".into()));
                }
                if fs.windows(2).any(|w| !(w[0] < w[1])) {
                    return Err(Error::InvalidInput("tabulated order law abscissae must be strictly increasing".into()));
                }
            }
        }
        Ok(())
    }

    fn eval(&self, f: T) -> T {
        match self {
            OrderLaw::Affine { d0, kappa } => *d0 + *kappa * f,
            OrderLaw::Tabulated { fs, ds } => interpolate_clamped(fs, ds, f),
        }
    }

    /// True when the order does not depend on `f` at all.
    pub fn is_constant(&self) -> bool {
        match self {
            OrderLaw::Affine { kappa, .. } => *kappa == T::zero(),
            OrderLaw::Tabulated { ds, .. } => ds.windows(2).all(|w| w[0] == w[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelProblem<T> {
    g: FunctionSpec<T>,
    law: OrderLaw<T>,
    clamp: (T, T),
    initial_guess: GridFunction<T>,
    relaxation: T,
    pole_guard: T,
}

impl<T: Real> ModelProblem<T> {
    /// The interval and grid are those of `initial_guess`.
    pub fn new(g: FunctionSpec<T>, law: OrderLaw<T>, clamp: (T, T), initial_guess: GridFunction<T>) -> Result<Self> {
        law.validate()?;
        let (lo, hi) = clamp;
        if !(lo < hi) {
            return Err(Error::InvalidInput(format!("clamp [{lo}, {hi}] is empty")));
        }
        if band_of(lo, hi)? != 1 || !(lo > T::zero()) {
            return Err(Error::BandCrossing { d_min: lo.as_f64(), d_max: hi.as_f64() });
        }
        if initial_guess.n_points() <= STARTUP_LAYER + 1 {
            return Err(Error::Resolution(format!(
                "solver grid needs more than {} points, got {}",
                STARTUP_LAYER + 1,
                initial_guess.n_points()
            )));
        }
        Ok(Self { g, law, clamp, initial_guess, relaxation: T::lit(0.5), pole_guard: T::lit(1e-9) })
    }

    pub fn with_relaxation(mut self, omega: T) -> Result<Self> {
        if !(omega > T::zero() && omega <= T::one()) {
            return Err(Error::InvalidInput(format!("relaxation {omega} must lie in (0, 1]")));
        }
        self.relaxation = omega;
        Ok(self)
    }

    pub fn with_pole_guard(mut self, delta: T) -> Result<Self> {
        if !(delta > T::zero() && delta < T::lit(0.5)) {
            return Err(Error::InvalidInput(format!("pole guard {delta} must lie in (0, 1/2)")));
        }
        self.pole_guard = delta;
        Ok(self)
    }

    pub fn a(&self) -> T {
        self.initial_guess.a()
    }

    pub fn b(&self) -> T {
        self.initial_guess.b()
    }

    pub fn n_points(&self) -> usize {
        self.initial_guess.n_points()
    }

    pub fn law(&self) -> &OrderLaw<T> {
        &self.law
    }

    pub fn clamp(&self) -> (T, T) {
        self.clamp
    }

    pub fn relaxation(&self) -> T {
        self.relaxation
    }

    pub fn initial_guess(&self) -> &GridFunction<T> {
        &self.initial_guess
    }

    /// Clamped order at each node of `f`.
    pub fn order_values(&self, f: &GridFunction<T>) -> Vec<T> {
        let (lo, hi) = self.clamp;
        f.values().iter().map(|&v| self.law.eval(v).max(lo).min(hi)).collect()
    }

    /// The order `d(f(t))` as a tabulated field on the grid of `f`.
    pub fn order_field(&self, f: &GridFunction<T>) -> Result<DimensionField<T>> {
        DimensionField::tabulated(f.nodes(), self.order_values(f))
    }

    fn check_grid(&self, f: &GridFunction<T>) -> Result<()> {
        let g = &self.initial_guess;
        if f.a() != g.a() || f.b() != g.b() || f.n_points() != g.n_points() {
            return Err(Error::InvalidInput(format!(
                "function grid [{}, {}] x {} does not match the problem grid [{}, {}] x {}",
                f.a(),
                f.b(),
                f.n_points(),
                g.a(),
                g.b(),
                g.n_points()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport<T> {
    pub solution: GridFunction<T>,
    /// `sup |f_{k+1} - f_k|` for each iteration.
    pub residuals: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    pub d_final: GridFunction<T>,
}

/// Per-cell frozen quantities: `q = 1 - d` and `1 / Gamma(q)` at the midpoint.
struct Cells<T> {
    nodes: Vec<T>,
    q: Vec<T>,
    inv_gamma: Vec<T>,
    step: T,
}

impl<T: Real> Cells<T> {
    fn new(d_field: &DimensionField<T>, grid: &GridFunction<T>, pole_guard: T) -> Result<Self> {
        if d_field.band() != 1 {
            return Err(Error::BandCrossing { d_min: d_field.d_min().as_f64(), d_max: d_field.d_max().as_f64() });
        }
        let nodes = grid.nodes();
        let mut q = Vec::with_capacity(nodes.len() - 1);
        let mut inv_gamma = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let d = d_field.eval(T::lit(0.5) * (w[0] + w[1]))?;
            let qj = T::one() - d;
            if qj < pole_guard {
                return Err(Error::PoleGuard { order: d.as_f64(), pole: 1.0, guard: pole_guard.as_f64() });
            }
            q.push(qj);
            inv_gamma.push(gamma(qj)?.recip());
        }
        Ok(Self { nodes, q, inv_gamma, step: grid.step() })
    }

    fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Weights `w` with `int_a^{x_k} f(s) (x_k - s)^{-d} / Gamma(1 - d) ds ~ sum_j w_j f_j`,
    /// written into `row[..=k]`.
    fn weight_row(&self, k: usize, row: &mut Vec<T>) {
        row.clear();
        row.resize(k + 1, T::zero());
        let t = self.nodes[k];
        for j in 0..k {
            let far = t - self.nodes[j];
            let near = if j + 1 == k { T::zero() } else { t - self.nodes[j + 1] };
            let q = self.q[j];
            let m0 = power_gap(far, near, q) / q;
            let m1 = far * m0 - power_gap(far, near, q + T::one()) / (q + T::one());
            let wr = m1 / (self.nodes[j + 1] - self.nodes[j]);
            let wl = m0 - wr;
            row[j] = row[j] + wl * self.inv_gamma[j];
            row[j + 1] = row[j + 1] + wr * self.inv_gamma[j];
        }
    }
}

/// `far^r - near^r` for `far > near >= 0`, accurate when the two are close.
fn power_gap<T: Real>(far: T, near: T, r: T) -> T {
    if near <= T::zero() {
        return far.powf(r);
    }
    -far.powf(r) * (r * (-(far - near) / far).ln_1p()).exp_m1()
}

fn dot<T: Real>(w: &[T], v: &[T]) -> T {
    w.iter().zip(v).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Discrete `D^d_{+,t} f` for a fixed order field in band 1. Nodes below
/// `STARTUP_LAYER` are outside the trust range; node 0 is set to zero.
pub fn forward_linear<T: Real>(d_field: &DimensionField<T>, f: &GridFunction<T>, pole_guard: T) -> Result<Differentiated<T>> {
    let cells = Cells::new(d_field, f, pole_guard)?;
    let n = cells.len();
    let values = f.values();
    let integrals: Vec<T> = (0..n)
        .into_par_iter()
        .map_init(Vec::new, |row, k| {
            cells.weight_row(k, row);
            dot(row, values)
        })
        .collect();
    let h = cells.step;
    let two = T::lit(2.0);
    let mut out = vec![T::zero(); n];
    out[1] = (integrals[1] - integrals[0]) / h;
    for k in 2..n {
        out[k] = (T::lit(3.0) * integrals[k] - T::lit(4.0) * integrals[k - 1] + integrals[k - 2]) / (two * h);
    }
    Ok(Differentiated { grid: f.with_values(out)?, trust: STARTUP_LAYER.min(n)..n })
}

/// Solves the discrete `D^d_{+,t} u = g` by forward substitution with
/// `u(a) = 0`. `g` at node 0 is not used.
pub fn march_linear<T: Real>(d_field: &DimensionField<T>, g: &GridFunction<T>, pole_guard: T) -> Result<GridFunction<T>> {
    let cells = Cells::new(d_field, g, pole_guard)?;
    let n = cells.len();
    let rhs = g.values();
    let h = cells.step;
    let mut u = vec![T::zero(); n];
    let (mut w0, mut w1, mut w2) = (Vec::new(), Vec::new(), Vec::new());
    let mut coeffs = Vec::with_capacity(n);
    for k in 1..n {
        // w0 = row k, w1 = row k-1, w2 = row k-2
        std::mem::swap(&mut w2, &mut w1);
        std::mem::swap(&mut w1, &mut w0);
        cells.weight_row(k, &mut w0);
        coeffs.clear();
        if k == 1 {
            coeffs.extend(w0.iter().map(|&w| w / h));
        } else {
            let c = T::lit(2.0) * h;
            coeffs.extend((0..=k).map(|j| {
                let prev = w1.get(j).copied().unwrap_or(T::zero());
                let prev2 = w2.get(j).copied().unwrap_or(T::zero());
                (T::lit(3.0) * w0[j] - T::lit(4.0) * prev + prev2) / c
            }));
        }
        let pivot = coeffs[k];
        if !(pivot.abs() > T::min_positive_value()) || !pivot.is_finite() {
            return Err(Error::ZeroPivot { index: k, value: pivot.as_f64() });
        }
        u[k] = (rhs[k] - dot(&coeffs[..k], &u[..k])) / pivot;
    }
    g.with_values(u)
}

/// The forward operator of the problem, `D^{d(f)}_{+,t} f` with the order
/// taken from `f` itself.
pub fn apply_forward<T: Real>(f: &GridFunction<T>, problem: &ModelProblem<T>) -> Result<Differentiated<T>> {
    problem.check_grid(f)?;
    forward_linear(&problem.order_field(f)?, f, problem.pole_guard)
}

/// Damped fixed-point iteration: `d_k = clamp(law(f_k))`, `D^{d_k} u = g`,
/// `f_{k+1} = (1 - omega) f_k + omega u`. When the law ignores `f` the
/// iteration is undamped, since the first linear solve is already the answer.
///
/// Nonconvergence is reported in the result, not as an error.
pub fn solve_fixed_point<T: Real>(problem: &ModelProblem<T>, tol: T, max_iter: usize) -> Result<SolveReport<T>> {
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be at least 1".into()));
    }
    let g = problem.g.sample(problem.a(), problem.b(), problem.n_points())?;
    let omega = if problem.law.is_constant() { T::one() } else { problem.relaxation };
    let mut f = problem.initial_guess.clone();
    let mut residuals = Vec::new();
    let mut converged = false;
    for _ in 0..max_iter {
        let u = march_linear(&problem.order_field(&f)?, &g, problem.pole_guard)?;
        let next: Vec<T> = f.values().iter().zip(u.values()).map(|(&fk, &uk)| (T::one() - omega) * fk + omega * uk).collect();
        let next = GridFunction::new(f.a(), f.b(), next);
        let Ok(next) = next else {
            // non-finite iterate: the iteration has blown up
            residuals.push(T::infinity());
            break;
        };
        let r = next.sup_distance(&f);
        residuals.push(r);
        f = next;
        if r <= tol {
            converged = true;
            break;
        }
    }
    let d_final = f.with_values(problem.order_values(&f))?;
    Ok(SolveReport { iterations: residuals.len(), solution: f, residuals, converged, d_final })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::real::linspace;
    use proptest::prelude::*;

    const C_HALF: f64 = std::f64::consts::FRAC_2_SQRT_PI; // Gamma(2) / Gamma(1.5)

    fn affine(d0: f64, kappa: f64) -> OrderLaw<f64> {
        OrderLaw::Affine { d0, kappa }
    }

    fn problem(g: FunctionSpec<f64>, law: OrderLaw<f64>, b: f64, n: usize) -> ModelProblem<f64> {
        ModelProblem::new(g, law, (0.05, 0.95), GridFunction::zeros(0.0, b, n).unwrap()).unwrap()
    }

    #[test]
    fn forward_matches_power_rule() {
        let p = problem(FunctionSpec::constant(0.0), affine(0.5, 0.0), 2.0, 1025);
        let f = GridFunction::from_fn(0.0, 2.0, 1025, |t| t).unwrap();
        let out = apply_forward(&f, &p).unwrap();
        let nodes = out.grid.nodes();
        for k in out.trust.clone() {
            let exact = C_HALF * nodes[k].sqrt();
            assert!(((out.grid.values()[k] - exact) / exact).abs() < 1e-3, "node {k}");
        }
    }

    #[test]
    fn zero_in_zero_out() {
        let p = problem(FunctionSpec::constant(0.0), affine(0.4, 0.1), 1.0, 65);
        let f = GridFunction::zeros(0.0, 1.0, 65).unwrap();
        assert!(apply_forward(&f, &p).unwrap().grid.values().iter().all(|&v| v == 0.0));
        let field = DimensionField::constant(0.5).unwrap();
        assert!(march_linear(&field, &f, 1e-9).unwrap().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn pole_guard_near_one() {
        let p = ModelProblem::new(
            FunctionSpec::constant(0.0),
            affine(0.999_999_999_99, 0.0),
            (0.05, 0.999_999_999_99),
            GridFunction::zeros(0.0, 1.0, 33).unwrap(),
        )
        .unwrap();
        let f = GridFunction::from_fn(0.0, 1.0, 33, |t| t).unwrap();
        assert!(matches!(apply_forward(&f, &p), Err(Error::PoleGuard { .. })));
    }

    #[test]
    fn clamp_outside_band_is_rejected() {
        let guess = GridFunction::zeros(0.0, 1.0, 33).unwrap();
        let bad = ModelProblem::new(FunctionSpec::constant(0.0), affine(0.5, 0.0), (0.5, 1.2), guess.clone());
        assert!(matches!(bad, Err(Error::BandCrossing { .. })));
        let bad = ModelProblem::new(FunctionSpec::constant(0.0), affine(0.5, 0.0), (-0.1, 0.5), guess);
        assert!(matches!(bad, Err(Error::BandCrossing { .. })));
    }

    #[test]
    fn linear_problem_recovers_power() {
        let p = problem(FunctionSpec::power(C_HALF, 0.5), affine(0.5, 0.0), 1.0, 1025);
        let r = solve_fixed_point(&p, 1e-10, 50).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 2);
        let err = r.solution.values().iter().zip(r.solution.nodes()).fold(0.0f64, |m, (u, t)| m.max((u - t).abs()));
        assert!(err <= 5e-3, "sup error {err}");
    }

    #[test]
    fn zero_problem_converges_at_once() {
        let p = problem(FunctionSpec::constant(0.0), affine(0.4, 0.1), 1.0, 65);
        let r = solve_fixed_point(&p, 1e-12, 10).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, 1);
        assert!(r.solution.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn manufactured_nonlinear_problem() {
        let n = 513;
        let exact = GridFunction::from_fn(0.0, 1.0, n, |t| t).unwrap();
        let shell = problem(FunctionSpec::constant(0.0), affine(0.4, 0.1), 1.0, n);
        let g = apply_forward(&exact, &shell).unwrap().grid;
        let p = problem(FunctionSpec::Sampled(g), affine(0.4, 0.1), 1.0, n);
        let r = solve_fixed_point(&p, 1e-10, 50).unwrap();
        assert!(r.converged);
        assert!(r.solution.sup_distance(&exact) <= 1e-2);
        for w in r.residuals[1..].windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn nonconvergence_is_reported() {
        let n = 65;
        let exact = GridFunction::from_fn(0.0, 1.0, n, |t| t).unwrap();
        let shell = problem(FunctionSpec::constant(0.0), affine(0.4, 0.1), 1.0, n);
        let g = apply_forward(&exact, &shell).unwrap().grid;
        let p = problem(FunctionSpec::Sampled(g), affine(0.4, 0.1), 1.0, n);
        let r = solve_fixed_point(&p, 1e-14, 2).unwrap();
        assert!(!r.converged);
        assert_eq!(r.residuals.len(), 2);
    }

    #[test]
    fn tabulated_law_clamps() {
        let law = OrderLaw::Tabulated { fs: vec![0.0, 1.0], ds: vec![0.2, 0.8] };
        let p = ModelProblem::new(FunctionSpec::constant(0.0), law, (0.3, 0.6), GridFunction::zeros(0.0, 1.0, 33).unwrap()).unwrap();
        let f = GridFunction::new(0.0, 1.0, linspace(-1.0, 2.0, 33)).unwrap();
        let d = p.order_values(&f);
        assert_eq!(d[0], 0.3);
        assert_eq!(d[32], 0.6);
        assert!(d.iter().all(|&v| (0.3..=0.6).contains(&v)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn round_trip_is_identity(
            d in prop::sample::select(vec![0.3f64, 0.5, 0.7]),
            c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, c3 in -2.0f64..2.0, w in 0.5f64..6.0,
        ) {
            let field = DimensionField::constant(d).unwrap();
            let f = GridFunction::from_fn(0.0, 1.0, 257, |t| c1 * (w * t).sin() + c2 * t * t + c3 * t).unwrap();
            let g = forward_linear(&field, &f, 1e-9).unwrap().grid;
            let back = march_linear(&field, &g, 1e-9).unwrap();
            prop_assert!(back.sup_distance(&f) <= 1e-6);
        }

        #[test]
        fn march_is_linear_in_rhs(
            d in 0.1f64..0.9,
            c1 in -2.0f64..2.0, c2 in -2.0f64..2.0, w in 0.5f64..6.0,
        ) {
            let field = DimensionField::constant(d).unwrap();
            let g1 = GridFunction::from_fn(0.0, 1.0, 129, |t| c1 * (w * t).cos()).unwrap();
            let g2 = GridFunction::from_fn(0.0, 1.0, 129, |t: f64| c2 * t.sqrt()).unwrap();
            let sum = g1.with_values(g1.values().iter().zip(g2.values()).map(|(a, b)| a + b).collect()).unwrap();
            let u1 = march_linear(&field, &g1, 1e-9).unwrap();
            let u2 = march_linear(&field, &g2, 1e-9).unwrap();
            let us = march_linear(&field, &sum, 1e-9).unwrap();
            let total = u1.with_values(u1.values().iter().zip(u2.values()).map(|(a, b)| a + b).collect()).unwrap();
            prop_assert!(us.sup_distance(&total) <= 1e-8);
        }
    }
}
