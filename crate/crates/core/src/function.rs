//! Real functions of one coordinate: catalog closed forms, parsed
//! expressions, and uniformly sampled data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::expr::{Bindings, Expr, Variable};
use crate::real::{linspace, Real};

/// Uniform samples of a real function on `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction<T> {
    a: T,
    b: T,
    values: Vec<T>,
}

impl<T: Real> GridFunction<T> {
    pub fn new(a: T, b: T, values: Vec<T>) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!("grid interval [{a}, {b}] is empty")));
        }
        if values.len() < 2 {
            return Err(Error::InvalidInput("a grid needs at least two points".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("grid value {i} is not finite")));
        }
        Ok(Self { a, b, values })
    }

    /// Samples `f` at `n_points` equispaced nodes.
    pub fn from_fn(a: T, b: T, n_points: usize, f: impl Fn(T) -> T) -> Result<Self> {
        Self::new(a, b, linspace(a, b, n_points).into_iter().map(f).collect())
    }

    pub fn zeros(a: T, b: T, n_points: usize) -> Result<Self> {
        Self::new(a, b, vec![T::zero(); n_points])
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn b(&self) -> T {
        self.b
    }

    pub fn n_points(&self) -> usize {
        self.values.len()
    }

    pub fn step(&self) -> T {
        (self.b - self.a) / T::from_count(self.values.len() - 1)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn node(&self, i: usize) -> T {
        if i == self.values.len() - 1 {
            self.b
        } else {
            self.a + self.step() * T::from_count(i)
        }
    }

    pub fn nodes(&self) -> Vec<T> {
        linspace(self.a, self.b, self.values.len())
    }

    /// Index of the node at `t`, if `t` is one (to within 1e-9 of a step).
    pub fn node_index(&self, t: T) -> Option<usize> {
        let h = self.step();
        let r = (t - self.a) / h;
        let k = r.round();
        if k < T::zero() || k > T::from_count(self.values.len() - 1) {
            return None;
        }
        if (r - k).abs() > T::lit(1e-9) {
            return None;
        }
        k.to_usize()
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<T>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::InvalidInput("value count does not match grid".into()));
        }
        Self::new(self.a, self.b, values)
    }

    pub fn sup_distance(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (x, y)| m.max((*x - *y).abs()))
    }
}

/// Closed-form test functions.
#[derive(Debug, Clone, PartialEq)]
pub enum Catalog<T> {
    Constant(T),
    /// `coeff * t^power`
    Power { coeff: T, power: T },
    /// Coefficients in ascending order of degree.
    Polynomial(Vec<T>),
    /// `exp(scale * t)`
    Exp { scale: T },
    /// `sin(scale * t)`
    Sin { scale: T },
    /// `cos(scale * t)`
    Cos { scale: T },
}

impl<T: Real> Catalog<T> {
    fn eval(&self, t: T) -> T {
        match self {
            Catalog::Constant(c) => *c,
            Catalog::Power { coeff, power } => *coeff * t.powf(*power),
            Catalog::Polynomial(c) => c.iter().rev().fold(T::zero(), |acc, &k| acc * t + k),
            Catalog::Exp { scale } => (*scale * t).exp(),
            Catalog::Sin { scale } => (*scale * t).sin(),
            Catalog::Cos { scale } => (*scale * t).cos(),
        }
    }
}

/// An expression together with the variable that plays the role of the
/// running coordinate; the other variable is held at `parameter`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprField<T> {
    pub expr: Expr<T>,
    pub variable: Variable,
    pub parameter: T,
}

impl<T: Real> ExprField<T> {
    /// Picks `x` as the running coordinate when only `x` appears, `t` otherwise.
    pub fn new(expr: Expr<T>) -> Self {
        let variable = if expr.uses(Variable::X) && !expr.uses(Variable::T) {
            Variable::X
        } else {
            Variable::T
        };
        Self { expr, variable, parameter: T::zero() }
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(Self::new(Expr::parse(src)?))
    }

    pub fn eval(&self, s: T) -> Result<T> {
        let env = match self.variable {
            Variable::T => Bindings { t: s, x: self.parameter },
            Variable::X => Bindings { t: self.parameter, x: s },
        };
        self.expr.eval(env)
    }
}

/// The function an operator acts on.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec<T> {
    Catalog(Catalog<T>),
    Expression(ExprField<T>),
    /// Only evaluable at its own grid nodes.
    Sampled(GridFunction<T>),
}

impl<T: Real> FunctionSpec<T> {
    pub fn constant(c: T) -> Self {
        FunctionSpec::Catalog(Catalog::Constant(c))
    }

    pub fn power(coeff: T, power: T) -> Self {
        FunctionSpec::Catalog(Catalog::Power { coeff, power })
    }

    pub fn polynomial(coeffs: Vec<T>) -> Self {
        FunctionSpec::Catalog(Catalog::Polynomial(coeffs))
    }

    pub fn exp(scale: T) -> Self {
        FunctionSpec::Catalog(Catalog::Exp { scale })
    }

    pub fn sin(scale: T) -> Self {
        FunctionSpec::Catalog(Catalog::Sin { scale })
    }

    pub fn cos(scale: T) -> Self {
        FunctionSpec::Catalog(Catalog::Cos { scale })
    }

    pub fn parse(src: &str) -> Result<Self> {
        Ok(FunctionSpec::Expression(ExprField::parse(src)?))
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, FunctionSpec::Sampled(_))
    }

    pub fn as_sampled(&self) -> Option<&GridFunction<T>> {
        match self {
            FunctionSpec::Sampled(g) => Some(g),
            _ => None,
        }
    }

    pub fn eval(&self, t: T) -> Result<T> {
        let v = match self {
            FunctionSpec::Catalog(c) => c.eval(t),
            FunctionSpec::Expression(e) => return e.eval(t),
            FunctionSpec::Sampled(g) => {
                let i = g.node_index(t).ok_or_else(|| {
                    Error::Domain(format!("sampled function has no node at {t}"))
                })?;
                g.values()[i]
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("function value at {t} is not finite")))
        }
    }

    /// Samples at `n_points` equispaced nodes of `[a, b]`.
    pub fn sample(&self, a: T, b: T, n_points: usize) -> Result<GridFunction<T>> {
        let values = linspace(a, b, n_points)
            .into_iter()
            .map(|t| self.eval(t))
            .collect::<Result<Vec<_>>>()?;
        GridFunction::new(a, b, values)
    }

    /// Expression form of a closed-form function; `None` for sampled data.
    pub(crate) fn to_expr(&self) -> Option<ExprField<T>> {
        use crate::expr::BinOp;
        let t = || Box::new(Expr::Var(Variable::T));
        let num = |v: T| Box::new(Expr::Num(v));
        let expr = match self {
            FunctionSpec::Expression(e) => return Some(e.clone()),
            FunctionSpec::Sampled(_) => return None,
            FunctionSpec::Catalog(c) => match c {
                Catalog::Constant(v) => Expr::Num(*v),
                Catalog::Power { coeff, power } => {
                    Expr::Bin(BinOp::Mul, num(*coeff), Box::new(Expr::Bin(BinOp::Pow, t(), num(*power))))
                }
                Catalog::Polynomial(cs) => cs.iter().rev().fold(Expr::Num(T::zero()), |acc, &k| {
                    Expr::Bin(BinOp::Add, Box::new(Expr::Bin(BinOp::Mul, Box::new(acc), t())), num(k))
                }),
                Catalog::Exp { scale } => {
                    Expr::Call(crate::expr::Func::Exp, Box::new(Expr::Bin(BinOp::Mul, num(*scale), t())))
                }
                Catalog::Sin { scale } => {
                    Expr::Call(crate::expr::Func::Sin, Box::new(Expr::Bin(BinOp::Mul, num(*scale), t())))
                }
                Catalog::Cos { scale } => {
                    Expr::Call(crate::expr::Func::Cos, Box::new(Expr::Bin(BinOp::Mul, num(*scale), t())))
                }
            },
        };
        Some(ExprField::new(expr))
    }
}
