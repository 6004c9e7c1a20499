//! A small arithmetic language for writing `f(t)` and `d(t)` on the command line.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' factor)?
//! base   := number | 't' | 'x' | func '(' expr ')' | '(' expr ')'
//! func   := 'exp' | 'sin' | 'cos' | 'ln' | 'abs'
//! ```
//!
//! `^` is right-associative and real-valued. Whitespace is ignored.

use std::fmt;

use crate::error::{Error, Result};
use crate::real::Real;

/// Independent variable an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variable {
    T,
    X,
}

/// Values bound to the variables during evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bindings<T> {
    pub t: T,
    pub x: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Ln,
    Abs,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "ln" => Func::Ln,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Ln => "ln",
            Func::Abs => "abs",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Parsed expression tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr<T> {
    Num(T),
    Var(Variable),
    Neg(Box<Expr<T>>),
    Bin(BinOp, Box<Expr<T>>, Box<Expr<T>>),
    Call(Func, Box<Expr<T>>),
}

impl<T: Real> Expr<T> {
    pub fn parse(src: &str) -> Result<Self> {
        let tokens = lex(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let expr = parser.expr()?;
        match parser.peek() {
            Token { kind: Kind::End, .. } => Ok(expr),
            tok => Err(parse_error(tok.offset, &["'+'", "'-'", "'*'", "'/'", "'^'", "end of input"])),
        }
    }

    pub fn eval(&self, env: Bindings<T>) -> Result<T> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Var(Variable::T) => env.t,
            Expr::Var(Variable::X) => env.x,
            Expr::Neg(e) => -e.eval(env)?,
            Expr::Bin(op, l, r) => {
                let (l, r) = (l.eval(env)?, r.eval(env)?);
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => l / r,
                    BinOp::Pow => l.powf(r),
                }
            }
            Expr::Call(f, arg) => {
                let a = arg.eval(env)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Abs => a.abs(),
                    Func::Ln => {
                        if a <= T::zero() {
                            return Err(Error::Domain(format!("ln of non-positive argument {a}")));
                        }
                        a.ln()
                    }
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain(format!("non-finite value while evaluating `{self}`")))
        }
    }

    /// True if the expression mentions `var` anywhere.
    pub fn uses(&self, var: Variable) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Neg(e) | Expr::Call(_, e) => e.uses(var),
            Expr::Bin(_, l, r) => l.uses(var) || r.uses(var),
        }
    }

    /// Value of a variable-free expression.
    pub fn constant_value(&self) -> Option<T> {
        if self.uses(Variable::T) || self.uses(Variable::X) {
            return None;
        }
        self.eval(Bindings { t: T::zero(), x: T::zero() }).ok()
    }
}

impl<T: Real> fmt::Display for Expr<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Variable::T) => f.write_str("t"),
            Expr::Var(Variable::X) => f.write_str("x"),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Bin(op, l, r) => {
                let sym = match op {
                    BinOp::Add => "+",
                    BinOp::Sub => "-",
                    BinOp::Mul => "*",
                    BinOp::Div => "/",
                    BinOp::Pow => "^",
                };
                write!(f, "({l} {sym} {r})")
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    kind: Kind,
    offset: usize,
}

fn parse_error(offset: usize, expected: &[&str]) -> Error {
    Error::Parse { offset, expected: expected.iter().map(|s| s.to_string()).collect() }
}

const OPERAND: &[&str] = &["number", "'t'", "'x'", "function", "'('", "'-'"];

fn lex(src: &str) -> Result<Vec<Token>> {
    let bytes = src.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let single = match c {
            b' ' | b'\t' | b'\n' | b'\r' => {
                i += 1;
                continue;
            }
            b'+' => Some(Kind::Plus),
            b'-' => Some(Kind::Minus),
            b'*' => Some(Kind::Star),
            b'/' => Some(Kind::Slash),
            b'^' => Some(Kind::Caret),
            b'(' => Some(Kind::LParen),
            b')' => Some(Kind::RParen),
            _ => None,
        };
        if let Some(kind) = single {
            tokens.push(Token { kind, offset: start });
            i += 1;
        } else if c.is_ascii_digit() || c == b'.' {
            i = scan_number(bytes, i).ok_or_else(|| parse_error(start, &["number"]))?;
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| parse_error(start, &["number"]))?;
            tokens.push(Token { kind: Kind::Num(value), offset: start });
        } else if c.is_ascii_alphabetic() {
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            tokens.push(Token { kind: Kind::Ident(src[start..i].to_string()), offset: start });
        } else {
            return Err(parse_error(start, OPERAND));
        }
    }
    tokens.push(Token { kind: Kind::End, offset: bytes.len() });
    Ok(tokens)
}

/// Returns the end of a decimal literal starting at `i`, or `None` if malformed.
fn scan_number(bytes: &[u8], mut i: usize) -> Option<usize> {
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < bytes.len() && bytes[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - s
    };
    let mut n = digits(&mut i);
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        n += digits(&mut i);
    }
    if n == 0 {
        return None;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        if digits(&mut j) == 0 {
            return None;
        }
        i = j;
    }
    Some(i)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn bump(&mut self) -> Token {
        let tok = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        tok
    }

    fn expr<T: Real>(&mut self) -> Result<Expr<T>> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                Kind::Plus => BinOp::Add,
                Kind::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term<T: Real>(&mut self) -> Result<Expr<T>> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek().kind {
                Kind::Star => BinOp::Mul,
                Kind::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.factor()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor<T: Real>(&mut self) -> Result<Expr<T>> {
        if self.peek().kind == Kind::Minus {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        let base = self.base()?;
        if self.peek().kind == Kind::Caret {
            self.bump();
            let exponent = self.factor()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn base<T: Real>(&mut self) -> Result<Expr<T>> {
        let tok = self.bump();
        match tok.kind {
            Kind::Num(v) => Ok(Expr::Num(T::lit(v))),
            Kind::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Kind::Ident(ref name) if name == "t" => Ok(Expr::Var(Variable::T)),
            Kind::Ident(ref name) if name == "x" => Ok(Expr::Var(Variable::X)),
            Kind::Ident(ref name) => {
                let func = Func::from_name(name).ok_or_else(|| parse_error(tok.offset, OPERAND))?;
                let open = self.bump();
                if open.kind != Kind::LParen {
                    return Err(parse_error(open.offset, &["'('"]));
                }
                let arg = self.expr()?;
                self.expect_rparen()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            _ => Err(parse_error(tok.offset, OPERAND)),
        }
    }

    fn expect_rparen(&mut self) -> Result<()> {
        let tok = self.bump();
        if tok.kind == Kind::RParen {
            Ok(())
        } else {
            Err(parse_error(tok.offset, &["')'", "operator"]))
        }
    }
}
