//! Coefficient expression language.
//!
//! Problem data (diffusion coefficient, nonlinearity, forcing, boundary
//! data, initial state) is written as small arithmetic expressions over the
//! free variables `x`, `t` and `u`:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := unary ('^' factor)?
//! unary  := '-' unary | atom
//! atom   := number | ident | ident '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and a unary minus applies to the whole power,
//! so `-x^2` is `-(x^2)`. The function set is closed:
//! `exp, sin, cos, abs, sqrt, min, max`. There is no constant `e`; write
//! `exp(1)`.

mod lexer;
mod parser;

use std::fmt;

use thiserror::Error;

pub use lexer::{tokenize, Token, TokenKind};

/// A free variable of the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
    U,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
            Var::U => "u",
        }
    }

    fn from_name(name: &str) -> Option<Var> {
        match name {
            "x" => Some(Var::X),
            "t" => Some(Var::T),
            "u" => Some(Var::U),
            _ => None,
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

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Abs,
    Sqrt,
    Min,
    Max,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Vec<Expr>),
}

/// Parsed expression tree. Every node remembers the byte offset it was
/// parsed from so evaluation errors can point back into the source.
///
/// Equality is structural and ignores positions.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub position: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Const(a), ExprKind::Const(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a == b,
            (ExprKind::Binary(o1, l1, r1), ExprKind::Binary(o2, l2, r2)) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at column {} (byte offset {offset}): expected {}, found {found}", offset + 1, expected.join(" or "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("variable `{name}` at byte offset {offset} is not allowed here (allowed: {allowed})")]
    UndeclaredVariable {
        name: String,
        offset: usize,
        allowed: String,
    },
    #[error("unknown function `{name}` at byte offset {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("function `{name}` at byte offset {offset} takes {expected} argument(s), got {found}")]
    Arity {
        name: &'static str,
        offset: usize,
        expected: usize,
        found: usize,
    },
}

impl ParseError {
    /// Byte offset of the offending token, if there is one.
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::Syntax { offset, .. }
            | ParseError::UndeclaredVariable { offset, .. }
            | ParseError::UnknownFunction { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
        }
    }

    /// One-based column for human-facing messages.
    pub fn column(&self) -> Option<usize> {
        self.offset().map(|o| o + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DomainErrorKind {
    DivisionByZero,
    SqrtOfNegative,
    ZeroToNonPositivePower,
    NegativeBaseFractionalExponent,
}

impl fmt::Display for DomainErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DomainErrorKind::DivisionByZero => "division by zero",
            DomainErrorKind::SqrtOfNegative => "square root of a negative number",
            DomainErrorKind::ZeroToNonPositivePower => "zero raised to a non-positive power",
            DomainErrorKind::NegativeBaseFractionalExponent => {
                "negative base with a non-integer exponent"
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("{kind} at byte offset {position}")]
    Domain {
        kind: DomainErrorKind,
        position: usize,
    },
    #[error("variable `{}` at byte offset {position} has no binding", var.name())]
    Unbound { var: Var, position: usize },
}

/// Values for the free variables. Unset variables are an evaluation error.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Bindings {
    pub x: Option<f64>,
    pub t: Option<f64>,
    pub u: Option<f64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn x(mut self, x: f64) -> Self {
        self.x = Some(x);
        self
    }

    pub fn t(mut self, t: f64) -> Self {
        self.t = Some(t);
        self
    }

    pub fn u(mut self, u: f64) -> Self {
        self.u = Some(u);
        self
    }

    pub fn xt(x: f64, t: f64) -> Self {
        Self::new().x(x).t(t)
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        match var {
            Var::X => self.x,
            Var::T => self.t,
            Var::U => self.u,
        }
    }

    pub fn set(&mut self, var: Var, value: f64) {
        match var {
            Var::X => self.x = Some(value),
            Var::T => self.t = Some(value),
            Var::U => self.u = Some(value),
        }
    }
}

/// Parses `source`, rejecting any variable not in `allowed`.
pub fn parse(source: &str, allowed: &[Var]) -> Result<Expr, ParseError> {
    parser::Parser::new(source, allowed)?.parse()
}

impl Expr {
    pub fn parse(source: &str, allowed: &[Var]) -> Result<Expr, ParseError> {
        parse(source, allowed)
    }

    pub fn constant(value: f64) -> Expr {
        Expr {
            kind: ExprKind::Const(value),
            position: 0,
        }
    }

    /// `lhs op rhs`, positioned at `lhs`.
    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        Expr {
            position: lhs.position,
            kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)),
        }
    }

    pub fn eval(&self, b: &Bindings) -> Result<f64, EvalError> {
        match &self.kind {
            ExprKind::Const(c) => Ok(*c),
            ExprKind::Var(v) => b.get(*v).ok_or(EvalError::Unbound {
                var: *v,
                position: self.position,
            }),
            ExprKind::Neg(e) => Ok(-e.eval(b)?),
            ExprKind::Binary(op, l, r) => {
                let a = l.eval(b)?;
                let c = r.eval(b)?;
                let domain = |kind| EvalError::Domain {
                    kind,
                    position: self.position,
                };
                match op {
                    BinOp::Add => Ok(a + c),
                    BinOp::Sub => Ok(a - c),
                    BinOp::Mul => Ok(a * c),
                    BinOp::Div => {
                        if c == 0.0 {
                            Err(domain(DomainErrorKind::DivisionByZero))
                        } else {
                            Ok(a / c)
                        }
                    }
                    BinOp::Pow => real_pow(a, c).map_err(domain),
                }
            }
            ExprKind::Call(func, args) => {
                let x = args[0].eval(b)?;
                Ok(match func {
                    Func::Exp => x.exp(),
                    Func::Sin => x.sin(),
                    Func::Cos => x.cos(),
                    Func::Abs => x.abs(),
                    Func::Sqrt => {
                        if x < 0.0 {
                            return Err(EvalError::Domain {
                                kind: DomainErrorKind::SqrtOfNegative,
                                position: self.position,
                            });
                        }
                        x.sqrt()
                    }
                    Func::Min => x.min(args[1].eval(b)?),
                    Func::Max => x.max(args[1].eval(b)?),
                })
            }
        }
    }

    /// Whether `var` occurs anywhere in the tree.
    pub fn depends_on(&self, var: Var) -> bool {
        match &self.kind {
            ExprKind::Const(_) => false,
            ExprKind::Var(v) => *v == var,
            ExprKind::Neg(e) => e.depends_on(var),
            ExprKind::Binary(_, l, r) => l.depends_on(var) || r.depends_on(var),
            ExprKind::Call(_, args) => args.iter().any(|a| a.depends_on(var)),
        }
    }

    /// Central-difference partial derivative with respect to `var`.
    ///
    /// `step` defaults to `1e-6 * max(1, |point(var)|)`.
    pub fn numeric_partial(
        &self,
        var: Var,
        point: &Bindings,
        step: Option<f64>,
    ) -> Result<f64, EvalError> {
        let at = point.get(var).ok_or(EvalError::Unbound {
            var,
            position: self.position,
        })?;
        if !self.depends_on(var) {
            // still surface evaluation errors at the point itself
            self.eval(point)?;
            return Ok(0.0);
        }
        let h = step.unwrap_or(1e-6 * at.abs().max(1.0));
        let mut fwd = *point;
        fwd.set(var, at + h);
        let mut bwd = *point;
        bwd.set(var, at - h);
        Ok((self.eval(&fwd)? - self.eval(&bwd)?) / (2.0 * h))
    }
}

/// Real power with the language's domain rules.
fn real_pow(base: f64, exponent: f64) -> Result<f64, DomainErrorKind> {
    if base > 0.0 {
        Ok(base.powf(exponent))
    } else if base == 0.0 {
        if exponent > 0.0 {
            Ok(0.0)
        } else {
            Err(DomainErrorKind::ZeroToNonPositivePower)
        }
    } else if exponent.fract() == 0.0 {
        Ok(base.powf(exponent))
    } else {
        Err(DomainErrorKind::NegativeBaseFractionalExponent)
    }
}

/// Free function form of [`Expr::numeric_partial`].
pub fn numeric_partial(
    ast: &Expr,
    var: Var,
    point: &Bindings,
    step: Option<f64>,
) -> Result<f64, EvalError> {
    ast.numeric_partial(var, point, step)
}

/// Prints a fully parenthesized form that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Const(c) => {
                if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) {
                    write!(f, "(-{})", -c)
                } else {
                    write!(f, "{c:?}")
                }
            }
            ExprKind::Var(v) => f.write_str(v.name()),
            ExprKind::Neg(e) => write!(f, "(-{e})"),
            ExprKind::Binary(op, l, r) => write!(f, "({l} {} {r})", op.symbol()),
            ExprKind::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
        }
    }
}
