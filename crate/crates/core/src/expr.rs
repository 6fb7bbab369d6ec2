//! Scalar-field expression language.
//!
//! Conformal factors, metric data and Rho overrides are given as small
//! real-valued expressions in the chart coordinates `x`, `y`, `z` (and the
//! curve parameter `t`). This module parses them, prints them back,
//! differentiates them symbolically and evaluates them over any [`Real`]
//! scalar, including Taylor jets.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^`. Binary `+ - * /`
//! associate to the left; `^` associates to the right and its exponent must
//! be a constant expression.

use std::fmt;

use thiserror::Error;

use crate::jet::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    X,
    Y,
    Z,
    T,
}

impl Var {
    /// Chart coordinate index, `None` for the curve parameter.
    pub fn coord(self) -> Option<usize> {
        match self {
            Var::X => Some(0),
            Var::Y => Some(1),
            Var::Z => Some(2),
            Var::T => None,
        }
    }

    pub fn from_coord(i: usize) -> Var {
        match i {
            0 => Var::X,
            1 => Var::Y,
            2 => Var::Z,
            _ => panic!("no chart coordinate with index {i}"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::T => "t",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" | "ln" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Base raised to a constant exponent.
    Pow(Box<Expr>, f64),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("log of non-positive value {0}")]
    LogDomain(f64),
    #[error("sqrt of negative value {0}")]
    SqrtDomain(f64),
    #[error("division by zero")]
    DivisionByZero,
    #[error("non-integer power {exponent} of negative value {base}")]
    PowDomain { base: f64, exponent: f64 },
    #[error("variable `{0}` is not bound")]
    Unbound(&'static str),
    #[error("non-finite result")]
    NonFinite,
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        if ch.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if ch.is_ascii_digit() || ch == b'.' {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                // exponent only if followed by digits (optionally signed)
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| ParseError::Syntax { offset: start, message: format!("malformed number `{lit}`") })?;
            out.push((Tok::Num(v), start));
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        }
        let tok = match ch {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(ch as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let c = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax { offset: start, message: format!("unexpected character `{c}`") });
            }
        };
        out.push((tok, start));
        i += 1;
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { offset: self.offset(), message: message.into() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(op @ ('+' | '-'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if op == '+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(op @ ('*' | '/'))) = self.peek() {
            let op = *op;
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let at = self.offset();
            let exponent = self.unary()?;
            let value = exponent
                .constant_value()
                .ok_or_else(|| ParseError::Syntax { offset: at, message: "exponent must be a constant".into() })?;
            return Ok(Expr::Pow(Box::new(base), value));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.peek().cloned() {
            Some(Tok::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if let Some(f) = Func::from_name(&name) {
                    if self.peek() != Some(&Tok::LParen) {
                        return self.err(format!("expected `(` after `{name}`"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(&Tok::RParen) {
                        return self.err("expected `)`");
                    }
                    self.pos += 1;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name.as_str() {
                    "x" => Ok(Expr::Var(Var::X)),
                    "y" => Ok(Expr::Var(Var::Y)),
                    "z" => Ok(Expr::Var(Var::Z)),
                    "t" => Ok(Expr::Var(Var::T)),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    _ => Err(ParseError::UnknownIdentifier { offset: at, name }),
                }
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Tok::RParen) {
                    return self.err("expected `)`");
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(Tok::RParen) => self.err("unexpected `)`"),
            Some(Tok::Op(c)) => self.err(format!("unexpected operator `{c}`")),
            None => self.err("unexpected end of input"),
        }
    }
}

/// Parse an expression string.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Syntax { offset: 0, message: "empty expression".into() });
    }
    let toks = tokenize(text)?;
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

// ---------------------------------------------------------------------------
// Construction helpers with constant folding

#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn coord(i: usize) -> Expr {
        Expr::Var(Var::from_coord(i))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    pub fn constant_value(&self) -> Option<f64> {
        self.eval::<f64>(&|_| None).ok()
    }

    pub fn neg(self) -> Expr {
        match self {
            Expr::Num(v) => Expr::Num(-v),
            Expr::Neg(inner) => *inner,
            other => Expr::Neg(Box::new(other)),
        }
    }

    pub fn add(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a + b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => b,
            (a, Expr::Neg(b)) => Expr::Sub(Box::new(a), b),
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a - b),
            (a, b) if b.is_zero() => a,
            (a, b) if a.is_zero() => b.neg(),
            (a, Expr::Neg(b)) => Expr::Add(Box::new(a), b),
            (a, b) => Expr::Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) => Expr::Num(a * b),
            (a, b) if a.is_zero() || b.is_zero() => Expr::Num(0.0),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (Expr::Num(-1.0), b) => b.neg(),
            (a, Expr::Num(-1.0)) => a.neg(),
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(self, rhs: Expr) -> Expr {
        match (self, rhs) {
            (Expr::Num(a), Expr::Num(b)) if b != 0.0 => Expr::Num(a / b),
            (a, b) if a.is_zero() && !b.is_zero() => Expr::Num(0.0),
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(self, c: f64) -> Expr {
        match self {
            _ if c == 0.0 => Expr::Num(1.0),
            e if c == 1.0 => e,
            Expr::Num(a) if (a > 0.0 || c.fract() == 0.0) && a.powf(c).is_finite() => Expr::Num(a.powf(c)),
            e => Expr::Pow(Box::new(e), c),
        }
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        if let Expr::Num(a) = arg {
            let folded = Expr::Call(f, Box::new(Expr::Num(a))).eval(&|_| None::<f64>);
            if let Ok(v) = folded {
                return Expr::Num(v);
            }
        }
        Expr::Call(f, Box::new(arg))
    }

    pub fn sqr(self) -> Expr {
        self.pow(2.0)
    }

    /// Depth of the tree counted in edges; a leaf has depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 0,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => 1 + a.depth().max(b.depth()),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => 1 + a.node_count(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                1 + a.node_count() + b.node_count()
            }
        }
    }

    /// Replace every occurrence of `v` by `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        match self {
            Expr::Var(w) if *w == v => with.clone(),
            Expr::Num(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => a.substitute(v, with).neg(),
            Expr::Add(a, b) => a.substitute(v, with).add(b.substitute(v, with)),
            Expr::Sub(a, b) => a.substitute(v, with).sub(b.substitute(v, with)),
            Expr::Mul(a, b) => a.substitute(v, with).mul(b.substitute(v, with)),
            Expr::Div(a, b) => a.substitute(v, with).div(b.substitute(v, with)),
            Expr::Pow(a, c) => a.substitute(v, with).pow(*c),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(v, with)),
        }
    }

    pub fn mentions(&self, v: Var) -> bool {
        match self {
            Expr::Var(w) => *w == v,
            Expr::Num(_) => false,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.mentions(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.mentions(v) || b.mentions(v),
        }
    }
}

// ---------------------------------------------------------------------------
// Differentiation

impl Expr {
    /// Exact symbolic derivative with respect to `v`.
    pub fn differentiate(&self, v: Var) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(w) => Expr::Num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => a.differentiate(v).neg(),
            Expr::Add(a, b) => a.differentiate(v).add(b.differentiate(v)),
            Expr::Sub(a, b) => a.differentiate(v).sub(b.differentiate(v)),
            Expr::Mul(a, b) => {
                let da = a.differentiate(v);
                let db = b.differentiate(v);
                da.mul((**b).clone()).add((**a).clone().mul(db))
            }
            Expr::Div(a, b) => {
                let da = a.differentiate(v);
                let db = b.differentiate(v);
                if db.is_zero() {
                    return da.div((**b).clone());
                }
                // (a' b - a b') / b^2
                da.mul((**b).clone()).sub((**a).clone().mul(db)).div((**b).clone().sqr())
            }
            Expr::Pow(a, c) => {
                let da = a.differentiate(v);
                Expr::Num(*c).mul((**a).clone().pow(c - 1.0)).mul(da)
            }
            Expr::Call(f, a) => {
                let da = a.differentiate(v);
                if da.is_zero() {
                    return Expr::Num(0.0);
                }
                let u = (**a).clone();
                let outer = match f {
                    Func::Exp => Expr::call(Func::Exp, u),
                    Func::Log => Expr::Num(1.0).div(u),
                    Func::Sin => Expr::call(Func::Cos, u),
                    Func::Cos => Expr::call(Func::Sin, u).neg(),
                    Func::Sinh => Expr::call(Func::Cosh, u),
                    Func::Cosh => Expr::call(Func::Sinh, u),
                    Func::Sqrt => Expr::Num(0.5).div(Expr::call(Func::Sqrt, u)),
                };
                outer.mul(da)
            }
        }
    }

    /// Gradient with respect to the first `n` chart coordinates.
    pub fn gradient(&self, n: usize) -> Vec<Expr> {
        (0..n).map(|i| self.differentiate(Var::from_coord(i))).collect()
    }
}

// ---------------------------------------------------------------------------
// Evaluation

impl Expr {
    /// Evaluate with variable values supplied by `lookup`.
    pub fn eval<R: Real>(&self, lookup: &dyn Fn(Var) -> Option<R>) -> Result<R, EvalError> {
        let out = match self {
            Expr::Num(v) => R::constant(*v),
            Expr::Var(v) => lookup(*v).ok_or(EvalError::Unbound(v.name()))?,
            Expr::Neg(a) => -a.eval(lookup)?,
            Expr::Add(a, b) => a.eval(lookup)? + b.eval(lookup)?,
            Expr::Sub(a, b) => a.eval(lookup)? - b.eval(lookup)?,
            Expr::Mul(a, b) => a.eval(lookup)? * b.eval(lookup)?,
            Expr::Div(a, b) => {
                let num = a.eval(lookup)?;
                let den = b.eval(lookup)?;
                if den.value() == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Pow(a, c) => {
                let base = a.eval(lookup)?;
                let b = base.value();
                if c.fract() == 0.0 && c.abs() <= 1024.0 {
                    if b == 0.0 && *c < 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    base.powi(*c as i32)
                } else {
                    if b < 0.0 || (b == 0.0 && *c < 0.0) {
                        return Err(EvalError::PowDomain { base: b, exponent: *c });
                    }
                    base.powf(*c)
                }
            }
            Expr::Call(f, a) => {
                let u = a.eval(lookup)?;
                match f {
                    Func::Exp => u.exp(),
                    Func::Log => {
                        if u.value() <= 0.0 {
                            return Err(EvalError::LogDomain(u.value()));
                        }
                        u.ln()
                    }
                    Func::Sin => u.sin(),
                    Func::Cos => u.cos(),
                    Func::Sinh => u.sinh(),
                    Func::Cosh => u.cosh(),
                    Func::Sqrt => {
                        if u.value() < 0.0 {
                            return Err(EvalError::SqrtDomain(u.value()));
                        }
                        u.sqrt()
                    }
                }
            }
        };
        if !out.value().is_finite() {
            return Err(EvalError::NonFinite);
        }
        Ok(out)
    }

    /// Evaluate at chart coordinates `point` (`x`, `y`, `z` in order).
    pub fn evaluate(&self, point: &[f64]) -> Result<f64, EvalError> {
        self.eval(&|v: Var| v.coord().and_then(|i| point.get(i).copied()))
    }

    /// Evaluate at chart coordinates given as any [`Real`] (e.g. jets).
    pub fn evaluate_real<R: Real>(&self, point: &[R]) -> Result<R, EvalError> {
        self.eval(&|v: Var| v.coord().and_then(|i| point.get(i).copied()))
    }

    /// Evaluate an expression in the curve parameter `t` only.
    pub fn evaluate_t<R: Real>(&self, t: R) -> Result<R, EvalError> {
        self.eval(&|v: Var| if v == Var::T { Some(t) } else { None })
    }
}

// ---------------------------------------------------------------------------
// Printing

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Num(v) if *v < 0.0 => 3,
        Expr::Pow(..) => 4,
        Expr::Num(_) | Expr::Var(_) | Expr::Call(..) => 5,
    }
}

fn write_num(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    if v < 0.0 {
        write!(f, "(-{})", -v)
    } else {
        write!(f, "{v}")
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write_num(f, *v),
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, prec(a) < 3 || matches!(**a, Expr::Neg(_)))
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let op = if matches!(self, Expr::Add(..)) { "+" } else { "-" };
                write_child(f, a, prec(a) < 1)?;
                write!(f, " {op} ")?;
                write_child(f, b, prec(b) <= 1)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = if matches!(self, Expr::Mul(..)) { "*" } else { "/" };
                write_child(f, a, prec(a) < 2)?;
                f.write_str(op)?;
                write_child(f, b, prec(b) <= 2)
            }
            Expr::Pow(a, c) => {
                write_child(f, a, prec(a) < 5)?;
                f.write_str("^")?;
                write_num(f, *c)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stereographic_factor_structure() {
        let e = parse("2/(1+x^2+y^2)").unwrap();
        assert!(matches!(e, Expr::Div(..)));
        assert_eq!(e.depth(), 4);
        assert_eq!(e.evaluate(&[0.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn single_variable() {
        assert_eq!(parse("x").unwrap(), Expr::Var(Var::X));
    }

    #[test]
    fn unterminated_call_reports_offset() {
        let err = parse("exp(").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 4, .. }), "{err:?}");
    }

    #[test]
    fn unknown_identifier() {
        let err = parse("1 + w").unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { offset: 4, name: "w".into() });
    }

    #[test]
    fn precedence_rules() {
        // unary minus binds looser than ^
        let e = parse("-x^2").unwrap();
        assert_eq!(e.evaluate(&[3.0]).unwrap(), -9.0);
        // left associativity of - and /
        assert_eq!(parse("8-3-2").unwrap().evaluate(&[]).unwrap(), 3.0);
        assert_eq!(parse("8/4/2").unwrap().evaluate(&[]).unwrap(), 1.0);
        assert_eq!(parse("2*3+4*5").unwrap().evaluate(&[]).unwrap(), 26.0);
        assert_eq!(parse("2^-1").unwrap().evaluate(&[]).unwrap(), 0.5);
        assert_eq!(parse("-2*3").unwrap().evaluate(&[]).unwrap(), -6.0);
    }

    #[test]
    fn non_constant_exponent_rejected() {
        assert!(parse("x^y").is_err());
        assert!(parse("x^(1/2)").is_ok());
    }

    #[test]
    fn simple_derivatives() {
        let d = parse("x^2").unwrap().differentiate(Var::X);
        assert_eq!(d.to_string(), "2*x");
        let d = parse("sin(y)").unwrap().differentiate(Var::X);
        assert_eq!(d, Expr::Num(0.0));
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(parse("log(x)").unwrap().evaluate(&[0.0, 0.0]), Err(EvalError::LogDomain(_))));
        assert!(matches!(parse("sqrt(x)").unwrap().evaluate(&[-1.0]), Err(EvalError::SqrtDomain(_))));
        assert!(matches!(parse("1/x").unwrap().evaluate(&[0.0]), Err(EvalError::DivisionByZero)));
        assert!(matches!(parse("x^0.5").unwrap().evaluate(&[-1.0]), Err(EvalError::PowDomain { .. })));
        assert!(matches!(parse("z").unwrap().evaluate(&[1.0, 2.0]), Err(EvalError::Unbound("z"))));
    }

    #[test]
    fn constants() {
        let v = parse("exp(1)").unwrap().evaluate(&[]).unwrap();
        assert_eq!(v, std::f64::consts::E);
        let v = parse("cos(pi)").unwrap().evaluate(&[]).unwrap();
        assert_eq!(v, -1.0);
    }

    #[test]
    fn printing_round_trips() {
        for s in [
            "2/(1+x^2+y^2)",
            "-(x*y)",
            "-x*y",
            "x - (y - 1)",
            "x/(y/2)",
            "(x+1)^2",
            "-x^2",
            "(-x)^2",
            "exp(-x^2/2)*sin(3*y)",
            "sqrt(1 + x^2)^-1.5",
            "--x",
        ] {
            let a = parse(s).unwrap();
            let b = parse(&a.to_string()).unwrap();
            assert_eq!(a, b, "{s} -> {a}");
        }
    }

    #[test]
    fn negative_integer_power_of_negative_base() {
        let v = parse("x^-2").unwrap().evaluate(&[-2.0]).unwrap();
        assert_eq!(v, 0.25);
    }
}
