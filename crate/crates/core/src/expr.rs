//! Coefficient expressions: parsing, evaluation and symbolic differentiation.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := "-" factor | power ;
//! power  := atom ("^" factor)? ;
//! atom   := NUMBER | "x" | "t" | IDENT | IDENT "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! An identifier followed by `(` must name one of the unary functions in
//! [`Func`]; any other identifier is a named parameter resolved through a
//! [`ParamEnv`].

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};

/// Independent variables an expression may depend on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    T,
}

/// Unary node kinds. `Neg` is produced by prefix minus; the others are
/// callable by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Neg,
    Sin,
    Cos,
    Tan,
    Arctan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Log,
    Sqrt,
    Erf,
}

impl Func {
    pub const CALLABLE: [Func; 11] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Arctan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Erf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Neg => "-",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Arctan => "arctan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Erf => "erf",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::CALLABLE.into_iter().find(|f| f.name() == name)
    }

    fn apply(self, v: f64) -> std::result::Result<f64, &'static str> {
        let out = match self {
            Func::Neg => -v,
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Tan => {
                if v.cos() == 0.0 {
                    return Err("tan at a pole");
                }
                v.tan()
            }
            Func::Arctan => v.atan(),
            Func::Sinh => v.sinh(),
            Func::Cosh => v.cosh(),
            Func::Tanh => v.tanh(),
            Func::Exp => v.exp(),
            Func::Log => {
                if v <= 0.0 {
                    return Err("log of a non-positive argument");
                }
                v.ln()
            }
            Func::Sqrt => {
                if v < 0.0 {
                    return Err("sqrt of a negative argument");
                }
                v.sqrt()
            }
            Func::Erf => libm::erf(v),
        };
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

    fn apply(self, l: f64, r: f64) -> std::result::Result<f64, &'static str> {
        match self {
            BinOp::Add => Ok(l + r),
            BinOp::Sub => Ok(l - r),
            BinOp::Mul => Ok(l * r),
            BinOp::Div => {
                if r == 0.0 {
                    Err("division by zero")
                } else {
                    Ok(l / r)
                }
            }
            BinOp::Pow => {
                if l < 0.0 && r.fract() != 0.0 {
                    Err("non-integer power of a negative base")
                } else if l == 0.0 && r < 0.0 {
                    Err("negative power of zero")
                } else {
                    Ok(l.powf(r))
                }
            }
        }
    }
}

/// Expression tree over `x`, `t` and named parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Unary(Func, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

/// Named model parameters (`k`, `sigma`, `ell`, ...).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamEnv {
    values: BTreeMap<String, f64>,
}

impl ParamEnv {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds an environment, rejecting repeated names.
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let mut env = ParamEnv::new();
        for (name, value) in pairs {
            env.insert(name, value)?;
        }
        Ok(env)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Result<()> {
        let name = name.into();
        if self.values.contains_key(&name) {
            return Err(Error::DuplicateParameter(name));
        }
        self.values.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

// ---------------------------------------------------------------------------
// constructors

impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn x() -> Expr {
        Expr::Var(Var::X)
    }

    pub fn t() -> Expr {
        Expr::Var(Var::T)
    }

    pub fn param(name: impl Into<String>) -> Expr {
        Expr::Param(name.into())
    }

    pub fn unary(f: Func, e: Expr) -> Expr {
        Expr::Unary(f, Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    pub fn pow(self, e: Expr) -> Expr {
        Expr::binary(BinOp::Pow, self, e)
    }

    pub fn powf(self, p: f64) -> Expr {
        self.pow(Expr::Num(p))
    }

    pub fn apply(self, f: Func) -> Expr {
        Expr::unary(f, self)
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:expr) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, self, rhs)
            }
        }
        impl std::ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                Expr::binary($op, self, Expr::Num(rhs))
            }
        }
        impl std::ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                Expr::binary($op, Expr::Num(self), rhs)
            }
        }
    };
}
impl_binop!(Add, add, BinOp::Add);
impl_binop!(Sub, sub, BinOp::Sub);
impl_binop!(Mul, mul, BinOp::Mul);
impl_binop!(Div, div, BinOp::Div);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::unary(Func::Neg, self)
    }
}

// ---------------------------------------------------------------------------
// queries, substitution, evaluation

impl Expr {
    /// Number of child expressions; matches the node kind by construction.
    pub fn arity(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => 0,
            Expr::Unary(..) => 1,
            Expr::Binary(..) => 2,
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Param(_) => false,
            Expr::Var(v) => *v == var,
            Expr::Unary(_, e) => e.depends_on(var),
            Expr::Binary(_, l, r) => l.depends_on(var) || r.depends_on(var),
        }
    }

    /// Parameter names referenced by the tree, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Param(p) => out.push(p.clone()),
                Expr::Unary(_, e) => walk(e, out),
                Expr::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
                _ => {}
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Replaces every parameter by its value. Fails on the first unbound name.
    pub fn bind(&self, env: &ParamEnv) -> Result<Expr> {
        Ok(match self {
            Expr::Param(p) => Expr::Num(
                env.get(p)
                    .ok_or_else(|| Error::UnboundParameter(p.clone()))?,
            ),
            Expr::Num(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(f, e) => Expr::unary(*f, e.bind(env)?),
            Expr::Binary(op, l, r) => Expr::binary(*op, l.bind(env)?, r.bind(env)?),
        })
    }

    /// Substitutes `var` by another expression.
    pub fn substitute(&self, var: Var, by: &Expr) -> Expr {
        match self {
            Expr::Var(v) if *v == var => by.clone(),
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Unary(f, e) => Expr::unary(*f, e.substitute(var, by)),
            Expr::Binary(op, l, r) => {
                Expr::binary(*op, l.substitute(var, by), r.substitute(var, by))
            }
        }
    }

    pub fn eval(&self, x: f64, t: f64, env: &ParamEnv) -> Result<f64> {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var(Var::X) => Ok(x),
            Expr::Var(Var::T) => Ok(t),
            Expr::Param(p) => env.get(p).ok_or_else(|| Error::UnboundParameter(p.clone())),
            Expr::Unary(f, e) => {
                let v = e.eval(x, t, env)?;
                f.apply(v).map_err(|reason| self.domain_error(x, t, reason))
            }
            Expr::Binary(op, l, r) => {
                let lv = l.eval(x, t, env)?;
                let rv = r.eval(x, t, env)?;
                op.apply(lv, rv)
                    .map_err(|reason| self.domain_error(x, t, reason))
            }
        }
    }

    /// Evaluates a tree that contains no parameters (see [`Expr::bind`]).
    pub fn eval_xt(&self, x: f64, t: f64) -> Result<f64> {
        self.eval(x, t, &EMPTY_ENV)
    }

    fn domain_error(&self, x: f64, t: f64, reason: &'static str) -> Error {
        Error::Domain {
            subtree: self.to_string(),
            x,
            t,
            reason,
        }
    }
}

static EMPTY_ENV: ParamEnv = ParamEnv {
    values: BTreeMap::new(),
};

/// Convenience: parse and evaluate in one go.
pub fn evaluate(e: &Expr, x: f64, t: f64, env: &ParamEnv) -> Result<f64> {
    e.eval(x, t, env)
}

// ---------------------------------------------------------------------------
// differentiation + simplification

/// Exact symbolic derivative of `e` with respect to `var`, simplified.
pub fn differentiate(e: &Expr, var: Var) -> Expr {
    simplify(&raw_derivative(e, var))
}

fn raw_derivative(e: &Expr, var: Var) -> Expr {
    use BinOp::*;
    match e {
        Expr::Num(_) | Expr::Param(_) => Expr::Num(0.0),
        Expr::Var(v) => Expr::Num(if *v == var { 1.0 } else { 0.0 }),
        Expr::Unary(f, u) => {
            let du = raw_derivative(u, var);
            let u = (**u).clone();
            let outer = match f {
                Func::Neg => return -du,
                Func::Sin => u.apply(Func::Cos),
                Func::Cos => -(u.apply(Func::Sin)),
                Func::Tan => 1.0 / u.apply(Func::Cos).powf(2.0),
                Func::Arctan => 1.0 / (1.0 + u.powf(2.0)),
                Func::Sinh => u.apply(Func::Cosh),
                Func::Cosh => u.apply(Func::Sinh),
                Func::Tanh => 1.0 / u.apply(Func::Cosh).powf(2.0),
                Func::Exp => u.apply(Func::Exp),
                Func::Log => 1.0 / u,
                Func::Sqrt => 0.5 / u.apply(Func::Sqrt),
                Func::Erf => {
                    (2.0 / std::f64::consts::PI.sqrt()) * (-(u.powf(2.0))).apply(Func::Exp)
                }
            };
            outer * du
        }
        Expr::Binary(op, l, r) => {
            let dl = raw_derivative(l, var);
            let dr = raw_derivative(r, var);
            let (l, r) = ((**l).clone(), (**r).clone());
            match op {
                Add => dl + dr,
                Sub => dl - dr,
                Mul => dl * r.clone() + l * dr,
                Div => (dl * r.clone() - l * dr) / r.powf(2.0),
                Pow => {
                    let r_const = !r.depends_on(var);
                    let l_const = !l.depends_on(var);
                    if r_const {
                        r.clone() * l.pow(r - 1.0) * dl
                    } else if l_const {
                        l.clone().apply(Func::Log) * l.pow(r) * dr
                    } else {
                        // d(u^v) = u^v (v' ln u + v u'/u)
                        l.clone().pow(r.clone()) * (dr * l.clone().apply(Func::Log) + r * dl / l)
                    }
                }
            }
        }
    }
}

/// Conservative algebraic clean-up: identities with 0 and 1, constant folding,
/// double negation. Never changes the value where the input is defined.
pub fn simplify(e: &Expr) -> Expr {
    use BinOp::*;
    match e {
        Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => e.clone(),
        Expr::Unary(f, u) => {
            let u = simplify(u);
            if let Expr::Num(v) = u {
                if let Ok(out) = f.apply(v) {
                    if out.is_finite() {
                        return Expr::Num(out);
                    }
                }
            }
            match (f, u) {
                (Func::Neg, Expr::Unary(Func::Neg, inner)) => *inner,
                (f, u) => Expr::unary(*f, u),
            }
        }
        Expr::Binary(op, l, r) => {
            let l = simplify(l);
            let r = simplify(r);
            if let (Expr::Num(a), Expr::Num(b)) = (&l, &r) {
                if let Ok(out) = op.apply(*a, *b) {
                    if out.is_finite() {
                        return Expr::Num(out);
                    }
                }
            }
            let is = |e: &Expr, v: f64| matches!(e, Expr::Num(n) if *n == v);
            match op {
                Add if is(&l, 0.0) => r,
                Add | Sub if is(&r, 0.0) => l,
                Sub if is(&l, 0.0) => simplify(&-r),
                Mul if is(&l, 0.0) || is(&r, 0.0) => Expr::Num(0.0),
                Mul if is(&l, 1.0) => r,
                Mul if is(&r, 1.0) => l,
                Mul if is(&l, -1.0) => simplify(&-r),
                Div if is(&l, 0.0) => Expr::Num(0.0),
                Div if is(&r, 1.0) => l,
                Pow if is(&r, 1.0) => l,
                Pow if is(&r, 0.0) => Expr::Num(1.0),
                _ => Expr::binary(*op, l, r),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// rendering

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(v) if *v < 0.0 => PREC_NEG,
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) => PREC_ATOM,
            Expr::Unary(Func::Neg, _) => PREC_NEG,
            Expr::Unary(..) => PREC_ATOM,
            Expr::Binary(BinOp::Add | BinOp::Sub, ..) => PREC_ADD,
            Expr::Binary(BinOp::Mul | BinOp::Div, ..) => PREC_MUL,
            Expr::Binary(BinOp::Pow, ..) => PREC_POW,
        }
    }

    fn fmt_at(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        if self.precedence() < min_prec {
            write!(f, "(")?;
            self.fmt_at(f, 0)?;
            return write!(f, ")");
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(Var::X) => write!(f, "x"),
            Expr::Var(Var::T) => write!(f, "t"),
            Expr::Param(p) => write!(f, "{p}"),
            Expr::Unary(Func::Neg, e) => {
                write!(f, "-")?;
                e.fmt_at(f, PREC_NEG)
            }
            Expr::Unary(func, e) => {
                write!(f, "{}(", func.name())?;
                e.fmt_at(f, 0)?;
                write!(f, ")")
            }
            Expr::Binary(op, l, r) => {
                let (lp, rp) = match op {
                    BinOp::Add | BinOp::Sub => (PREC_ADD, PREC_MUL),
                    BinOp::Mul | BinOp::Div => (PREC_MUL, PREC_NEG),
                    BinOp::Pow => (PREC_ATOM, PREC_NEG),
                };
                l.fmt_at(f, lp)?;
                write!(f, "{}", op.symbol())?;
                r.fmt_at(f, rp)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_at(f, 0)
    }
}

// ---------------------------------------------------------------------------
// parsing

/// Parses `source` into an expression tree.
pub fn parse(source: &str) -> Result<Expr> {
    let mut p = Parser {
        src: source.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::Syntax {
            offset: p.pos,
            expected: vec!["operator", "end of input"],
        });
    }
    Ok(e)
}

impl std::str::FromStr for Expr {
    type Err = Error;
    fn from_str(s: &str) -> Result<Expr> {
        parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(-self.factor()?);
        }
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.factor()?;
            return Ok(base.pow(exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        const EXPECTED: [&str; 5] = ["number", "x", "t", "identifier", "("];
        let start = {
            self.skip_ws();
            self.pos
        };
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let ident = std::str::from_utf8(&self.src[start..self.pos])
                    .expect("ascii identifier")
                    .to_string();
                if self.peek() == Some(b'(') {
                    let func = Func::from_name(&ident).ok_or(Error::UnknownFunction {
                        name: ident.clone(),
                        offset: start,
                    })?;
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Expr::unary(func, arg));
                }
                Ok(match ident.as_str() {
                    "x" => Expr::x(),
                    "t" => Expr::t(),
                    _ => Expr::Param(ident),
                })
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            _ => Err(Error::Syntax {
                offset: start,
                expected: EXPECTED.to_vec(),
            }),
        }
    }

    fn expect_close(&mut self) -> Result<()> {
        if self.eat(b')') {
            Ok(())
        } else {
            Err(Error::Syntax {
                offset: self.pos,
                expected: vec![")", "operator"],
            })
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            return Err(Error::Syntax {
                offset: start,
                expected: vec!["digit"],
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                // `2e` followed by something that is not an exponent: treat the
                // `e` as the start of an identifier, which the caller rejects.
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| Error::Syntax {
                offset: start,
                expected: vec!["number"],
            })
    }
}
