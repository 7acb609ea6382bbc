//! Expression language for rules, boundary data and solution formulas.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := integer | ident | ident '[' int ',' int ']' | 'sqrt' '(' expr ')' | '(' expr ')'
//! ```

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rug::Rational;
use thiserror::Error;

use crate::numeric::{as_i64, Field};

pub use parse::ParseError;

/// Offset of a stencil cell, `dn` columns and `dt` rows away from a reference cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Offset {
    pub dn: i64,
    pub dt: i64,
}

impl Offset {
    pub const fn new(dn: i64, dt: i64) -> Self {
        Offset { dn, dt }
    }

    /// Base-relative (paper `z_{N+i}^{t+j}`) form of a target-relative offset.
    pub const fn to_base(self) -> Offset {
        Offset::new(self.dn + 1, self.dt + 1)
    }

    pub const fn from_base(self) -> Offset {
        Offset::new(self.dn - 1, self.dt - 1)
    }
}

impl fmt::Display for Offset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.dn, self.dt)
    }
}

/// Which cell the offsets in a parsed text are measured from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CellConvention {
    /// Relative to the computed cell `(N+1, t+1)`.
    #[default]
    Target,
    /// Relative to `(N, t)` as written in the paper.
    Base,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Num(Rational),
    Sym(String),
    /// Target-relative cell reference.
    Cell(Offset),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    /// The exponent must evaluate to an integer.
    Pow(Box<Expr>, Box<Expr>),
    Sqrt(Box<Expr>),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("exponent `{0}` is not an integer")]
    NonIntegerExponent(String),
    #[error("sqrt of a non-square rational {0}")]
    NonSquare(String),
    #[error("sqrt of a negative value")]
    NegativeSqrt,
    #[error("cell reference {0} cannot be evaluated here")]
    CellNotAllowed(Offset),
    #[error("cell {0} is not available")]
    MissingCell(Offset),
}

/// Symbol values used during evaluation.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Binding {
    values: BTreeMap<String, Rational>,
}

impl Binding {
    pub fn new() -> Self {
        Binding::default()
    }

    pub fn with(mut self, name: &str, value: Rational) -> Self {
        self.set(name, value);
        self
    }

    pub fn set(&mut self, name: &str, value: Rational) {
        self.values.insert(name.to_string(), value);
    }

    pub fn get(&self, name: &str) -> Option<&Rational> {
        self.values.get(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Rational)> {
        self.values.iter()
    }

    /// Later bindings win.
    pub fn merged(&self, other: &Binding) -> Binding {
        let mut out = self.clone();
        for (k, v) in &other.values {
            out.values.insert(k.clone(), v.clone());
        }
        out
    }
}

impl Expr {
    pub fn num(r: Rational) -> Expr {
        Expr::Num(r)
    }

    pub fn sym(s: &str) -> Expr {
        Expr::Sym(s.to_string())
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        Expr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::Sub(Box::new(a), Box::new(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        Expr::Mul(Box::new(a), Box::new(b))
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        Expr::Div(Box::new(a), Box::new(b))
    }

    pub fn pow(a: Expr, e: Expr) -> Expr {
        Expr::Pow(Box::new(a), Box::new(e))
    }

    fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self {
            Expr::Num(_) | Expr::Sym(_) | Expr::Cell(_) => {}
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            Expr::Neg(a) | Expr::Sqrt(a) => a.visit(f),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit(&mut |e| {
            if let Expr::Sym(s) = e {
                out.insert(s.clone());
            }
        });
        out
    }

    /// Distinct cell offsets in first-appearance order.
    pub fn cells(&self) -> Vec<Offset> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let Expr::Cell(o) = e {
                if !out.contains(o) {
                    out.push(*o);
                }
            }
        });
        out
    }

    pub fn has_sqrt(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, Expr::Sqrt(_)));
        found
    }

    /// Evaluates exponents, which must be integers depending only on symbols.
    pub fn integer_exponent(e: &Expr, b: &Binding) -> Result<i64, EvalError> {
        let r = e.evaluate(b)?;
        as_i64(&r).ok_or_else(|| EvalError::NonIntegerExponent(r.to_string()))
    }

    /// Exact value; cell references are rejected.
    pub fn evaluate(&self, b: &Binding) -> Result<Rational, EvalError> {
        self.eval_field::<Rational>(b, 0, &mut |o| Err(EvalError::CellNotAllowed(o)))
    }

    /// Evaluates in any [`Field`]; symbols are lifted at `bits` precision and
    /// cells are supplied by `cell`.
    pub fn eval_field<F: Field>(
        &self,
        b: &Binding,
        bits: u32,
        cell: &mut dyn FnMut(Offset) -> Result<F, EvalError>,
    ) -> Result<F, EvalError> {
        Ok(match self {
            Expr::Num(r) => F::lift(r, bits),
            Expr::Sym(s) => {
                let v = b.get(s).ok_or_else(|| EvalError::Unbound(s.clone()))?;
                F::lift(v, bits)
            }
            Expr::Cell(o) => cell(*o)?,
            Expr::Add(x, y) => x.eval_field(b, bits, cell)?.add(&y.eval_field(b, bits, cell)?),
            Expr::Sub(x, y) => x.eval_field(b, bits, cell)?.sub(&y.eval_field(b, bits, cell)?),
            Expr::Mul(x, y) => x.eval_field(b, bits, cell)?.mul(&y.eval_field(b, bits, cell)?),
            Expr::Div(x, y) => {
                let n = x.eval_field(b, bits, cell)?;
                let d = y.eval_field(b, bits, cell)?;
                n.div(&d).ok_or(EvalError::DivisionByZero)?
            }
            Expr::Neg(x) => x.eval_field(b, bits, cell)?.neg(),
            Expr::Pow(x, e) => {
                let k = Expr::integer_exponent(e, b)?;
                let base = x.eval_field(b, bits, cell)?;
                base.powi(k).ok_or(EvalError::DivisionByZero)?
            }
            Expr::Sqrt(x) => {
                let v = x.eval_field(b, bits, cell)?;
                if !v.is_positive() && !v.is_zero() {
                    return Err(EvalError::NegativeSqrt);
                }
                match v.sqrt() {
                    Some(r) => r,
                    None => return Err(EvalError::NonSquare(format!("{v:?}"))),
                }
            }
        })
    }

    /// Constant folding and removal of neutral elements. Never changes the value.
    pub fn simplify(&self) -> Expr {
        use Expr::*;
        let zero = Rational::new();
        let one = Rational::from(1);
        match self {
            Num(_) | Sym(_) | Cell(_) => self.clone(),
            Add(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x + y),
                (Num(x), e) | (e, Num(x)) if x == zero => e,
                (x, y) => Expr::add(x, y),
            },
            Sub(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x - y),
                (e, Num(y)) if y == zero => e,
                (x, y) => Expr::sub(x, y),
            },
            Mul(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) => Num(x * y),
                (Num(x), e) | (e, Num(x)) if x == one => e,
                (x, y) => Expr::mul(x, y),
            },
            Div(a, b) => match (a.simplify(), b.simplify()) {
                (Num(x), Num(y)) if y != zero => Num(x / y),
                (e, Num(y)) if y == one => e,
                (x, y) => Expr::div(x, y),
            },
            Neg(a) => match a.simplify() {
                Num(x) => Num(-x),
                Neg(inner) => *inner,
                e => Neg(Box::new(e)),
            },
            Pow(a, e) => match (a.simplify(), e.simplify()) {
                (_, Num(k)) if k == zero => Num(one),
                (x, Num(k)) if k == one => x,
                (Num(x), Num(k)) => match as_i64(&k).and_then(|k| x.powi(k)) {
                    Some(v) => Num(v),
                    None => Expr::pow(Num(x), Num(k)),
                },
                (x, k) => Expr::pow(x, k),
            },
            Sqrt(a) => match a.simplify() {
                Num(x) => match x.sqrt() {
                    Some(v) => Num(v),
                    None => Sqrt(Box::new(Num(x))),
                },
                e => Sqrt(Box::new(e)),
            },
        }
    }

    /// Replaces symbols by the given expressions.
    pub fn substitute(&self, subs: &BTreeMap<String, Expr>) -> Expr {
        use Expr::*;
        let rec = |e: &Expr| Box::new(e.substitute(subs));
        match self {
            Sym(s) => subs.get(s).cloned().unwrap_or_else(|| self.clone()),
            Num(_) | Cell(_) => self.clone(),
            Add(a, b) => Add(rec(a), rec(b)),
            Sub(a, b) => Sub(rec(a), rec(b)),
            Mul(a, b) => Mul(rec(a), rec(b)),
            Div(a, b) => Div(rec(a), rec(b)),
            Pow(a, b) => Pow(rec(a), rec(b)),
            Neg(a) => Neg(rec(a)),
            Sqrt(a) => Sqrt(rec(a)),
        }
    }
}

/// A parsed expression together with its stencil metadata.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expression {
    root: Expr,
    source: String,
    convention: CellConvention,
}

impl Expression {
    /// Parses text whose cell references are target-relative.
    pub fn parse(text: &str) -> Result<Expression, ParseError> {
        Expression::parse_with(text, CellConvention::Target)
    }

    pub fn parse_with(text: &str, convention: CellConvention) -> Result<Expression, ParseError> {
        let mut root = parse::parse(text)?;
        if convention == CellConvention::Base {
            root = rebase(&root);
        }
        Ok(Expression {
            root,
            source: text.to_string(),
            convention,
        })
    }

    pub fn from_expr(root: Expr) -> Expression {
        let source = root.to_string();
        Expression {
            root,
            source,
            convention: CellConvention::Target,
        }
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn convention(&self) -> CellConvention {
        self.convention
    }

    /// Target-relative stencil in first-appearance order.
    pub fn stencil(&self) -> Vec<Offset> {
        self.root.cells()
    }

    /// Stencil in the convention the text was written in.
    pub fn raw_stencil(&self) -> Vec<Offset> {
        match self.convention {
            CellConvention::Target => self.stencil(),
            CellConvention::Base => self.stencil().into_iter().map(Offset::to_base).collect(),
        }
    }

    pub fn free_symbols(&self) -> BTreeSet<String> {
        self.root.free_symbols()
    }

    pub fn evaluate(&self, b: &Binding) -> Result<Rational, EvalError> {
        self.root.evaluate(b)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

fn rebase(e: &Expr) -> Expr {
    use Expr::*;
    let rec = |x: &Expr| Box::new(rebase(x));
    match e {
        Cell(o) => Cell(o.from_base()),
        Num(_) | Sym(_) => e.clone(),
        Add(a, b) => Add(rec(a), rec(b)),
        Sub(a, b) => Sub(rec(a), rec(b)),
        Mul(a, b) => Mul(rec(a), rec(b)),
        Div(a, b) => Div(rec(a), rec(b)),
        Pow(a, b) => Pow(rec(a), rec(b)),
        Neg(a) => Neg(rec(a)),
        Sqrt(a) => Sqrt(rec(a)),
    }
}

/// Parses and evaluates in one step.
pub fn eval_str(text: &str, b: &Binding) -> Result<Rational, DslError> {
    Ok(Expression::parse(text)?.evaluate(b)?)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DslError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{int, rat};

    fn b(pairs: &[(&str, Rational)]) -> Binding {
        pairs.iter().fold(Binding::new(), |acc, (k, v)| acc.with(k, v.clone()))
    }

    #[test]
    fn burgers_rule_stencil() {
        let e = Expression::parse("z[+2,0]/2 + z[0,0]*(1+2*z[-1,+1])/(2*(1+z[0,0]))").unwrap();
        let mut s = e.stencil();
        s.sort();
        assert_eq!(s, vec![Offset::new(-1, 1), Offset::new(0, 0), Offset::new(2, 0)]);
    }

    #[test]
    fn base_convention_is_shifted() {
        let e = Expression::parse_with("z[2,0]/2 + z[-1,1]", CellConvention::Base).unwrap();
        assert_eq!(e.stencil(), vec![Offset::new(1, -1), Offset::new(-2, 0)]);
        assert_eq!(e.raw_stencil(), vec![Offset::new(2, 0), Offset::new(-1, 1)]);
    }

    #[test]
    fn polynomial_closed_form() {
        let e = Expression::parse("(eps*N)^l + 1").unwrap();
        let syms: Vec<_> = e.free_symbols().into_iter().collect();
        assert_eq!(syms, vec!["N", "eps", "l"]);
        let v = e.evaluate(&b(&[("eps", rat(1, 2)), ("N", int(2)), ("l", int(1000))])).unwrap();
        assert_eq!(v, int(2));
        let v = e.evaluate(&b(&[("eps", rat(1, 2)), ("N", int(3)), ("l", int(2))])).unwrap();
        assert_eq!(v, rat(13, 4));
    }

    #[test]
    fn evaluation_errors() {
        assert_eq!(eval_str("1/(1-1)", &Binding::new()), Err(DslError::Eval(EvalError::DivisionByZero)));
        assert!(matches!(eval_str("x+1", &Binding::new()), Err(DslError::Eval(EvalError::Unbound(_)))));
        assert!(matches!(eval_str("2^(1/2)", &Binding::new()), Err(DslError::Parse(_))));
        assert!(matches!(
            eval_str("2^k", &Binding::new().with("k", rat(1, 2))),
            Err(DslError::Eval(EvalError::NonIntegerExponent(_)))
        ));
        assert!(matches!(eval_str("sqrt(2)", &Binding::new()), Err(DslError::Eval(EvalError::NonSquare(_)))));
        assert_eq!(eval_str("sqrt(9/4)", &Binding::new()), Ok(rat(3, 2)));
        assert!(matches!(eval_str("z[0,0]", &Binding::new()), Err(DslError::Eval(EvalError::CellNotAllowed(_)))));
    }

    #[test]
    fn negative_and_nested_powers() {
        assert_eq!(eval_str("2^-2", &Binding::new()), Ok(rat(1, 4)));
        assert_eq!(eval_str("-2^2", &Binding::new()), Ok(int(-4)));
        assert_eq!(eval_str("2^3^2", &Binding::new()), Ok(int(512)));
        assert_eq!(eval_str("0^-1", &Binding::new()), Err(DslError::Eval(EvalError::DivisionByZero)));
    }

    #[test]
    fn simplify_preserves_value() {
        let e = Expression::parse("(1*x + 0) * (2/4) + 3^2 - 0").unwrap();
        let s = e.root().simplify();
        let bind = b(&[("x", rat(7, 3))]);
        assert_eq!(e.root().evaluate(&bind), s.evaluate(&bind));
        assert_eq!(s.to_string(), "x*(1/2) + 9");
    }

    #[test]
    fn float_evaluation_tracks_rational() {
        let e = Expression::parse("z[0,-1]*(1+2*z[-1,0])/(2*(1+z[0,-1]))").unwrap();
        let bits = 200;
        let mut cells = |o: Offset| -> Result<rug::Float, EvalError> {
            Ok(rug::Float::with_val(bits, if o.dn == 0 { 3 } else { 5 }))
        };
        let v = e.root().eval_field(&Binding::new(), bits, &mut cells).unwrap();
        let exact = Rational::from((3 * 11, 2 * 4));
        assert!((v - rug::Float::with_val(bits, &exact)).abs() < 1e-50);
    }
}
