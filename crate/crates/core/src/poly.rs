//! Sparse multivariate Laurent polynomials and rational functions with exact
//! rational coefficients.

use std::collections::BTreeMap;
use std::fmt;

use rug::Rational;
use thiserror::Error;

use crate::dsl::{Binding, EvalError, Expr, Offset};
use crate::numeric::Field;

/// Product of variables with nonzero integer exponents, sorted by variable.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial<V: Ord>(Vec<(V, i64)>);

impl<V: Ord + Clone> Monomial<V> {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: V, e: i64) -> Self {
        if e == 0 {
            Monomial::one()
        } else {
            Monomial(vec![(v, e)])
        }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (V, i64)>) -> Self {
        let mut m = Monomial::one();
        for (v, e) in pairs {
            m = m.mul(&Monomial::var(v, e));
        }
        m
    }

    pub fn factors(&self) -> &[(V, i64)] {
        &self.0
    }

    pub fn exponent(&self, v: &V) -> i64 {
        self.0.iter().find(|(w, _)| w == v).map_or(0, |(_, e)| *e)
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> i64 {
        self.0.iter().map(|(_, e)| e).sum()
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out: Vec<(V, i64)> = Vec::with_capacity(self.0.len() + o.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() || j < o.0.len() {
            let take_left = j >= o.0.len() || (i < self.0.len() && self.0[i].0 < o.0[j].0);
            let take_right = i >= self.0.len() || (j < o.0.len() && o.0[j].0 < self.0[i].0);
            if take_left {
                out.push(self.0[i].clone());
                i += 1;
            } else if take_right {
                out.push(o.0[j].clone());
                j += 1;
            } else {
                let e = self.0[i].1 + o.0[j].1;
                if e != 0 {
                    out.push((self.0[i].0.clone(), e));
                }
                i += 1;
                j += 1;
            }
        }
        Monomial(out)
    }

    pub fn powi(&self, k: i64) -> Self {
        if k == 0 {
            return Monomial::one();
        }
        Monomial(self.0.iter().map(|(v, e)| (v.clone(), e * k)).collect())
    }

    /// Removes variable `v`, returning its exponent.
    pub fn without(&self, v: &V) -> (Self, i64) {
        let e = self.exponent(v);
        (Monomial(self.0.iter().filter(|(w, _)| w != v).cloned().collect()), e)
    }

    pub fn has_negative_exponent(&self) -> bool {
        self.0.iter().any(|(_, e)| *e < 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poly<V: Ord> {
    terms: BTreeMap<Monomial<V>, Rational>,
}

impl<V: Ord + Clone> Default for Poly<V> {
    fn default() -> Self {
        Poly::zero()
    }
}

impl<V: Ord + Clone> Poly<V> {
    pub fn zero() -> Self {
        Poly {
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        Poly::term(c, Monomial::one())
    }

    pub fn one() -> Self {
        Poly::constant(Rational::from(1))
    }

    pub fn var(v: V) -> Self {
        Poly::term(Rational::from(1), Monomial::var(v, 1))
    }

    pub fn term(c: Rational, m: Monomial<V>) -> Self {
        let mut p = Poly::zero();
        if c != 0 {
            p.terms.insert(m, c);
        }
        p
    }

    pub fn from_terms(ts: impl IntoIterator<Item = (Monomial<V>, Rational)>) -> Self {
        let mut p = Poly::zero();
        for (m, c) in ts {
            p.add_term(m, c);
        }
        p
    }

    pub fn add_term(&mut self, m: Monomial<V>, c: Rational) {
        if c == 0 {
            return;
        }
        let remove = match self.terms.get_mut(&m) {
            Some(old) => {
                *old += c;
                *old == 0
            }
            None => {
                self.terms.insert(m, c);
                false
            }
        };
        if remove {
            self.terms.retain(|_, c| *c != 0);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial<V>, &Rational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, m: &Monomial<V>) -> Rational {
        self.terms.get(m).cloned().unwrap_or_default()
    }

    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::one())
    }

    /// Constant value if the polynomial has no variables.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::new()),
            1 => self.terms.get(&Monomial::one()).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in &o.terms {
            out.add_term(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&Rational::from(-1))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if *c == 0 {
            return Poly::zero();
        }
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), Rational::from(k * c)))
                .collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial<V>) -> Self {
        Poly {
            terms: self.terms.iter().map(|(n, c)| (n.mul(m), c.clone())).collect(),
        }
    }

    pub fn mul(&self, o: &Self) -> Self {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                out.add_term(m1.mul(m2), Rational::from(c1 * c2));
            }
        }
        out
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Poly::one();
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                out = out.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        out
    }

    pub fn derivative(&self, v: &V) -> Self {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let (rest, e) = m.without(v);
            if e != 0 {
                out.add_term(rest.mul(&Monomial::var(v.clone(), e - 1)), Rational::from(c * e));
            }
        }
        out
    }

    pub fn degree_in(&self, v: &V) -> i64 {
        self.terms.keys().map(|m| m.exponent(v)).max().unwrap_or(0)
    }

    pub fn variables(&self) -> Vec<V> {
        let mut vs: Vec<V> = self
            .terms
            .keys()
            .flat_map(|m| m.0.iter().map(|(v, _)| v.clone()))
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// `Some(λ)` when `o = λ·self` with `λ ≠ 0`.
    pub fn ratio_to(&self, o: &Self) -> Option<Rational> {
        if self.terms.len() != o.terms.len() || self.is_zero() {
            return None;
        }
        let mut lambda: Option<Rational> = None;
        for (m, c) in &self.terms {
            let d = o.terms.get(m)?;
            let r = Rational::from(d / c);
            match &lambda {
                None => lambda = Some(r),
                Some(l) if *l == r => {}
                Some(_) => return None,
            }
        }
        lambda
    }

    pub fn eval<F: Field>(&self, bits: u32, val: &mut dyn FnMut(&V) -> F) -> Option<F> {
        let mut acc = F::lift(&Rational::new(), bits);
        for (m, c) in &self.terms {
            let mut t = F::lift(c, bits);
            for (v, e) in &m.0 {
                t = t.mul(&val(v).powi(*e)?);
            }
            acc = acc.add(&t);
        }
        Some(acc)
    }

    pub fn map_vars<W: Ord + Clone>(&self, f: &mut dyn FnMut(&V) -> W) -> Poly<W> {
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let nm = Monomial::from_pairs(m.0.iter().map(|(v, e)| (f(v), *e)));
            out.add_term(nm, c.clone());
        }
        out
    }

    /// Substitutes a polynomial for each variable; `None` when a substituted
    /// variable carries a negative exponent.
    pub fn substitute<W: Ord + Clone>(&self, f: &mut dyn FnMut(&V) -> Poly<W>) -> Option<Poly<W>> {
        let mut cache: BTreeMap<V, Poly<W>> = BTreeMap::new();
        let mut out = Poly::zero();
        for (m, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for (v, e) in &m.0 {
                if *e < 0 {
                    return None;
                }
                let p = cache.entry(v.clone()).or_insert_with(|| f(v)).clone();
                t = t.mul(&p.pow(*e as u32));
            }
            out = out.add(&t);
        }
        Some(out)
    }

    pub fn all_coefficients_positive(&self) -> bool {
        self.terms.values().all(|c| *c > 0)
    }
}

impl<V: Ord + Clone + fmt::Display> fmt::Display for Poly<V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (m, c)) in self.terms.iter().enumerate() {
            let neg = *c < 0;
            let a = Rational::from(c.abs_ref());
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let mut parts = Vec::new();
            if a != 1 || m.is_one() {
                parts.push(if *a.denom() == 1 { a.to_string() } else { format!("({a})") });
            }
            for (v, e) in &m.0 {
                parts.push(if *e == 1 { v.to_string() } else { format!("{v}^{e}") });
            }
            f.write_str(&parts.join("*"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("division by the zero polynomial")]
    ZeroDenominator,
    #[error("sqrt is not rational-function syntax")]
    Sqrt,
    #[error("symbol `{0}` is neither bound nor a variable")]
    UnknownSymbol(String),
    #[error("cell {0} is not a variable here")]
    UnexpectedCell(Offset),
}

/// Quotient of two polynomials kept in the presentation produced by the
/// arithmetic (no gcd cancellation).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFn<V: Ord> {
    pub num: Poly<V>,
    pub den: Poly<V>,
}

impl<V: Ord + Clone> RatFn<V> {
    pub fn from_poly(p: Poly<V>) -> Self {
        RatFn {
            num: p,
            den: Poly::one(),
        }
    }

    pub fn constant(c: Rational) -> Self {
        RatFn::from_poly(Poly::constant(c))
    }

    /// Sum; shares denominators when they are equal, constant, or proportional.
    pub fn add(&self, o: &Self) -> Self {
        if self.num.is_zero() {
            return o.clone();
        }
        if o.num.is_zero() {
            return self.clone();
        }
        if self.den == o.den {
            return RatFn {
                num: self.num.add(&o.num),
                den: self.den.clone(),
            };
        }
        if let Some(c) = self.den.as_constant() {
            // a/c + p/q = (a q / c + p) / q
            return RatFn {
                num: self.num.mul(&o.den).scale(&Rational::from(c.recip_ref())).add(&o.num),
                den: o.den.clone(),
            };
        }
        if o.den.as_constant().is_some() {
            return o.add(self);
        }
        if let Some(lambda) = self.den.ratio_to(&o.den) {
            // o.den = λ self.den
            return RatFn {
                num: self.num.scale(&lambda).add(&o.num),
                den: o.den.clone(),
            };
        }
        RatFn {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }

    pub fn neg(&self) -> Self {
        RatFn {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn mul(&self, o: &Self) -> Self {
        let (num, den) = (self.num.mul(&o.num), self.den.mul(&o.den));
        fold_constant_den(num, den)
    }

    pub fn div(&self, o: &Self) -> Result<Self, PolyError> {
        if o.num.is_zero() {
            return Err(PolyError::ZeroDenominator);
        }
        Ok(fold_constant_den(self.num.mul(&o.den), self.den.mul(&o.num)))
    }

    pub fn powi(&self, k: i64) -> Result<Self, PolyError> {
        let e = u32::try_from(k.unsigned_abs()).map_err(|_| PolyError::ZeroDenominator)?;
        let p = RatFn {
            num: self.num.pow(e),
            den: self.den.pow(e),
        };
        if k >= 0 {
            Ok(p)
        } else if p.num.is_zero() {
            Err(PolyError::ZeroDenominator)
        } else {
            Ok(RatFn { num: p.den, den: p.num })
        }
    }

    /// Converts an expression; bound symbols become constants, everything else
    /// goes through `leaf`.
    pub fn from_expr(
        e: &Expr,
        b: &Binding,
        leaf: &mut dyn FnMut(&Expr) -> Result<V, PolyError>,
    ) -> Result<Self, PolyError> {
        Ok(match e {
            Expr::Num(r) => RatFn::constant(r.clone()),
            Expr::Sym(s) => match b.get(s) {
                Some(v) => RatFn::constant(v.clone()),
                None => RatFn::from_poly(Poly::var(leaf(e)?)),
            },
            Expr::Cell(_) => RatFn::from_poly(Poly::var(leaf(e)?)),
            Expr::Add(x, y) => RatFn::from_expr(x, b, leaf)?.add(&RatFn::from_expr(y, b, leaf)?),
            Expr::Sub(x, y) => RatFn::from_expr(x, b, leaf)?.sub(&RatFn::from_expr(y, b, leaf)?),
            Expr::Mul(x, y) => RatFn::from_expr(x, b, leaf)?.mul(&RatFn::from_expr(y, b, leaf)?),
            Expr::Div(x, y) => RatFn::from_expr(x, b, leaf)?.div(&RatFn::from_expr(y, b, leaf)?)?,
            Expr::Neg(x) => RatFn::from_expr(x, b, leaf)?.neg(),
            Expr::Pow(x, k) => {
                let k = Expr::integer_exponent(k, b)?;
                RatFn::from_expr(x, b, leaf)?.powi(k)?
            }
            Expr::Sqrt(_) => return Err(PolyError::Sqrt),
        })
    }

    pub fn eval<F: Field>(&self, bits: u32, val: &mut dyn FnMut(&V) -> F) -> Option<F> {
        let n = self.num.eval(bits, val)?;
        let d = self.den.eval(bits, val)?;
        n.div(&d)
    }
}

fn fold_constant_den<V: Ord + Clone>(num: Poly<V>, den: Poly<V>) -> RatFn<V> {
    match den.as_constant() {
        Some(c) if c != 0 && c != 1 && num.as_constant().is_some() => RatFn {
            num: num.scale(&Rational::from(c.recip_ref())),
            den: Poly::one(),
        },
        _ => RatFn { num, den },
    }
}
