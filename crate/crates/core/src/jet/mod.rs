//! Jet polynomials in `ε` and the partial derivatives `u_{ix,js}`, and the
//! mechanized Taylor derivation of PDEs from rational dynamics.

mod derive;

use std::cmp::Ordering;
use std::fmt;

use rug::{Integer, Rational};
use thiserror::Error;

use crate::dsl::{Binding, Expr, Expression, Offset};
use crate::numeric::Field;
use crate::poly::{Monomial, Poly, PolyError, RatFn};

pub use derive::{
    derive_pde, error_constant, expand_cell, ApproximationData, CellExpansion, ClassTuple, DerivedPde,
    ErrorHypotheses, RemainderGroup,
};

/// `u_{ix,js}`: `x` derivatives in `x`, `s` derivatives in `s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetVar {
    pub x: u32,
    pub s: u32,
}

impl JetVar {
    pub const U: JetVar = JetVar { x: 0, s: 0 };

    pub const fn new(x: u32, s: u32) -> Self {
        JetVar { x, s }
    }

    pub const fn order(self) -> u32 {
        self.x + self.s
    }

    fn write_name(self, f: &mut fmt::Formatter<'_>, base: char) -> fmt::Result {
        write!(f, "{base}")?;
        if self.order() == 0 {
            return Ok(());
        }
        f.write_str("_")?;
        for (k, c) in [(self.x, 'x'), (self.s, 's')] {
            match k {
                0 => {}
                1 => write!(f, "{c}")?,
                k => write!(f, "{k}{c}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Display for JetVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_name(f, 'u')
    }
}

/// A factor of a jet monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JetFactor {
    Eps,
    /// Derivative at the base point `(x, s)`.
    At(JetVar),
    /// Derivative at the unknown mean-value point `ξ_{ij}` of the cell with
    /// base offset `(i, j)`.
    AtXi(JetVar, Offset),
}

impl fmt::Display for JetFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            JetFactor::Eps => f.write_str("ε"),
            JetFactor::At(v) => write!(f, "{v}"),
            JetFactor::AtXi(v, o) => write!(f, "{v}(ξ[{},{}])", o.dn, o.dt),
        }
    }
}

/// Canonical polynomial in `ε` and jets with rational coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct JetPolynomial {
    poly: Poly<JetFactor>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum JetError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown jet symbol `{0}`")]
    UnknownSymbol(String),
    #[error("jet expression is not polynomial")]
    NotPolynomial,
    #[error(transparent)]
    Poly(#[from] PolyError),
    #[error("stencil offset {0} is not strictly before the target cell")]
    InvalidStencil(Offset),
    #[error("stencil has {stencil} cells but the map has dimension {map}")]
    DimensionMismatch { stencil: usize, map: usize },
    #[error("the ε-constant term of the denominator vanishes")]
    ZeroDenominatorConstant,
    #[error("numerator is not divisible by ε^{0}")]
    NotScalable(u32),
    #[error("map depends on the tropical parameter t")]
    ParameterDependent,
    #[error("cannot bound remainder monomial {0}")]
    Unbounded(String),
}

fn monomial_key(m: &Monomial<JetFactor>) -> (i64, u32, Vec<(u32, u32, i64)>, Vec<JetFactor>) {
    let eps = m.exponent(&JetFactor::Eps);
    let mut order = 0;
    let mut jets = Vec::new();
    for (f, e) in m.factors() {
        match f {
            JetFactor::At(v) | JetFactor::AtXi(v, _) => {
                order += v.order() * (*e as u32);
                jets.push((v.x, v.s, -*e));
            }
            JetFactor::Eps => {}
        }
    }
    (eps, order, jets, m.factors().iter().map(|(f, _)| *f).collect())
}

impl JetPolynomial {
    pub fn zero() -> Self {
        JetPolynomial::default()
    }

    pub fn from_poly(poly: Poly<JetFactor>) -> Self {
        JetPolynomial { poly }
    }

    pub fn poly(&self) -> &Poly<JetFactor> {
        &self.poly
    }

    pub fn constant(c: Rational) -> Self {
        JetPolynomial::from_poly(Poly::constant(c))
    }

    pub fn jet(v: JetVar) -> Self {
        JetPolynomial::from_poly(Poly::var(JetFactor::At(v)))
    }

    pub fn eps_pow(k: u32) -> Self {
        JetPolynomial::from_poly(Poly::term(Rational::from(1), Monomial::var(JetFactor::Eps, i64::from(k))))
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        JetPolynomial::from_poly(self.poly.add(&o.poly))
    }

    pub fn sub(&self, o: &Self) -> Self {
        JetPolynomial::from_poly(self.poly.sub(&o.poly))
    }

    pub fn mul(&self, o: &Self) -> Self {
        JetPolynomial::from_poly(self.poly.mul(&o.poly))
    }

    pub fn scale(&self, c: &Rational) -> Self {
        JetPolynomial::from_poly(self.poly.scale(c))
    }

    /// Monomials in canonical graded order: ε-degree, total jet order, jet indices.
    pub fn monomials(&self) -> Vec<(Monomial<JetFactor>, Rational)> {
        let mut v: Vec<_> = self.poly.terms().map(|(m, c)| (m.clone(), c.clone())).collect();
        v.sort_by_key(|a| monomial_key(&a.0));
        v
    }

    pub fn len(&self) -> usize {
        self.poly.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poly.is_empty()
    }

    /// Smallest power of `ε` over all monomials (0 for the zero polynomial).
    pub fn eps_valuation(&self) -> i64 {
        self.poly.terms().map(|(m, _)| m.exponent(&JetFactor::Eps)).min().unwrap_or(0)
    }

    /// Divides by `ε^k`; `None` if some monomial has a smaller power.
    pub fn div_eps(&self, k: i64) -> Option<Self> {
        if self.poly.terms().any(|(m, _)| m.exponent(&JetFactor::Eps) < k) {
            return None;
        }
        Some(JetPolynomial::from_poly(
            self.poly.mul_monomial(&Monomial::var(JetFactor::Eps, -k)),
        ))
    }

    /// Highest total order of a single jet factor.
    pub fn max_jet_order(&self) -> u32 {
        self.poly
            .terms()
            .flat_map(|(m, _)| m.factors().iter().map(|(f, _)| f))
            .map(|f| match f {
                JetFactor::At(v) | JetFactor::AtXi(v, _) => v.order(),
                JetFactor::Eps => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn has_xi(&self) -> bool {
        self.poly
            .terms()
            .any(|(m, _)| m.factors().iter().any(|(f, _)| matches!(f, JetFactor::AtXi(..))))
    }

    /// Coefficient of `ε^k · u_v` (a single linear jet factor).
    pub fn coefficient_of(&self, eps: i64, v: JetVar) -> Rational {
        let m = Monomial::from_pairs([(JetFactor::Eps, eps), (JetFactor::At(v), 1)]);
        self.poly.coefficient(&m)
    }

    /// Evaluation with jets at the base point; `None` if ξ factors remain or a
    /// division by zero occurs.
    pub fn eval<F: Field>(&self, eps: &F, jets: &mut dyn FnMut(JetVar) -> F, bits: u32) -> Option<F> {
        if self.has_xi() {
            return None;
        }
        self.poly.eval(bits, &mut |f| match f {
            JetFactor::Eps => eps.clone(),
            JetFactor::At(v) => jets(*v),
            JetFactor::AtXi(..) => unreachable!("checked above"),
        })
    }

    /// Parses text such as `2u_s + eps*u*u_s - u^2` (also `ε`, `·`, implicit
    /// products after numbers, and `v` in place of `u`).
    pub fn parse(text: &str) -> Result<Self, JetError> {
        let prepared = insert_implicit_products(text);
        let e = Expression::parse(&prepared).map_err(|e| JetError::Parse(e.to_string()))?;
        let f = RatFn::from_expr(e.root(), &Binding::new(), &mut |leaf| match leaf {
            Expr::Sym(s) => parse_jet_symbol(s).ok_or_else(|| PolyError::UnknownSymbol(s.clone())),
            Expr::Cell(o) => Err(PolyError::UnexpectedCell(*o)),
            _ => unreachable!("leaf"),
        })
        .map_err(|e| match e {
            PolyError::UnknownSymbol(s) => JetError::UnknownSymbol(s),
            e => JetError::Poly(e),
        })?;
        let Some(d) = f.den.as_constant() else {
            return Err(JetError::NotPolynomial);
        };
        if f.num.terms().any(|(m, _)| m.has_negative_exponent()) {
            return Err(JetError::NotPolynomial);
        }
        Ok(JetPolynomial::from_poly(f.num.scale(&Rational::from(d.recip_ref()))))
    }

    /// Whether `self = λ·o` for some nonzero rational `λ`.
    pub fn equal_mod_scalar(&self, o: &Self) -> bool {
        pde_equal_mod_scalar(self, o)
    }

    /// Renders with base letter `u` or `v`.
    pub fn display_with(&self, base: char) -> String {
        let mut out = String::new();
        let monos = self.monomials();
        if monos.is_empty() {
            return "0".into();
        }
        for (i, (m, c)) in monos.iter().enumerate() {
            let neg = *c < 0;
            let a = Rational::from(c.abs_ref());
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let factors = render_factors(m, base);
            if factors.is_empty() {
                out.push_str(&a.to_string());
            } else if a == 1 {
                out.push_str(&factors);
            } else if *a.denom() == 1 {
                out.push_str(&format!("{a}{factors}"));
            } else {
                out.push_str(&format!("{a}·{factors}"));
            }
        }
        out
    }

    /// Content-factored rendering, e.g. `2(1 + ε·u)`.
    pub fn display_factored(&self, base: char) -> String {
        let content = self.content();
        if content == 1 || self.len() < 2 {
            return self.display_with(base);
        }
        let inner = self.scale(&Rational::from(content.recip_ref()));
        format!("{content}({})", inner.display_with(base))
    }

    /// Positive gcd of the coefficients (as rationals, sign of the first monomial).
    fn content(&self) -> Rational {
        let monos = self.monomials();
        if monos.is_empty() {
            return Rational::from(1);
        }
        let mut num = Integer::new();
        let mut den = Integer::from(1);
        for (_, c) in &monos {
            num = num.gcd(c.numer());
            den = den.lcm(c.denom());
        }
        let g = Rational::from((num, den));
        if monos[0].1 < 0 {
            -g
        } else {
            g
        }
    }
}

fn render_factors(m: &Monomial<JetFactor>, base: char) -> String {
    struct Name(JetVar, char);
    impl fmt::Display for Name {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            self.0.write_name(f, self.1)
        }
    }
    let mut parts = Vec::new();
    let mut ordered: Vec<_> = m.factors().to_vec();
    ordered.sort_by(|a, b| match (a.0, b.0) {
        (JetFactor::Eps, JetFactor::Eps) => Ordering::Equal,
        (JetFactor::Eps, _) => Ordering::Less,
        (_, JetFactor::Eps) => Ordering::Greater,
        (x, y) => x.cmp(&y),
    });
    for (f, e) in ordered {
        let name = match f {
            JetFactor::Eps => "ε".to_string(),
            JetFactor::At(v) => Name(v, base).to_string(),
            JetFactor::AtXi(v, o) => format!("{}(ξ[{},{}])", Name(v, base), o.dn, o.dt),
        };
        parts.push(if e == 1 { name } else { format!("{name}^{e}") });
    }
    parts.join("·")
}

impl fmt::Display for JetPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.display_with('u'))
    }
}

fn insert_implicit_products(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 8);
    let mut prev: Option<char> = None;
    let mut in_ident = false;
    for c in text.chars() {
        let starts_operand = c.is_alphabetic() || c == '(' || c == 'ε';
        if let Some(p) = prev {
            let ends_number = p.is_ascii_digit() && !in_ident;
            if starts_operand && (ends_number || p == ')') {
                out.push('*');
            }
        }
        if c.is_alphabetic() || c == '_' {
            in_ident = true;
        } else if !c.is_ascii_digit() {
            in_ident = false;
        }
        if !c.is_whitespace() {
            prev = Some(c);
        } else {
            in_ident = false;
        }
        out.push(c);
    }
    out
}

fn parse_jet_symbol(s: &str) -> Option<JetFactor> {
    if s == "eps" {
        return Some(JetFactor::Eps);
    }
    let mut chars = s.chars();
    let base = chars.next()?;
    if base != 'u' && base != 'v' {
        return None;
    }
    let rest: String = chars.collect();
    if rest.is_empty() {
        return Some(JetFactor::At(JetVar::U));
    }
    let body = rest.strip_prefix('_')?;
    let (mut x, mut s_ord) = (0u32, 0u32);
    let mut digits = String::new();
    let mut seen_s = false;
    for c in body.chars() {
        match c {
            '0'..='9' => digits.push(c),
            'x' | 's' => {
                let k = if digits.is_empty() { 1 } else { digits.parse().ok()? };
                digits.clear();
                if c == 'x' {
                    if seen_s || x > 0 {
                        return None;
                    }
                    x = k;
                } else {
                    if seen_s {
                        return None;
                    }
                    seen_s = true;
                    s_ord = k;
                }
            }
            _ => return None,
        }
    }
    if !digits.is_empty() || x + s_ord == 0 {
        return None;
    }
    Some(JetFactor::At(JetVar::new(x, s_ord)))
}

/// `a = λ·b` for some nonzero rational `λ` (both zero counts as equal).
pub fn pde_equal_mod_scalar(a: &JetPolynomial, b: &JetPolynomial) -> bool {
    match (a.is_zero(), b.is_zero()) {
        (true, true) => true,
        (false, false) => a.poly.ratio_to(&b.poly).is_some(),
        _ => false,
    }
}
