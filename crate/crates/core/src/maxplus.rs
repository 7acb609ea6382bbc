//! Relative (max,+) functions, their elementary rational counterparts, exact
//! tropical equivalence and the constants `M_f`, `c_f`.

use std::fmt;

use rug::Rational;
use thiserror::Error;

use crate::dsl::{Binding, Expr, Expression, Offset};
use crate::lp::{Lp, LpOutcome, Relation};
use crate::poly::{PolyError, RatFn};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaxPlusError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("multiplier {0} is not positive")]
    NonPositive(String),
    #[error("presentation has an empty {0} part")]
    Empty(&'static str),
    #[error("expression is not a rational function: {0}")]
    Expression(#[from] PolyError),
    #[error("parse error: {0}")]
    Parse(String),
}

/// `constant + gradient·x`, carrying the coefficient `multiplier` of the
/// monomial it came from.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AffineTerm {
    pub constant: Rational,
    pub gradient: Vec<i64>,
    pub multiplier: Rational,
}

impl AffineTerm {
    pub fn new(constant: Rational, gradient: Vec<i64>) -> Self {
        AffineTerm {
            constant,
            gradient,
            multiplier: Rational::from(1),
        }
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut v = self.constant.clone();
        for (g, xi) in self.gradient.iter().zip(x) {
            v += Rational::from(xi * *g);
        }
        v
    }

    /// Same affine function (multipliers ignored).
    pub fn same_function(&self, o: &AffineTerm) -> bool {
        self.constant == o.constant && self.gradient == o.gradient
    }

    fn plus(&self, o: &AffineTerm) -> AffineTerm {
        AffineTerm {
            constant: Rational::from(&self.constant + &o.constant),
            gradient: self.gradient.iter().zip(&o.gradient).map(|(a, b)| a + b).collect(),
            multiplier: Rational::from(&self.multiplier * &o.multiplier),
        }
    }
}

impl fmt::Display for AffineTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.constant != 0 {
            parts.push(self.constant.to_string());
        }
        for (i, g) in self.gradient.iter().enumerate() {
            match *g {
                0 => {}
                1 => parts.push(format!("x{i}")),
                -1 => parts.push(format!("-x{i}")),
                g => parts.push(format!("{g}x{i}")),
            }
        }
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(" + ").replace("+ -", "- "))
        }
    }
}

fn l1(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

fn envelope(terms: &[AffineTerm], x: &[Rational]) -> Rational {
    terms
        .iter()
        .map(|t| t.eval(x))
        .max()
        .expect("nonempty presentation")
}

/// `φ = max(positive) − max(negative)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MaxPlusPresentation {
    pub positive: Vec<AffineTerm>,
    pub negative: Vec<AffineTerm>,
    pub dim: usize,
}

impl MaxPlusPresentation {
    pub fn new(positive: Vec<AffineTerm>, negative: Vec<AffineTerm>, dim: usize) -> Result<Self, MaxPlusError> {
        check_terms(&positive, dim, "positive")?;
        check_terms(&negative, dim, "negative")?;
        Ok(MaxPlusPresentation {
            positive,
            negative,
            dim,
        })
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        envelope(&self.positive, x) - envelope(&self.negative, x)
    }

    /// The elementary rational map with all multipliers 1.
    pub fn detropicalize(&self) -> ElementaryRational {
        let unit = |ts: &[AffineTerm]| {
            ts.iter()
                .map(|t| AffineTerm {
                    multiplier: Rational::from(1),
                    ..t.clone()
                })
                .collect()
        };
        ElementaryRational {
            numerator: unit(&self.positive),
            denominator: unit(&self.negative),
            dim: self.dim,
        }
    }
}

impl fmt::Display for MaxPlusPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |ts: &[AffineTerm]| ts.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
        write!(f, "max({}) - max({})", join(&self.positive), join(&self.negative))
    }
}

fn check_terms(ts: &[AffineTerm], dim: usize, part: &'static str) -> Result<(), MaxPlusError> {
    if ts.is_empty() {
        return Err(MaxPlusError::Empty(part));
    }
    for t in ts {
        if t.dim() != dim {
            return Err(MaxPlusError::Dimension {
                expected: dim,
                found: t.dim(),
            });
        }
    }
    Ok(())
}

/// `Σ r_k t^{α_k} z^{a_k} / Σ r'_k t^{β_k} z^{b_k}` with positive coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementaryRational {
    pub numerator: Vec<AffineTerm>,
    pub denominator: Vec<AffineTerm>,
    pub dim: usize,
}

impl ElementaryRational {
    pub fn new(numerator: Vec<AffineTerm>, denominator: Vec<AffineTerm>, dim: usize) -> Result<Self, MaxPlusError> {
        check_terms(&numerator, dim, "numerator")?;
        check_terms(&denominator, dim, "denominator")?;
        for t in numerator.iter().chain(&denominator) {
            if t.multiplier <= 0 {
                return Err(MaxPlusError::NonPositive(t.multiplier.to_string()));
            }
        }
        Ok(ElementaryRational {
            numerator,
            denominator,
            dim,
        })
    }

    /// Builds the map from an expression over the named symbols (in order);
    /// the symbol `t` is the tropical parameter and contributes the constants.
    pub fn from_symbols(text: &str, vars: &[&str]) -> Result<Self, MaxPlusError> {
        let e = Expression::parse(text).map_err(|e| MaxPlusError::Parse(e.to_string()))?;
        let f = RatFn::from_expr(e.root(), &Binding::new(), &mut |leaf| match leaf {
            Expr::Sym(s) if s == "t" => Ok(usize::MAX),
            Expr::Sym(s) => vars
                .iter()
                .position(|v| v == s)
                .ok_or_else(|| PolyError::UnknownSymbol(s.clone())),
            Expr::Cell(o) => Err(PolyError::UnexpectedCell(*o)),
            _ => unreachable!("leaf"),
        })?;
        ElementaryRational::from_ratfn(&f, vars.len(), |v| if *v == usize::MAX { None } else { Some(*v) })
    }

    /// Builds the map of a rule expression; variables follow `stencil` order.
    pub fn from_rule(rule: &Expression, stencil: &[Offset], b: &Binding) -> Result<Self, MaxPlusError> {
        let f = RatFn::from_expr(rule.root(), b, &mut |leaf| match leaf {
            Expr::Cell(o) => Ok(*o),
            Expr::Sym(s) => Err(PolyError::UnknownSymbol(s.clone())),
            _ => unreachable!("leaf"),
        })?;
        ElementaryRational::from_ratfn(&f, stencil.len(), |o| stencil.iter().position(|s| s == o))
    }

    /// `index` maps a polynomial variable to its coordinate, or `None` for the
    /// tropical parameter.
    pub fn from_ratfn<V: Ord + Clone>(
        f: &RatFn<V>,
        dim: usize,
        index: impl Fn(&V) -> Option<usize>,
    ) -> Result<Self, MaxPlusError> {
        let terms = |p: &crate::poly::Poly<V>| -> Vec<AffineTerm> {
            p.terms()
                .map(|(m, c)| {
                    let mut g = vec![0i64; dim];
                    let mut alpha = 0i64;
                    for (v, e) in m.factors() {
                        match index(v) {
                            Some(i) => g[i] += e,
                            None => alpha += e,
                        }
                    }
                    AffineTerm {
                        constant: Rational::from(alpha),
                        gradient: g,
                        multiplier: c.clone(),
                    }
                })
                .collect()
        };
        ElementaryRational::new(terms(&f.num), terms(&f.den), dim)
    }

    pub fn tropical_shadow(&self) -> MaxPlusPresentation {
        MaxPlusPresentation {
            positive: self.numerator.clone(),
            negative: self.denominator.clone(),
            dim: self.dim,
        }
    }

    /// Product of two maps as formal term products.
    pub fn product(&self, o: &ElementaryRational) -> Result<ElementaryRational, MaxPlusError> {
        if self.dim != o.dim {
            return Err(MaxPlusError::Dimension {
                expected: self.dim,
                found: o.dim,
            });
        }
        Ok(ElementaryRational {
            numerator: pairwise(&self.numerator, &o.numerator),
            denominator: pairwise(&self.denominator, &o.denominator),
            dim: self.dim,
        })
    }
}

fn pairwise(a: &[AffineTerm], b: &[AffineTerm]) -> Vec<AffineTerm> {
    a.iter().flat_map(|s| b.iter().map(move |t| s.plus(t))).collect()
}

/// Whether `t ≤ max(p)` everywhere, via feasibility of
/// `λ ≥ 0, Σλ = 1, Σλ_j b_j = a, Σλ_j β_j ≥ α`.
pub fn term_dominated(t: &AffineTerm, p: &[AffineTerm]) -> Result<bool, MaxPlusError> {
    for s in p {
        if s.dim() != t.dim() {
            return Err(MaxPlusError::Dimension {
                expected: t.dim(),
                found: s.dim(),
            });
        }
    }
    if p.is_empty() {
        return Ok(false);
    }
    if p.iter().any(|s| s.gradient == t.gradient && s.constant >= t.constant) {
        return Ok(true);
    }
    let k = p.len();
    let mut lp = Lp::new(k);
    lp.constrain(vec![Rational::from(1); k], Relation::Eq, Rational::from(1));
    for d in 0..t.dim() {
        let row = p.iter().map(|s| Rational::from(s.gradient[d])).collect();
        lp.constrain(row, Relation::Eq, Rational::from(t.gradient[d]));
    }
    let row = p.iter().map(|s| s.constant.clone()).collect();
    lp.constrain(row, Relation::Ge, t.constant.clone());
    Ok(!matches!(lp.solve(), LpOutcome::Infeasible))
}

/// A point where `t` strictly exceeds `max(p)`, when one exists.
pub fn domination_counterexample(t: &AffineTerm, p: &[AffineTerm]) -> Option<Vec<Rational>> {
    let n = t.dim();
    // variables x_0..x_{n-1} (free), δ; maximize δ with t - s_j ≥ δ, δ ≤ 1
    let mut lp = Lp::new(n + 1);
    for i in 0..n {
        lp.free[i] = true;
    }
    lp.free[n] = true;
    lp.objective[n] = Rational::from(1);
    for s in p {
        let mut row: Vec<Rational> = t.gradient.iter().zip(&s.gradient).map(|(a, b)| Rational::from(a - b)).collect();
        row.push(Rational::from(-1));
        lp.constrain(row, Relation::Ge, Rational::from(&s.constant - &t.constant));
    }
    let mut cap = vec![Rational::new(); n + 1];
    cap[n] = Rational::from(1);
    lp.constrain(cap, Relation::Le, Rational::from(1));
    match lp.solve() {
        LpOutcome::Optimal { x, value } if value > 0 => Some(x[..n].to_vec()),
        _ => None,
    }
}

/// Equality of upper envelopes by mutual domination.
pub fn envelopes_equal(a: &[AffineTerm], b: &[AffineTerm]) -> Result<bool, MaxPlusError> {
    for t in a {
        if !term_dominated(t, b)? {
            return Ok(false);
        }
    }
    for t in b {
        if !term_dominated(t, a)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Tropical equivalence: `A − B = C − D` as maps iff `A + D = B + C`.
pub fn equivalent(f: &ElementaryRational, g: &ElementaryRational) -> Result<bool, MaxPlusError> {
    if f.dim != g.dim {
        return Err(MaxPlusError::Dimension {
            expected: f.dim,
            found: g.dim,
        });
    }
    let lhs = pairwise(&f.numerator, &g.denominator);
    let rhs = pairwise(&f.denominator, &g.numerator);
    envelopes_equal(&lhs, &rhs)
}

/// Segment along which the divided difference of `φ` equals `c_f`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LipschitzWitness {
    pub numerator_term: usize,
    pub denominator_term: usize,
    pub base: Vec<Rational>,
    pub direction: Vec<i64>,
    pub step: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TropicalConstants {
    pub m: u64,
    pub c: Rational,
    /// Absent when `c` comes from the floor at 1.
    pub witness: Option<LipschitzWitness>,
}

/// Largest margin by which term `i` of `a` and term `j` of `b` are the unique
/// maxima of their parts, capped at 1, with the point attaining it.
fn activity_margin(a: &[AffineTerm], i: usize, b: &[AffineTerm], j: usize, n: usize) -> (Rational, Vec<Rational>) {
    let mut lp = Lp::new(n + 1);
    for f in lp.free.iter_mut() {
        *f = true;
    }
    lp.objective[n] = Rational::from(1);
    for (part, sel) in [(a, i), (b, j)] {
        let top = &part[sel];
        for s in part {
            if s.same_function(top) {
                continue;
            }
            let mut row: Vec<Rational> = top.gradient.iter().zip(&s.gradient).map(|(x, y)| Rational::from(x - y)).collect();
            row.push(Rational::from(-1));
            lp.constrain(row, Relation::Ge, Rational::from(&s.constant - &top.constant));
        }
    }
    let mut cap = vec![Rational::new(); n + 1];
    cap[n] = Rational::from(1);
    lp.constrain(cap, Relation::Le, Rational::from(1));
    match lp.solve() {
        LpOutcome::Optimal { x, value } => (value, x[..n].to_vec()),
        // the objective is capped and the system is always feasible for some δ
        _ => unreachable!("margin LP is feasible and bounded"),
    }
}

/// `M_f = m·l` and the exact sup-norm Lipschitz constant of the shadow,
/// taken over numerator/denominator pairs active on a full-dimensional region.
pub fn tropical_constants(f: &ElementaryRational) -> TropicalConstants {
    let m = (f.numerator.len() * f.denominator.len()) as u64;
    let n = f.dim;
    let mut best: Option<(i64, LipschitzWitness)> = None;
    for (i, a) in f.numerator.iter().enumerate() {
        for (j, b) in f.denominator.iter().enumerate() {
            let norm = l1(&a.gradient, &b.gradient);
            if norm == 0 || best.as_ref().is_some_and(|(c, _)| *c >= norm) {
                continue;
            }
            let (delta, x0) = activity_margin(&f.numerator, i, &f.denominator, j, n);
            if delta <= 0 {
                continue;
            }
            let spread = f
                .numerator
                .iter()
                .map(|s| l1(&a.gradient, &s.gradient))
                .chain(f.denominator.iter().map(|s| l1(&b.gradient, &s.gradient)))
                .max()
                .unwrap_or(0);
            let step = delta / Rational::from(2 * spread + 1);
            let direction = a.gradient.iter().zip(&b.gradient).map(|(x, y)| (x - y).signum()).collect();
            best = Some((
                norm,
                LipschitzWitness {
                    numerator_term: i,
                    denominator_term: j,
                    base: x0,
                    direction,
                    step,
                },
            ));
        }
    }
    match best {
        Some((c, w)) if c > 1 => TropicalConstants {
            m,
            c: Rational::from(c),
            witness: Some(w),
        },
        Some((_, w)) => TropicalConstants {
            m,
            c: Rational::from(1),
            witness: Some(w),
        },
        None => TropicalConstants {
            m,
            c: Rational::from(1),
            witness: None,
        },
    }
}

impl LipschitzWitness {
    /// `(φ(base + step·direction) − φ(base)) / step`.
    pub fn divided_difference(&self, phi: &MaxPlusPresentation) -> Rational {
        let moved: Vec<Rational> = self
            .base
            .iter()
            .zip(&self.direction)
            .map(|(x, d)| x + Rational::from(&self.step * *d))
            .collect();
        (phi.eval(&moved) - phi.eval(&self.base)) / &self.step
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::CellConvention;
    use crate::numeric::{int, rat};

    fn t(c: i64, g: &[i64]) -> AffineTerm {
        AffineTerm::new(int(c), g.to_vec())
    }

    #[test]
    fn domination_examples() {
        assert!(term_dominated(&t(0, &[1]), &[t(0, &[0]), t(0, &[2])]).unwrap());
        assert!(!term_dominated(&t(0, &[2]), &[t(0, &[0]), t(0, &[1])]).unwrap());
        assert!(term_dominated(&t(0, &[0]), &[t(0, &[0])]).unwrap());
        assert!(term_dominated(&t(1, &[1]), &[t(0, &[0]), t(0, &[1])]).is_ok_and(|d| !d));
        assert!(term_dominated(&t(0, &[1, 0]), &[t(0, &[1])]).is_err());
        let w = domination_counterexample(&t(0, &[2]), &[t(0, &[0]), t(0, &[1])]).unwrap();
        assert!(t(0, &[2]).eval(&w) > envelope(&[t(0, &[0]), t(0, &[1])], &w));
    }

    #[test]
    fn shadow_of_one_variable_maps() {
        let f = ElementaryRational::from_symbols("z^2 + 1", &["z"]).unwrap();
        let s = f.tropical_shadow();
        let mut grads: Vec<_> = s.positive.iter().map(|t| t.gradient[0]).collect();
        grads.sort();
        assert_eq!(grads, vec![0, 2]);
        assert_eq!(s.negative, vec![t(0, &[0])]);
        let one = ElementaryRational::from_symbols("1", &["z"]).unwrap();
        assert_eq!(one.tropical_shadow().positive, vec![t(0, &[0])]);
    }

    #[test]
    fn paper_equivalences() {
        let f = ElementaryRational::from_symbols("z^2+1", &["z"]).unwrap();
        let g = ElementaryRational::from_symbols("z^2+z+1", &["z"]).unwrap();
        let h = ElementaryRational::from_symbols("z+1", &["z"]).unwrap();
        assert!(equivalent(&f, &g).unwrap());
        assert!(!equivalent(&f, &h).unwrap());
    }

    #[test]
    fn tropical_parameter_sets_constants() {
        let f = ElementaryRational::from_symbols("t^2*z + 1", &["z"]).unwrap();
        assert!(f.numerator.iter().any(|a| a.constant == 2 && a.gradient == vec![1]));
    }

    #[test]
    fn burgers_pair() {
        let f = Expression::parse_with("z[2,0]/2 + z[0,0]*(1+2*z[-1,1])/(2*(1+z[0,0]))", CellConvention::Base).unwrap();
        let g = Expression::parse_with("z[2,0]/2 + (z[0,0]+z[0,0]*z[-1,1])/(2*(1+z[0,0]))", CellConvention::Base).unwrap();
        let stencil = f.stencil();
        let ef = ElementaryRational::from_rule(&f, &stencil, &Binding::new()).unwrap();
        let eg = ElementaryRational::from_rule(&g, &stencil, &Binding::new()).unwrap();
        assert_eq!((ef.numerator.len(), ef.denominator.len()), (4, 2));
        assert!(equivalent(&ef, &eg).unwrap());
        let k = tropical_constants(&ef);
        assert_eq!((k.m, k.c.clone()), (8, int(2)));
        let w = k.witness.unwrap();
        assert_eq!(w.divided_difference(&ef.tropical_shadow()), int(2));
    }

    #[test]
    fn constants_of_simple_maps() {
        let shift = ElementaryRational::from_symbols("z", &["z"]).unwrap();
        let k = tropical_constants(&shift);
        assert_eq!((k.m, k.c), (1, int(1)));
        let q = ElementaryRational::from_symbols("z^2+z+1", &["z"]).unwrap();
        let k = tropical_constants(&q);
        assert_eq!((k.m, k.c.clone()), (3, int(2)));
        assert_eq!(k.witness.unwrap().divided_difference(&q.tropical_shadow()), int(2));
        let c = ElementaryRational::from_symbols("1", &["z"]).unwrap();
        assert_eq!(tropical_constants(&c).c, int(1));
    }

    #[test]
    fn non_positive_multiplier_rejected() {
        assert!(matches!(
            ElementaryRational::from_symbols("z - 1", &["z"]),
            Err(MaxPlusError::NonPositive(_))
        ));
        let p = AffineTerm {
            multiplier: rat(-1, 2),
            ..t(0, &[1])
        };
        assert!(ElementaryRational::new(vec![p], vec![t(0, &[0])], 1).is_err());
    }

    #[test]
    fn product_shadow_is_sum() {
        let f = ElementaryRational::from_symbols("z+1", &["z"]).unwrap();
        let g = ElementaryRational::from_symbols("z^2+3", &["z"]).unwrap();
        let fg = f.product(&g).unwrap();
        let x = vec![rat(7, 3)];
        let lhs = fg.tropical_shadow().eval(&x);
        let rhs = f.tropical_shadow().eval(&x) + g.tropical_shadow().eval(&x);
        assert_eq!(lhs, rhs);
    }
}
