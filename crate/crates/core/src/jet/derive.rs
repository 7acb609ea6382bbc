use std::collections::BTreeMap;
use std::fmt;

use rug::ops::Pow;
use rug::{Integer, Rational};

use super::{JetError, JetFactor, JetPolynomial, JetVar};
use crate::dsl::Offset;
use crate::maxplus::{tropical_constants, ElementaryRational};
use crate::numeric::rational_powi;
use crate::poly::{Monomial, Poly};

/// Stencil (target-relative), scaling `(m, p, q)` and expansion order `α`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproximationData {
    pub stencil: Vec<Offset>,
    pub m: u32,
    pub p: u32,
    pub q: u32,
    pub alpha: u32,
}

impl ApproximationData {
    pub fn new(stencil: Vec<Offset>, (m, p, q): (u32, u32, u32), alpha: u32) -> Result<Self, JetError> {
        for o in &stencil {
            if !(o.dt <= -1 || (o.dt == 0 && o.dn <= -1)) {
                return Err(JetError::InvalidStencil(*o));
            }
        }
        Ok(ApproximationData {
            stencil,
            m,
            p,
            q,
            alpha,
        })
    }

    pub fn dim(&self) -> usize {
        self.stencil.len()
    }

    /// `(l, k, d)`: left reach, right reach and depth in the paper's indexing.
    pub fn reaches(&self) -> (u64, i64, u64) {
        let base: Vec<Offset> = self.stencil.iter().map(|o| o.to_base()).collect();
        let l = base.iter().map(|o| -o.dn).max().unwrap_or(0).max(0) as u64;
        let k = base.iter().filter(|o| o.dt <= 0).map(|o| o.dn).max().unwrap_or(0).max(0);
        let d = base.iter().map(|o| -o.dt).max().unwrap_or(0).max(0) as u64;
        (l, k, d)
    }
}

/// Truncated Taylor expansion of one cell plus its tagged remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellExpansion {
    pub truncated: JetPolynomial,
    pub remainder: JetPolynomial,
}

impl CellExpansion {
    pub fn full(&self) -> JetPolynomial {
        self.truncated.add(&self.remainder)
    }
}

fn factorial(n: u32) -> Integer {
    Integer::from(Integer::factorial(n))
}

/// Expansion of `ε^m u(x + iε^p, s + jε^q)` for the cell `z_{N+i}^{t+j}`;
/// `base` is `(i, j)` relative to `(N, t)`. The order-`α+1` remainder is
/// evaluated at a point `ξ_{ij}` private to this cell.
pub fn expand_cell(base: Offset, data: &ApproximationData) -> CellExpansion {
    let (i, j) = (Integer::from(base.dn), Integer::from(base.dt));
    let mut truncated = Poly::zero();
    let mut remainder = Poly::zero();
    for total in 0..=data.alpha + 1 {
        for a in 0..=total {
            let b = total - a;
            let num = Integer::from((&i).pow(a)) * Integer::from((&j).pow(b));
            if num == 0 {
                continue;
            }
            let c = Rational::from((num, factorial(a) * factorial(b)));
            let eps = i64::from(data.m + data.p * a + data.q * b);
            let v = JetVar::new(a, b);
            if total <= data.alpha {
                truncated.add_term(Monomial::from_pairs([(JetFactor::Eps, eps), (JetFactor::At(v), 1)]), c);
            } else {
                remainder.add_term(Monomial::from_pairs([(JetFactor::Eps, eps), (JetFactor::AtXi(v, base), 1)]), c);
            }
        }
    }
    CellExpansion {
        truncated: JetPolynomial::from_poly(truncated),
        remainder: JetPolynomial::from_poly(remainder),
    }
}

/// `(M, c, L, k, D)` of an approximation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTuple {
    pub m: u64,
    pub c: Rational,
    pub l: u64,
    pub k: i64,
    pub d: u32,
}

impl fmt::Display for ClassTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {}, {}, {})", self.m, self.c, self.l, self.k, self.d)
    }
}

/// Remainder terms sharing the same set of mean-value points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RemainderGroup {
    pub points: Vec<Offset>,
    pub terms: JetPolynomial,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DerivedPde {
    /// `P`: the ξ-free part of the numerator divided by `ε^m`.
    pub leading: JetPolynomial,
    /// `leading / ε^{reduction}` with the common power of `ε` removed.
    pub reduced: JetPolynomial,
    pub reduction: i64,
    /// `h` with every cell replaced by its truncated expansion.
    pub denominator: JetPolynomial,
    /// The full ξ-carrying part of the numerator (not divided by `ε^m`).
    pub remainder: Vec<RemainderGroup>,
    pub m: u32,
    pub alpha: u32,
    pub class: ClassTuple,
    pub consistent: bool,
    /// Constant under the default hypotheses (`ε ≤ 1`, positive jets), or why it failed.
    pub error_constant: Result<Rational, JetError>,
}

impl DerivedPde {
    /// `ε^{m+r}/h · (reduced)` in the paper's display style.
    pub fn display(&self, base: char) -> String {
        let e = i64::from(self.m) + self.reduction;
        let eps = match e {
            0 => String::new(),
            1 => "ε".into(),
            e => format!("ε^{e}"),
        };
        format!(
            "{eps}/({}) · ({})",
            self.denominator.display_factored(base),
            self.reduced.display_with(base)
        )
    }

    /// Every remainder monomial with its ξ-point.
    pub fn remainder_monomials(&self) -> Vec<(Rational, Monomial<JetFactor>)> {
        self.remainder
            .iter()
            .flat_map(|g| g.terms.monomials().into_iter().map(|(m, c)| (c, m)))
            .collect()
    }
}

/// Hypotheses for bounding the remainder.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorHypotheses {
    pub eps_max: Rational,
    /// `u ≥ 0`, so every monomial of a positive denominator is at most the whole.
    pub jet_positivity: bool,
}

impl Default for ErrorHypotheses {
    fn default() -> Self {
        ErrorHypotheses {
            eps_max: Rational::from(1),
            jet_positivity: true,
        }
    }
}

/// Derives `P`, `h`, the remainder and the class tuple for the dynamics
/// `z_target = f(stencil cells)`.
pub fn derive_pde(f: &ElementaryRational, data: &ApproximationData) -> Result<DerivedPde, JetError> {
    if f.dim != data.dim() {
        return Err(JetError::DimensionMismatch {
            stencil: data.dim(),
            map: f.dim,
        });
    }
    if f.numerator.iter().chain(&f.denominator).any(|t| t.constant != 0) {
        return Err(JetError::ParameterDependent);
    }
    let expansions: Vec<CellExpansion> = data.stencil.iter().map(|o| expand_cell(o.to_base(), data)).collect();
    let target = expand_cell(Offset::new(1, 1), data);

    let substitute = |terms: &[crate::maxplus::AffineTerm], truncated_only: bool| -> Result<JetPolynomial, JetError> {
        let mut acc = JetPolynomial::zero();
        for t in terms {
            let mut p = JetPolynomial::constant(t.multiplier.clone());
            for (k, &e) in t.gradient.iter().enumerate() {
                if e < 0 {
                    // Laurent terms have no polynomial jet expansion
                    return Err(JetError::NotPolynomial);
                }
                let cell = if truncated_only {
                    expansions[k].truncated.clone()
                } else {
                    expansions[k].full()
                };
                for _ in 0..e {
                    p = p.mul(&cell);
                }
            }
            acc = acc.add(&p);
        }
        Ok(acc)
    };

    let k_full = substitute(&f.numerator, false)?;
    let h_full = substitute(&f.denominator, false)?;
    let h_trunc = substitute(&f.denominator, true)?;
    if h_trunc.poly().constant_term() == 0 {
        return Err(JetError::ZeroDenominatorConstant);
    }
    let numerator = target.full().mul(&h_full).sub(&k_full);

    let mut clean = Poly::zero();
    let mut groups: BTreeMap<Vec<Offset>, Poly<JetFactor>> = BTreeMap::new();
    for (mono, c) in numerator.poly().terms() {
        let mut points: Vec<Offset> = mono
            .factors()
            .iter()
            .filter_map(|(f, _)| match f {
                JetFactor::AtXi(_, o) => Some(*o),
                _ => None,
            })
            .collect();
        points.sort();
        points.dedup();
        if points.is_empty() {
            clean.add_term(mono.clone(), c.clone());
        } else {
            groups.entry(points).or_default().add_term(mono.clone(), c.clone());
        }
    }
    let leading = JetPolynomial::from_poly(clean)
        .div_eps(i64::from(data.m))
        .ok_or(JetError::NotScalable(data.m))?;
    let reduction = if leading.is_zero() { 0 } else { leading.eps_valuation() };
    let reduced = leading.div_eps(reduction).expect("valuation divides");

    let tc = tropical_constants(f);
    let (l, k, d) = data.reaches();
    let class = ClassTuple {
        m: tc.m,
        c: tc.c,
        l: l.max(d),
        k,
        d: data.p.max(data.q),
    };
    let mut pde = DerivedPde {
        leading,
        reduced,
        reduction,
        denominator: h_trunc,
        remainder: groups
            .into_iter()
            .map(|(points, p)| RemainderGroup {
                points,
                terms: JetPolynomial::from_poly(p),
            })
            .collect(),
        m: data.m,
        alpha: data.alpha,
        consistent: k <= 1,
        class,
        error_constant: Ok(Rational::new()),
    };
    pde.error_constant = error_constant(&pde, &ErrorHypotheses::default());
    Ok(pde)
}

fn eps_bound(eps_max: &Rational, e: i64, what: &dyn Fn() -> String) -> Result<Rational, JetError> {
    if e < 0 {
        return Err(JetError::Unbounded(format!("{} (negative power of ε)", what())));
    }
    Ok(rational_powi(eps_max, e).expect("nonnegative power"))
}

/// Splits a monomial into (ε power, base-point jets, ξ jets).
fn split(m: &Monomial<JetFactor>) -> (i64, Vec<(JetVar, i64)>, Vec<(JetVar, i64)>) {
    let mut eps = 0;
    let (mut at, mut xi) = (Vec::new(), Vec::new());
    for (f, e) in m.factors() {
        match f {
            JetFactor::Eps => eps = *e,
            JetFactor::At(v) => at.push((*v, *e)),
            JetFactor::AtXi(v, _) => xi.push((*v, *e)),
        }
    }
    (eps, at, xi)
}

/// Certified `Cl` with `|F¹| ≤ Cl·‖u‖_{α+1}`, where the remainder of
/// `Δ` is `ε^{m+1} F¹`.
///
/// A group equal to `Q·h` contributes the coefficients of `Q`. Otherwise each
/// monomial is bounded by lowering `h` to its constant term, or, for factors
/// `u^k`, by cancelling against a denominator monomial with the same `u^k`.
pub fn error_constant(d: &DerivedPde, hyp: &ErrorHypotheses) -> Result<Rational, JetError> {
    let h = d.denominator.poly();
    let h0 = h.constant_term();
    let h_constant = h.as_constant().is_some();
    let h_positive = h.all_coefficients_positive();
    let shift = i64::from(d.m) + 1;
    let mut total = Rational::new();

    for g in &d.remainder {
        let gp = g.terms.poly();
        // candidate quotient: ξ-only monomials divided by h's constant term
        let q = Poly::from_terms(
            gp.terms()
                .filter(|(m, _)| split(m).1.is_empty())
                .map(|(m, c)| (m.clone(), Rational::from(c / &h0))),
        );
        if !h_constant && !q.is_zero() && q.mul(h) == *gp {
            for (m, c) in q.terms() {
                let (e, _, xi) = split(m);
                linear_xi(&xi, m)?;
                total += Rational::from(c.abs_ref()) * eps_bound(&hyp.eps_max, e - shift, &|| render(m))?;
            }
            continue;
        }
        for (m, c) in gp.terms() {
            let (e, at, xi) = split(m);
            linear_xi(&xi, m)?;
            let c = Rational::from(c.abs_ref());
            if at.is_empty() {
                if !h_constant && !(hyp.jet_positivity && h_positive) {
                    return Err(JetError::Unbounded(format!("{} (denominator sign unknown)", render(m))));
                }
                total += c / Rational::from(h0.abs_ref()) * eps_bound(&hyp.eps_max, e - shift, &|| render(m))?;
                continue;
            }
            if !(hyp.jet_positivity && h_positive) || at.iter().any(|(v, _)| *v != JetVar::U) {
                return Err(JetError::Unbounded(render(m)));
            }
            let u_pow = at[0].1;
            let matching = h.terms().find(|(hm, _)| {
                let (_, hat, hxi) = split(hm);
                hxi.is_empty() && hat.len() == 1 && hat[0] == (JetVar::U, u_pow)
            });
            let Some((hm, hc)) = matching else {
                return Err(JetError::Unbounded(format!("{} (no matching denominator monomial)", render(m))));
            };
            let e_h = hm.exponent(&JetFactor::Eps);
            total += c / hc * eps_bound(&hyp.eps_max, e - e_h - shift, &|| render(m))?;
        }
    }
    Ok(total)
}

fn linear_xi(xi: &[(JetVar, i64)], m: &Monomial<JetFactor>) -> Result<(), JetError> {
    if xi.len() == 1 && xi[0].1 == 1 {
        Ok(())
    } else {
        Err(JetError::Unbounded(format!("{} (not linear in the remainder)", render(m))))
    }
}

fn render(m: &Monomial<JetFactor>) -> String {
    JetPolynomial::from_poly(Poly::term(Rational::from(1), m.clone())).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::{Binding, CellConvention, Expression};
    use crate::numeric::{int, rat};

    fn data(stencil: Vec<Offset>, alpha: u32) -> ApproximationData {
        ApproximationData::new(stencil, (1, 1, 1), alpha).unwrap()
    }

    fn rule(text: &str) -> (ElementaryRational, Vec<Offset>) {
        let e = Expression::parse_with(text, CellConvention::Base).unwrap();
        let stencil = e.stencil();
        (ElementaryRational::from_rule(&e, &stencil, &Binding::new()).unwrap(), stencil)
    }

    #[test]
    fn expansions() {
        let d = data(vec![], 1);
        let e = expand_cell(Offset::new(0, 0), &d);
        assert_eq!(e.truncated, JetPolynomial::parse("ε·u").unwrap());
        assert!(e.remainder.is_zero());

        let e = expand_cell(Offset::new(1, 1), &d);
        assert_eq!(e.truncated, JetPolynomial::parse("ε·u + ε^2·u_x + ε^2·u_s").unwrap());
        let rem: Vec<_> = e.remainder.monomials().into_iter().map(|(_, c)| c).collect();
        assert_eq!(rem, vec![rat(1, 2), int(1), rat(1, 2)]);
        assert_eq!(e.remainder.to_string(), "1/2·ε^3·u_2s(ξ[1,1]) + ε^3·u_xs(ξ[1,1]) + 1/2·ε^3·u_2x(ξ[1,1])");

        let e = expand_cell(Offset::new(2, 0), &d);
        assert_eq!(e.truncated, JetPolynomial::parse("ε·u + 2ε^2·u_x").unwrap());
        assert_eq!(e.remainder.to_string(), "2ε^3·u_2x(ξ[2,0])");
    }

    #[test]
    fn invalid_stencil() {
        assert!(ApproximationData::new(vec![Offset::new(0, 0)], (1, 1, 1), 1).is_err());
        assert!(ApproximationData::new(vec![Offset::new(1, 0)], (1, 1, 1), 1).is_err());
        assert!(ApproximationData::new(vec![Offset::new(-1, 0), Offset::new(5, -1)], (1, 1, 1), 1).is_ok());
    }

    #[test]
    fn burgers_f() {
        let (f, stencil) = rule("z[2,0]/2 + z[0,0]*(1+2*z[-1,1])/(2*(1+z[0,0]))");
        let pde = derive_pde(&f, &data(stencil, 1)).unwrap();
        assert_eq!(pde.reduced, JetPolynomial::parse("2v_s + 2ε·v·v_x - v^2").unwrap());
        assert_eq!(pde.reduction, 1);
        assert_eq!(pde.denominator.display_factored('u'), "2(1 + ε·u)");
        assert_eq!(pde.error_constant, Ok(int(5)));
        assert_eq!(pde.class.to_string(), "(8, 2, 1, 2, 1)");
        assert!(!pde.consistent);
        assert_eq!(pde.leading.max_jet_order(), 1);
        for (_, m) in pde.remainder_monomials() {
            let (_, _, xi) = split(&m);
            assert_eq!(xi[0].0.order(), 2);
        }
    }

    #[test]
    fn burgers_g() {
        let (g, stencil) = rule("z[2,0]/2 + (z[0,0]+z[0,0]*z[-1,1])/(2*(1+z[0,0]))");
        let pde = derive_pde(&g, &data(stencil, 1)).unwrap();
        assert_eq!(pde.reduced, JetPolynomial::parse("2u_s + ε·u·u_s + ε·u·u_x").unwrap());
        assert_eq!(pde.error_constant, Ok(int(4)));
        assert_eq!(pde.display('u'), "ε^2/(2(1 + ε·u)) · (2u_s + ε·u·u_s + ε·u·u_x)");
    }

    #[test]
    fn error_constant_needs_positivity() {
        let (g, stencil) = rule("z[2,0]/2 + (z[0,0]+z[0,0]*z[-1,1])/(2*(1+z[0,0]))");
        let pde = derive_pde(&g, &data(stencil, 1)).unwrap();
        let hyp = ErrorHypotheses {
            eps_max: int(1),
            jet_positivity: false,
        };
        assert!(matches!(error_constant(&pde, &hyp), Err(JetError::Unbounded(_))));
        let hyp = ErrorHypotheses {
            eps_max: rat(1, 2),
            jet_positivity: true,
        };
        assert_eq!(error_constant(&pde, &hyp), Ok(int(2)));
    }

    #[test]
    fn shifts() {
        let (f, stencil) = rule("z[1,0]");
        let d = data(stencil, 3);
        let pde = derive_pde(&f, &d).unwrap();
        let expect = JetPolynomial::parse(
            "ε·u_s + ε^2/2·u_2s + ε^3/6·u_3s + ε^2·u_xs + ε^3/2·u_x2s + ε^3/2·u_2xs",
        )
        .unwrap();
        assert_eq!(pde.leading, expect);
        assert_eq!(pde.class.to_string(), "(1, 1, 0, 1, 1)");
        assert!(pde.consistent);
        // Σ_{a+b=4} 1/(a!b!) at ξ_11 plus 1/4! at ξ_10
        assert_eq!(pde.error_constant, Ok(Rational::from((16 + 1, 24))));

        let (w, stencil) = rule("z[0,0]");
        let pde = derive_pde(&w, &data(stencil, 2)).unwrap();
        let expect = JetPolynomial::parse("ε·u_x + ε·u_s + ε^2/2·u_2x + ε^2·u_xs + ε^2/2·u_2s").unwrap();
        assert_eq!(pde.leading, expect);
        assert_eq!(pde.class.k, 0);
    }
}
