//! Closed-form solution families, residual and norm checks, and the witness
//! constructions behind the unrelatedness results.

use rug::{Float, Integer, Rational};
use thiserror::Error;

use crate::dsl::{Binding, EvalError, Expr, Expression, ParseError};
use crate::dynamics::{EvolutionSpec, Rule};
use crate::jet::{JetPolynomial, JetVar};
use crate::numeric::{rat, Field, Precision};
use crate::poly::{Poly, PolyError, RatFn};
use crate::relation::{
    bound_value, compare, BoundExtras, BoundForm, BoundValue, CertificateMethod, Flavor, Quantity, RelationClass,
    RelationError, Verdict,
};

#[derive(Debug, Error)]
pub enum SolutionError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("evaluation failed at ({x}, {s}): {source}")]
    Eval { x: Rational, s: Rational, source: EvalError },
    #[error("point ({x}, {s}) is closer than {margin} to the domain boundary")]
    Margin { x: Rational, s: Rational, margin: Rational },
    #[error(transparent)]
    Relation(#[from] RelationError),
    #[error("{0}")]
    Precondition(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Coord {
    X,
    S,
}

/// A solution `u(x, s)` on `(0, A₀) × [0, T₀)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClosedFormSolution {
    pub expr: Expression,
    pub parameters: Binding,
    pub a0: Rational,
    /// `None` for `T₀ = ∞`.
    pub t0: Option<Rational>,
}

/// Central finite differences at a working precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FdConfig {
    pub step: Rational,
    pub precision: Precision,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            step: rat(1, 10_000),
            precision: Precision::digits(50),
        }
    }
}

fn binomial(n: u32, k: u32) -> Integer {
    Integer::from(Integer::binomial_u(n, k))
}

impl ClosedFormSolution {
    pub fn new(text: &str, parameters: Binding, a0: Rational, t0: Option<Rational>) -> Result<Self, SolutionError> {
        Ok(ClosedFormSolution {
            expr: Expression::parse(text)?,
            parameters,
            a0,
            t0,
        })
    }

    fn binding(&self, x: &Rational, s: &Rational) -> Binding {
        self.parameters.clone().with("x", x.clone()).with("s", s.clone())
    }

    pub fn value_exact(&self, x: &Rational, s: &Rational) -> Result<Rational, SolutionError> {
        self.expr.evaluate(&self.binding(x, s)).map_err(|source| SolutionError::Eval {
            x: x.clone(),
            s: s.clone(),
            source,
        })
    }

    pub fn value(&self, x: &Rational, s: &Rational, prec: Precision) -> Result<Float, SolutionError> {
        self.expr
            .root()
            .eval_field::<Float>(&self.binding(x, s), prec.bits(), &mut |o| Err(EvalError::CellNotAllowed(o)))
            .map_err(|source| SolutionError::Eval {
                x: x.clone(),
                s: s.clone(),
                source,
            })
    }

    /// Polynomial form in `x` and `s`, when the expression has one.
    pub fn polynomial(&self) -> Option<Poly<Coord>> {
        let f = RatFn::from_expr(self.expr.root(), &self.parameters, &mut |e| match e {
            Expr::Sym(n) if n == "x" => Ok(Coord::X),
            Expr::Sym(n) if n == "s" => Ok(Coord::S),
            Expr::Sym(n) => Err(PolyError::UnknownSymbol(n.clone())),
            Expr::Cell(o) => Err(PolyError::UnexpectedCell(*o)),
            _ => unreachable!("leaf"),
        })
        .ok()?;
        let d = f.den.as_constant()?;
        Some(f.num.scale(&Rational::from(d.recip_ref())))
    }

    fn check_margin(&self, x: &Rational, s: &Rational, margin: &Rational) -> Result<(), SolutionError> {
        let inside_x = Rational::from(x - margin) > 0 && Rational::from(x + margin) < self.a0;
        let inside_s = Rational::from(s - margin) >= 0
            && self.t0.as_ref().is_none_or(|t0| Rational::from(s + margin) < *t0);
        if inside_x && inside_s {
            Ok(())
        } else {
            Err(SolutionError::Margin {
                x: x.clone(),
                s: s.clone(),
                margin: margin.clone(),
            })
        }
    }

    /// Derivative `∂_x^a ∂_s^b u`: exact for polynomials, central differences
    /// otherwise.
    pub fn jet(&self, v: JetVar, x: &Rational, s: &Rational, fd: &FdConfig) -> Result<Float, SolutionError> {
        let bits = fd.precision.bits();
        if let Some(p) = self.polynomial() {
            let mut d = p;
            for _ in 0..v.x {
                d = d.derivative(&Coord::X);
            }
            for _ in 0..v.s {
                d = d.derivative(&Coord::S);
            }
            let value = d
                .eval::<Rational>(0, &mut |c| match c {
                    Coord::X => x.clone(),
                    Coord::S => s.clone(),
                })
                .expect("polynomials evaluate");
            return Ok(Float::with_val(bits, &value));
        }
        let h = &fd.step;
        let half = |k: u32, i: u32| h * (Rational::from(k) / 2u32 - i);
        let mut acc = Float::new(bits);
        for i in 0..=v.x {
            for j in 0..=v.s {
                let px = x + half(v.x, i);
                let ps = s + half(v.s, j);
                let w = binomial(v.x, i) * binomial(v.s, j);
                let term = self.value(&px, &ps, fd.precision)? * w;
                if (i + j) % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
        }
        let scale = crate::numeric::rational_powi(h, -i64::from(v.order())).expect("nonzero step");
        Ok(acc * Float::with_val(bits, &scale))
    }
}

/// `u(x, s) = 1 − ξ(x, s)` solving `u_s + μu/(1+μu)·u_x = 0` with `u(x, 0) = 1 − x`.
pub fn characteristics_solution(mu: &Rational) -> Result<ClosedFormSolution, SolutionError> {
    if *mu <= 0 {
        return Err(SolutionError::Precondition(format!("mu must be positive, got {mu}")));
    }
    ClosedFormSolution::new(
        "1 - (1 + mu*(x - s + 1) - sqrt((1 + mu*(x - s + 1))^2 - 4*mu*((1 + mu)*x - mu*s)))/(2*mu)",
        Binding::new().with("mu", mu.clone()),
        rat(1, 2),
        Some(rat(1, 4)),
    )
}

/// The quadratic `μξ² − (1+μ(x−s+1))ξ + (1+μ)x − μs` whose smaller root is ξ.
pub fn characteristics_quadratic(mu: &Rational, x: &Float, s: &Float, xi: &Float) -> Float {
    let p = x.prec();
    let b = Float::with_val(p, x - s) + 1u32;
    let b = Float::with_val(p, &b * mu) + 1u32;
    let c = Float::with_val(p, x * Rational::from(mu + 1u32)) - Float::with_val(p, s * mu);
    let sq = Float::with_val(p, xi * xi) * mu;
    sq - Float::with_val(p, &b * xi) + c
}

/// PDE residual `P(ε, jets of u)` at `(x, s)`.
pub fn residual(
    sol: &ClosedFormSolution,
    pde: &JetPolynomial,
    eps: &Rational,
    x: &Rational,
    s: &Rational,
    fd: &FdConfig,
) -> Result<Float, SolutionError> {
    let order = pde.max_jet_order();
    let h = &fd.step;
    let margin = Rational::from(h * 2u32).max(Rational::from(h * order) / 2u32);
    sol.check_margin(x, s, &margin)?;
    let bits = fd.precision.bits();
    let mut failure = None;
    let value = pde
        .eval::<Float>(
            &Float::with_val(bits, eps),
            &mut |v| match sol.jet(v, x, s, fd) {
                Ok(f) => f,
                Err(e) => {
                    failure.get_or_insert(e);
                    Float::new(bits)
                }
            },
            bits,
        )
        .ok_or_else(|| SolutionError::Precondition("PDE has unresolved mean-value points".to_string()))?;
    match failure {
        Some(e) => Err(e),
        None => Ok(value),
    }
}

/// Rectangular sampling grid `[x_lo, x_hi] × [s_lo, s_hi]` with a common spacing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sampling {
    pub x: (Rational, Rational),
    pub s: (Rational, Rational),
    pub spacing: Rational,
}

impl Sampling {
    pub fn points(&self) -> Vec<(Rational, Rational)> {
        let axis = |(lo, hi): &(Rational, Rational)| {
            let mut out = Vec::new();
            let mut v = lo.clone();
            while v <= *hi {
                out.push(v.clone());
                v += &self.spacing;
            }
            out
        };
        let xs = axis(&self.x);
        let ss = axis(&self.s);
        xs.iter()
            .flat_map(|x| ss.iter().map(move |s| (x.clone(), s.clone())))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum KRate {
    /// Every derivative of the order vanishes identically.
    Zero,
    /// Grid supremum of the derivatives over the grid infimum of `u`; a lower
    /// estimate of `K_{α+1}`.
    Estimate { value: Float, spacing: Rational },
}

/// Higher derivative rate `‖u‖_order / inf u`.
pub fn k_rate(sol: &ClosedFormSolution, order: u32, sampling: &Sampling, fd: &FdConfig) -> Result<KRate, SolutionError> {
    let vars: Vec<JetVar> = (0..=order).map(|a| JetVar::new(a, order - a)).collect();
    if let Some(p) = sol.polynomial() {
        let vanishes = vars.iter().all(|v| {
            let mut d = p.clone();
            for _ in 0..v.x {
                d = d.derivative(&Coord::X);
            }
            for _ in 0..v.s {
                d = d.derivative(&Coord::S);
            }
            d.is_zero()
        });
        if vanishes {
            return Ok(KRate::Zero);
        }
    }
    let bits = fd.precision.bits();
    let mut sup = Float::new(bits);
    let mut inf: Option<Float> = None;
    for (x, s) in sampling.points() {
        let u = sol.value(&x, &s, fd.precision)?;
        if inf.as_ref().is_none_or(|i| u < *i) {
            inf = Some(u);
        }
        for v in &vars {
            let d = sol.jet(*v, &x, &s, fd)?.abs();
            if d > sup {
                sup = d;
            }
        }
    }
    let inf = inf.ok_or_else(|| SolutionError::Precondition("empty sampling grid".to_string()))?;
    if !inf.is_positive() {
        return Err(SolutionError::Precondition("solution is not positive on the grid".to_string()));
    }
    Ok(KRate::Estimate {
        value: sup / inf,
        spacing: sampling.spacing.clone(),
    })
}

/// Exact comparison record of a witness.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessCertificate {
    pub ratio: Quantity,
    pub bound: BoundValue,
    pub verdict: Verdict,
    pub method: CertificateMethod,
}

/// Linear-estimate witness: `u = x^l + 1` against `v = (x − s)^l + 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearWitness {
    pub m: Rational,
    pub d: Rational,
    pub band: Rational,
    pub eps: Rational,
    pub a0: Rational,
    pub b0: Rational,
    pub l: u32,
    /// Analytic bound `max(2^{l+1}, b₀^l + 1)` on the initial rate.
    pub rate_bound: Rational,
    pub certificate: WitnessCertificate,
}

fn pair_ok(a0: &Rational, b0: &Rational) -> bool {
    *b0 >= 3 && a0 > b0 && (a0 / Rational::from(a0 - b0)) > *b0
}

fn check_linear_inputs(m: &Rational, d: &Rational, band: &Rational) -> Result<(), SolutionError> {
    if *m < 1 || *d < 1 || *band < 1 {
        return Err(SolutionError::Precondition(format!(
            "witness needs M, D, L >= 1, got ({m}, {d}, {band})"
        )));
    }
    Ok(())
}

/// Searches `a₀ ∈ {4..10}`, `b₀ ∈ ⅕ℤ` for the pair that needs the smallest `l`.
pub fn witness_linear(m: &Rational, d: &Rational, band: &Rational) -> Result<LinearWitness, SolutionError> {
    check_linear_inputs(m, d, band)?;
    let mut best: Option<(u32, Rational, Rational)> = None;
    for a in 4..=10i64 {
        for k in 15..5 * a {
            let (a0, b0) = (Rational::from(a), rat(k, 5));
            if !pair_ok(&a0, &b0) {
                continue;
            }
            let l = linear_threshold(m, d, &eps_for(band), &a0, &b0);
            if best.as_ref().is_none_or(|(bl, _, _)| l < *bl) {
                best = Some((l, a0, b0));
            }
        }
    }
    let (_, a0, b0) = best.expect("(4, 3) always qualifies");
    witness_linear_with_pair(m, d, band, &a0, &b0)
}

fn eps_for(band: &Rational) -> Rational {
    Rational::from(band.recip_ref()).min(Rational::from(1))
}

/// Smallest even `l` with `¼·q^l > M^{ε^{−D}(a₀+b₀+1)}`, `q = min(a₀/b₀, a₀/((a₀−b₀)b₀))`.
fn linear_threshold(m: &Rational, d: &Rational, eps: &Rational, a0: &Rational, b0: &Rational) -> u32 {
    let bits = Precision::default().bits();
    let diff = Rational::from(a0 - b0);
    let q = Rational::from(a0 / b0).min(a0 / Rational::from(&diff * b0));
    let e = crate::relation::float_pow(eps, &Rational::from(-d), bits) * (Rational::from(a0 + b0) + 1u32);
    let rhs = e * Float::with_val(bits, m).ln() + Float::with_val(bits, 4u32).ln();
    let th = rhs / Float::with_val(bits, &q).ln();
    let l = th.floor().to_u32_saturating().unwrap_or(u32::MAX).saturating_add(1);
    l + l % 2
}

pub fn witness_linear_with_pair(
    m: &Rational,
    d: &Rational,
    band: &Rational,
    a0: &Rational,
    b0: &Rational,
) -> Result<LinearWitness, SolutionError> {
    check_linear_inputs(m, d, band)?;
    if !pair_ok(a0, b0) {
        return Err(SolutionError::Precondition(format!(
            "pair ({a0}, {b0}) needs b0 >= 3, a0 > b0 and a0/(a0-b0) > b0"
        )));
    }
    let eps = eps_for(band);
    let mut l = linear_threshold(m, d, &eps, a0, b0);
    let class = RelationClass::exponential(m.clone(), d.clone(), band.clone(), l)?;
    loop {
        let bits = Precision::default().bits();
        let pow = |b: &Rational| crate::numeric::rational_powi(b, i64::from(l)).expect("nonzero");
        let u = pow(a0) + 1u32;
        let v = pow(&Rational::from(a0 - b0)) + 1u32;
        let ratio = Rational::from(&u / &v).max(Rational::from(&v / &u));
        let two = Rational::from(2);
        let rate_bound = crate::numeric::rational_powi(&two, i64::from(l) + 1)
            .expect("nonzero")
            .max(pow(b0) + 1u32);
        let extras = BoundExtras::new(eps.clone());
        let class = RelationClass { alpha: l, ..class.clone() };
        let bound = bound_value(
            &class,
            a0,
            b0,
            &Quantity::rational(&rate_bound, bits),
            BoundForm::Def21,
            &extras,
            bits,
        )?;
        let ratio = Quantity::rational(&ratio, bits);
        let (verdict, method) = compare(&ratio, &bound, true, Precision::default().decimal_digits())
            .ok_or_else(|| SolutionError::Precondition("comparison did not separate".to_string()))?;
        if verdict == Verdict::Violated {
            return Ok(LinearWitness {
                m: m.clone(),
                d: d.clone(),
                band: band.clone(),
                eps,
                a0: a0.clone(),
                b0: b0.clone(),
                l,
                rate_bound,
                certificate: WitnessCertificate {
                    ratio,
                    bound,
                    verdict,
                    method,
                },
            });
        }
        l += 2;
    }
}

/// Translation witness of the double-exponential unrelatedness lemma.
#[derive(Clone, Debug, PartialEq)]
pub struct TranslationWitness {
    pub delta0: Rational,
    pub delta: Rational,
    pub i0: Rational,
    pub c: Rational,
    pub c_prime: Rational,
    pub eps: Rational,
    pub class: RelationClass,
    /// `[v:u]_{Lε} ≤ 2C'/δ₀`.
    pub rate_bound: Rational,
    /// `u(δ₀,δ₀)/v(δ₀,δ₀) ≥ C/δ`.
    pub violation_ratio: Rational,
    /// `v(δ₀, δ₀)`, equal to `δ` by construction.
    pub v_at_point: Rational,
    pub certificate: WitnessCertificate,
}

impl TranslationWitness {
    /// `v(x, s) = 1 − (x + I₀s)`.
    pub fn v(&self, x: &Rational, s: &Rational) -> Rational {
        Rational::from(1) - (x + Rational::from(&self.i0 * s))
    }
}

pub fn witness_translation(
    delta0: &Rational,
    delta: &Rational,
    c: &Rational,
    c_prime: &Rational,
    eps: &Rational,
    class: &RelationClass,
) -> Result<TranslationWitness, SolutionError> {
    let pre = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(SolutionError::Precondition(what.to_string()))
        }
    };
    pre(*delta0 > 0 && *delta0 <= rat(1, 4), "need 0 < delta0 <= 1/4")?;
    pre(*delta > 0 && *delta < Rational::from(1) - delta0, "need 0 < delta < 1 - delta0")?;
    pre(*c > 0 && c <= c_prime, "need 0 < C <= C'")?;
    let i0 = (Rational::from(1) - delta0 - delta) / delta0;
    pre(Rational::from(&i0 * &class.l) * eps <= *delta0, "need I0*L*eps <= delta0")?;
    let rate_bound = Rational::from(c_prime * 2u32) / delta0;
    let violation_ratio = Rational::from(c / delta);
    let bits = Precision::default().bits();
    let class = RelationClass {
        flavor: Flavor::DoubleExponential,
        ..class.clone()
    };
    let bound = bound_value(
        &class,
        delta0,
        delta0,
        &Quantity::rational(&rate_bound, bits),
        BoundForm::Def21,
        &BoundExtras::new(eps.clone()),
        bits,
    )?;
    let ratio = Quantity::rational(&violation_ratio, bits);
    let (verdict, method) = compare(&ratio, &bound, true, Precision::default().decimal_digits())
        .ok_or_else(|| SolutionError::Precondition("comparison did not separate".to_string()))?;
    let mut w = TranslationWitness {
        delta0: delta0.clone(),
        delta: delta.clone(),
        i0,
        c: c.clone(),
        c_prime: c_prime.clone(),
        eps: eps.clone(),
        class,
        rate_bound,
        violation_ratio,
        v_at_point: Rational::new(),
        certificate: WitnessCertificate {
            ratio,
            bound,
            verdict,
            method,
        },
    };
    w.v_at_point = w.v(delta0, delta0);
    Ok(w)
}

/// Boundary prescriptions `z = (εN)^l + 1` and `w = ε^l(N − t)^l + 1`.
pub fn polynomial_flow(l: u32, eps: &Rational) -> Result<(EvolutionSpec, EvolutionSpec), SolutionError> {
    if l % 2 == 1 {
        return Err(SolutionError::Precondition(format!("l must be even, got {l}")));
    }
    let params = Binding::new().with("eps", eps.clone()).with("l", Rational::from(l));
    let spec = |text: &str| -> Result<EvolutionSpec, SolutionError> {
        Ok(EvolutionSpec {
            rule: Rule::ClosedForm,
            boundary: Expression::parse(text)?,
            parameters: params.clone(),
        })
    };
    Ok((spec("(eps*N)^l + 1")?, spec("eps^l*(N - t)^l + 1")?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::{derive_pde, ApproximationData};
    use crate::maxplus::ElementaryRational;
    use crate::numeric::int;

    #[test]
    fn characteristics_initial_line_is_exact() {
        let u = characteristics_solution(&rat(1, 40)).unwrap();
        for k in 1..10 {
            let x = rat(k, 20);
            assert_eq!(u.value_exact(&x, &int(0)).unwrap(), Rational::from(1) - &x);
        }
        assert!(characteristics_solution(&int(0)).is_err());
    }

    #[test]
    fn characteristics_root_solves_quadratic() {
        let mu = rat(1, 40);
        let u = characteristics_solution(&mu).unwrap();
        let prec = Precision::digits(60);
        let (x, s) = (rat(1, 2), rat(1, 4));
        let xi = Float::with_val(prec.bits(), 1u32) - u.value(&x, &s, prec).unwrap();
        let fx = Float::with_val(prec.bits(), &x);
        let fs = Float::with_val(prec.bits(), &s);
        let q = characteristics_quadratic(&mu, &fx, &fs, &xi);
        assert!(q.abs() < 1e-55);
        assert!(xi > 0 && xi < 1);
    }

    #[test]
    fn characteristics_residual() {
        let eps = rat(1, 10);
        let u = characteristics_solution(&Rational::from(&eps / 4u32)).unwrap();
        let pde = JetPolynomial::parse("4u_s + eps*u*u_s + eps*u*u_x").unwrap();
        let fd = FdConfig::default();
        for k in 1..=10 {
            let x = rat(k, 25);
            let s = rat(k, 50);
            let r = residual(&u, &pde, &eps, &x, &s, &fd).unwrap();
            assert!(r.abs() < 1e-6, "residual at {x},{s}");
        }
        let e = residual(&u, &pde, &eps, &rat(1, 100_000), &rat(1, 10), &fd).unwrap_err();
        assert!(matches!(e, SolutionError::Margin { .. }));
    }

    #[test]
    fn shift_pde_residuals_vanish() {
        let stencil = [crate::dsl::Offset::new(0, -1)];
        let shift = ElementaryRational::from_rule(&Expression::parse("z[0,-1]").unwrap(), &stencil, &Binding::new()).unwrap();
        let data = ApproximationData::new(stencil.to_vec(), (1, 1, 1), 5).unwrap();
        let pde = derive_pde(&shift, &data).unwrap().leading;
        let u = ClosedFormSolution::new("x^6 + 1", Binding::new(), int(2), None).unwrap();
        let r = residual(&u, &pde, &rat(1, 2), &rat(3, 4), &rat(1, 3), &FdConfig::default()).unwrap();
        assert!(r.is_zero());
        let one = ClosedFormSolution::new("1", Binding::new(), int(1), None).unwrap();
        let translation = JetPolynomial::parse("u_s - 3u_x").unwrap();
        assert!(residual(&one, &translation, &rat(1, 2), &rat(1, 2), &rat(1, 2), &FdConfig::default())
            .unwrap()
            .is_zero());
    }

    #[test]
    fn k_rates() {
        let fd = FdConfig::default();
        let grid = Sampling {
            x: (rat(1, 100), rat(24, 100)),
            s: (rat(0, 1), rat(24, 100)),
            spacing: rat(1, 100),
        };
        let u = ClosedFormSolution::new("x^6 + 1", Binding::new(), int(1), None).unwrap();
        assert_eq!(k_rate(&u, 7, &grid, &fd).unwrap(), KRate::Zero);
        let one = ClosedFormSolution::new("1", Binding::new(), int(1), None).unwrap();
        assert_eq!(k_rate(&one, 1, &grid, &fd).unwrap(), KRate::Zero);
        let c = characteristics_solution(&rat(1, 40)).unwrap();
        let coarse = Sampling {
            spacing: rat(1, 20),
            x: (rat(1, 20), rat(1, 5)),
            ..grid
        };
        match k_rate(&c, 2, &coarse, &fd).unwrap() {
            KRate::Estimate { value, .. } => assert!(value.is_finite() && value > 0 && value < 1),
            KRate::Zero => panic!("characteristics solution is curved"),
        }
    }

    #[test]
    fn linear_witnesses() {
        let w = witness_linear_with_pair(&int(1000), &int(1), &int(1), &int(4), &rat(16, 5)).unwrap();
        assert_eq!((w.l, w.eps.clone()), (262, int(1)));
        assert_eq!(w.certificate.verdict, Verdict::Violated);
        assert!(matches!(w.certificate.method, CertificateMethod::ExactRationalPower { .. }));
        let w = witness_linear(&int(1000), &int(1), &int(1)).unwrap();
        assert_eq!((w.a0.clone(), w.b0.clone(), w.l), (int(4), int(3), 198));
        assert_eq!(w.certificate.verdict, Verdict::Violated);
        assert!(witness_linear_with_pair(&int(10), &int(1), &int(1), &rat(9, 2), &int(3)).is_err());
        let w = witness_linear(&int(7), &int(2), &int(3)).unwrap();
        assert_eq!((w.eps, w.certificate.verdict), (rat(1, 3), Verdict::Violated));
    }

    #[test]
    fn translation_witness() {
        let class = RelationClass::new(int(2), int(1), int(1), int(1), 1, Flavor::DoubleExponential).unwrap();
        let w = witness_translation(&rat(1, 4), &rat(1, 100), &rat(1, 2), &int(1), &rat(1, 20), &class).unwrap();
        assert_eq!(w.i0, rat(74, 25));
        assert_eq!(w.v_at_point, rat(1, 100));
        assert_eq!(w.violation_ratio, int(50));
        assert_eq!(w.rate_bound, int(8));
        assert_eq!(w.certificate.verdict, Verdict::Violated);
        let e = witness_translation(&rat(1, 4), &rat(3, 4), &rat(1, 2), &int(1), &rat(1, 20), &class);
        assert!(e.is_err());
    }

    #[test]
    fn polynomial_flows() {
        let (z, w) = polynomial_flow(1000, &rat(1, 2)).unwrap();
        let two = Rational::from(2);
        assert_eq!(z.boundary_value(3, 1).unwrap(), crate::numeric::rational_powi(&rat(3, 2), 1000).unwrap() + 1u32);
        assert_eq!(w.boundary_value(3, 1).unwrap(), two);
        assert_eq!(w.boundary_value(4, 4).unwrap(), 1);
        assert!(polynomial_flow(3, &rat(1, 2)).is_err());
    }
}
