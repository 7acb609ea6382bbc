use std::fmt;

use rug::{Integer, Rational};

use super::{initial_rate_discrete, max_ratio, Flavor, RelationClass, RelationError};
use crate::dynamics::{FlowValue, GridFlow};
use crate::numeric::{as_i64, bit_size, format_float, rational_powi, Interval, Precision, ESCALATION_CAP_DIGITS};

/// Largest exact power (in bits) the certificate path will build.
pub const EXACT_SIZE_CAP_BITS: u64 = 10_000_000;

/// A positive quantity known exactly when possible and always enclosed.
#[derive(Clone, Debug, PartialEq)]
pub struct Quantity {
    exact: Option<Rational>,
    approx: Interval,
}

impl Quantity {
    pub fn rational(r: &Rational, bits: u32) -> Self {
        Quantity {
            exact: Some(r.clone()),
            approx: Interval::from_rational(r, bits),
        }
    }

    pub fn enclosed(approx: Interval) -> Self {
        Quantity { exact: None, approx }
    }

    pub fn of<V: FlowValue>(v: &V, bits: u32) -> Self {
        match v.as_rational() {
            Some(r) => Self::rational(&r, bits),
            None => Self::enclosed(v.enclose(bits)),
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        self.exact.as_ref()
    }

    pub fn approx(&self) -> &Interval {
        &self.approx
    }

    fn combine(
        &self,
        o: &Quantity,
        exact: impl Fn(&Rational, &Rational) -> Rational,
        approx: impl Fn(&Interval, &Interval) -> Interval,
    ) -> Quantity {
        Quantity {
            exact: self.exact.as_ref().zip(o.exact.as_ref()).map(|(a, b)| exact(a, b)),
            approx: approx(&self.approx, &o.approx),
        }
    }

    pub fn add(&self, o: &Quantity) -> Quantity {
        self.combine(o, |a, b| Rational::from(a + b), Interval::add)
    }

    pub fn sub(&self, o: &Quantity) -> Quantity {
        self.combine(o, |a, b| Rational::from(a - b), Interval::sub)
    }

    pub fn mul(&self, o: &Quantity) -> Quantity {
        self.combine(o, |a, b| Rational::from(a * b), Interval::mul)
    }

    /// Quotient by a quantity bounded away from zero.
    pub fn div(&self, o: &Quantity) -> Option<Quantity> {
        let approx = self.approx.div(&o.approx)?;
        let exact = match (&self.exact, &o.exact) {
            (Some(a), Some(b)) if *b != 0 => Some(Rational::from(a / b)),
            _ => None,
        };
        Some(Quantity { exact, approx })
    }

    /// `self^e` for positive `self`; exact for integer `e` within the size cap.
    pub fn pow(&self, e: &Quantity) -> Option<Quantity> {
        let exact = match (&self.exact, &e.exact) {
            (Some(b), Some(k)) => as_i64(k)
                .filter(|k| k.unsigned_abs().saturating_mul(bit_size(b)) <= EXACT_SIZE_CAP_BITS)
                .and_then(|k| rational_powi(b, k)),
            _ => None,
        };
        let approx = match &exact {
            Some(r) => Interval::from_rational(r, self.approx.prec()),
            None => self.approx.pow(&e.approx)?,
        };
        Some(Quantity { exact, approx })
    }

    /// Natural logarithm enclosure.
    pub fn ln(&self) -> Option<Interval> {
        self.approx.ln()
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(r) if bit_size(r) <= 256 => write!(f, "{r}"),
            Some(r) => write!(f, "<exact rational, {} bits> ~ {}", bit_size(r), format_float(&self.approx.midpoint(), 8)),
            None => write!(f, "~ {}", format_float(&self.approx.midpoint(), 8)),
        }
    }
}

/// `base^exponent`, one factor of a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerOf {
    pub base: Quantity,
    pub exponent: Quantity,
}

impl PowerOf {
    fn log(&self) -> Option<Interval> {
        Some(self.exponent.approx.mul(&self.base.ln()?))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundForm {
    /// Def 2.1: `M^{ε^{−D}(x+s+1)}·rate` or `(M·rate)^{c^{ε^{−D}(x+s+1)}}`.
    Def21,
    /// Theorem 3.1: `(2M)^{8(c^{E+1}−1)/(c−1)}·rate^{c^{E+n}}` with `E = ε^{−D}(x+ks)`.
    Thm31,
    /// Lemma 3.5: `40^{2^{ε^{−1}(x+2s)+4}}·rate^{2^{ε^{−1}(x+2s)+3}}`.
    Lemma35,
}

impl BoundForm {
    pub fn name(self) -> &'static str {
        match self {
            BoundForm::Def21 => "def21",
            BoundForm::Thm31 => "thm31",
            BoundForm::Lemma35 => "lemma35",
        }
    }
}

impl fmt::Display for BoundForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Everything a bound needs beyond the class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundExtras {
    pub eps: Rational,
    pub k: Rational,
    pub n: Rational,
    /// Error constant `C` of the approximation, recorded only.
    pub error_constant: Option<Rational>,
    /// Constant `C'` of Def 2.1, recorded only.
    pub c_prime: Option<Rational>,
    pub precision: Precision,
    /// Try the exact rational-power comparison first.
    pub prefer_exact: bool,
}

impl BoundExtras {
    pub fn new(eps: Rational) -> Self {
        BoundExtras {
            eps,
            k: Rational::from(2),
            n: Rational::from(3),
            error_constant: None,
            c_prime: None,
            precision: Precision::default(),
            prefer_exact: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundValue {
    pub factors: Vec<PowerOf>,
    pub log: Interval,
}

impl BoundValue {
    /// Point estimate of the log-value.
    pub fn log_value(&self) -> rug::Float {
        self.log.midpoint()
    }
}

/// The bound of `form` at `(x, s)` for the given rate, in factored form.
pub fn bound_value(
    class: &RelationClass,
    x: &Rational,
    s: &Rational,
    rate: &Quantity,
    form: BoundForm,
    extras: &BoundExtras,
    bits: u32,
) -> Result<BoundValue, RelationError> {
    let eps = &extras.eps;
    if *eps <= 0 || *eps > 1 {
        return Err(RelationError::OutOfRange {
            form: form.name(),
            requirement: format!("0 < eps <= 1, got {eps}"),
        });
    }
    if form == BoundForm::Lemma35 && Rational::from(eps * 3u32) > 1 {
        return Err(RelationError::OutOfRange {
            form: form.name(),
            requirement: format!("eps <= 1/3, got {eps}"),
        });
    }
    let q = |r: Rational| Quantity::rational(&r, bits);
    let one = q(Rational::from(1));
    let pow = |b: &Quantity, e: &Quantity| {
        b.pow(e).ok_or_else(|| RelationError::Parameter(format!("cannot raise {b} to {e}")))
    };
    let scale = |d: &Rational| pow(&q(eps.clone()), &q(Rational::from(-d)));
    let factors = match form {
        BoundForm::Def21 => {
            let e = scale(&class.d)?.mul(&q(Rational::from(x + s) + 1u32));
            match class.flavor {
                Flavor::Exponential => vec![
                    PowerOf {
                        base: q(class.m.clone()),
                        exponent: e,
                    },
                    PowerOf {
                        base: rate.clone(),
                        exponent: one,
                    },
                ],
                Flavor::DoubleExponential => {
                    let w = pow(&q(class.c.clone()), &e)?;
                    vec![
                        PowerOf {
                            base: q(class.m.clone()),
                            exponent: w.clone(),
                        },
                        PowerOf {
                            base: rate.clone(),
                            exponent: w,
                        },
                    ]
                }
            }
        }
        BoundForm::Thm31 => {
            let e = scale(&class.d)?.mul(&q(Rational::from(x + &Rational::from(&extras.k * s))));
            let c = q(class.c.clone());
            let (m_exp, r_exp) = if class.c == 1 {
                (q(Rational::from(8)).mul(&e.add(&one)), one)
            } else {
                let grown = pow(&c, &e.add(&one))?.sub(&one);
                let m_exp = q(Rational::from(8))
                    .mul(&grown)
                    .div(&q(&class.c - Rational::from(1) ))
                    .expect("c > 1");
                (m_exp, pow(&c, &e.add(&q(extras.n.clone())))?)
            };
            vec![
                PowerOf {
                    base: q(Rational::from(&class.m * 2u32)),
                    exponent: m_exp,
                },
                PowerOf {
                    base: rate.clone(),
                    exponent: r_exp,
                },
            ]
        }
        BoundForm::Lemma35 => {
            let e = scale(&Rational::from(1))?.mul(&q(Rational::from(x + &Rational::from(s * 2u32))));
            let two = q(Rational::from(2));
            vec![
                PowerOf {
                    base: q(Rational::from(40)),
                    exponent: pow(&two, &e.add(&q(Rational::from(4))))?,
                },
                PowerOf {
                    base: rate.clone(),
                    exponent: pow(&two, &e.add(&q(Rational::from(3))))?,
                },
            ]
        }
    };
    let mut log = Interval::from_rational(&Rational::new(), bits);
    for f in &factors {
        let l = f
            .log()
            .ok_or_else(|| RelationError::Parameter(format!("non-positive base {}", f.base)))?;
        log = log.add(&l);
    }
    Ok(BoundValue { factors, log })
}

/// `base^exponent` with rational data; exact when the exponent is an integer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalPower {
    pub base: Rational,
    pub exponent: Rational,
}

impl RationalPower {
    pub fn value(&self) -> Option<Rational> {
        rational_powi(&self.base, as_i64(&self.exponent)?)
    }
}

impl fmt::Display for RationalPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})^({})", self.base, self.exponent)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorollaryConstants {
    pub m: RationalPower,
    pub c: Rational,
}

/// Corollary 3.2 constants `(M', c')` for iterating the dynamics `k` times.
pub fn corollary_constants(m: &Rational, c: &Rational, k: u32) -> Result<CorollaryConstants, RelationError> {
    if *m < 1 || *c < 1 {
        return Err(RelationError::Parameter(format!("corollary needs M, c >= 1, got ({m}, {c})")));
    }
    let base = Rational::from(m * 2u32);
    Ok(if *c == 1 {
        CorollaryConstants {
            m: RationalPower {
                base,
                exponent: Rational::from(8 * k),
            },
            c: Rational::from(1),
        }
    } else {
        CorollaryConstants {
            m: RationalPower {
                base,
                exponent: Rational::from(8) / Rational::from(c - 1u32),
            },
            c: rational_powi(c, i64::from(k)).expect("nonzero base"),
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Verdict {
    Violated,
    Satisfied,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Violated => "violated",
            Verdict::Satisfied => "satisfied",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CertificateMethod {
    /// `ratio^power` compared against the bound raised to `power`, in integers.
    ExactRationalPower { power: Integer, lhs_bits: u64, rhs_bits: u64 },
    DirectedRounding { digits: u32 },
}

impl fmt::Display for CertificateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CertificateMethod::ExactRationalPower {
                power,
                lhs_bits,
                rhs_bits,
            } => write!(f, "exact-rational-power (power {power}, lhs {lhs_bits} bits, rhs {rhs_bits} bits)"),
            CertificateMethod::DirectedRounding { digits } => write!(f, "directed-rounding ({digits} digits)"),
        }
    }
}

/// Outcome of comparing the max-ratio at one cell with a bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundCertificate {
    pub point: (u64, u64),
    pub class: RelationClass,
    pub form: BoundForm,
    pub extras: BoundExtras,
    pub ratio: Quantity,
    pub rate: Quantity,
    pub rate_argmax: (u64, u64),
    pub bound: BoundValue,
    /// Enclosure of `log ratio`.
    pub lhs_log: Interval,
    pub verdict: Verdict,
    pub method: CertificateMethod,
}

impl fmt::Display for BoundCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.class;
        let flavor = match c.flavor {
            Flavor::Exponential => "e",
            Flavor::DoubleExponential => "e^e",
        };
        let domain = match c.domain {
            super::DomainKind::Finite => "fin",
            super::DomainKind::Infinite => "inf",
        };
        writeln!(f, "point N={} t={}", self.point.0, self.point.1)?;
        writeln!(
            f,
            "class M={} c={} D={} L={} alpha={} flavor={flavor} domain={domain}",
            c.m, c.c, c.d, c.l, c.alpha
        )?;
        writeln!(f, "form {} eps={} k={} n={}", self.form, self.extras.eps, self.extras.k, self.extras.n)?;
        writeln!(f, "ratio {}", self.ratio)?;
        writeln!(f, "rate {} at ({}, {})", self.rate, self.rate_argmax.0, self.rate_argmax.1)?;
        for p in &self.bound.factors {
            writeln!(f, "bound factor ({})^({})", p.base, p.exponent)?;
        }
        writeln!(f, "log lhs {}", self.lhs_log)?;
        writeln!(f, "log rhs {}", self.bound.log)?;
        writeln!(f, "method {}", self.method)?;
        write!(f, "verdict {}", self.verdict)
    }
}

fn exact_comparison(ratio: &Rational, bound: &BoundValue) -> Option<(Verdict, CertificateMethod)> {
    let mut exps = Vec::with_capacity(bound.factors.len());
    let mut power = Integer::from(1);
    for p in &bound.factors {
        let b = p.base.exact()?;
        let e = p.exponent.exact()?;
        power.lcm_mut(e.denom());
        exps.push((b, e));
    }
    let pw = power.to_i64()?;
    let mut size = bit_size(ratio).checked_mul(pw.unsigned_abs())?;
    let mut scaled = Vec::with_capacity(exps.len());
    for (b, e) in exps {
        let k = Rational::from(e * &power);
        let k = as_i64(&k)?;
        size = size.checked_add(bit_size(b).checked_mul(k.unsigned_abs())?)?;
        scaled.push((b, k));
    }
    if size > EXACT_SIZE_CAP_BITS {
        return None;
    }
    let lhs = rational_powi(ratio, pw)?;
    let mut rhs = Rational::from(1);
    for (b, k) in scaled {
        rhs *= rational_powi(b, k)?;
    }
    let verdict = if lhs > rhs { Verdict::Violated } else { Verdict::Satisfied };
    Some((
        verdict,
        CertificateMethod::ExactRationalPower {
            power,
            lhs_bits: bit_size(&lhs),
            rhs_bits: bit_size(&rhs),
        },
    ))
}

/// Decides `lhs <= bound`: exactly when allowed and feasible, otherwise by
/// the enclosures at `digits`; `None` when the enclosures overlap.
pub fn compare(lhs: &Quantity, bound: &BoundValue, allow_exact: bool, digits: u32) -> Option<(Verdict, CertificateMethod)> {
    if allow_exact {
        if let Some(decided) = lhs.exact().and_then(|r| exact_comparison(r, bound)) {
            return Some(decided);
        }
    }
    let lhs_log = lhs.ln()?;
    let verdict = if lhs_log.lo() > bound.log.hi() {
        Verdict::Violated
    } else if lhs_log.hi() <= bound.log.lo() {
        Verdict::Satisfied
    } else {
        return None;
    };
    Some((verdict, CertificateMethod::DirectedRounding { digits }))
}

/// Certifies whether `max(z/w, w/z)` at `(N, t)` exceeds the bound of `form`.
pub fn certify_point<V: FlowValue>(
    z: &GridFlow<V>,
    w: &GridFlow<V>,
    point: (u64, u64),
    class: &RelationClass,
    form: BoundForm,
    extras: &BoundExtras,
) -> Result<BoundCertificate, RelationError> {
    let (n, t) = point;
    let band = as_i64(&class.l)
        .and_then(|l| u64::try_from(l).ok())
        .ok_or_else(|| RelationError::Parameter(format!("band L must be a natural number, got {}", class.l)))?;
    let ratio = max_ratio(z, w, n, t)?;
    let rate = initial_rate_discrete(z, w, band, n, t)?;
    let x = Rational::from(&extras.eps * n);
    let s = Rational::from(&extras.eps * t);
    let mut digits = extras.precision.decimal_digits();
    loop {
        let bits = Precision::digits(digits).bits();
        let ratio_q = Quantity::of(&ratio, bits);
        let rate_q = Quantity::of(&rate.value, bits);
        let bound = bound_value(class, &x, &s, &rate_q, form, extras, bits)?;
        let lhs_log = ratio_q.ln().ok_or(RelationError::NonPositive { n, t })?;
        let decided = compare(&ratio_q, &bound, extras.prefer_exact, digits);
        if let Some((verdict, method)) = decided {
            return Ok(BoundCertificate {
                point,
                class: class.clone(),
                form,
                extras: extras.clone(),
                ratio: ratio_q,
                rate: rate_q,
                rate_argmax: rate.argmax,
                bound,
                lhs_log,
                verdict,
                method,
            });
        }
        if digits >= ESCALATION_CAP_DIGITS {
            return Err(RelationError::PrecisionCap { n, t, digits });
        }
        digits = (digits * 2).min(ESCALATION_CAP_DIGITS);
    }
}
