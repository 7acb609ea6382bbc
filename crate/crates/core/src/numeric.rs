//! Exact rationals, precision bookkeeping, outward-rounded intervals and
//! deterministic decimal rendering.

use std::cmp::Ordering;
use std::fmt;

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

/// Decimal precision used for the paper-scale decimal computations.
pub const DEFAULT_DIGITS: u32 = 100;
/// Upper limit for automatic precision escalation of certificates.
pub const ESCALATION_CAP_DIGITS: u32 = 1600;

/// Working precision expressed in decimal digits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Precision {
    digits: u32,
}

impl Precision {
    pub fn digits(digits: u32) -> Self {
        Precision {
            digits: digits.max(1),
        }
    }

    pub fn decimal_digits(self) -> u32 {
        self.digits
    }

    /// Binary precision carrying at least `digits` decimal digits.
    pub fn bits(self) -> u32 {
        (f64::from(self.digits) * std::f64::consts::LOG2_10).ceil() as u32 + 8
    }

    pub fn doubled(self) -> Self {
        Precision::digits(self.digits.saturating_mul(2))
    }
}

impl Default for Precision {
    fn default() -> Self {
        Precision::digits(DEFAULT_DIGITS)
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} digits", self.digits)
    }
}

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

pub fn int(n: i64) -> Rational {
    Rational::from(n)
}

/// Rational power with an integer exponent; `None` for `0^negative`.
pub fn rational_powi(base: &Rational, exp: i64) -> Option<Rational> {
    if exp >= 0 {
        let e = u32::try_from(exp).ok()?;
        Some(Rational::from(base.pow(e)))
    } else {
        if *base == 0 {
            return None;
        }
        let e = u32::try_from(-exp).ok()?;
        Some(Rational::from(base.pow(e)).recip())
    }
}

/// Exact square root of a rational, if it is a perfect square.
pub fn rational_sqrt(r: &Rational) -> Option<Rational> {
    if *r < 0 {
        return None;
    }
    let (num, den) = (r.numer(), r.denom());
    if num.is_perfect_square() && den.is_perfect_square() {
        Some(Rational::from((num.clone().sqrt(), den.clone().sqrt())))
    } else {
        None
    }
}

/// Integer value of a rational, if it is one.
pub fn as_integer(r: &Rational) -> Option<Integer> {
    if *r.denom() == 1 {
        Some(r.numer().clone())
    } else {
        None
    }
}

pub fn as_i64(r: &Rational) -> Option<i64> {
    as_integer(r).and_then(|i| i.to_i64())
}

/// Approximate bit size of a rational, used to bound exact power computations.
pub fn bit_size(r: &Rational) -> u64 {
    u64::from(r.numer().significant_bits()) + u64::from(r.denom().significant_bits())
}

pub fn to_float(r: &Rational, prec: Precision) -> Float {
    Float::with_val(prec.bits(), r)
}

pub fn float_ln_rational(r: &Rational, prec: Precision) -> Float {
    let mut f = Float::with_val(prec.bits(), r);
    f.ln_mut();
    f
}

/// Exact rational value of a finite float.
pub fn float_to_rational(f: &Float) -> Option<Rational> {
    f.to_rational()
}

/// Round half away from zero to `sig` significant decimal digits.
pub fn round_significant(r: &Rational, sig: u32) -> Rational {
    if *r == 0 {
        return Rational::new();
    }
    let exp10 = decimal_exponent(r);
    // value = m * 10^(exp10 - sig + 1) with m having `sig` digits
    let shift = i64::from(sig) - 1 - exp10;
    let scaled = scale_pow10(r, shift);
    let rounded = round_half_away(&scaled);
    scale_pow10(&Rational::from(rounded), -shift)
}

/// Round half away from zero to `decimals` digits after the point.
pub fn round_decimals(r: &Rational, decimals: u32) -> Rational {
    let scaled = scale_pow10(r, i64::from(decimals));
    scale_pow10(&Rational::from(round_half_away(&scaled)), -i64::from(decimals))
}

/// `floor(log10(|r|))` for nonzero `r`.
pub fn decimal_exponent(r: &Rational) -> i64 {
    assert!(*r != 0, "decimal exponent of zero");
    let a = Rational::from(r.abs_ref());
    // estimate from bit lengths, then correct
    let bits = i64::from(a.numer().significant_bits()) - i64::from(a.denom().significant_bits());
    let mut e = ((bits as f64) * std::f64::consts::LOG10_2).floor() as i64;
    loop {
        let lo = pow10(e);
        if a < lo {
            e -= 1;
            continue;
        }
        let hi = pow10(e + 1);
        if a >= hi {
            e += 1;
            continue;
        }
        return e;
    }
}

fn pow10(e: i64) -> Rational {
    let ten = Integer::from(10);
    if e >= 0 {
        Rational::from(ten.pow(e as u32))
    } else {
        Rational::from((Integer::from(1), ten.pow((-e) as u32)))
    }
}

fn scale_pow10(r: &Rational, e: i64) -> Rational {
    r * pow10(e)
}

fn round_half_away(r: &Rational) -> Integer {
    let neg = *r < 0;
    let a = Rational::from(r.abs_ref());
    let (frac, mut n) = a.fract_floor(Integer::new());
    if frac >= rat(1, 2) {
        n += 1;
    }
    if neg {
        -n
    } else {
        n
    }
}

/// Fixed-point rendering with exactly `decimals` digits after the point.
pub fn format_decimals(r: &Rational, decimals: u32) -> String {
    let rounded = round_decimals(r, decimals);
    let scaled = scale_pow10(&rounded, i64::from(decimals));
    let n = as_integer(&scaled).expect("rounded value is an integer after scaling");
    render_scaled(&n, decimals)
}

/// Render `sig` significant digits in positional notation (e.g. `404.8`,
/// `0.6931`, `64.50`); zero renders as `0.0`.
pub fn format_significant(r: &Rational, sig: u32) -> String {
    if *r == 0 {
        return "0.0".to_string();
    }
    let rounded = round_significant(r, sig);
    let exp10 = decimal_exponent(&rounded);
    let decimals = (i64::from(sig) - 1 - exp10).max(0) as u32;
    if decimals == 0 {
        let n = as_integer(&rounded).expect("integral after rounding");
        return format!("{n}.0");
    }
    format_decimals(&rounded, decimals)
}

fn render_scaled(n: &Integer, decimals: u32) -> String {
    let neg = *n < 0;
    let digits = Integer::from(n.abs_ref()).to_string();
    let d = decimals as usize;
    let body = if d == 0 {
        digits
    } else if digits.len() > d {
        format!("{}.{}", &digits[..digits.len() - d], &digits[digits.len() - d..])
    } else {
        format!("0.{}{}", "0".repeat(d - digits.len()), digits)
    };
    if neg && body.chars().any(|c| c != '0' && c != '.') {
        format!("-{body}")
    } else {
        body
    }
}

/// Full-precision scientific rendering of a float with `digits` significant digits.
pub fn format_float(f: &Float, digits: u32) -> String {
    if f.is_zero() {
        return "0".to_string();
    }
    match float_to_rational(f) {
        Some(r) => {
            let e = decimal_exponent(&r);
            if (-5..=6).contains(&e) {
                let decimals = (i64::from(digits) - 1 - e).max(0) as u32;
                trim_zeros(format_decimals(&r, decimals))
            } else {
                let mant = scale_pow10(&r, -e);
                let m = trim_zeros(format_decimals(&mant, digits.saturating_sub(1)));
                format!("{m}e{e}")
            }
        }
        None => f.to_string(),
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        let t = s.trim_end_matches('0').trim_end_matches('.');
        t.to_string()
    } else {
        s
    }
}

/// Arithmetic shared by the exact and the decimal evaluation backends.
pub trait Field: Clone + fmt::Debug + PartialOrd {
    fn lift(r: &Rational, bits: u32) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// `None` on division by zero.
    fn div(&self, o: &Self) -> Option<Self>;
    fn neg(&self) -> Self;
    fn powi(&self, e: i64) -> Option<Self>;
    /// Exact fields return `None` for non-squares.
    fn sqrt(&self) -> Option<Self>;
    fn is_zero(&self) -> bool;
    fn is_positive(&self) -> bool;
}

impl Field for Rational {
    fn lift(r: &Rational, _bits: u32) -> Self {
        r.clone()
    }
    fn add(&self, o: &Self) -> Self {
        Rational::from(self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Rational::from(self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Rational::from(self * o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        if *o == 0 {
            None
        } else {
            Some(Rational::from(self / o))
        }
    }
    fn neg(&self) -> Self {
        Rational::from(-self)
    }
    fn powi(&self, e: i64) -> Option<Self> {
        rational_powi(self, e)
    }
    fn sqrt(&self) -> Option<Self> {
        rational_sqrt(self)
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
    fn is_positive(&self) -> bool {
        *self > 0
    }
}

impl Field for Float {
    fn lift(r: &Rational, bits: u32) -> Self {
        Float::with_val(bits, r)
    }
    fn add(&self, o: &Self) -> Self {
        Float::with_val(self.prec().max(o.prec()), self + o)
    }
    fn sub(&self, o: &Self) -> Self {
        Float::with_val(self.prec().max(o.prec()), self - o)
    }
    fn mul(&self, o: &Self) -> Self {
        Float::with_val(self.prec().max(o.prec()), self * o)
    }
    fn div(&self, o: &Self) -> Option<Self> {
        if o.is_zero() {
            None
        } else {
            Some(Float::with_val(self.prec().max(o.prec()), self / o))
        }
    }
    fn neg(&self) -> Self {
        Float::with_val(self.prec(), -self)
    }
    fn powi(&self, e: i64) -> Option<Self> {
        if self.is_zero() && e < 0 {
            return None;
        }
        Some(Float::with_val(self.prec(), self.pow(&Integer::from(e))))
    }
    fn sqrt(&self) -> Option<Self> {
        if *self < 0 {
            None
        } else {
            Some(Float::with_val(self.prec(), self.sqrt_ref()))
        }
    }
    fn is_zero(&self) -> bool {
        Float::is_zero(self)
    }
    fn is_positive(&self) -> bool {
        *self > 0
    }
}

/// Closed interval `[lo, hi]` whose endpoints are rounded outward.
#[derive(Clone, Debug, PartialEq)]
pub struct Interval {
    lo: Float,
    hi: Float,
}

impl Interval {
    pub fn new(lo: Float, hi: Float) -> Self {
        debug_assert!(lo <= hi, "inverted interval");
        Interval { lo, hi }
    }

    pub fn from_rational(r: &Rational, bits: u32) -> Self {
        let (lo, _) = Float::with_val_round(bits, r, Round::Down);
        let (hi, _) = Float::with_val_round(bits, r, Round::Up);
        Interval { lo, hi }
    }

    pub fn point(f: Float) -> Self {
        Interval {
            lo: f.clone(),
            hi: f,
        }
    }

    pub fn lo(&self) -> &Float {
        &self.lo
    }

    pub fn hi(&self) -> &Float {
        &self.hi
    }

    pub fn prec(&self) -> u32 {
        self.lo.prec().max(self.hi.prec())
    }

    pub fn midpoint(&self) -> Float {
        let p = self.prec();
        let s = Float::with_val(p + 2, &self.lo + &self.hi);
        s / 2u32
    }

    pub fn width(&self) -> Float {
        Float::with_val_round(self.prec(), &self.hi - &self.lo, Round::Up).0
    }

    pub fn add(&self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        Interval {
            lo: Float::with_val_round(p, &self.lo + &o.lo, Round::Down).0,
            hi: Float::with_val_round(p, &self.hi + &o.hi, Round::Up).0,
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        Interval {
            lo: Float::with_val_round(p, &self.lo - &o.hi, Round::Down).0,
            hi: Float::with_val_round(p, &self.hi - &o.lo, Round::Up).0,
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let p = self.prec().max(o.prec());
        let pairs = [
            (&self.lo, &o.lo),
            (&self.lo, &o.hi),
            (&self.hi, &o.lo),
            (&self.hi, &o.hi),
        ];
        let mut lo: Option<Float> = None;
        let mut hi: Option<Float> = None;
        for (a, b) in pairs {
            let d = Float::with_val_round(p, a * b, Round::Down).0;
            let u = Float::with_val_round(p, a * b, Round::Up).0;
            lo = Some(match lo {
                Some(l) if l <= d => l,
                _ => d,
            });
            hi = Some(match hi {
                Some(h) if h >= u => h,
                _ => u,
            });
        }
        Interval {
            lo: lo.expect("four products"),
            hi: hi.expect("four products"),
        }
    }

    /// Quotient; `None` when the divisor interval contains zero.
    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.lo <= 0 && o.hi >= 0 {
            return None;
        }
        let p = self.prec().max(o.prec());
        let inv = Interval {
            lo: Float::with_val_round(p, 1 / &o.hi, Round::Down).0,
            hi: Float::with_val_round(p, 1 / &o.lo, Round::Up).0,
        };
        Some(self.mul(&inv))
    }

    /// Natural logarithm; `None` unless the interval is strictly positive.
    pub fn ln(&self) -> Option<Interval> {
        if self.lo <= 0 {
            return None;
        }
        let p = self.prec();
        Some(Interval {
            lo: Float::with_val_round(p, self.lo.ln_ref(), Round::Down).0,
            hi: Float::with_val_round(p, self.hi.ln_ref(), Round::Up).0,
        })
    }

    pub fn exp(&self) -> Interval {
        let p = self.prec();
        Interval {
            lo: Float::with_val_round(p, self.lo.exp_ref(), Round::Down).0,
            hi: Float::with_val_round(p, self.hi.exp_ref(), Round::Up).0,
        }
    }

    /// `base^exponent` for a base interval `≥ 1` or `> 0`, via `exp(e ln b)`.
    pub fn pow(&self, exponent: &Interval) -> Option<Interval> {
        Some(self.ln()?.mul(exponent).exp())
    }

    pub fn max(&self, o: &Interval) -> Interval {
        Interval {
            lo: if self.lo >= o.lo { self.lo.clone() } else { o.lo.clone() },
            hi: if self.hi >= o.hi { self.hi.clone() } else { o.hi.clone() },
        }
    }

    pub fn contains(&self, f: &Float) -> bool {
        self.lo <= *f && *f <= self.hi
    }

    /// `Less` when every point is below every point of `o`, `Greater` when
    /// strictly above, `None` when they overlap.
    pub fn separation(&self, o: &Interval) -> Option<Ordering> {
        if self.hi < o.lo {
            Some(Ordering::Less)
        } else if self.lo > o.hi {
            Some(Ordering::Greater)
        } else if self.lo == self.hi && o.lo == o.hi && self.lo == o.lo {
            Some(Ordering::Equal)
        } else {
            None
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = (f64::from(self.prec()) / std::f64::consts::LOG2_10).floor() as u32;
        write!(
            f,
            "[{}, {}]",
            format_float(&self.lo, digits.max(4)),
            format_float(&self.hi, digits.max(4))
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_rendering_matches_table_style() {
        assert_eq!(format_significant(&rat(69314718, 100000000), 4), "0.6931");
        assert_eq!(format_significant(&rat(4047725, 10000), 4), "404.8");
        assert_eq!(format_significant(&rat(645, 10), 4), "64.50");
        assert_eq!(format_significant(&rat(133, 1), 4), "133.0");
        assert_eq!(format_significant(&rat(287, 1), 4), "287.0");
        assert_eq!(format_significant(&Rational::new(), 4), "0.0");
        assert_eq!(format_significant(&rat(1386294, 1000), 4), "1386.0");
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(round_decimals(&rat(9905, 10000), 3), rat(991, 1000));
        assert_eq!(round_decimals(&rat(-9905, 10000), 3), rat(-991, 1000));
        assert_eq!(format_decimals(&rat(95, 1000), 3), "0.095");
        assert_eq!(format_decimals(&rat(1, 3), 3), "0.333");
        assert_eq!(round_significant(&rat(12345, 1), 2), int(12000));
    }

    #[test]
    fn decimal_exponent_handles_tiny_and_huge() {
        assert_eq!(decimal_exponent(&rat(1, 1000)), -3);
        assert_eq!(decimal_exponent(&rat(999, 1000)), -1);
        assert_eq!(decimal_exponent(&int(1000)), 3);
        let big = rational_powi(&int(4), 1000).unwrap();
        assert_eq!(decimal_exponent(&big), 602);
    }

    #[test]
    fn perfect_square_roots() {
        assert_eq!(rational_sqrt(&rat(9, 4)), Some(rat(3, 2)));
        assert_eq!(rational_sqrt(&rat(2, 1)), None);
        assert_eq!(rational_sqrt(&rat(-4, 1)), None);
    }

    #[test]
    fn interval_ln_encloses_true_value() {
        let p = Precision::digits(30).bits();
        let i = Interval::from_rational(&rat(1, 3), p).ln().unwrap();
        let approx = Float::with_val(300, Float::with_val(300, 3).recip().ln_ref());
        assert!(*i.lo() <= approx && approx <= *i.hi());
        assert!(i.lo() < i.hi());
    }

    #[test]
    fn interval_separation() {
        let p = 64;
        let a = Interval::from_rational(&rat(1, 3), p);
        let b = Interval::from_rational(&rat(1, 2), p);
        assert_eq!(a.separation(&b), Some(Ordering::Less));
        assert_eq!(b.separation(&a), Some(Ordering::Greater));
        let z = Interval::from_rational(&int(0), p);
        assert_eq!(z.separation(&z), Some(Ordering::Equal));
        assert_eq!(a.separation(&a), None);
    }

    #[test]
    fn float_formatting() {
        let f = Float::with_val(200, 6.337e10);
        assert!(format_float(&f, 4).starts_with("6.337e10"));
        assert_eq!(format_float(&Float::with_val(64, 0.5), 4), "0.5");
    }
}
