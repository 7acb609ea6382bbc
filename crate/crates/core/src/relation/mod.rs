//! Initial rates, the Q statistics and the bound forms of the exponential and
//! double-exponential relations, with exact or directed-rounding certificates.

mod bound;

pub use bound::{
    bound_value, certify_point, compare, corollary_constants, BoundCertificate, BoundExtras, BoundForm, BoundValue,
    CertificateMethod, CorollaryConstants, PowerOf, Quantity, RationalPower, Verdict, EXACT_SIZE_CAP_BITS,
};

use rug::ops::Pow;
use rug::{Float, Rational};
use thiserror::Error;

use crate::dynamics::{FlowValue, GridFlow};
use crate::numeric::{format_decimals, format_significant, float_to_rational, round_significant, Precision};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelationError {
    #[error("cell (N={n}, t={t}) is outside the computed grid")]
    MissingCell { n: u64, t: u64 },
    #[error("non-positive value at cell (N={n}, t={t})")]
    NonPositive { n: u64, t: u64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("{form} requires {requirement}")]
    OutOfRange { form: &'static str, requirement: String },
    #[error("no separation at cell (N={n}, t={t}) up to {digits} digits")]
    PrecisionCap { n: u64, t: u64, digits: u32 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Exponential,
    DoubleExponential,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Finite,
    Infinite,
}

/// Constants `(M, c, D, L; α)` of a relation class.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationClass {
    pub m: Rational,
    pub c: Rational,
    pub d: Rational,
    pub l: Rational,
    pub alpha: u32,
    pub flavor: Flavor,
    pub domain: DomainKind,
}

impl RelationClass {
    /// `L = 0` is accepted: Table 1 uses the degenerate band.
    pub fn new(m: Rational, c: Rational, d: Rational, l: Rational, alpha: u32, flavor: Flavor) -> Result<Self, RelationError> {
        if m < 1 || c < 1 || d < 1 || l < 0 {
            return Err(RelationError::Parameter(format!(
                "class requires M, c, D >= 1 and L >= 0, got ({m}, {c}, {d}, {l})"
            )));
        }
        Ok(RelationClass {
            m,
            c,
            d,
            l,
            alpha,
            flavor,
            domain: DomainKind::Finite,
        })
    }

    pub fn exponential(m: Rational, d: Rational, l: Rational, alpha: u32) -> Result<Self, RelationError> {
        Self::new(m, Rational::from(1), d, l, alpha, Flavor::Exponential)
    }

    pub fn relabeled(&self, domain: DomainKind) -> Self {
        RelationClass {
            domain,
            ..self.clone()
        }
    }

    /// `c` as used by the bound formula.
    pub fn effective_c(&self) -> Rational {
        match self.flavor {
            Flavor::Exponential => Rational::from(1),
            Flavor::DoubleExponential => self.c.clone(),
        }
    }
}

fn cell<V: FlowValue>(g: &GridFlow<V>, n: u64, t: u64) -> Result<&V, RelationError> {
    let v = g.get(n, t).ok_or(RelationError::MissingCell { n, t })?;
    if !v.is_positive() {
        return Err(RelationError::NonPositive { n, t });
    }
    Ok(v)
}

/// `max(z/w, w/z)` at a cell.
pub fn max_ratio<V: FlowValue>(z: &GridFlow<V>, w: &GridFlow<V>, n: u64, t: u64) -> Result<V, RelationError> {
    let a = cell(z, n, t)?;
    let b = cell(w, n, t)?;
    let p = a.div(b).ok_or(RelationError::NonPositive { n, t })?;
    let q = b.div(a).ok_or(RelationError::NonPositive { n, t })?;
    Ok(if q > p { q } else { p })
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport<V> {
    pub value: V,
    pub band: u64,
    pub n0: u64,
    pub t0: u64,
    pub argmax: (u64, u64),
}

/// Prefix maxima of the band ratios, answering every `(N₀, t₀)` in O(1).
#[derive(Clone, Debug)]
pub struct BandRates<V> {
    band: u64,
    rows: Vec<(V, (u64, u64))>,
    cols: Vec<(V, (u64, u64))>,
}

impl<V: FlowValue> BandRates<V> {
    pub fn new(z: &GridFlow<V>, w: &GridFlow<V>, band: u64, n_max: u64, t_max: u64) -> Result<Self, RelationError> {
        Ok(BandRates {
            band,
            rows: Self::prefix(z, w, band, n_max, false)?,
            cols: Self::prefix(z, w, band, t_max, true)?,
        })
    }

    fn prefix(
        z: &GridFlow<V>,
        w: &GridFlow<V>,
        band: u64,
        len: u64,
        columns: bool,
    ) -> Result<Vec<(V, (u64, u64))>, RelationError> {
        let mut out = Vec::with_capacity(len as usize + 1);
        let mut best: Option<(V, (u64, u64))> = None;
        for i in 0..=len {
            for a in 0..=band {
                let at = if columns { (a, i) } else { (i, a) };
                let r = max_ratio(z, w, at.0, at.1)?;
                if best.as_ref().is_none_or(|(b, _)| r > *b) {
                    best = Some((r, at));
                }
            }
            out.push(best.clone().expect("band has at least one cell"));
        }
        Ok(out)
    }

    pub fn rate(&self, n0: u64, t0: u64) -> Result<RateReport<V>, RelationError> {
        let (r, rc) = self.rows.get(n0 as usize).ok_or(RelationError::MissingCell { n: n0, t: 0 })?;
        let (c, cc) = self.cols.get(t0 as usize).ok_or(RelationError::MissingCell { n: 0, t: t0 })?;
        let (value, argmax) = if c > r { (c.clone(), *cc) } else { (r.clone(), *rc) };
        Ok(RateReport {
            value,
            band: self.band,
            n0,
            t0,
            argmax,
        })
    }
}

/// `[{z}:{w}]_{L,N₀,t₀}`.
pub fn initial_rate_discrete<V: FlowValue>(
    z: &GridFlow<V>,
    w: &GridFlow<V>,
    band: u64,
    n0: u64,
    t0: u64,
) -> Result<RateReport<V>, RelationError> {
    BandRates::new(z, w, band, n0, t0)?.rate(n0, t0)
}

/// Which Q statistic to compute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QFlavor {
    Exponential,
    /// Subtracts `c^{ε^{−D}(x+ks)+offset}·log rate`.
    DoubleExponential {
        c: Rational,
        d: Rational,
        k: Rational,
        offset: Rational,
    },
}

impl QFlavor {
    /// Lemma 3.5 exponents `(c, D, k, offset) = (2, 1, 2, 3)`.
    pub fn lemma35() -> Self {
        QFlavor::DoubleExponential {
            c: Rational::from(2),
            d: Rational::from(1),
            k: Rational::from(2),
            offset: Rational::from(3),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QParams {
    pub eps: Rational,
    pub band: u64,
    pub flavor: QFlavor,
    pub precision: Precision,
}

/// `Q = max(0, log ratio − weight·log rate)` with both terms kept.
#[derive(Clone, Debug, PartialEq)]
pub struct QValue {
    pub log_ratio: Float,
    pub rate_term: Float,
    pub argmax: (u64, u64),
}

impl QValue {
    pub fn raw(&self) -> Float {
        Float::with_val(self.log_ratio.prec(), &self.log_ratio - &self.rate_term)
    }

    pub fn value(&self) -> Float {
        let r = self.raw();
        if r.is_sign_negative() || r.is_zero() {
            Float::new(r.prec())
        } else {
            r
        }
    }

    pub fn render(&self, p: Presentation) -> String {
        let exact = |f: &Float| float_to_rational(f).unwrap_or_default();
        match p {
            Presentation::SignificantDigits(d) => format_significant(&exact(&self.value()), d),
            Presentation::FixedDecimals(d) => {
                let v = exact(&self.value());
                if v == 0 {
                    "0.0".to_string()
                } else {
                    format_decimals(&v, d)
                }
            }
            Presentation::TermRounded(d) => {
                let a = round_significant(&exact(&self.log_ratio), d);
                let b = round_significant(&exact(&self.rate_term), d);
                let q = (a - b).max(Rational::new());
                format_significant(&q, d)
            }
        }
    }
}

/// Rendering of Q values in tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Presentation {
    SignificantDigits(u32),
    FixedDecimals(u32),
    /// Each logarithm is rounded to the given significant digits before the
    /// subtraction, then the result is shown at the same digits.
    TermRounded(u32),
}

/// `ε^{e}` for rational `e`, exactly when `e` is an integer.
pub fn float_pow(base: &Rational, e: &Rational, bits: u32) -> Float {
    match crate::numeric::as_i64(e).and_then(|k| crate::numeric::rational_powi(base, k)) {
        Some(r) => Float::with_val(bits, &r),
        None => {
            let b = Float::with_val(bits, base);
            b.pow(Float::with_val(bits, e))
        }
    }
}

fn rate_weight(flavor: &QFlavor, eps: &Rational, n: u64, t: u64, bits: u32) -> Option<Float> {
    match flavor {
        QFlavor::Exponential => None,
        QFlavor::DoubleExponential { c, d, k, offset } => {
            let x = Rational::from(eps * n);
            let s = Rational::from(eps * t);
            let inner = Float::with_val(bits, x + Rational::from(k * &s));
            let scale = float_pow(eps, &Rational::from(-d), bits);
            let e = Float::with_val(bits, inner * scale) + offset;
            let cf = Float::with_val(bits, c);
            Some(cf.pow(e))
        }
    }
}

fn q_from_report<V: FlowValue>(ratio: &V, rate: &RateReport<V>, params: &QParams, n: u64, t: u64) -> QValue {
    let bits = params.precision.bits();
    let log_ratio = ratio.to_float(bits).ln();
    let log_rate = rate.value.to_float(bits).ln();
    let rate_term = match rate_weight(&params.flavor, &params.eps, n, t, bits) {
        Some(w) => w * log_rate,
        None => log_rate,
    };
    QValue {
        log_ratio,
        rate_term,
        argmax: rate.argmax,
    }
}

pub fn q_value<V: FlowValue>(
    z: &GridFlow<V>,
    w: &GridFlow<V>,
    n: u64,
    t: u64,
    params: &QParams,
) -> Result<QValue, RelationError> {
    let rate = initial_rate_discrete(z, w, params.band, n, t)?;
    Ok(q_from_report(&max_ratio(z, w, n, t)?, &rate, params, n, t))
}

/// Q values on `0..=n_max × 0..=t_max`, indexed `[N][t]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QTable {
    pub n_max: u64,
    pub t_max: u64,
    pub values: Vec<Vec<QValue>>,
}

impl QTable {
    pub fn get(&self, n: u64, t: u64) -> Option<&QValue> {
        self.values.get(n as usize)?.get(t as usize)
    }

    pub fn rendered(&self, p: Presentation) -> Vec<Vec<String>> {
        self.values.iter().map(|row| row.iter().map(|q| q.render(p)).collect()).collect()
    }

    /// Full-precision CSV with header `N,t,Q,log_ratio,rate_term`.
    pub fn to_csv(&self, digits: u32) -> String {
        let f = |x: &Float| crate::numeric::format_float(x, digits);
        let mut out = String::from("N,t,Q,log_ratio,rate_term\n");
        for (n, row) in self.values.iter().enumerate() {
            for (t, q) in row.iter().enumerate() {
                out.push_str(&format!("{n},{t},{},{},{}\n", f(&q.value()), f(&q.log_ratio), f(&q.rate_term)));
            }
        }
        out
    }

    /// Aligned markdown table, rows `N`, columns `t`.
    pub fn to_markdown(&self, p: Presentation) -> String {
        let cells = self.rendered(p);
        let width = cells.iter().flatten().map(String::len).max().unwrap_or(1).max(3);
        let mut out = format!("| {:>3} |", "N\\t");
        for t in 0..=self.t_max {
            out.push_str(&format!(" {t:>width$} |"));
        }
        out.push_str("\n|----:|");
        for _ in 0..=self.t_max {
            out.push_str(&format!("{}:|", "-".repeat(width + 1)));
        }
        out.push('\n');
        for (n, row) in cells.iter().enumerate() {
            out.push_str(&format!("| {n:>3} |"));
            for c in row {
                out.push_str(&format!(" {c:>width$} |"));
            }
            out.push('\n');
        }
        out
    }
}

pub fn q_table<V: FlowValue>(
    z: &GridFlow<V>,
    w: &GridFlow<V>,
    n_max: u64,
    t_max: u64,
    params: &QParams,
) -> Result<QTable, RelationError> {
    let rates = BandRates::new(z, w, params.band, n_max, t_max)?;
    let mut values = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let mut row = Vec::with_capacity(t_max as usize + 1);
        for t in 0..=t_max {
            let rate = rates.rate(n, t)?;
            row.push(q_from_report(&max_ratio(z, w, n, t)?, &rate, params, n, t));
        }
        values.push(row);
    }
    Ok(QTable { n_max, t_max, values })
}

#[cfg(test)]
mod tests;
