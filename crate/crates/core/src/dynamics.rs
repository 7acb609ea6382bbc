//! Exact and high-precision evolution of lattice dynamics on a finite window.

use rug::{Float, Rational};
use thiserror::Error;

use crate::dsl::{Binding, EvalError, Expression, Offset};
use crate::numeric::{Field, Interval, Precision};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DynamicsError {
    #[error("invalid stencil offset {0}: cells must precede the target")]
    InvalidStencil(Offset),
    #[error("division by zero at cell (N={n}, t={t})")]
    DivisionByZero { n: u64, t: u64 },
    #[error("non-positive value at cell (N={n}, t={t}): {value}")]
    NonPositive { n: u64, t: u64, value: String },
    #[error("boundary expression failed at cell (N={n}, t={t}): {source}")]
    Boundary { n: u64, t: u64, source: EvalError },
    #[error("rule evaluation failed at cell (N={n}, t={t}): {source}")]
    Rule { n: u64, t: u64, source: EvalError },
}

/// Largest column index `N_max` and row index `t_max` that must be filled.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub n_max: u64,
    pub t_max: u64,
}

impl Window {
    pub const fn new(n_max: u64, t_max: u64) -> Self {
        Window { n_max, t_max }
    }
}

/// Cells the recursion cannot produce, and how far row 0 must extend.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Support {
    /// Prescribed columns `0..columns`.
    pub columns: u64,
    /// Prescribed rows `0..rows`.
    pub rows: u64,
    /// Columns consumed per row to the right.
    pub right_reach: u64,
    /// Last column index of row 0.
    pub row0_width: u64,
}

impl Support {
    pub fn prescribed_columns(&self) -> Vec<u64> {
        (0..self.columns).collect()
    }

    pub fn prescribed_rows(&self) -> Vec<u64> {
        (0..self.rows).collect()
    }
}

pub fn validate_stencil(stencil: &[Offset]) -> Result<(), DynamicsError> {
    for o in stencil {
        if !(o.dt <= -1 || (o.dt == 0 && o.dn <= -1)) {
            return Err(DynamicsError::InvalidStencil(*o));
        }
    }
    Ok(())
}

/// Support of a target-relative stencil on `window`.
pub fn required_support(stencil: &[Offset], window: Window) -> Result<Support, DynamicsError> {
    validate_stencil(stencil)?;
    let columns = stencil.iter().map(|o| -o.dn).max().unwrap_or(0).max(0) as u64;
    let rows = stencil.iter().map(|o| -o.dt).max().unwrap_or(0).max(0) as u64;
    let right_reach = stencil
        .iter()
        .filter(|o| o.dt < 0 && o.dn > 0)
        .map(|o| (o.dn + (-o.dt) - 1) / (-o.dt))
        .max()
        .unwrap_or(0) as u64;
    Ok(Support {
        columns,
        rows,
        right_reach,
        row0_width: window.n_max + right_reach * window.t_max,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    Prescribed,
    Computed,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rule {
    Recurrence(Expression),
    /// Every cell comes from the boundary expression.
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Decimal(Precision),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionSpec {
    pub rule: Rule,
    /// Expression in `N`, `t` and the parameters.
    pub boundary: Expression,
    pub parameters: Binding,
}

impl EvolutionSpec {
    pub fn stencil(&self) -> Vec<Offset> {
        match &self.rule {
            Rule::Recurrence(e) => e.stencil(),
            Rule::ClosedForm => Vec::new(),
        }
    }

    pub fn boundary_value(&self, n: u64, t: u64) -> Result<Rational, DynamicsError> {
        let b = self
            .parameters
            .clone()
            .with("N", Rational::from(n))
            .with("t", Rational::from(t));
        self.boundary
            .evaluate(&b)
            .map_err(|source| DynamicsError::Boundary { n, t, source })
    }
}

/// Dense lattice of positive values; rows shrink to the right by the right reach.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFlow<V> {
    pub window: Window,
    pub support: Support,
    rows: Vec<Vec<(V, Provenance)>>,
    pub precision: Option<Precision>,
}

impl<V> GridFlow<V> {
    pub fn get(&self, n: u64, t: u64) -> Option<&V> {
        self.rows.get(t as usize)?.get(n as usize).map(|(v, _)| v)
    }

    pub fn provenance(&self, n: u64, t: u64) -> Option<Provenance> {
        self.rows.get(t as usize)?.get(n as usize).map(|(_, p)| *p)
    }

    /// Number of stored cells in row `t`.
    pub fn row_len(&self, t: u64) -> usize {
        self.rows.get(t as usize).map_or(0, Vec::len)
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }
}

impl GridFlow<Rational> {
    pub fn to_decimal(&self, prec: Precision) -> GridFlow<Float> {
        GridFlow {
            window: self.window,
            support: self.support.clone(),
            rows: self
                .rows
                .iter()
                .map(|r| r.iter().map(|(v, p)| (Float::with_val(prec.bits(), v), *p)).collect())
                .collect(),
            precision: Some(prec),
        }
    }
}

/// Values usable by the relation statistics.
pub trait FlowValue: Field {
    fn as_rational(&self) -> Option<Rational>;
    /// Enclosure of the value at `bits` precision.
    fn enclose(&self, bits: u32) -> Interval;
    fn to_float(&self, bits: u32) -> Float;
    fn describe(&self) -> String;
}

impl FlowValue for Rational {
    fn as_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }
    fn enclose(&self, bits: u32) -> Interval {
        Interval::from_rational(self, bits)
    }
    fn to_float(&self, bits: u32) -> Float {
        Float::with_val(bits, self)
    }
    fn describe(&self) -> String {
        self.to_string()
    }
}

impl FlowValue for Float {
    fn as_rational(&self) -> Option<Rational> {
        None
    }
    fn enclose(&self, bits: u32) -> Interval {
        Interval::point(Float::with_val(bits.max(self.prec()), self))
    }
    fn to_float(&self, bits: u32) -> Float {
        Float::with_val(bits.max(self.prec()), self)
    }
    fn describe(&self) -> String {
        crate::numeric::format_float(self, (f64::from(self.prec()) / std::f64::consts::LOG2_10) as u32)
    }
}

/// Evolves the dynamics, filling rows bottom-up and columns left to right.
pub fn evolve<V: Field>(spec: &EvolutionSpec, window: Window, bits: u32) -> Result<GridFlow<V>, DynamicsError> {
    let stencil = spec.stencil();
    let support = required_support(&stencil, window)?;
    let k = support.right_reach;
    let mut rows: Vec<Vec<(V, Provenance)>> = Vec::with_capacity(window.t_max as usize + 1);
    for t in 0..=window.t_max {
        let last = window.n_max + k * (window.t_max - t);
        let mut row: Vec<(V, Provenance)> = Vec::with_capacity(last as usize + 1);
        for n in 0..=last {
            let prescribed = matches!(spec.rule, Rule::ClosedForm) || t < support.rows || n < support.columns;
            let (value, prov) = if prescribed {
                let r = spec.boundary_value(n, t)?;
                if r <= 0 {
                    return Err(DynamicsError::NonPositive {
                        n,
                        t,
                        value: r.to_string(),
                    });
                }
                (V::lift(&r, bits), Provenance::Prescribed)
            } else {
                let Rule::Recurrence(rule) = &spec.rule else {
                    unreachable!("closed forms are prescribed")
                };
                let mut cell = |o: Offset| -> Result<V, EvalError> {
                    let (cn, ct) = (n as i64 + o.dn, t as i64 + o.dt);
                    let src = if ct == t as i64 { Some(&row) } else { rows.get(ct as usize) };
                    src.and_then(|r| r.get(cn as usize))
                        .map(|(v, _)| v.clone())
                        .ok_or(EvalError::MissingCell(Offset::new(cn, ct)))
                };
                let v = rule
                    .root()
                    .eval_field(&spec.parameters, bits, &mut cell)
                    .map_err(|source| match source {
                        EvalError::DivisionByZero => DynamicsError::DivisionByZero { n, t },
                        source => DynamicsError::Rule { n, t, source },
                    })?;
                if !v.is_positive() {
                    return Err(DynamicsError::NonPositive {
                        n,
                        t,
                        value: format!("{v:?}"),
                    });
                }
                (v, Provenance::Computed)
            };
            row.push((value, prov));
        }
        rows.push(row);
    }
    Ok(GridFlow {
        window,
        support,
        rows,
        precision: None,
    })
}

pub fn evolve_exact(spec: &EvolutionSpec, window: Window) -> Result<GridFlow<Rational>, DynamicsError> {
    evolve(spec, window, 0)
}

pub fn evolve_decimal(spec: &EvolutionSpec, window: Window, prec: Precision) -> Result<GridFlow<Float>, DynamicsError> {
    let mut g = evolve::<Float>(spec, window, prec.bits())?;
    g.precision = Some(prec);
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::CellConvention;
    use crate::numeric::{int, rat};

    fn spec(rule: &str, boundary: &str, params: Binding) -> EvolutionSpec {
        EvolutionSpec {
            rule: Rule::Recurrence(Expression::parse(rule).unwrap()),
            boundary: Expression::parse(boundary).unwrap(),
            parameters: params,
        }
    }

    fn burgers_stencil() -> Vec<Offset> {
        Expression::parse_with("z[2,0]/2 + z[0,0]*(1+2*z[-1,1])/(2*(1+z[0,0]))", CellConvention::Base)
            .unwrap()
            .stencil()
    }

    #[test]
    fn supports() {
        let s = required_support(&burgers_stencil(), Window::new(10, 10)).unwrap();
        assert_eq!((s.prescribed_columns(), s.prescribed_rows(), s.row0_width), (vec![0, 1], vec![0], 20));
        let s = required_support(&[Offset::new(0, -1)], Window::new(8, 8)).unwrap();
        assert_eq!((s.columns, s.rows, s.row0_width), (0, 1, 8));
        let s = required_support(&[Offset::new(-1, -1)], Window::new(8, 8)).unwrap();
        assert_eq!((s.prescribed_columns(), s.rows, s.row0_width), (vec![0], 1, 8));
        assert!(required_support(&[Offset::new(0, 0)], Window::new(1, 1)).is_err());
        let s = required_support(&[Offset::new(3, -2)], Window::new(4, 4)).unwrap();
        assert_eq!(s.right_reach, 2);
    }

    #[test]
    fn shift_is_time_independent() {
        let p = Binding::new().with("eps", rat(1, 2)).with("l", int(6));
        let g = evolve_exact(&spec("z[0,-1]", "(eps*N)^l + 1", p.clone()), Window::new(8, 8)).unwrap();
        for t in 0..=8 {
            for n in 0..=8u64 {
                let expect = crate::numeric::rational_powi(&rat(n as i64, 2), 6).unwrap() + 1u32;
                assert_eq!(g.get(n, t), Some(&expect));
            }
        }
        assert_eq!(g.provenance(3, 0), Some(Provenance::Prescribed));
        assert_eq!(g.provenance(3, 1), Some(Provenance::Computed));
    }

    #[test]
    fn first_burgers_cell() {
        let rule = "z[1,-1]/2 + z[-1,-1]*(1+2*z[-2,0])/(2*(1+z[-1,-1]))";
        let g = evolve_exact(&spec(rule, "1", Binding::new()), Window::new(3, 2)).unwrap();
        assert_eq!(g.get(2, 1), Some(&rat(5, 4)));
        assert_eq!(g.provenance(1, 1), Some(Provenance::Prescribed));
        assert_eq!(g.row_len(0), 6);
        assert_eq!(g.row_len(2), 4);
        assert_eq!(g.get(4, 2), None);
    }

    #[test]
    fn errors_carry_coordinates() {
        let e = evolve_exact(&spec("z[0,-1] - 2", "1", Binding::new()), Window::new(2, 2)).unwrap_err();
        assert!(matches!(e, DynamicsError::NonPositive { n: 0, t: 1, .. }));
        let e = evolve_exact(&spec("1/(z[0,-1] - 1)", "1", Binding::new()), Window::new(2, 2)).unwrap_err();
        assert_eq!(e, DynamicsError::DivisionByZero { n: 0, t: 1 });
        let e = evolve_exact(&spec("z[0,-1]", "N - 1", Binding::new()), Window::new(2, 2)).unwrap_err();
        assert!(matches!(e, DynamicsError::NonPositive { n: 0, t: 0, .. }));
    }

    #[test]
    fn decimal_backend_agrees() {
        let rule = "z[1,-1]/2 + z[-1,-1]*(1+2*z[-2,0])/(2*(1+z[-1,-1]))";
        let p = Binding::new().with("eps", rat(1, 10)).with("l", int(20));
        let s = spec(rule, "(eps*N)^l + 1", p);
        let w = Window::new(6, 4);
        let exact = evolve_exact(&s, w).unwrap();
        let dec = evolve_decimal(&s, w, Precision::digits(100)).unwrap();
        for t in 0..=4 {
            for n in 0..=6 {
                let e = Float::with_val(400, exact.get(n, t).unwrap());
                let d = dec.get(n, t).unwrap();
                let rel = (Float::with_val(400, d - &e) / &e).abs();
                assert!(rel < 1e-95, "cell ({n},{t})");
            }
        }
    }
}
