//! Consistency order of the derived PDEs: the defect of the discrete rule on a
//! smooth function minus `ε^m P/h` shrinks like `ε^{m+α+1}`.

mod common;

use common::{base_rule, F_RULE, G_RULE};
use pdeclass_core::dsl::Binding;
use pdeclass_core::jet::{derive_pde, ApproximationData, JetVar};
use pdeclass_core::maxplus::{AffineTerm, ElementaryRational};
use pdeclass_core::numeric::{rat, rational_powi};
use rug::Rational;

type Fun = fn(&Rational, &Rational) -> Rational;

/// `u = 1 + x + s + xs + x²`.
fn quadratic(x: &Rational, s: &Rational) -> Rational {
    Rational::from(1) + x + s + Rational::from(x * s) + Rational::from(x * x)
}

/// The quadratic plus `x³ + s³ + x²s`.
fn cubic(x: &Rational, s: &Rational) -> Rational {
    let x2 = Rational::from(x * x);
    quadratic(x, s) + Rational::from(&x2 * x) + Rational::from(s * s) * s + x2 * s
}

/// First-order jets of `u`, which is all an α = 1 derivation needs.
fn first_jets(u: Fun) -> impl Fn(JetVar, &Rational, &Rational) -> Rational {
    move |v, x, s| {
        let h = rat(1, 1 << 20);
        let c = |dx: &Rational, ds: &Rational| u(&Rational::from(x + dx), &Rational::from(s + ds));
        let zero = Rational::new();
        // both test functions are cubic, so a symmetric difference quotient
        // has an exact h² correction which we remove by Richardson
        let d = |step: &Rational| match (v.x, v.s) {
            (1, 0) => (c(step, &zero) - c(&Rational::from(-step), &zero)) / Rational::from(step * 2u32),
            (0, 1) => (c(&zero, step) - c(&zero, &Rational::from(-step))) / Rational::from(step * 2u32),
            _ => unreachable!("order-one jets only"),
        };
        match (v.x, v.s) {
            (0, 0) => u(x, s),
            _ => (d(&h) * 4u32 - d(&Rational::from(&h * 2u32))) / 3u32,
        }
    }
}

fn sum(terms: &[AffineTerm], cells: &[Rational]) -> Rational {
    terms
        .iter()
        .map(|t| {
            let mut p = t.multiplier.clone();
            for (c, &e) in cells.iter().zip(&t.gradient) {
                p *= rational_powi(c, e).unwrap();
            }
            p
        })
        .sum()
}

/// Defects `|Δ − ε P/h|` for `ε = 2^-3 … 2^-9`.
fn defects(rule: &str, u: Fun) -> Vec<(Rational, Rational)> {
    let expr = base_rule(rule);
    let stencil = expr.stencil();
    let f = ElementaryRational::from_rule(&expr, &stencil, &Binding::new()).unwrap();
    let data = ApproximationData::new(stencil.clone(), (1, 1, 1), 1).unwrap();
    let pde = derive_pde(&f, &data).unwrap();
    let jets = first_jets(u);
    let (x, s) = (rat(1, 3), rat(1, 5));
    (3..=9)
        .map(|k| {
            let eps = rational_powi(&Rational::from(2), -k).unwrap();
            let at = |i: i64, j: i64| {
                let xi = &x + Rational::from(&eps * i);
                let sj = &s + Rational::from(&eps * j);
                &eps * u(&xi, &sj)
            };
            let cells: Vec<Rational> = stencil.iter().map(|o| at(o.to_base().dn, o.to_base().dt)).collect();
            let h = sum(&f.denominator, &cells);
            let delta = at(1, 1) - sum(&f.numerator, &cells) / &h;
            let p = pde.leading.eval::<Rational>(&eps, &mut |v| jets(v, &x, &s), 0).unwrap();
            let err = (delta - (&eps * p) / h).abs();
            (eps, err)
        })
        .collect()
}

fn slope(points: &[(Rational, Rational)]) -> f64 {
    let pts: Vec<(f64, f64)> = points.iter().map(|(e, d)| (e.to_f64().ln(), d.to_f64().ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    cov / var
}

#[test]
fn quadratic_defect_vanishes() {
    // the order-two Taylor terms cancel for this u, so the defect is zero
    for rule in [F_RULE, G_RULE] {
        assert!(defects(rule, quadratic).iter().all(|(_, d)| *d == 0));
    }
}

#[test]
fn f_rule_is_third_order_consistent() {
    let k = slope(&defects(F_RULE, cubic));
    println!("f slope {k}");
    assert!(k >= 2.9, "slope {k}");
}

#[test]
fn g_rule_is_third_order_consistent() {
    let k = slope(&defects(G_RULE, cubic));
    assert!(k >= 2.9, "slope {k}");
}
