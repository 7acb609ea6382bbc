use rug::Rational;

use super::*;
use crate::dsl::{Binding, Expression};
use crate::dynamics::{evolve_exact, EvolutionSpec, Rule, Window};
use crate::numeric::{int, rat};

fn closed(boundary: &str, eps: Rational, l: i64, window: Window) -> GridFlow<Rational> {
    let spec = EvolutionSpec {
        rule: Rule::ClosedForm,
        boundary: Expression::parse(boundary).unwrap(),
        parameters: Binding::new().with("eps", eps).with("l", int(l)),
    };
    evolve_exact(&spec, window).unwrap()
}

fn table1() -> (GridFlow<Rational>, GridFlow<Rational>) {
    let w = Window::new(8, 8);
    (
        closed("(eps*N)^l + 1", rat(1, 2), 1000, w),
        closed("eps^l*(N - t)^l + 1", rat(1, 2), 1000, w),
    )
}

fn e_params(eps: Rational, band: u64) -> QParams {
    QParams {
        eps,
        band,
        flavor: QFlavor::Exponential,
        precision: Precision::default(),
    }
}

#[test]
fn rate_of_identical_flows_is_one() {
    let (z, _) = table1();
    let r = initial_rate_discrete(&z, &z, 1, 5, 5).unwrap();
    assert_eq!(r.value, 1);
    let q = q_table(&z, &z, 4, 4, &e_params(rat(1, 2), 1)).unwrap();
    assert!(q.values.iter().flatten().all(|v| v.value().is_zero()));
}

#[test]
fn table1_rate_and_spot_values() {
    let (z, w) = table1();
    let r = initial_rate_discrete(&z, &w, 0, 3, 1).unwrap();
    let two = Rational::from(2);
    assert_eq!(r.value, Rational::from(1) + crate::numeric::rational_powi(&two, -1000).unwrap());
    assert_eq!(r.argmax, (0, 1));
    let p = e_params(rat(1, 2), 0);
    let sig = Presentation::SignificantDigits(4);
    assert_eq!(q_value(&z, &w, 2, 1, &p).unwrap().render(sig), "0.6931");
    assert_eq!(q_value(&z, &w, 3, 1, &p).unwrap().render(sig), "404.8");
    assert_eq!(q_value(&z, &w, 1, 1, &p).unwrap().render(sig), "0.0");
    assert_eq!(q_value(&z, &w, 3, 1, &p).unwrap(), q_value(&w, &z, 3, 1, &p).unwrap());
}

#[test]
fn missing_cells_are_reported() {
    let (z, w) = table1();
    let e = q_value(&z, &w, 9, 1, &e_params(rat(1, 2), 0)).unwrap_err();
    assert!(matches!(e, RelationError::MissingCell { .. }));
}

#[test]
fn presentations() {
    let q = QValue {
        log_ratio: rug::Float::with_val(200, 2.0),
        rate_term: rug::Float::with_val(200, 1.5),
        argmax: (0, 0),
    };
    assert_eq!(q.render(Presentation::FixedDecimals(3)), "0.500");
    assert_eq!(q.render(Presentation::SignificantDigits(4)), "0.5000");
    let neg = QValue {
        log_ratio: rug::Float::with_val(200, 1.0),
        rate_term: rug::Float::with_val(200, 1.5),
        argmax: (0, 0),
    };
    assert_eq!(neg.render(Presentation::FixedDecimals(3)), "0.0");
    assert_eq!(neg.render(Presentation::TermRounded(4)), "0.0");
}

fn unit_rate(bits: u32) -> Quantity {
    Quantity::rational(&Rational::from(1), bits)
}

#[test]
fn paper_thresholds() {
    let bits = Precision::default().bits();
    let class = RelationClass::exponential(int(1000), int(1), int(0), 1000).unwrap();
    let b = bound_value(&class, &int(4), &int(4), &unit_rate(bits), BoundForm::Def21, &BoundExtras::new(rat(1, 2)), bits)
        .unwrap();
    assert_eq!(crate::numeric::format_float(&b.log_value(), 4), "124.3");
    let class = RelationClass::new(int(20), int(2), int(1), int(1), 1, Flavor::DoubleExponential).unwrap();
    let b = bound_value(
        &class,
        &rat(1, 1),
        &rat(1, 1),
        &unit_rate(bits),
        BoundForm::Lemma35,
        &BoundExtras::new(rat(1, 10)),
        bits,
    )
    .unwrap();
    assert_eq!(crate::numeric::format_float(&b.log_value(), 4), "6.337e10");
    let too_big = bound_value(&class, &int(1), &int(1), &unit_rate(bits), BoundForm::Lemma35, &BoundExtras::new(rat(1, 2)), bits);
    assert!(matches!(too_big, Err(RelationError::OutOfRange { .. })));
}

#[test]
fn theorem_bound_sits_below_lemma() {
    let bits = Precision::default().bits();
    let class = RelationClass::new(int(20), int(2), int(1), int(1), 1, Flavor::DoubleExponential).unwrap();
    let rate = Quantity::rational(&rat(3, 2), bits);
    let ex = BoundExtras::new(rat(1, 10));
    for (x, s) in [(rat(1, 10), rat(0, 1)), (rat(1, 2), rat(3, 10)), (int(1), int(1))] {
        let t = bound_value(&class, &x, &s, &rate, BoundForm::Thm31, &ex, bits).unwrap();
        let l = bound_value(&class, &x, &s, &rate, BoundForm::Lemma35, &ex, bits).unwrap();
        assert!(t.log.hi() < l.log.lo());
    }
}

#[test]
fn corollary() {
    let c = corollary_constants(&int(20), &int(2), 2).unwrap();
    assert_eq!(c.m.value(), Some(crate::numeric::rational_powi(&int(40), 8).unwrap()));
    assert_eq!(c.c, 4);
    let c = corollary_constants(&int(5), &int(1), 3).unwrap();
    assert_eq!((c.m.base, c.m.exponent, c.c), (int(10), int(24), int(1)));
    assert!(corollary_constants(&rat(1, 2), &int(2), 1).is_err());
    assert_eq!(corollary_constants(&int(1), &int(4), 1).unwrap().m.value(), None);
}

#[test]
fn prop51_certificate() {
    let (z, w) = table1();
    let class = RelationClass::exponential(int(1000), int(1), int(0), 1000).unwrap();
    let ex = BoundExtras::new(rat(1, 2));
    let c = certify_point(&z, &w, (3, 1), &class, BoundForm::Def21, &ex).unwrap();
    assert_eq!(c.verdict, Verdict::Violated);
    assert!(matches!(c.method, CertificateMethod::ExactRationalPower { .. }));
    assert_eq!(c.bound.factors[0].exponent.exact(), Some(&int(6)));
    let again = certify_point(&z, &w, (3, 1), &class, BoundForm::Def21, &ex).unwrap();
    assert_eq!(c.to_string(), again.to_string());

    let decimal = certify_point(&z, &w, (3, 1), &class, BoundForm::Def21, &BoundExtras {
        prefer_exact: false,
        ..ex.clone()
    })
    .unwrap();
    assert_eq!(decimal.verdict, Verdict::Violated);
    assert_eq!(decimal.method, CertificateMethod::DirectedRounding { digits: 100 });

    let same = certify_point(&z, &z, (3, 1), &class, BoundForm::Def21, &ex).unwrap();
    assert_eq!(same.verdict, Verdict::Satisfied);
    let tight = RelationClass::exponential(int(1), int(1), int(0), 1).unwrap();
    let same = certify_point(&z, &z, (5, 5), &tight, BoundForm::Def21, &BoundExtras {
        prefer_exact: false,
        ..ex
    })
    .unwrap();
    assert_eq!(same.verdict, Verdict::Satisfied);
}

#[test]
fn fractional_band_is_rejected() {
    let (z, w) = table1();
    let class = RelationClass::exponential(int(10), int(1), rat(3, 2), 1).unwrap();
    assert!(certify_point(&z, &w, (1, 1), &class, BoundForm::Def21, &BoundExtras::new(rat(1, 2))).is_err());
}
