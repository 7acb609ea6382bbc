mod common;

use common::*;
use pdeclass_core::numeric::{rat, Precision};
use pdeclass_core::relation::{q_table, Presentation, QFlavor, QParams};

fn mismatches<const N: usize>(cells: &[Vec<String>], paper: &[[&str; N]; N]) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    for (n, row) in paper.iter().enumerate() {
        for (t, p) in row.iter().enumerate() {
            if cells[n][t] != *p {
                out.push((n, t, cells[n][t].clone()));
            }
        }
    }
    out
}

#[test]
fn table1_against_paper() {
    let (z, w) = table1_flows();
    let params = QParams {
        eps: rat(1, 2),
        band: 0,
        flavor: QFlavor::Exponential,
        precision: Precision::default(),
    };
    let q = q_table(&z, &w, 8, 8, &params).unwrap();
    // Term-rounded presentation reproduces every entry but the misprinted (8,1).
    let tr = mismatches(&q.rendered(Presentation::TermRounded(4)), &TABLE1);
    assert_eq!(tr, vec![(8, 1, "133.5".to_string())]);
    // Rounding the exact difference instead disagrees in the last digit elsewhere.
    let exact = mismatches(&q.rendered(Presentation::SignificantDigits(4)), &TABLE1);
    println!("significant-digit mismatches: {exact:?}");
    assert!(exact.iter().all(|(n, t, _)| *n >= 4 && *t >= 1));
    for (n, t, v) in [(2, 1, "0.6931"), (3, 1, "404.8"), (4, 2, "691.8")] {
        assert_eq!(q.get(n, t).unwrap().render(Presentation::SignificantDigits(4)), v);
    }
    // 1386 - 1253 after rounding each logarithm; the exact difference is 133.53.
    assert_eq!(q.get(8, 7).unwrap().render(Presentation::TermRounded(4)), "133.0");
    assert_eq!(q.get(8, 7).unwrap().render(Presentation::SignificantDigits(4)), "133.5");
    for n in 0..=8 {
        for t in n..=8 {
            assert!(q.get(n, t).unwrap().value().is_zero(), "({n},{t}) in the zero region");
        }
    }
}

#[test]
fn table2_against_paper() {
    let (z, w) = table2_flows(Precision::default());
    let mut params = QParams {
        eps: rat(1, 10),
        band: 1,
        flavor: QFlavor::Exponential,
        precision: Precision::default(),
    };
    let q = q_table(&z, &w, 10, 10, &params).unwrap();
    let rendered = q.rendered(Presentation::FixedDecimals(3));
    let mut worst = 0.0f64;
    for n in 0..=10 {
        for t in 0..=10 {
            let mine: f64 = rendered[n][t].parse().unwrap();
            let paper: f64 = TABLE2[n][t].parse().unwrap();
            worst = worst.max((mine - paper).abs());
        }
    }
    assert!(worst <= 1e-3 + 1e-12, "worst deviation {worst}");
    for (n, t, v) in [(2, 2, "0.095"), (7, 3, "0.677")] {
        assert_eq!(rendered[n][t], v);
    }
    params.flavor = QFlavor::lemma35();
    let qee = q_table(&z, &w, 10, 10, &params).unwrap();
    assert!(qee.values.iter().flatten().all(|v| v.value().is_zero()));
}
