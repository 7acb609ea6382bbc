#![allow(dead_code)]

use pdeclass_core::dsl::{Binding, CellConvention, Expression};
use pdeclass_core::dynamics::{evolve_decimal, evolve_exact, EvolutionSpec, GridFlow, Rule, Window};
use pdeclass_core::numeric::{int, rat, Precision};
use pdeclass_core::solutions::polynomial_flow;
use rug::{Float, Rational};

/// Table 1 of the paper, rows N = 0..=8, columns t = 0..=8.
pub const TABLE1: [[&str; 9]; 9] = [
    ["0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "0.6931", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "404.8", "404.8", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "287.7", "691.8", "287.6", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "223.1", "510.1", "510.1", "223.2", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "182.3", "404.8", "287.6", "404.9", "182.7", "0.0", "0.0", "0.0"],
    ["0.0", "154.2", "335.8", "154.1", "154.2", "335.7", "154.0", "0.0", "0.0"],
    ["0.0", "135.5", "287.0", "64.50", "0.0", "64.50", "287.0", "133.0", "0.0"],
];

/// Table 2 of the paper, rows N = 0..=10, columns t = 0..=10.
pub const TABLE2: [[&str; 11]; 11] = [
    ["0.0"; 11],
    ["0.0"; 11],
    ["0.0", "0.0", "0.095", "0.189", "0.258", "0.331", "0.393", "0.463", "0.524", "0.0", "0.0"],
    ["0.0", "0.0", "0.196", "0.327", "0.461", "0.567", "0.682", "0.776", "0.0", "0.0", "0.0"],
    ["0.0", "0.0", "0.229", "0.450", "0.618", "0.794", "0.926", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "0.0", "0.318", "0.565", "0.813", "0.991", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "0.0", "0.334", "0.670", "0.899", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "0.0", "0.399", "0.677", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0", "0.0", "0.294", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0", "0.0"],
    ["0.0"; 11],
    ["0.0"; 11],
];

pub fn table1_flows() -> (GridFlow<Rational>, GridFlow<Rational>) {
    let (z, w) = polynomial_flow(1000, &rat(1, 2)).unwrap();
    let win = Window::new(8, 8);
    (evolve_exact(&z, win).unwrap(), evolve_exact(&w, win).unwrap())
}

pub const F_RULE: &str = "z[2,0]/2 + z[0,0]*(1+2*z[-1,1])/(2*(1+z[0,0]))";
pub const G_RULE: &str = "z[2,0]/2 + z[0,0]*(1+z[-1,1])/(2*(1+z[0,0]))";

pub fn base_rule(text: &str) -> Expression {
    Expression::parse_with(text, CellConvention::Base).unwrap()
}

pub fn table2_specs() -> (EvolutionSpec, EvolutionSpec) {
    let params = Binding::new().with("eps", rat(1, 10)).with("l", int(1000));
    let spec = |rule: &str, boundary: &str| EvolutionSpec {
        rule: Rule::Recurrence(base_rule(rule)),
        boundary: Expression::parse(boundary).unwrap(),
        parameters: params.clone(),
    };
    (spec(F_RULE, "(eps*N)^l + 1"), spec(G_RULE, "eps^l*(N - t)^l + 1"))
}

pub fn table2_flows(prec: Precision) -> (GridFlow<Float>, GridFlow<Float>) {
    let (z, w) = table2_specs();
    let win = Window::new(10, 10);
    (evolve_decimal(&z, win, prec).unwrap(), evolve_decimal(&w, win, prec).unwrap())
}
